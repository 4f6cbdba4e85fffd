#![allow(dead_code)]

use std::path::Path;
use std::sync::Arc;

use cloudtouch::cloud::{resample_to_lattice, LatticeConfig, PointCloud, VoxelLattice};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::oracle::synth_plane_patch;
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{HipSource, Physics, Trajectory, World};

pub fn physics(density: DensityConfig, friction: FrictionParams) -> Physics {
    Physics {
        proxy: ProxyParams::default(),
        density,
        force: ForceParams::default(),
        friction,
    }
}

/// A square patch in `z = 0`, `n` samples a side, centred on the origin.
/// `spacing` must be a multiple of the lattice spacing `h`; every sample
/// lands on the centre of its own voxel.
pub fn plane_lattice(n: usize, spacing: f64, h: f64) -> Arc<VoxelLattice> {
    let half = (n - 1) as f64 * spacing / 2.0;
    let cloud = synth_plane_patch(Point3::new(-half, -half, 0.0), n, spacing).unwrap();
    let pad = 20.0 * h;
    let dims = ((2.0 * (half + pad) + h) / h).round() as u32;
    let config = LatticeConfig {
        dims: [dims; 3],
        spacing: h,
        origin: Point3::new(-half - pad - h / 2.0, -half - pad - h / 2.0, -pad - h / 2.0),
    };
    let lattice = resample_to_lattice(&cloud, &config).unwrap();
    assert_eq!(lattice.len(), n * n);
    Arc::new(lattice)
}

pub fn scripted_world(lattice: &Arc<VoxelLattice>, physics: Physics, keys: Vec<(u64, Point3)>, radius: f64) -> World {
    World::new(
        lattice.clone(),
        physics,
        HipSource::Scripted(Trajectory::new(keys).unwrap()),
        radius,
    )
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) {
    let mut s = String::with_capacity(cloud.len() * 64);
    for p in cloud.points() {
        s.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    std::fs::write(path, s).unwrap();
}

pub fn xy(v: &Vec3) -> f64 {
    v.x.hypot(v.y)
}
