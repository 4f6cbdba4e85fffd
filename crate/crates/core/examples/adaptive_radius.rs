//! Rest the proxy on a dense patch and on a sparse one and watch the radius
//! adapt to the local sample spacing.

use std::sync::Arc;

use cloudtouch::cloud::{resample_to_lattice, LatticeConfig};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::oracle::synth_plane_patch;
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{step_once, HipSource, Physics, Trajectory, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = 0.001;
    let config = LatticeConfig::cube(Point3::origin(), 0.4, 400);
    let physics = Physics {
        proxy: ProxyParams::default(),
        density: DensityConfig::for_spacing(h),
        force: ForceParams::default(),
        friction: FrictionParams::default(),
    };
    println!("radius bounds [{:.1}, {:.1}] mm", physics.density.r1 * 1e3, physics.density.r2 * 1e3);

    for spacing in [h, 2.0 * h, 4.0 * h] {
        // voxel-centred samples, one per occupied voxel
        let n = (0.1 / spacing) as usize;
        let origin = Point3::new(-0.05, -0.05, 0.0) + Vec3::repeat(h / 2.0);
        let lattice = resample_to_lattice(&synth_plane_patch(origin, n, spacing)?, &config)?;
        let mid = origin + Vec3::new(0.05, 0.05, 0.0);
        let above = mid + Vec3::z() * 0.02;
        let below = mid - Vec3::z() * 0.005;
        let trajectory = Trajectory::new(vec![(0, above), (3_000, below)])?;
        let mut world = World::new(Arc::new(lattice), physics, HipSource::Scripted(trajectory), physics.density.r1);
        let mut last = None;
        for tick in 0..8_000 {
            last = Some(step_once(&mut world, tick).2);
        }
        let s = last.unwrap();
        println!(
            "spacing {:.1} mm: radius {:.2} mm, sigma {:.2} mm, proxy {:.2} mm above the plane",
            spacing * 1e3,
            s.proxy_radius * 1e3,
            s.sigma_hat * 1e3,
            (s.proxy_center.z - mid.z) * 1e3
        );
    }
    Ok(())
}
