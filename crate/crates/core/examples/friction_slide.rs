//! Drag the HIP sideways under a plane with growing dynamic friction, then
//! push gently enough that static friction holds the proxy in place.

use std::sync::Arc;

use cloudtouch::cloud::{resample_to_lattice, LatticeConfig, VoxelLattice};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::oracle::synth_plane_patch;
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{step_once, HipSource, Physics, Trajectory, World};

fn run(lattice: &Arc<VoxelLattice>, friction: FrictionParams, trajectory: Trajectory, ticks: u64) -> (f64, Vec3) {
    let physics = Physics {
        proxy: ProxyParams::default(),
        density: DensityConfig::for_spacing(0.001),
        force: ForceParams::default(),
        friction,
    };
    let mut world = World::new(lattice.clone(), physics, HipSource::Scripted(trajectory), 0.005);
    let mut path = 0.0;
    let mut prev = world.proxy.center;
    let start = prev;
    for tick in 0..ticks {
        let c = step_once(&mut world, tick).2.proxy_center;
        if tick >= 2_000 {
            path += Vec3::new(c.x - prev.x, c.y - prev.y, 0.0).norm();
        }
        prev = c;
    }
    (path, prev - start)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let origin = Point3::new(-0.05, -0.05, 0.0) + Vec3::repeat(0.0005);
    let cloud = synth_plane_patch(origin, 100, 0.001)?;
    let lattice = Arc::new(resample_to_lattice(&cloud, &LatticeConfig::cube(Point3::origin(), 0.2, 200))?);
    let z = origin.z;

    // sink the HIP 4 mm, then slide it 3 cm along x
    let slide = Trajectory::new(vec![
        (0, Point3::new(-0.015, 0.0, z + 0.01)),
        (1_000, Point3::new(-0.015, 0.0, z - 0.004)),
        (2_000, Point3::new(-0.015, 0.0, z - 0.004)),
        (8_000, Point3::new(0.015, 0.0, z - 0.004)),
    ])?;
    for mu_d in [0.0, 0.2, 0.4] {
        let f = FrictionParams { mu_s: 0.5, mu_d, enabled: true };
        let (path, _) = run(&lattice, f, slide.clone(), 8_000);
        println!("mu_d {mu_d:.1}: tangential proxy path {:.2} mm", path * 1e3);
    }

    // pressing nearly straight down keeps tan(alpha) below mu_s
    let press = Trajectory::new(vec![
        (0, Point3::new(0.0, 0.0, z + 0.01)),
        (1_000, Point3::new(0.0, 0.0, z - 0.004)),
        (2_000, Point3::new(0.0, 0.0, z - 0.004)),
        (4_000, Point3::new(0.0005, 0.0, z - 0.004)),
    ])?;
    let stuck = FrictionParams { mu_s: 0.5, mu_d: 0.4, enabled: true };
    let (path, _) = run(&lattice, stuck, press, 4_000);
    println!("gentle push with mu_s 0.5: tangential proxy path {:.3e} m", path);
    Ok(())
}
