//! Press the HIP straight into a sampled sphere and compare the rendered
//! force with the spring force of an ideal sphere.

use std::sync::Arc;

use cloudtouch::cloud::{resample_to_lattice, LatticeConfig};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::{Point3, Vec3};
use cloudtouch::oracle::{ideal_sphere_force, synth_sphere_cloud, SphereSpec};
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{step_once, HipSource, Physics, Trajectory, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SphereSpec {
        center: Point3::origin(),
        radius: 0.025,
        sample_count: 50_000,
        seed: 7,
    };
    let config = LatticeConfig::cube(spec.center, 0.1, 300);
    let lattice = resample_to_lattice(&synth_sphere_cloud(&spec)?, &config)?;
    let physics = Physics {
        proxy: ProxyParams::default(),
        density: DensityConfig::for_spacing(config.spacing),
        force: ForceParams::default(),
        friction: FrictionParams::default(),
    };

    // slightly off-axis so the HIP does not run along a lattice line
    let dir = Vec3::new(0.1, -0.2, 1.0).normalize();
    let start = spec.center + dir * (spec.radius + 0.005);
    let deepest = spec.center + dir * (spec.radius * 0.6);
    let trajectory = Trajectory::new(vec![(0, start), (7_500, deepest), (8_500, deepest), (16_000, start)])?;
    let mut world = World::new(Arc::new(lattice), physics, HipSource::Scripted(trajectory), physics.density.r1);

    println!("{:>6} {:>10} {:>10} {:>10} {:>12}", "tick", "depth_mm", "|F| N", "ideal N", "contact");
    for tick in 0..16_000 {
        let (_, _, s) = step_once(&mut world, tick);
        if tick % 1_000 == 0 {
            let ideal = ideal_sphere_force(&s.hip, &spec, physics.force.stiffness)?;
            let depth = (spec.radius - (s.hip - spec.center).norm()).max(0.0);
            println!(
                "{tick:>6} {:>10.3} {:>10.4} {:>10.4} {:>12}",
                depth * 1e3,
                s.force.norm(),
                ideal.norm(),
                s.contact.as_str()
            );
        }
    }
    Ok(())
}
