//! Time the loop on a 500k-point sphere, unpaced.
//!
//! cargo run --release --example bench_loop

use std::sync::Arc;

use cloudtouch::cli::default_bench_trajectory;
use cloudtouch::cloud::{resample_to_lattice, LatticeConfig};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::Point3;
use cloudtouch::oracle::{synth_sphere_cloud, SphereSpec};
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{run_loop, HipSource, Physics, SessionConfig, World};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cloud = synth_sphere_cloud(&SphereSpec {
        center: Point3::origin(),
        radius: 0.04,
        sample_count: 500_000,
        seed: 3,
    })?;
    let config = LatticeConfig::cube(Point3::origin(), 0.1, 500);
    let lattice = resample_to_lattice(&cloud, &config)?;
    println!("{} points -> {} active voxels", cloud.len(), lattice.len());

    let physics = Physics {
        proxy: ProxyParams::default(),
        density: DensityConfig::for_spacing(config.spacing),
        force: ForceParams::default(),
        friction: FrictionParams::default(),
    };
    let session = SessionConfig { max_ticks: 20_000, snapshot_decimation: 20_000, ..Default::default() };
    let trajectory = default_bench_trajectory(&lattice, 2.0 * physics.density.r2, session.max_ticks);
    let mut world = World::new(Arc::new(lattice), physics, HipSource::Scripted(trajectory), physics.density.r1);
    let (_, stats) = run_loop(&session, &mut world);
    println!("{}", serde_json::to_string_pretty(&stats)?);
    Ok(())
}
