//! Run a scripted session from a TOML config and write the trace as JSON
//! lines, then reload it.

use std::sync::Arc;

use cloudtouch::cloud::{apply_transform, resample_to_lattice};
use cloudtouch::config::EngineConfig;
use cloudtouch::geom::Point3;
use cloudtouch::oracle::{synth_sphere_cloud, SphereSpec};
use cloudtouch::session::{read_trace_jsonl, run_loop, write_trace, HipSource, TraceFormat, Trajectory, World};

const CONFIG: &str = r#"
[lattice]
dims = [200, 200, 200]
spacing_m = 0.0005
origin_m = [-0.05, -0.05, -0.05]

[[transform]]
op = "scale"
factors = [1.2, 1.2, 1.2]

[force]
stiffness_n_per_m = 300.0

[friction]
mu_s = 0.3
mu_d = 0.1
enabled = true

[session]
max_ticks = 3000
snapshot_decimation = 10
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = EngineConfig::from_toml_str(CONFIG)?;
    let cloud = synth_sphere_cloud(&SphereSpec {
        center: Point3::origin(),
        radius: 0.025,
        sample_count: 30_000,
        seed: 2,
    })?;
    let lattice = resample_to_lattice(&apply_transform(&cloud, &cfg.transform()?)?, &cfg.lattice_config())?;
    let trajectory = Trajectory::from_csv("0,0,0,0.04\n1500,0,0,0.026\n3000,0.01,0,0.026\n".as_bytes())?;
    let physics = cfg.physics();
    let mut world = World::new(Arc::new(lattice), physics, HipSource::Scripted(trajectory), physics.density.r1);
    let (trace, stats) = run_loop(&cfg.session, &mut world);

    let path = std::env::temp_dir().join("cloudtouch_trace.jsonl");
    write_trace(&trace, TraceFormat::Jsonl, std::fs::File::create(&path)?)?;
    let back = read_trace_jsonl(std::io::BufReader::new(std::fs::File::open(&path)?))?;
    assert_eq!(back, trace);
    let last = trace.last().unwrap();
    println!(
        "{} snapshots -> {} ({:.1} us/tick); final force {:.3} N, contact {}",
        trace.len(),
        path.display(),
        stats.mean_us,
        last.force.norm(),
        last.contact.as_str()
    );
    Ok(())
}
