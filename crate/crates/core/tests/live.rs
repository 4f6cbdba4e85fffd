mod common;

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde_json::Value;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::Message;

use cloudtouch::bridge::{Bridge, BridgeOptions, ConfigSummary};
use cloudtouch::cli::{cmd_simulate, SimulateArgs};
use cloudtouch::cloud::{AffineTransform, LatticeConfig};
use cloudtouch::config::EngineConfig;
use cloudtouch::density::DensityConfig;
use cloudtouch::force::FrictionParams;
use cloudtouch::geom::Point3;
use cloudtouch::oracle::{synth_sphere_cloud, SphereSpec};
use cloudtouch::session::{LatticeStore, LiveOptions, LiveSession};
use common::{physics, write_xyz};

#[test]
fn effective_config_round_trips_to_the_same_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = synth_sphere_cloud(&SphereSpec { center: Point3::origin(), radius: 0.02, sample_count: 10_000, seed: 3 }).unwrap();
    let cloud_path = dir.path().join("cloud.xyz");
    write_xyz(&cloud_path, &cloud);
    let traj = dir.path().join("traj.csv");
    std::fs::write(&traj, "0,0,0.001,0.035\n800,0,0.001,0.016\n1200,0.006,0.001,0.016\n").unwrap();

    let text = "[lattice]\ndims = [200, 200, 200]\nspacing_m = 0.0005\norigin_m = [-0.05, -0.05, -0.05]\n\n\
                [[transform]]\nop = \"scale\"\nfactors = [1.2, 1.2, 1.2]\n\n[friction]\nmu_s = 0.3\nmu_d = 0.1\nenabled = true\n";
    let first = dir.path().join("first.toml");
    std::fs::write(&first, text).unwrap();
    let effective = EngineConfig::load(&first).unwrap();
    let second = dir.path().join("second.toml");
    std::fs::write(&second, effective.to_toml_string()).unwrap();
    assert_eq!(EngineConfig::load(&second).unwrap(), effective);

    let run = |cfg: &std::path::Path, name: &str| {
        let out = dir.path().join(name);
        cmd_simulate(&SimulateArgs { cloud: cloud_path.clone(), trajectory: traj.clone(), config: Some(cfg.to_owned()), out: out.clone(), ticks: Some(1_200) })
            .unwrap();
        std::fs::read(out).unwrap()
    };
    let a = run(&first, "a.jsonl");
    assert!(!a.is_empty());
    assert_eq!(a, run(&second, "b.jsonl"));
}

#[test]
fn stalled_viewer_does_not_slow_the_loop() {
    let cloud = synth_sphere_cloud(&SphereSpec { center: Point3::origin(), radius: 0.02, sample_count: 20_000, seed: 8 }).unwrap();
    let lattice = LatticeConfig::cube(Point3::origin(), 0.1, 200);
    let phys = physics(DensityConfig::for_spacing(lattice.spacing), FrictionParams::default());
    let store = Arc::new(LatticeStore::new(cloud, lattice, AffineTransform::identity()).unwrap());
    let options = LiveOptions { rate_hz: 1000, publish_hz: 1000.0, channel_capacity: 16 };
    let session = Arc::new(LiveSession::spawn(store, phys, Point3::new(0.0, 0.0, 0.021), options));
    let summary = ConfigSummary::new(&phys, 1000, 1000.0);
    let handle = Bridge::bind("127.0.0.1:0", session.clone(), summary, BridgeOptions::default()).unwrap().spawn().unwrap();
    let url = format!("ws://{}", handle.local_addr());

    // handshakes, then never reads
    let (stalled, _) = tungstenite::connect(&url).unwrap();
    let (mut live, _) = tungstenite::connect(&url).unwrap();
    if let MaybeTlsStream::Plain(s) = live.get_ref() {
        s.set_read_timeout(Some(Duration::from_millis(100))).unwrap();
    }

    let t0 = session.ticks();
    let start = Instant::now();
    let mut last_tick = 0;
    while start.elapsed() < Duration::from_secs(2) {
        match live.read() {
            Ok(Message::Text(t)) => {
                let v: Value = serde_json::from_str(t.as_str()).unwrap();
                if v["type"] == "snapshot" {
                    last_tick = v["tick"].as_u64().unwrap();
                }
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e)) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => panic!("{e}"),
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ticks = session.ticks() - t0;
    assert!(ticks as f64 >= 0.9 * 1000.0 * elapsed, "{ticks} ticks in {elapsed:.2} s");
    assert!(session.ticks() - last_tick < 200, "reader is {} ticks behind", session.ticks() - last_tick);
    drop(stalled);
    drop(handle);
}
