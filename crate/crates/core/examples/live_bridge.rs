//! Serve a live session over WebSocket and drive it from an in-process
//! client: read the hello, move the HIP into the surface, rescale the cloud.
//!
//! With `--serve` it keeps listening on 127.0.0.1:9001 for a real viewer.

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use cloudtouch::bridge::{Bridge, BridgeOptions, ConfigSummary};
use cloudtouch::cloud::{AffineTransform, LatticeConfig};
use cloudtouch::density::DensityConfig;
use cloudtouch::force::{ForceParams, FrictionParams};
use cloudtouch::geom::Point3;
use cloudtouch::oracle::{synth_sphere_cloud, SphereSpec};
use cloudtouch::proxy::ProxyParams;
use cloudtouch::session::{LatticeStore, LiveOptions, LiveSession, Physics};
use serde_json::{json, Value};
use tungstenite::Message;

fn next_of(ws: &mut tungstenite::WebSocket<tungstenite::stream::MaybeTlsStream<std::net::TcpStream>>, kind: &str) -> Value {
    loop {
        let Message::Text(t) = ws.read().expect("socket open") else { continue };
        let v: Value = serde_json::from_str(t.as_str()).expect("server sends JSON");
        if v["type"] == kind {
            return v;
        }
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cloud = synth_sphere_cloud(&SphereSpec {
        center: Point3::origin(),
        radius: 0.025,
        sample_count: 50_000,
        seed: 1,
    })?;
    let lattice = LatticeConfig::cube(Point3::origin(), 0.1, 300);
    let physics = Physics {
        proxy: ProxyParams::default(),
        density: DensityConfig::for_spacing(lattice.spacing),
        force: ForceParams::default(),
        friction: FrictionParams::default(),
    };
    let store = Arc::new(LatticeStore::new(cloud, lattice, AffineTransform::identity())?);
    let options = LiveOptions { rate_hz: 1000, publish_hz: 60.0, channel_capacity: 64 };
    let session = Arc::new(LiveSession::spawn(store, physics, Point3::new(0.0, 0.0, 0.04), options));
    let summary = ConfigSummary::new(&physics, options.rate_hz, options.publish_hz);

    if std::env::args().any(|a| a == "--serve") {
        let bridge = Bridge::bind("127.0.0.1:9001", session, summary, BridgeOptions::default())?;
        println!("listening on ws://{}", bridge.local_addr()?);
        bridge.serve(Arc::new(AtomicBool::new(false)));
        return Ok(());
    }

    let bridge = Bridge::bind("127.0.0.1:0", session.clone(), summary, BridgeOptions::default())?.spawn()?;
    let (mut ws, _) = tungstenite::connect(format!("ws://{}", bridge.local_addr()))?;

    let hello = next_of(&mut ws, "hello");
    println!(
        "hello: protocol {}, {} active voxels, preview of {} points",
        hello["protocol"], hello["lattice"]["active_voxels"], hello["preview"]["count"]
    );

    ws.send(Message::text(json!({"type": "set_hip", "position": [0.0, 0.0, 0.024]}).to_string()))?;
    // the proxy trails the HIP through free space, so wait for contact
    let snap = loop {
        let s = next_of(&mut ws, "snapshot");
        if s["force"][2].as_f64().unwrap_or(0.0) > 0.0 {
            break s;
        }
    };
    println!("in contact at tick {}: force {}", snap["tick"], snap["force"]);

    ws.send(Message::text("{\"type\":\"teleport\"}"))?;
    println!("bad command: {}", next_of(&mut ws, "error")["message"]);

    let s = 1.6;
    ws.send(Message::text(
        json!({"type": "set_transform", "linear": [[s, 0, 0], [0, s, 0], [0, 0, s]], "translation": [0, 0, 0]}).to_string(),
    ))?;
    let cloud = next_of(&mut ws, "cloud");
    println!(
        "cloud v{}: {} active voxels",
        cloud["lattice"]["version"], cloud["lattice"]["active_voxels"]
    );
    ws.close(None)?;
    println!("loop ran {} ticks", session.ticks());
    Ok(())
}
