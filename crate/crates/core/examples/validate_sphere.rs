//! Full sphere validation at the base radius and scaled up by 1.6.
//!
//! cargo run --release --example validate_sphere

use cloudtouch::oracle::{run_sphere_validation, ProtocolPhysics, SphereProtocol};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for scale in [1.0, 1.6] {
        let protocol = SphereProtocol { scale, ..SphereProtocol::default() };
        let run = run_sphere_validation(&protocol, &ProtocolPhysics::default(), 0.02, 0.05)?;
        let r = &run.report;
        println!(
            "R = {:.3} m: rms {:.2}% max {:.2}% ({} ticks), release max {:.2}%, {} in {:.1} s",
            r.sphere_radius_m,
            r.rms_rel_err * 100.0,
            r.max_rel_err * 100.0,
            r.ticks_compared,
            r.release.max_rel_err * 100.0,
            if r.passed { "PASS" } else { "FAIL" },
            r.runtime_s
        );
        for p in &r.presses {
            println!(
                "  press {:+.2?}: contact radius {:.3} mm, proxy radius {:.2} mm",
                p.direction,
                p.contact_radius_m * 1e3,
                p.proxy_radius_m * 1e3
            );
        }
    }
    Ok(())
}
