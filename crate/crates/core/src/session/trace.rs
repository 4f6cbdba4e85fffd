use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::geom::{Point3, Vec3};
use crate::proxy::Contact;

/// Per-tick record streamed to traces and viewers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub tick: u64,
    pub hip: Point3,
    pub proxy_center: Point3,
    pub proxy_radius: f64,
    pub contact: Contact,
    pub force: Vec3,
    pub depth_mag: f64,
    pub friction_scale: f64,
    pub sigma_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Jsonl,
}

impl TraceFormat {
    /// `.jsonl` / `.json` select JSONL, anything else CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") | Some("json") => TraceFormat::Jsonl,
            _ => TraceFormat::Csv,
        }
    }
}

pub const CSV_HEADER: &str = "tick,hip_x,hip_y,hip_z,proxy_x,proxy_y,proxy_z,radius,contact,force_x,force_y,force_z,depth,friction_scale,sigma_hat";

/// Writes one row (CSV) or object (JSONL) per snapshot.
pub fn write_trace<W: Write>(
    trace: &[Snapshot],
    format: TraceFormat,
    mut sink: W,
) -> std::io::Result<()> {
    match format {
        TraceFormat::Csv => {
            writeln!(sink, "{CSV_HEADER}")?;
            for s in trace {
                writeln!(
                    sink,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    s.tick,
                    s.hip.x,
                    s.hip.y,
                    s.hip.z,
                    s.proxy_center.x,
                    s.proxy_center.y,
                    s.proxy_center.z,
                    s.proxy_radius,
                    s.contact.as_str(),
                    s.force.x,
                    s.force.y,
                    s.force.z,
                    s.depth_mag,
                    s.friction_scale,
                    s.sigma_hat
                )?;
            }
        }
        TraceFormat::Jsonl => {
            for s in trace {
                serde_json::to_writer(&mut sink, s)?;
                sink.write_all(b"\n")?;
            }
        }
    }
    sink.flush()
}

/// Parses a JSONL trace back into snapshots.
pub fn read_trace_jsonl<R: BufRead>(source: R) -> std::io::Result<Vec<Snapshot>> {
    let mut out = Vec::new();
    for line in source.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(tick: u64) -> Snapshot {
        Snapshot {
            tick,
            hip: Point3::new(0.1, -0.2, 1.0 / 3.0),
            proxy_center: Point3::new(0.1, -0.2, 0.4),
            proxy_radius: 0.025,
            contact: Contact::Penetrating,
            force: Vec3::new(0.0, 0.0, 1.25e-3),
            depth_mag: 4.1666e-6,
            friction_scale: 1.0,
            sigma_hat: 0.0031,
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let mut buf = Vec::new();
        write_trace(&[], TraceFormat::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn one_snapshot_two_lines() {
        let mut buf = Vec::new();
        write_trace(&[sample(3)], TraceFormat::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').count(), CSV_HEADER.split(',').count());
        assert!(lines[1].starts_with("3,0.1,-0.2,0.3333333333333333,"));
        assert!(lines[1].contains(",penetrating,"));
    }

    #[test]
    fn jsonl_round_trip() {
        let trace: Vec<Snapshot> = (0..5).map(sample).collect();
        let mut buf = Vec::new();
        write_trace(&trace, TraceFormat::Jsonl, &mut buf).unwrap();
        let back = read_trace_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn sink_failure_propagates() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
                Err(std::io::Error::other("disk full"))
            }
            fn flush(&mut self) -> std::io::Result<()> {
                Ok(())
            }
        }
        assert!(write_trace(&[sample(0)], TraceFormat::Csv, Broken).is_err());
    }
}
