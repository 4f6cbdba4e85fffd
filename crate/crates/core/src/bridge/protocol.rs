//! JSON messages exchanged with viewers. Every message is an object with a
//! `type` discriminator.

use serde::{Deserialize, Serialize};

use crate::cloud::{AffineTransform, VoxelLattice};
use crate::force::FrictionParams;
use crate::geom::{Mat3, Point3, Vec3};
use crate::proxy::{Contact, TangentMode};
use crate::session::{LatticeRevision, LiveFrame, Physics};

pub const PROTOCOL_VERSION: u32 = 1;

/// Inbound commands.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientCommand {
    SetHip {
        position: [f64; 3],
    },
    /// Replaces the transform applied to the source cloud. `linear` is row-major.
    SetTransform {
        linear: [[f64; 3]; 3],
        translation: [f64; 3],
    },
    SetFriction {
        mu_s: f64,
        mu_d: f64,
        enabled: bool,
    },
    Reset,
}

/// A command whose payload passed validation.
#[derive(Debug, Clone, PartialEq)]
pub enum ValidCommand {
    SetHip(Point3),
    SetTransform(AffineTransform),
    SetFriction(FrictionParams),
    Reset,
}

const KNOWN_TYPES: [&str; 4] = ["set_hip", "set_transform", "set_friction", "reset"];

/// Parses and validates one text frame. The error is the reason sent back
/// to the client.
pub fn parse_command(text: &str) -> Result<ValidCommand, String> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| format!("malformed JSON: {e}"))?;
    let kind = value
        .get("type")
        .and_then(|t| t.as_str())
        .ok_or("message needs a string \"type\" field")?
        .to_owned();
    if !KNOWN_TYPES.contains(&kind.as_str()) {
        return Err(format!("unknown message type {kind:?}"));
    }
    let cmd: ClientCommand =
        serde_json::from_value(value).map_err(|e| format!("invalid {kind} payload: {e}"))?;
    cmd.validate()
}

impl ClientCommand {
    pub fn validate(self) -> Result<ValidCommand, String> {
        match self {
            ClientCommand::SetHip { position } => {
                let p = Point3::from(position);
                if !crate::geom::is_finite_point(&p) {
                    return Err("set_hip: position must be finite".into());
                }
                Ok(ValidCommand::SetHip(p))
            }
            ClientCommand::SetTransform { linear, translation } => {
                let t = AffineTransform {
                    linear: Mat3::from_fn(|r, c| linear[r][c]),
                    translation: Vec3::from(translation),
                };
                t.validate().map_err(|e| format!("set_transform: {e}"))?;
                Ok(ValidCommand::SetTransform(t))
            }
            ClientCommand::SetFriction { mu_s, mu_d, enabled } => {
                let f = FrictionParams { mu_s, mu_d, enabled };
                f.validate().map_err(|e| format!("set_friction: {e}"))?;
                Ok(ValidCommand::SetFriction(f))
            }
            ClientCommand::Reset => Ok(ValidCommand::Reset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub rate_hz: u32,
    pub snapshot_hz: f64,
    pub stiffness_n_per_m: f64,
    pub k_n: f64,
    pub k_h: f64,
    pub delta: f64,
    pub zeta_factor: f64,
    pub tangent_mode: TangentMode,
    pub beta: f64,
    pub r1_m: f64,
    pub r2_m: f64,
    pub friction: FrictionParams,
}

impl ConfigSummary {
    pub fn new(physics: &Physics, rate_hz: u32, snapshot_hz: f64) -> Self {
        Self {
            rate_hz,
            snapshot_hz,
            stiffness_n_per_m: physics.force.stiffness,
            k_n: physics.proxy.k_n,
            k_h: physics.proxy.k_h,
            delta: physics.proxy.delta,
            zeta_factor: physics.proxy.zeta_factor,
            tangent_mode: physics.proxy.tangent_mode,
            beta: physics.density.beta,
            r1_m: physics.density.r1,
            r2_m: physics.density.r2,
            friction: physics.friction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeInfo {
    pub version: u64,
    pub dims: [u32; 3],
    pub spacing_m: f64,
    pub origin_m: [f64; 3],
    pub active_voxels: usize,
    pub discarded_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTransform {
    pub linear: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl From<&AffineTransform> for WireTransform {
    fn from(t: &AffineTransform) -> Self {
        Self {
            linear: std::array::from_fn(|r| std::array::from_fn(|c| t.linear[(r, c)])),
            translation: t.translation.into(),
        }
    }
}

/// Every `stride`-th active-voxel mean as a flat `[x0, y0, z0, x1, …]` array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preview {
    pub stride: usize,
    pub count: usize,
    pub points: Vec<f64>,
}

impl Preview {
    pub fn of(lattice: &VoxelLattice, max_points: usize) -> Self {
        let stride = lattice.len().div_ceil(max_points.max(1)).max(1);
        let points: Vec<f64> = lattice
            .decimated_means(stride)
            .flat_map(|p| [p.x, p.y, p.z])
            .collect();
        Self {
            stride,
            count: points.len() / 3,
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireSnapshot {
    pub tick: u64,
    pub hip: [f64; 3],
    pub proxy_center: [f64; 3],
    pub proxy_radius: f64,
    pub contact: Contact,
    pub force: [f64; 3],
    pub depth_mag: f64,
    pub friction_scale: f64,
    pub sigma_hat: f64,
    /// Unit surface normal at the proxy, absent when nothing is enclosed.
    pub normal: Option<[f64; 3]>,
    pub lattice_version: u64,
}

impl From<&LiveFrame> for WireSnapshot {
    fn from(f: &LiveFrame) -> Self {
        let s = &f.snapshot;
        Self {
            tick: s.tick,
            hip: s.hip.coords.into(),
            proxy_center: s.proxy_center.coords.into(),
            proxy_radius: s.proxy_radius,
            contact: s.contact,
            force: s.force.into(),
            depth_mag: s.depth_mag,
            friction_scale: s.friction_scale,
            sigma_hat: s.sigma_hat,
            normal: f.normal.map(Into::into),
            lattice_version: f.lattice_version,
        }
    }
}

/// Outbound messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        protocol: u32,
        config: ConfigSummary,
        lattice: LatticeInfo,
        transform: WireTransform,
        preview: Preview,
    },
    Snapshot(WireSnapshot),
    Cloud {
        lattice: LatticeInfo,
        transform: WireTransform,
        preview: Preview,
    },
    Error {
        message: String,
    },
}

impl ServerMessage {
    pub fn hello(summary: ConfigSummary, rev: &LatticeRevision, max_points: usize) -> Self {
        ServerMessage::Hello {
            protocol: PROTOCOL_VERSION,
            config: summary,
            lattice: lattice_info(rev),
            transform: WireTransform::from(&rev.transform),
            preview: Preview::of(&rev.lattice, max_points),
        }
    }

    pub fn cloud(rev: &LatticeRevision, max_points: usize) -> Self {
        ServerMessage::Cloud {
            lattice: lattice_info(rev),
            transform: WireTransform::from(&rev.transform),
            preview: Preview::of(&rev.lattice, max_points),
        }
    }

    pub fn error(message: impl Into<String>) -> Self {
        ServerMessage::Error { message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}

fn lattice_info(rev: &LatticeRevision) -> LatticeInfo {
    let l = &rev.lattice;
    let c = l.config();
    LatticeInfo {
        version: rev.version,
        dims: c.dims,
        spacing_m: c.spacing,
        origin_m: c.origin.coords.into(),
        active_voxels: l.len(),
        discarded_points: l.discarded(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_each_command() {
        assert_eq!(
            parse_command(r#"{"type":"set_hip","position":[0.1,0.1,0.1]}"#),
            Ok(ValidCommand::SetHip(Point3::new(0.1, 0.1, 0.1)))
        );
        let t = parse_command(
            r#"{"type":"set_transform","linear":[[2,0,0],[0,2,0],[0,0,2]],"translation":[0,0,0]}"#,
        )
        .unwrap();
        let ValidCommand::SetTransform(t) = t else { panic!() };
        assert!(t.is_positive_diagonal());
        assert_eq!(t.linear[(1, 1)], 2.0);
        assert_eq!(
            parse_command(r#"{"type":"set_friction","mu_s":0.4,"mu_d":0.2,"enabled":true}"#),
            Ok(ValidCommand::SetFriction(FrictionParams { mu_s: 0.4, mu_d: 0.2, enabled: true }))
        );
        assert_eq!(parse_command(r#"{"type":"reset"}"#), Ok(ValidCommand::Reset));
    }

    #[test]
    fn rejects_with_reasons() {
        let cases = [
            ("not json", "malformed"),
            (r#"{"position":[0,0,0]}"#, "type"),
            (r#"{"type":"teleport"}"#, "unknown message type"),
            (r#"{"type":"set_hip","position":[0,0]}"#, "invalid set_hip"),
            (r#"{"type":"set_hip","position":[0,0,0],"extra":1}"#, "invalid set_hip"),
            (r#"{"type":"set_friction","mu_s":0.1,"mu_d":0.3,"enabled":true}"#, "mu_d"),
            (
                r#"{"type":"set_transform","linear":[[1,0,0],[0,0,0],[0,0,1]],"translation":[0,0,0]}"#,
                "set_transform",
            ),
        ];
        for (text, needle) in cases {
            let err = parse_command(text).unwrap_err();
            assert!(err.contains(needle), "{text}: {err}");
        }
    }

    #[test]
    fn messages_carry_type_tag() {
        let v: serde_json::Value = serde_json::from_str(&ServerMessage::error("boom").to_json()).unwrap();
        assert_eq!(v["type"], "error");
        assert_eq!(v["message"], "boom");
    }

    #[test]
    fn preview_respects_cap() {
        use crate::cloud::{resample_to_lattice, LatticeConfig, PointCloud};
        let pts: Vec<Point3> = (0..1000).map(|i| Point3::new(i as f64 * 2e-3 + 1e-3, 0.0, 0.0)).collect();
        let lattice =
            resample_to_lattice(&PointCloud::new(pts).unwrap(), &LatticeConfig::cube(Point3::new(1.0, 0.0, 0.0), 2.4, 1200))
                .unwrap();
        assert_eq!(lattice.len(), 1000);
        let p = Preview::of(&lattice, 300);
        assert_eq!(p.stride, 4);
        assert_eq!(p.count, 250);
        assert_eq!(p.points.len(), 750);
        assert_eq!(Preview::of(&lattice, 50_000).count, 1000);
    }
}
