//! Engine configuration, read from TOML.
//!
//! Every section is optional and falls back to defaults. Unknown keys are
//! rejected. Lengths carry their unit in the key name.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::{AffineTransform, LatticeConfig, TransformOp};
use crate::density::DensityConfig;
use crate::force::{ForceParams, FrictionParams};
use crate::geom::Point3;
use crate::oracle::{ProtocolPhysics, SphereProtocol};
use crate::proxy::ProxyParams;
use crate::session::{Physics, SessionConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub dims: [u32; 3],
    pub spacing_m: f64,
    pub origin_m: [f64; 3],
}

impl Default for LatticeSection {
    fn default() -> Self {
        let l = LatticeConfig::default();
        Self {
            dims: l.dims,
            spacing_m: l.spacing,
            origin_m: l.origin.coords.into(),
        }
    }
}

/// Radius adaptation. Lengths left unset scale with the lattice spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySection {
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r1_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r2_m: Option<f64>,
    pub neighborhood_k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recompute_threshold_m: Option<f64>,
}

impl Default for DensitySection {
    fn default() -> Self {
        let d = DensityConfig::for_spacing(1.0);
        Self {
            beta: d.beta,
            r1_m: None,
            r2_m: None,
            neighborhood_k: d.neighborhood_k,
            recompute_threshold_m: None,
        }
    }
}

impl DensitySection {
    pub fn resolve(&self, spacing: f64) -> DensityConfig {
        let d = DensityConfig::for_spacing(spacing);
        DensityConfig {
            beta: self.beta,
            r1: self.r1_m.unwrap_or(d.r1),
            r2: self.r2_m.unwrap_or(d.r2),
            neighborhood_k: self.neighborhood_k,
            recompute_threshold: self.recompute_threshold_m.unwrap_or(d.recompute_threshold),
        }
    }

    fn is_spacing_relative(&self) -> bool {
        self.r1_m.is_none() && self.r2_m.is_none() && self.recompute_threshold_m.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceSection {
    pub stiffness_n_per_m: f64,
}

impl Default for ForceSection {
    fn default() -> Self {
        Self {
            stiffness_n_per_m: ForceParams::default().stiffness,
        }
    }
}

/// Sphere validation protocol and pass bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub rms_bound: f64,
    pub max_bound: f64,
    pub radius_m: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub workspace_edge_m: f64,
    pub dims: u32,
    pub presses: usize,
    pub speed_m_per_tick: f64,
    pub press_depth_frac: f64,
    pub dwell_ticks: u64,
    pub threshold_frac: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        let p = SphereProtocol::default();
        Self {
            rms_bound: 0.02,
            max_bound: 0.05,
            radius_m: p.base_radius,
            sample_count: p.sample_count,
            seed: p.seed,
            workspace_edge_m: p.workspace_edge,
            dims: p.dims,
            presses: p.press_count,
            speed_m_per_tick: p.speed_m_per_tick,
            press_depth_frac: p.press_depth_frac,
            dwell_ticks: p.dwell_ticks,
            threshold_frac: p.threshold_frac,
        }
    }
}

/// Live viewer endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BridgeSection {
    /// Snapshot stream rate, capped at 60.
    pub snapshot_hz: f64,
    /// Cloud preview size cap, capped at 50 000.
    pub preview_max_points: usize,
    /// Per-client outbound backlog before the oldest frames are dropped.
    pub channel_capacity: usize,
}

impl Default for BridgeSection {
    fn default() -> Self {
        Self {
            snapshot_hz: 60.0,
            preview_max_points: 50_000,
            channel_capacity: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub lattice: LatticeSection,
    /// Applied to the loaded cloud left to right before resampling.
    #[serde(rename = "transform", skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformOp>,
    pub proxy: ProxyParams,
    pub density: DensitySection,
    pub force: ForceSection,
    pub friction: FrictionParams,
    pub session: SessionConfig,
    pub validation: ValidationSection,
    pub bridge: BridgeSection,
}

impl EngineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// `None` gives the defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self, ConfigError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config always serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |section: &str, msg: String| ConfigError::Invalid(format!("[{section}] {msg}"));
        self.lattice_config()
            .validate()
            .map_err(|e| invalid("lattice", e.to_string()))?;
        self.transform().map_err(|e| invalid("transform", e.to_string()))?;
        self.proxy.validate().map_err(|e| invalid("proxy", e))?;
        self.density_config().validate().map_err(|e| invalid("density", e))?;
        self.force_params().validate().map_err(|e| invalid("force", e))?;
        self.friction.validate().map_err(|e| invalid("friction", e))?;
        self.session.validate().map_err(|e| invalid("session", e))?;
        let v = &self.validation;
        if !(v.rms_bound >= 0.0 && v.max_bound >= 0.0) {
            return Err(invalid("validation", "bounds must be non-negative".into()));
        }
        self.sphere_protocol(1.0)
            .validate()
            .map_err(|e| invalid("validation", e.to_string()))?;
        let b = &self.bridge;
        if !(b.snapshot_hz > 0.0 && b.snapshot_hz <= 60.0) {
            return Err(invalid("bridge", format!("snapshot_hz must be in (0, 60], got {}", b.snapshot_hz)));
        }
        if b.preview_max_points == 0 || b.preview_max_points > 50_000 {
            return Err(invalid("bridge", "preview_max_points must be in [1, 50000]".into()));
        }
        if b.channel_capacity == 0 {
            return Err(invalid("bridge", "channel_capacity must be >= 1".into()));
        }
        Ok(())
    }

    pub fn lattice_config(&self) -> LatticeConfig {
        LatticeConfig {
            dims: self.lattice.dims,
            spacing: self.lattice.spacing_m,
            origin: Point3::from(self.lattice.origin_m),
        }
    }

    pub fn transform(&self) -> Result<AffineTransform, crate::cloud::CloudError> {
        TransformOp::compose(&self.transforms)
    }

    pub fn density_config(&self) -> DensityConfig {
        self.density.resolve(self.lattice.spacing_m)
    }

    pub fn force_params(&self) -> ForceParams {
        ForceParams {
            stiffness: self.force.stiffness_n_per_m,
        }
    }

    pub fn physics(&self) -> Physics {
        Physics {
            proxy: self.proxy,
            density: self.density_config(),
            force: self.force_params(),
            friction: self.friction,
        }
    }

    /// The validation protocol for a sphere of `radius_m · scale`.
    pub fn sphere_protocol(&self, scale: f64) -> SphereProtocol {
        let v = &self.validation;
        SphereProtocol {
            base_radius: v.radius_m,
            scale,
            sample_count: v.sample_count,
            seed: v.seed,
            workspace_edge: v.workspace_edge_m,
            dims: v.dims,
            press_count: v.presses,
            speed_m_per_tick: v.speed_m_per_tick,
            press_depth_frac: v.press_depth_frac,
            dwell_ticks: v.dwell_ticks,
            threshold_frac: v.threshold_frac,
            ..SphereProtocol::default()
        }
    }

    /// Physics for the validation lattice. Spacing-relative density lengths
    /// follow that lattice, explicit ones are kept.
    pub fn protocol_physics(&self) -> ProtocolPhysics {
        let density = if self.density.is_spacing_relative() {
            None
        } else {
            let spacing = self.validation.workspace_edge_m / self.validation.dims as f64;
            Some(self.density.resolve(spacing))
        };
        ProtocolPhysics {
            proxy: self.proxy,
            force: self.force_params(),
            density,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        assert_eq!(EngineConfig::from_toml_str("").unwrap(), EngineConfig::default());
    }

    #[test]
    fn every_parameter_by_name() {
        let text = r#"
            [lattice]
            dims = [100, 120, 140]
            spacing_m = 0.002
            origin_m = [-0.1, -0.12, -0.14]

            [[transform]]
            op = "scale"
            factors = [2.0, 2.0, 2.0]

            [[transform]]
            op = "rotate"
            axis = [0.0, 1.0, 0.0]
            angle_deg = 90.0

            [proxy]
            k_n = 0.05
            k_h = 0.003
            delta = 1e-5
            zeta_factor = 0.1

            [density]
            beta = 3.0
            r1_m = 0.004
            r2_m = 0.03

            [force]
            stiffness_n_per_m = 500.0

            [friction]
            enabled = true
            mu_s = 0.4
            mu_d = 0.2

            [session]
            rate_hz = 2000
        "#;
        let c = EngineConfig::from_toml_str(text).unwrap();
        assert_eq!(c.lattice_config().dims, [100, 120, 140]);
        assert_eq!(c.transforms.len(), 2);
        assert_eq!(c.proxy.k_n, 0.05);
        assert_eq!(c.proxy.max_step_factor, 0.5);
        let d = c.density_config();
        assert_eq!((d.beta, d.r1, d.r2), (3.0, 0.004, 0.03));
        assert_eq!(d.recompute_threshold, 0.001);
        assert_eq!(c.force_params().stiffness, 500.0);
        assert!(c.friction.enabled);
        assert_eq!(c.session.rate_hz, 2000);
        assert_eq!(c.session.max_ticks, SessionConfig::default().max_ticks);
    }

    #[test]
    fn unknown_keys_rejected() {
        for text in [
            "[proxy]\nk_nn = 0.1\n",
            "[lattice]\nspacing = 0.1\n",
            "[bogus]\n",
            "[[transform]]\nop = \"scale\"\nfactor = [1.0, 1.0, 1.0]\n",
            "[[transform]]\nop = \"shear\"\n",
        ] {
            assert!(
                matches!(EngineConfig::from_toml_str(text), Err(ConfigError::Parse(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn invariant_violations_rejected() {
        for text in [
            "[friction]\nmu_s = 0.1\nmu_d = 0.2\n",
            "[density]\nr1_m = 0.5\nr2_m = 0.1\n",
            "[force]\nstiffness_n_per_m = -1.0\n",
            "[session]\nrate_hz = 0\n",
            "[lattice]\ndims = [0, 10, 10]\n",
            "[[transform]]\nop = \"scale\"\nfactors = [1.0, 0.0, 1.0]\n",
            "[bridge]\nsnapshot_hz = 120.0\n",
        ] {
            assert!(
                matches!(EngineConfig::from_toml_str(text), Err(ConfigError::Invalid(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn round_trip() {
        let mut c = EngineConfig::default();
        c.transforms.push(TransformOp::Translate { offset_m: [0.1, 0.0, -0.2] });
        c.density.r2_m = Some(0.02);
        c.friction = FrictionParams { mu_s: 0.3, mu_d: 0.1, enabled: true };
        let again = EngineConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn protocol_density_follows_validation_lattice() {
        let c = EngineConfig::default();
        assert!(c.protocol_physics().density.is_none());
        let c = EngineConfig::from_toml_str("[density]\nr1_m = 0.0004\n").unwrap();
        let d = c.protocol_physics().density.unwrap();
        assert_eq!(d.r1, 0.0004);
        assert!((d.r2 - 10.0 * 0.1 / 300.0).abs() < 1e-15);
    }
}
