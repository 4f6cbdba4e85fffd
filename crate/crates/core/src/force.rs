//! Penetration depth, spring reaction force, and friction as a slowdown of
//! the proxy's tangential motion.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceParams {
    /// Hooke constant K, N/m.
    pub stiffness: f64,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self { stiffness: 300.0 }
    }
}

impl ForceParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.stiffness > 0.0 && self.stiffness.is_finite() {
            Ok(())
        } else {
            Err(format!("stiffness must be positive, got {}", self.stiffness))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionParams {
    pub mu_s: f64,
    pub mu_d: f64,
    pub enabled: bool,
}

impl Default for FrictionParams {
    fn default() -> Self {
        Self {
            mu_s: 0.0,
            mu_d: 0.0,
            enabled: false,
        }
    }
}

impl FrictionParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mu_d >= 0.0 && self.mu_d <= self.mu_s && self.mu_s.is_finite()) {
            return Err(format!(
                "need 0 <= mu_d <= mu_s, got mu_s={} mu_d={}",
                self.mu_s, self.mu_d
            ));
        }
        Ok(())
    }
}

/// Per-tick force output.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ForceSample {
    pub force: Vec3,
    pub depth: Vec3,
    pub friction_scale: f64,
    pub stuck: bool,
}

/// `(|v_h| − r_p) v̂_h` once the HIP is farther than one radius from the
/// proxy centre, zero otherwise.
pub fn penetration_depth(v_h: &Vec3, r_p: f64) -> Vec3 {
    let len = v_h.norm();
    if len > 0.0 && len >= r_p {
        v_h * ((len - r_p) / len)
    } else {
        Vec3::zeros()
    }
}

/// `−K D`.
pub fn reaction_force(depth: &Vec3, params: &ForceParams) -> Vec3 {
    -depth * params.stiffness
}

/// Below this angle (radians) the press counts as purely normal.
const ALPHA_EPS: f64 = 1e-12;

/// Multiplier on the tangential step, and whether static friction holds.
///
/// `α` is the angle between the spring force `f_h = K·v_h` and the inward
/// surface normal `−n̂`. Static friction holds while
/// `|f_t| < μ_s |f_n|`; otherwise the slide is slowed by `1 − μ_d cot α`,
/// clamped to `[0, 1]` so friction never reverses motion.
pub fn compute_friction_scale(
    v_h: &Vec3,
    n_hat: &Vec3,
    params: &FrictionParams,
    stiffness: f64,
) -> (f64, bool) {
    if !params.enabled {
        return (1.0, false);
    }
    let f_h = v_h * stiffness;
    let f_mag = f_h.norm();
    if f_mag == 0.0 {
        return (0.0, true);
    }
    let inward = -n_hat;
    let f_n = f_h.dot(&inward);
    let f_t = (f_h - inward * f_n).norm();
    let alpha = f_t.atan2(f_n);
    if alpha < ALPHA_EPS {
        return (0.0, true);
    }
    if f_t < params.mu_s * f_n.abs() {
        return (0.0, true);
    }
    let cot = f_n / f_t;
    ((1.0 - params.mu_d * cot).clamp(0.0, 1.0), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_outside_radius() {
        let d = penetration_depth(&Vec3::new(0.03, 0.0, 0.0), 0.025);
        assert!((d - Vec3::new(0.005, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn depth_zero_inside_and_at_boundary() {
        assert_eq!(penetration_depth(&Vec3::new(0.0, 0.02, 0.0), 0.025), Vec3::zeros());
        assert_eq!(penetration_depth(&Vec3::new(0.0, 0.0, 0.025), 0.025), Vec3::zeros());
        assert_eq!(penetration_depth(&Vec3::zeros(), 0.025), Vec3::zeros());
    }

    #[test]
    fn hooke_force() {
        let p = ForceParams { stiffness: 200.0 };
        assert_eq!(reaction_force(&Vec3::zeros(), &p), Vec3::zeros());
        let f = reaction_force(&Vec3::new(0.005, 0.0, 0.0), &p);
        assert!((f - Vec3::new(-1.0, 0.0, 0.0)).norm() < 1e-15);
        let f2 = reaction_force(&Vec3::new(0.005, 0.0, 0.0), &ForceParams { stiffness: 400.0 });
        assert_eq!(f2, f * 2.0);
    }

    fn enabled(mu_s: f64, mu_d: f64) -> FrictionParams {
        FrictionParams { mu_s, mu_d, enabled: true }
    }

    #[test]
    fn frictionless_and_disabled() {
        let n = Vec3::z();
        let v_h = Vec3::new(0.01, 0.0, -0.02);
        assert_eq!(compute_friction_scale(&v_h, &n, &enabled(0.0, 0.0), 300.0), (1.0, false));
        assert_eq!(
            compute_friction_scale(&v_h, &n, &FrictionParams { enabled: false, ..enabled(0.5, 0.4) }, 300.0),
            (1.0, false)
        );
    }

    #[test]
    fn pure_tangential_pull() {
        let (s, stuck) = compute_friction_scale(&Vec3::new(0.01, 0.0, 0.0), &Vec3::z(), &enabled(0.3, 0.2), 300.0);
        assert_eq!(s, 1.0);
        assert!(!stuck);
    }

    #[test]
    fn forty_five_degrees() {
        let v_h = Vec3::new(0.01, 0.0, -0.01);
        let (s, stuck) = compute_friction_scale(&v_h, &Vec3::z(), &enabled(0.3, 0.2), 300.0);
        assert!(!stuck);
        assert!((s - 0.8).abs() < 1e-12);
    }

    #[test]
    fn static_gate_and_normal_press() {
        // tan α = 0.1 < μ_s
        let v_h = Vec3::new(0.001, 0.0, -0.01);
        assert_eq!(compute_friction_scale(&v_h, &Vec3::z(), &enabled(0.3, 0.2), 300.0), (0.0, true));
        let straight = Vec3::new(0.0, 0.0, -0.01);
        assert_eq!(compute_friction_scale(&straight, &Vec3::z(), &enabled(0.0, 0.0), 300.0), (0.0, true));
    }

    #[test]
    fn scale_stays_in_unit_interval() {
        // just past the static gate with μ_d = μ_s: 1 − μ_d cot α is small but positive
        let v_h = Vec3::new(0.0201, 0.0, -0.01);
        let (s, stuck) = compute_friction_scale(&v_h, &Vec3::z(), &enabled(2.0, 2.0), 300.0);
        assert!(!stuck);
        assert!(s > 0.0 && s < 0.01);
        // μ_d > μ_s violates the params invariant; the function still clamps
        let bad = FrictionParams { mu_s: 0.0, mu_d: 2.0, enabled: true };
        let (s, _) = compute_friction_scale(&Vec3::new(0.01, 0.0, -0.01), &Vec3::z(), &bad, 300.0);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn friction_validation() {
        assert!(enabled(0.3, 0.2).validate().is_ok());
        assert!(enabled(0.2, 0.3).validate().is_err());
        assert!(enabled(0.2, -0.1).validate().is_err());
    }
}
