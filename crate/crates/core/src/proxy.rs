//! Spherical proxy tracking.
//!
//! Each tick the proxy gathers the lattice means it encloses, sums their
//! radial overshoots into the sinking normal `v_n`, and moves by one of three
//! rules: withdrawal toward the HIP when there is no meaningful contact, a
//! push along `v_n` while the HIP is on the outside, and a tangential slide
//! plus push while the HIP is inside the object.

use serde::{Deserialize, Serialize};

use crate::cloud::VoxelLattice;
use crate::geom::{Point3, Vec3};

/// Points closer than this to the proxy centre have no defined push direction.
const DEGENERATE_DIST: f64 = 1e-12;

/// Which tangent formula the slide step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TangentMode {
    /// `v_t = v_h − (v_n·v_h) n̂`. Not orthogonal to `n̂` unless `|v_n| = 1`.
    #[default]
    PaperLiteral,
    /// `v_t = v_h − (n̂·v_h) n̂`, the projection onto the tangent plane.
    Orthogonalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contact {
    #[default]
    Free,
    Surface,
    Penetrating,
}

impl Contact {
    pub fn as_str(self) -> &'static str {
        match self {
            Contact::Free => "free",
            Contact::Surface => "surface",
            Contact::Penetrating => "penetrating",
        }
    }
}

impl std::str::FromStr for Contact {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "free" => Ok(Contact::Free),
            "surface" => Ok(Contact::Surface),
            "penetrating" => Ok(Contact::Penetrating),
            other => Err(format!("unknown contact state {other:?}")),
        }
    }
}

/// Gains of the update rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProxyParams {
    /// Normal push gain.
    pub k_n: f64,
    /// Withdrawal gain toward the HIP.
    pub k_h: f64,
    /// Tangential slide gain.
    pub delta: f64,
    /// Contact threshold on `|v_n|`, as a fraction of the proxy radius.
    pub zeta_factor: f64,
    pub tangent_mode: TangentMode,
    /// Per-tick displacement cap, as a fraction of the proxy radius.
    pub max_step_factor: f64,
}

impl Default for ProxyParams {
    fn default() -> Self {
        Self {
            k_n: 0.064,
            k_h: 0.002,
            delta: 8e-6,
            zeta_factor: 0.05,
            tangent_mode: TangentMode::PaperLiteral,
            max_step_factor: 0.5,
        }
    }
}

impl ProxyParams {
    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(format!("{name} must lie in (0, 1), got {v}"))
            }
        };
        unit("k_n", self.k_n)?;
        unit("k_h", self.k_h)?;
        unit("delta", self.delta)?;
        if !(self.zeta_factor > 0.0 && self.zeta_factor.is_finite()) {
            return Err(format!("zeta_factor must be positive, got {}", self.zeta_factor));
        }
        if !(self.max_step_factor > 0.0 && self.max_step_factor.is_finite()) {
            return Err(format!(
                "max_step_factor must be positive, got {}",
                self.max_step_factor
            ));
        }
        Ok(())
    }

    /// Contact threshold ζ for a proxy of `radius`.
    pub fn zeta(&self, radius: f64) -> f64 {
        self.zeta_factor * radius
    }
}

/// The haptic interaction point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hip {
    pub position: Point3,
}

impl Hip {
    pub fn new(position: Point3) -> Self {
        Self { position }
    }
}

/// Proxy sphere plus the vectors computed on its last tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyState {
    pub center: Point3,
    pub radius: f64,
    pub contact: Contact,
    pub v_n: Vec3,
    pub v_h: Vec3,
    pub v_t: Vec3,
    pub n_hat: Option<Vec3>,
}

impl ProxyState {
    /// A proxy at rest at `center` with no contact history.
    pub fn new(center: Point3, radius: f64) -> Self {
        Self {
            center,
            radius,
            contact: Contact::Free,
            v_n: Vec3::zeros(),
            v_h: Vec3::zeros(),
            v_t: Vec3::zeros(),
            n_hat: None,
        }
    }
}

/// Radial overshoot of `p` inside the proxy: `(r − |C − p|)(C − p)/|C − p|`.
///
/// Returns `None` when `p` coincides with the centre.
pub fn compute_overshoot(center: &Point3, radius: f64, p: &Point3) -> Option<Vec3> {
    let to_center = center - p;
    let dist = to_center.norm();
    if dist < DEGENERATE_DIST {
        return None;
    }
    Some(to_center * ((radius - dist) / dist))
}

/// Sum of overshoots of the enclosed points. Degenerate points are skipped.
pub fn compute_sinking_normal(center: &Point3, radius: f64, enclosed: &[Point3]) -> Vec3 {
    enclosed
        .iter()
        .filter_map(|p| compute_overshoot(center, radius, p))
        .fold(Vec3::zeros(), |acc, d| acc + d)
}

/// Unit normal `v_n / |v_n|`, undefined for a zero sinking normal.
pub fn unit_normal(v_n: &Vec3) -> Option<Vec3> {
    let n = v_n.norm();
    (n > 0.0).then(|| v_n / n)
}

/// Tangent slide direction. `None` when `v_n` is zero.
pub fn compute_tangent(v_n: &Vec3, v_h: &Vec3, mode: TangentMode) -> Option<Vec3> {
    let n_hat = unit_normal(v_n)?;
    let along = match mode {
        TangentMode::PaperLiteral => v_n.dot(v_h),
        TangentMode::Orthogonalized => n_hat.dot(v_h),
    };
    Some(v_h - n_hat * along)
}

/// What the proxy senses at its current position, before it moves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensing {
    pub v_h: Vec3,
    pub v_n: Vec3,
    pub n_hat: Option<Vec3>,
    pub contact: Contact,
    pub enclosed: usize,
}

impl Sensing {
    /// Points are enclosed and the HIP lies on the inner side of the normal.
    /// Friction and force rendering both key off this.
    pub fn touching(&self) -> bool {
        self.n_hat.is_some() && self.v_n.dot(&self.v_h) < 0.0
    }
}

/// Classifies the tick from `|v_n|` against ζ and the sign of `v_n·v_h`.
pub fn classify(v_n: &Vec3, v_h: &Vec3, zeta: f64) -> Contact {
    if v_n.norm() <= zeta {
        Contact::Free
    } else if v_n.dot(v_h) >= 0.0 {
        Contact::Surface
    } else {
        Contact::Penetrating
    }
}

/// Recomputes `v_h`, the enclosed means, `v_n` and `n̂` for a proxy at `center`.
pub fn sense(
    center: &Point3,
    radius: f64,
    hip: &Hip,
    lattice: &VoxelLattice,
    params: &ProxyParams,
) -> Sensing {
    let v_h = hip.position - center;
    let mut v_n = Vec3::zeros();
    let mut enclosed = 0usize;
    lattice.for_each_in_sphere(center, radius, |p| {
        enclosed += 1;
        if let Some(d) = compute_overshoot(center, radius, p) {
            v_n += d;
        }
    });
    Sensing {
        v_h,
        v_n,
        n_hat: unit_normal(&v_n),
        contact: classify(&v_n, &v_h, params.zeta(radius)),
        enclosed,
    }
}

/// Moves the proxy once, given what it sensed this tick.
///
/// `friction_scale` multiplies the tangential part of the motion while the
/// proxy is touching: the slide gain in the penetrating rule, and the
/// tangential component of the withdrawal step when light contact persists.
/// A scale of exactly 1 leaves every step bit-identical to the frictionless
/// rules.
pub fn advance(
    state: &ProxyState,
    sensed: &Sensing,
    params: &ProxyParams,
    friction_scale: f64,
) -> ProxyState {
    let mut v_t = Vec3::zeros();
    let step = match sensed.contact {
        Contact::Free => {
            let pull = sensed.v_h * params.k_h;
            match sensed.n_hat {
                Some(n) if friction_scale != 1.0 && sensed.touching() => {
                    let normal = n * n.dot(&pull);
                    normal + (pull - normal) * friction_scale
                }
                _ => pull,
            }
        }
        Contact::Surface => sensed.v_n * params.k_n,
        Contact::Penetrating => {
            v_t = compute_tangent(&sensed.v_n, &sensed.v_h, params.tangent_mode)
                .unwrap_or_else(Vec3::zeros);
            v_t * (params.delta * friction_scale) + sensed.v_n * params.k_n
        }
    };
    let max_step = params.max_step_factor * state.radius;
    let len = step.norm();
    let step = if len > max_step { step * (max_step / len) } else { step };
    ProxyState {
        center: state.center + step,
        radius: state.radius,
        contact: sensed.contact,
        v_n: sensed.v_n,
        v_h: sensed.v_h,
        v_t,
        n_hat: sensed.n_hat,
    }
}

/// One full tick: sense at the current centre, then move.
pub fn proxy_step(
    state: &ProxyState,
    hip: &Hip,
    lattice: &VoxelLattice,
    params: &ProxyParams,
    friction_scale: f64,
) -> ProxyState {
    let sensed = sense(&state.center, state.radius, hip, lattice, params);
    advance(state, &sensed, params, friction_scale)
}
