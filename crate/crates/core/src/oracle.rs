//! Analytic sphere oracle: validation geometry, closed-form ideal force, and
//! trace scoring.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use std::sync::Arc;
use std::time::Instant;

use crate::cloud::{
    apply_transform, resample_to_lattice, AffineTransform, CloudError, LatticeConfig, PointCloud,
    VoxelLattice,
};
use crate::density::DensityConfig;
use crate::force::{ForceParams, FrictionParams};
use crate::geom::{Point3, Vec3};
use crate::proxy::{Contact, ProxyParams};
use crate::session::{step_once, HipSource, Physics, Snapshot, Trajectory, World};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("HIP at the sphere centre: force direction undefined")]
    Degenerate,
    #[error("trace has no ticks with contact force above the threshold")]
    NoContact,
    #[error("invalid sphere spec: {0}")]
    InvalidSpec(String),
    #[error("proxy never reached contact during the settle phase")]
    NoEquilibrium,
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereSpec {
    pub center: Point3,
    pub radius: f64,
    pub sample_count: usize,
    pub seed: u64,
}

impl SphereSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(OracleError::InvalidSpec(format!("radius {}", self.radius)));
        }
        if self.sample_count < 100 {
            return Err(OracleError::InvalidSpec(format!(
                "sample_count {} < 100",
                self.sample_count
            )));
        }
        Ok(())
    }
}

/// Uniformly random rotation from three uniforms (Shoemake's method).
fn random_rotation(rng: &mut ChaCha8Rng) -> nalgebra::UnitQuaternion<f64> {
    use std::f64::consts::TAU;
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = nalgebra::Quaternion::new(
        b * (TAU * u3).cos(),
        a * (TAU * u2).sin(),
        a * (TAU * u2).cos(),
        b * (TAU * u3).sin(),
    );
    nalgebra::UnitQuaternion::from_quaternion(q)
}

/// Quasi-uniform surface samples: a Fibonacci spiral under a seeded random
/// rotation, so different seeds do not share the spiral's pole alignment.
pub fn synth_sphere_cloud(spec: &SphereSpec) -> Result<PointCloud, OracleError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let rot = random_rotation(&mut rng);
    let n = spec.sample_count;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let ring = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            let u = rot * Vec3::new(ring * phi.cos(), ring * phi.sin(), z);
            spec.center + u.normalize() * spec.radius
        })
        .collect();
    PointCloud::new(points).map_err(|e| OracleError::InvalidSpec(e.to_string()))
}

/// A square `n × n` grid of samples in the plane `z = origin.z`, starting at
/// `origin` and stepping `spacing` along x and y.
pub fn synth_plane_patch(origin: Point3, n: usize, spacing: f64) -> Result<PointCloud, OracleError> {
    if n == 0 || !(spacing > 0.0 && spacing.is_finite()) {
        return Err(OracleError::InvalidSpec(format!("plane patch needs n >= 1 and spacing > 0, got {n}, {spacing}")));
    }
    let points = (0..n * n)
        .map(|k| origin + Vec3::new((k % n) as f64 * spacing, (k / n) as f64 * spacing, 0.0))
        .collect();
    Ok(PointCloud::new(points)?)
}

/// `K (R − d)` along the outward radial direction while the HIP is inside
/// the sphere, zero outside.
pub fn ideal_sphere_force(hip: &Point3, spec: &SphereSpec, stiffness: f64) -> Result<Vec3, OracleError> {
    let offset = hip - spec.center;
    let d = offset.norm();
    if d >= spec.radius {
        return Ok(Vec3::zeros());
    }
    if d < 1e-15 {
        return Err(OracleError::Degenerate);
    }
    Ok(offset * (stiffness * (spec.radius - d) / d))
}

/// Relative force error summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rms_rel_err: f64,
    pub max_rel_err: f64,
    pub ticks_compared: usize,
}

/// Default fraction of the peak ideal force below which ticks are ignored.
pub const DEFAULT_FORCE_THRESHOLD: f64 = 0.01;

/// Scores rendered forces against the ideal at each snapshot's HIP.
///
/// Ticks whose ideal magnitude is at most `threshold_frac` of the trace's
/// peak ideal magnitude are skipped (grazing contact).
pub fn compare_traces(
    rendered: &[Snapshot],
    spec: &SphereSpec,
    stiffness: f64,
    threshold_frac: f64,
) -> Result<Comparison, OracleError> {
    let ideal: Vec<Vec3> = rendered
        .iter()
        .map(|s| ideal_sphere_force(&s.hip, spec, stiffness))
        .collect::<Result<_, _>>()?;
    compare_forces(rendered.iter().map(|s| s.force).zip(ideal), threshold_frac)
}

/// Core of [`compare_traces`] over `(rendered, ideal)` pairs.
pub fn compare_forces<I>(pairs: I, threshold_frac: f64) -> Result<Comparison, OracleError>
where
    I: IntoIterator<Item = (Vec3, Vec3)>,
{
    let pairs: Vec<(Vec3, Vec3)> = pairs.into_iter().collect();
    let peak = pairs.iter().map(|(_, i)| i.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(OracleError::NoContact);
    }
    let floor = threshold_frac * peak;
    let mut sum_sq = 0.0;
    let mut max: f64 = 0.0;
    let mut n = 0usize;
    for (r, i) in &pairs {
        let mag = i.norm();
        if mag <= floor {
            continue;
        }
        let e = (r - i).norm() / mag;
        sum_sq += e * e;
        max = max.max(e);
        n += 1;
    }
    if n == 0 {
        return Err(OracleError::NoContact);
    }
    Ok(Comparison {
        rms_rel_err: (sum_sq / n as f64).sqrt(),
        max_rel_err: max,
        ticks_compared: n,
    })
}

/// The scripted presses used to validate rendered forces against the sphere.
///
/// Each press runs a fresh session along one of `press_count` spread-out
/// directions, at `speed_m_per_tick`:
///
/// 1. approach from outside to the nominal surface;
/// 2. settle there for `dwell_ticks`; the mean proxy standoff
///    `|C − c| − r_p` over the second half of the dwell is that press's
///    contact radius, and the mean proxy centre fixes the press axis;
/// 3. press along that axis to `press_depth_frac · R` below the surface;
/// 4. hold for `dwell_ticks`;
/// 5. release back to the surface.
///
/// Phases 3–4 (loading) of all presses are pooled and scored against the
/// ideal force of a sphere with each press's contact radius. Release is
/// scored separately: the proxy keeps the sample pocket it was dragged into
/// under load, so unloading shows hysteresis the static oracle ignores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereProtocol {
    pub center: Point3,
    /// Unscaled sphere radius, m.
    pub base_radius: f64,
    /// Uniform scale applied to the sampled cloud before resampling.
    pub scale: f64,
    pub sample_count: usize,
    pub seed: u64,
    /// Edge of the cubic lattice centred on the sphere, m. Not scaled.
    pub workspace_edge: f64,
    pub dims: u32,
    pub press_count: usize,
    pub speed_m_per_tick: f64,
    pub press_depth_frac: f64,
    pub dwell_ticks: u64,
    pub threshold_frac: f64,
}

impl Default for SphereProtocol {
    fn default() -> Self {
        Self {
            center: Point3::origin(),
            base_radius: 0.025,
            scale: 1.0,
            sample_count: 50_000,
            seed: 1,
            workspace_edge: 0.1,
            dims: 300,
            press_count: 8,
            speed_m_per_tick: 2e-6,
            press_depth_frac: 0.6,
            dwell_ticks: 500,
            threshold_frac: DEFAULT_FORCE_THRESHOLD,
        }
    }
}

impl SphereProtocol {
    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: &str| Err(OracleError::InvalidSpec(m.into()));
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad("scale must be positive");
        }
        if !(self.speed_m_per_tick > 0.0 && self.speed_m_per_tick.is_finite()) {
            return bad("speed must be positive");
        }
        if !(self.press_depth_frac > 0.0 && self.press_depth_frac < 1.0) {
            return bad("press depth fraction must be in (0, 1)");
        }
        if self.press_count == 0 {
            return bad("press_count must be >= 1");
        }
        if self.dwell_ticks < 2 {
            return bad("dwell_ticks must be >= 2");
        }
        if self.workspace_edge < 2.0 * self.base_radius * self.scale {
            return bad("sphere does not fit the workspace");
        }
        Ok(())
    }

    /// Press directions: a Fibonacci spiral tilted off the lattice axes.
    pub fn directions(&self) -> Vec<Vec3> {
        let n = self.press_count;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        let tilt = nalgebra::Rotation3::from_euler_angles(0.3, 0.5, 0.7);
        (0..n)
            .map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / n as f64;
                let ring = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                tilt * Vec3::new(ring * phi.cos(), ring * phi.sin(), z)
            })
            .collect()
    }
}

/// Physics used by the protocol. Friction is forced off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolPhysics {
    pub proxy: ProxyParams,
    pub force: ForceParams,
    /// `None` derives defaults from the validation lattice spacing.
    pub density: Option<DensityConfig>,
}

impl Default for ProtocolPhysics {
    fn default() -> Self {
        Self {
            proxy: ProxyParams::default(),
            force: ForceParams::default(),
            density: None,
        }
    }
}

/// Force error of the published rendering result, for context in reports.
pub const REFERENCE_ERROR: f64 = 0.004;

/// Outcome of one press.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressSummary {
    pub direction: Vec3,
    pub contact_radius_m: f64,
    pub proxy_radius_m: f64,
    pub loading: Comparison,
    pub release: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub rms_rel_err: f64,
    pub max_rel_err: f64,
    pub ticks_compared: usize,
    /// Release phases pooled, reported only.
    pub release: Comparison,
    /// Loading phases against the nominal radius, without standoff.
    pub uncompensated: Comparison,
    pub presses: Vec<PressSummary>,
    pub sphere_radius_m: f64,
    pub sample_count: usize,
    pub active_voxels: usize,
    pub lattice_spacing_m: f64,
    pub stiffness_n_per_m: f64,
    pub ticks: u64,
    pub runtime_s: f64,
    pub reference_error: f64,
    pub rms_bound: f64,
    pub max_bound: f64,
    pub passed: bool,
}

/// Everything produced by one protocol run.
#[derive(Debug, Clone)]
pub struct ValidationRun {
    pub report: ValidationReport,
    /// One trace per press.
    pub traces: Vec<Vec<Snapshot>>,
}

struct Press {
    trace: Vec<Snapshot>,
    loading: std::ops::Range<usize>,
    contact_radius: f64,
}

fn run_press(
    lattice: &Arc<VoxelLattice>,
    phys: Physics,
    p: &SphereProtocol,
    radius: f64,
    dir: Vec3,
) -> Result<Press, OracleError> {
    let c = p.center;
    let spacing = lattice.config().spacing;
    let ticks_for = |d: f64| ((d / p.speed_m_per_tick).ceil() as u64).max(1);
    let invalid = |e: crate::session::TrajectoryError| OracleError::InvalidSpec(e.to_string());

    // approach and settle
    let gap = phys.density.r2 + 5.0 * spacing;
    let touch = c + dir * radius;
    let t_touch = ticks_for(gap);
    let t_settled = t_touch + p.dwell_ticks;
    let approach = Trajectory::new(vec![(0, c + dir * (radius + gap)), (t_touch, touch)]).map_err(invalid)?;
    let mut world = World::new(lattice.clone(), phys, HipSource::Scripted(approach), phys.density.r1);
    let mut trace = Vec::new();
    for tick in 0..t_settled {
        trace.push(step_once(&mut world, tick).2);
    }
    let window = &trace[(t_touch + p.dwell_ticks / 2) as usize..];
    if window.iter().all(|s| s.contact == Contact::Free && s.force == Vec3::zeros()) {
        return Err(OracleError::NoEquilibrium);
    }
    let n = window.len() as f64;
    let contact_radius =
        window.iter().map(|s| (s.proxy_center - c).norm() - s.proxy_radius).sum::<f64>() / n;
    let mean_center = window.iter().fold(Vec3::zeros(), |a, s| a + s.proxy_center.coords) / n;
    let axis = (mean_center - c.coords).try_normalize(1e-12).ok_or(OracleError::NoEquilibrium)?;

    // press, hold, release along the equilibrium axis
    let surface = c + axis * radius;
    let deep = c + axis * (radius * (1.0 - p.press_depth_frac));
    let t_aligned = t_settled + ticks_for((surface - touch).norm());
    let t_deep = t_aligned + ticks_for(radius * p.press_depth_frac);
    let t_hold = t_deep + p.dwell_ticks;
    let t_end = t_hold + (t_deep - t_aligned);
    let press = Trajectory::new(vec![
        (t_settled, touch),
        (t_aligned, surface),
        (t_deep, deep),
        (t_hold, deep),
        (t_end, surface),
    ])
    .map_err(invalid)?;
    world.hip = HipSource::Scripted(press);
    for tick in t_settled..=t_end {
        trace.push(step_once(&mut world, tick).2);
    }
    Ok(Press {
        trace,
        loading: t_aligned as usize..t_hold as usize,
        contact_radius,
    })
}

fn ideal_pairs<'a>(
    trace: &'a [Snapshot],
    spec: &'a SphereSpec,
    stiffness: f64,
) -> impl Iterator<Item = Result<(Vec3, Vec3), OracleError>> + 'a {
    trace
        .iter()
        .map(move |s| ideal_sphere_force(&s.hip, spec, stiffness).map(|i| (s.force, i)))
}

/// Runs the protocol and scores it against `rms_bound` / `max_bound`.
pub fn run_sphere_validation(
    protocol: &SphereProtocol,
    physics: &ProtocolPhysics,
    rms_bound: f64,
    max_bound: f64,
) -> Result<ValidationRun, OracleError> {
    let started = Instant::now();
    let p = protocol;
    p.validate()?;
    let base = SphereSpec {
        center: p.center,
        radius: p.base_radius,
        sample_count: p.sample_count,
        seed: p.seed,
    };
    let c = p.center;
    let about_center = AffineTransform::translation(-c.coords)?
        .then(&AffineTransform::uniform_scaling(p.scale)?)
        .then(&AffineTransform::translation(c.coords)?);
    let cloud = apply_transform(&synth_sphere_cloud(&base)?, &about_center)?;
    let lattice_cfg = LatticeConfig::cube(c, p.workspace_edge, p.dims);
    let lattice = Arc::new(resample_to_lattice(&cloud, &lattice_cfg)?);
    let radius = p.base_radius * p.scale;
    let nominal = SphereSpec { radius, ..base };
    let phys = Physics {
        proxy: physics.proxy,
        density: physics.density.unwrap_or_else(|| DensityConfig::for_spacing(lattice_cfg.spacing)),
        force: physics.force,
        friction: FrictionParams::default(),
    };
    let k = physics.force.stiffness;

    let mut loading = Vec::new();
    let mut release = Vec::new();
    let mut raw = Vec::new();
    let mut presses = Vec::new();
    let mut traces = Vec::new();
    for dir in p.directions() {
        let press = run_press(&lattice, phys, p, radius, dir)?;
        let contact = SphereSpec { radius: press.contact_radius, ..nominal };
        let load = &press.trace[press.loading.clone()];
        let unload = &press.trace[press.loading.end..];
        let l: Vec<_> = ideal_pairs(load, &contact, k).collect::<Result<_, _>>()?;
        let r: Vec<_> = ideal_pairs(unload, &contact, k).collect::<Result<_, _>>()?;
        raw.extend(ideal_pairs(load, &nominal, k).collect::<Result<Vec<_>, _>>()?);
        presses.push(PressSummary {
            direction: dir,
            contact_radius_m: press.contact_radius,
            proxy_radius_m: press.trace[press.loading.start].proxy_radius,
            loading: compare_forces(l.iter().copied(), p.threshold_frac)?,
            release: compare_forces(r.iter().copied(), p.threshold_frac)?,
        });
        loading.extend(l);
        release.extend(r);
        traces.push(press.trace);
    }
    let scored = compare_forces(loading, p.threshold_frac)?;
    let report = ValidationReport {
        rms_rel_err: scored.rms_rel_err,
        max_rel_err: scored.max_rel_err,
        ticks_compared: scored.ticks_compared,
        release: compare_forces(release, p.threshold_frac)?,
        uncompensated: compare_forces(raw, p.threshold_frac)?,
        presses,
        sphere_radius_m: radius,
        sample_count: cloud.len(),
        active_voxels: lattice.len(),
        lattice_spacing_m: lattice_cfg.spacing,
        stiffness_n_per_m: k,
        ticks: traces.iter().map(|t| t.len() as u64).sum(),
        runtime_s: started.elapsed().as_secs_f64(),
        reference_error: REFERENCE_ERROR,
        rms_bound,
        max_bound,
        passed: scored.rms_rel_err <= rms_bound && scored.max_rel_err <= max_bound,
    };
    Ok(ValidationRun { report, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SphereSpec {
        SphereSpec {
            center: Point3::new(0.01, -0.02, 0.03),
            radius: 0.025,
            sample_count: 2000,
            seed: 7,
        }
    }

    #[test]
    fn samples_on_surface() {
        let s = spec();
        let cloud = synth_sphere_cloud(&s).unwrap();
        assert_eq!(cloud.len(), 2000);
        for p in cloud.points() {
            assert!(((p - s.center).norm() - s.radius).abs() <= 1e-12);
        }
    }

    #[test]
    fn seeded_determinism() {
        let a = synth_sphere_cloud(&spec()).unwrap();
        let b = synth_sphere_cloud(&spec()).unwrap();
        assert_eq!(a, b);
        let c = synth_sphere_cloud(&SphereSpec { seed: 8, ..spec() }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spec_validation() {
        assert!(synth_sphere_cloud(&SphereSpec { sample_count: 99, ..spec() }).is_err());
        assert!(synth_sphere_cloud(&SphereSpec { radius: 0.0, ..spec() }).is_err());
    }

    #[test]
    fn ideal_force_cases() {
        let s = spec();
        let outside = s.center + Vec3::new(0.0, 0.0, 0.03);
        assert_eq!(ideal_sphere_force(&outside, &s, 200.0).unwrap(), Vec3::zeros());
        let inside = s.center + Vec3::new(0.0, s.radius - 0.005, 0.0);
        let f = ideal_sphere_force(&inside, &s, 200.0).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(f.y > 0.0 && f.x == 0.0 && f.z == 0.0);
        assert!(matches!(ideal_sphere_force(&s.center, &s, 200.0), Err(OracleError::Degenerate)));
        let on = s.center + Vec3::new(s.radius, 0.0, 0.0);
        assert_eq!(ideal_sphere_force(&on, &s, 200.0).unwrap(), Vec3::zeros());
    }

    #[test]
    fn compare_identity_and_uniform_scale() {
        let ideal: Vec<Vec3> = (1..50).map(|i| Vec3::new(0.0, 0.1 * i as f64, 0.02)).collect();
        let same = compare_forces(ideal.iter().map(|f| (*f, *f)), DEFAULT_FORCE_THRESHOLD).unwrap();
        assert_eq!((same.rms_rel_err, same.max_rel_err), (0.0, 0.0));
        let scaled =
            compare_forces(ideal.iter().map(|f| (*f * 1.01, *f)), DEFAULT_FORCE_THRESHOLD).unwrap();
        assert!((scaled.rms_rel_err - 0.01).abs() < 1e-12);
        assert!((scaled.max_rel_err - 0.01).abs() < 1e-12);
        assert_eq!(scaled.ticks_compared, ideal.len());
    }

    #[test]
    fn compare_without_contact() {
        let zero = vec![(Vec3::zeros(), Vec3::zeros()); 4];
        assert!(matches!(compare_forces(zero, 0.01), Err(OracleError::NoContact)));
    }

    #[test]
    fn threshold_skips_grazing_ticks() {
        let pairs = vec![
            (Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0)),
            // ideal at 0.5% of peak with a wildly wrong render: ignored
            (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.005, 0.0, 0.0)),
        ];
        let c = compare_forces(pairs, 0.01).unwrap();
        assert_eq!(c.ticks_compared, 1);
        assert_eq!(c.max_rel_err, 0.0);
    }
}
