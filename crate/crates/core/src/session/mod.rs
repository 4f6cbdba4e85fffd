//! The fixed-rate haptic loop.
//!
//! A [`World`] owns the proxy and every mutable bit of loop state; the lattice
//! is held behind an `Arc` so a rebuilt one can be swapped in between ticks.

mod hip;
mod live;
mod trace;

pub use hip::{HipMailbox, HipSource, Trajectory, TrajectoryError};
pub use live::{Control, LatticeRevision, LatticeStore, LiveFrame, LiveOptions, LiveSession};
pub use trace::{read_trace_jsonl, write_trace, Snapshot, TraceFormat, CSV_HEADER};

use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cloud::VoxelLattice;
use crate::density::{estimate_radius, DensityConfig};
use crate::force::{
    compute_friction_scale, penetration_depth, reaction_force, ForceParams, ForceSample,
    FrictionParams,
};
use crate::geom::{Point3, Vec3};
use crate::proxy::{advance, sense, Hip, ProxyParams, ProxyState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    /// Paced to `rate_hz` against a monotonic clock.
    Realtime,
    /// Unpaced, for benchmarks and tests.
    #[default]
    AsFastAsPossible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SessionConfig {
    pub rate_hz: u32,
    pub max_ticks: u64,
    pub mode: RunMode,
    /// Keep every k-th snapshot (the final tick is always kept).
    pub snapshot_decimation: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            rate_hz: 1000,
            max_ticks: 10_000,
            mode: RunMode::AsFastAsPossible,
            snapshot_decimation: 1,
        }
    }
}

impl SessionConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.rate_hz == 0 {
            return Err("rate_hz must be >= 1".into());
        }
        if self.snapshot_decimation == 0 {
            return Err("snapshot_decimation must be >= 1".into());
        }
        Ok(())
    }

    pub fn period(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.rate_hz as f64)
    }
}

/// Physics parameters the loop reads every tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Physics {
    pub proxy: ProxyParams,
    pub density: DensityConfig,
    pub force: ForceParams,
    pub friction: FrictionParams,
}

/// Everything the loop mutates.
#[derive(Debug, Clone)]
pub struct World {
    lattice: Arc<VoxelLattice>,
    pub proxy: ProxyState,
    pub physics: Physics,
    pub hip: HipSource,
    initial_radius: f64,
    estimated_at: Option<Point3>,
    sigma_hat: f64,
    sense_time: Duration,
    sense_calls: u64,
}

impl World {
    /// Starts the proxy collocated with the HIP's tick-0 position.
    pub fn new(lattice: Arc<VoxelLattice>, physics: Physics, hip: HipSource, radius: f64) -> Self {
        let start = hip.position(0);
        Self {
            lattice,
            proxy: ProxyState::new(start, radius),
            physics,
            hip,
            initial_radius: radius,
            estimated_at: None,
            sigma_hat: 0.0,
            sense_time: Duration::ZERO,
            sense_calls: 0,
        }
    }

    pub fn lattice(&self) -> &Arc<VoxelLattice> {
        &self.lattice
    }

    /// Swaps in a rebuilt lattice; the radius is re-estimated next tick.
    pub fn set_lattice(&mut self, lattice: Arc<VoxelLattice>) {
        self.lattice = lattice;
        self.estimated_at = None;
    }

    /// Puts the proxy back on the HIP with its initial radius.
    pub fn reset(&mut self, tick: u64) {
        self.proxy = ProxyState::new(self.hip.position(tick), self.initial_radius);
        self.estimated_at = None;
        self.sigma_hat = 0.0;
    }

    pub fn sigma_hat(&self) -> f64 {
        self.sigma_hat
    }

    /// Mean time spent gathering enclosed points and forming the normal.
    pub fn mean_sense_time(&self) -> Duration {
        if self.sense_calls == 0 {
            Duration::ZERO
        } else {
            Duration::from_secs_f64(self.sense_time.as_secs_f64() / self.sense_calls as f64)
        }
    }

    fn maybe_reestimate(&mut self) {
        let center = self.proxy.center;
        let due = match self.estimated_at {
            None => true,
            Some(at) => (center - at).norm() > self.physics.density.recompute_threshold,
        };
        if !due {
            return;
        }
        self.estimated_at = Some(center);
        // too few neighbours keeps the previous radius
        if let Some(est) = estimate_radius(&self.lattice, &center, &self.physics.density) {
            self.proxy.radius = est.radius;
            self.sigma_hat = est.sigma_hat;
        }
    }
}

/// One haptic tick: read the HIP, adapt the radius if due, sense, apply
/// friction, move the proxy and render the force.
pub fn step_once(world: &mut World, tick: u64) -> (ProxyState, ForceSample, Snapshot) {
    let hip = Hip::new(world.hip.position(tick));
    world.maybe_reestimate();

    let phys = world.physics;
    let t0 = Instant::now();
    let sensed = sense(&world.proxy.center, world.proxy.radius, &hip, &world.lattice, &phys.proxy);
    world.sense_time += t0.elapsed();
    world.sense_calls += 1;

    let touching = sensed.touching();
    let (friction_scale, stuck) = match sensed.n_hat {
        Some(n) if touching => {
            compute_friction_scale(&sensed.v_h, &n, &phys.friction, phys.force.stiffness)
        }
        _ => (1.0, false),
    };

    let next = advance(&world.proxy, &sensed, &phys.proxy, friction_scale);
    world.proxy = next;

    let (depth, force) = if touching {
        let depth = penetration_depth(&(hip.position - next.center), next.radius);
        (depth, reaction_force(&depth, &phys.force))
    } else {
        (Vec3::zeros(), Vec3::zeros())
    };
    let sample = ForceSample {
        force,
        depth,
        friction_scale,
        stuck,
    };
    let snap = Snapshot {
        tick,
        hip: hip.position,
        proxy_center: next.center,
        proxy_radius: next.radius,
        contact: next.contact,
        force,
        depth_mag: depth.norm(),
        friction_scale,
        sigma_hat: world.sigma_hat,
    };
    (next, sample, snap)
}

/// Per-tick compute-time summary, microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingStats {
    pub ticks: u64,
    pub mean_us: f64,
    pub p99_us: f64,
    pub max_us: f64,
    /// Ticks whose compute time exceeded the period.
    pub overruns: u64,
    /// Mean time of the neighbourhood query plus normal estimate alone.
    pub normal_mean_us: f64,
}

impl TimingStats {
    pub fn from_durations(samples: &[Duration], period: Duration, normal_mean: Duration) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut us: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e6).collect();
        let overruns = samples.iter().filter(|d| **d > period).count() as u64;
        let mean = us.iter().sum::<f64>() / us.len() as f64;
        us.sort_by(f64::total_cmp);
        let rank = ((0.99 * us.len() as f64).ceil() as usize).clamp(1, us.len()) - 1;
        Self {
            ticks: samples.len() as u64,
            mean_us: mean,
            p99_us: us[rank],
            max_us: *us.last().unwrap(),
            overruns,
            normal_mean_us: normal_mean.as_secs_f64() * 1e6,
        }
    }
}

/// Runs `config.max_ticks` ticks starting at tick 0.
///
/// Compute time is measured per tick, excluding the pacing sleep in
/// realtime mode. Deadline overruns are counted, never fatal.
pub fn run_loop(config: &SessionConfig, world: &mut World) -> (Vec<Snapshot>, TimingStats) {
    let n = config.max_ticks;
    let period = config.period();
    let mut trace = Vec::with_capacity((n / config.snapshot_decimation.max(1) + 1) as usize);
    let mut durations = Vec::with_capacity(n as usize);
    let start = Instant::now();
    let mut deadline = start;
    for tick in 0..n {
        let t0 = Instant::now();
        let (_, _, snap) = step_once(world, tick);
        durations.push(t0.elapsed());
        if tick % config.snapshot_decimation == 0 || tick + 1 == n {
            trace.push(snap);
        }
        if config.mode == RunMode::Realtime {
            deadline += period;
            sleep_until(deadline);
        }
    }
    let stats = TimingStats::from_durations(&durations, period, world.mean_sense_time());
    (trace, stats)
}

/// Sleeps to within a few tens of microseconds of `deadline`, then spins.
pub(crate) fn sleep_until(deadline: Instant) {
    const SPIN: Duration = Duration::from_micros(200);
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let left = deadline - now;
        if left > SPIN {
            std::thread::sleep(left - SPIN);
        } else {
            std::hint::spin_loop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::{resample_to_lattice, LatticeConfig, PointCloud};
    use crate::proxy::Contact;

    fn plane_world(hip: HipSource) -> World {
        let mut pts = Vec::new();
        for i in -20..=20 {
            for j in -20..=20 {
                pts.push(Point3::new(i as f64 * 0.002, j as f64 * 0.002, 0.0));
            }
        }
        let cloud = PointCloud::new(pts).unwrap();
        let lattice = resample_to_lattice(&cloud, &LatticeConfig::cube(Point3::origin(), 0.2, 200)).unwrap();
        let physics = Physics {
            proxy: ProxyParams::default(),
            density: DensityConfig::for_spacing(0.001),
            force: ForceParams::default(),
            friction: FrictionParams::default(),
        };
        World::new(Arc::new(lattice), physics, hip, 0.005)
    }

    #[test]
    fn stationary_free_space() {
        let mut w = plane_world(HipSource::Scripted(Trajectory::constant(Point3::new(0.0, 0.0, 0.05))));
        let (_, sample, snap) = step_once(&mut w, 0);
        assert_eq!(snap.contact, Contact::Free);
        assert_eq!(snap.force, Vec3::zeros());
        assert_eq!(sample.friction_scale, 1.0);
        assert_eq!(snap.proxy_center, Point3::new(0.0, 0.0, 0.05));
    }

    #[test]
    fn zero_ticks() {
        let mut w = plane_world(HipSource::Scripted(Trajectory::constant(Point3::origin())));
        let cfg = SessionConfig { max_ticks: 0, ..Default::default() };
        let (trace, stats) = run_loop(&cfg, &mut w);
        assert!(trace.is_empty());
        assert_eq!(stats, TimingStats::default());
    }

    #[test]
    fn decimation_keeps_final_tick() {
        let mut w = plane_world(HipSource::Scripted(Trajectory::constant(Point3::new(0.0, 0.0, 0.05))));
        let cfg = SessionConfig { max_ticks: 10, snapshot_decimation: 4, ..Default::default() };
        let (trace, stats) = run_loop(&cfg, &mut w);
        let ticks: Vec<u64> = trace.iter().map(|s| s.tick).collect();
        assert_eq!(ticks, vec![0, 4, 8, 9]);
        assert_eq!(stats.ticks, 10);
    }

    #[test]
    fn timing_stats_order() {
        let samples: Vec<Duration> = (1..=200).map(|i| Duration::from_micros(i)).collect();
        let s = TimingStats::from_durations(&samples, Duration::from_micros(150), Duration::ZERO);
        assert!(s.mean_us <= s.p99_us && s.p99_us <= s.max_us);
        assert_eq!(s.overruns, 50);
        assert!((s.p99_us - 198.0).abs() < 1e-9);
    }
}
