//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad input (arguments, config, cloud, trajectory,
//! bind address), 2 runtime failure, 3 validation outside tolerance.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bridge::{Bridge, BridgeOptions, ConfigSummary};
use crate::cloud::{apply_transform, load_cloud_path, resample_to_lattice, CloudError, PointCloud, VoxelLattice};
use crate::config::{ConfigError, EngineConfig};
use crate::geom::{Aabb, Point3, Vec3};
use crate::oracle::{run_sphere_validation, OracleError};
use crate::session::{
    run_loop, write_trace, HipSource, LatticeStore, LiveOptions, LiveSession, RunMode, TimingStats, TraceFormat,
    Trajectory, TrajectoryError, World,
};

#[derive(Debug, Parser)]
#[command(name = "cloudtouch", version, about = "Haptic rendering of raw point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scripted HIP trajectory and write the per-tick trace.
    Simulate(SimulateArgs),
    /// Press a synthetic sphere and compare forces against the analytic model.
    ValidateSphere(ValidateArgs),
    /// Time the loop as fast as possible and print timing stats as JSON.
    Bench(BenchArgs),
    /// Run a live session behind the WebSocket bridge until interrupted.
    Serve(ServeArgs),
    /// Resample a cloud and print active-voxel statistics as JSON.
    ResampleInfo(ResampleArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// CSV of `tick,x,y,z` keyframes.
    #[arg(long)]
    pub trajectory: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `.jsonl` writes JSON lines, anything else CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides `session.max_ticks`.
    #[arg(long)]
    pub ticks: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// 1.0 gives the base radius, 1.6 the scaled-up sphere.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to a dive from above the cloud to its centre and back.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    /// Overrides `session.max_ticks`.
    #[arg(long)]
    pub ticks: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:9001")]
    pub bind: String,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot load cloud {path}: {source}")]
    Cloud { path: String, source: CloudError },
    #[error("cannot load trajectory {path}: {source}")]
    Trajectory { path: String, source: TrajectoryError },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
    #[error("validation outside tolerance: rms {rms:.4} (bound {rms_bound}), max {max:.4} (bound {max_bound})")]
    Tolerance {
        rms: f64,
        max: f64,
        rms_bound: f64,
        max_bound: f64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Cloud { .. } | CliError::Trajectory { .. } | CliError::Bind { .. } => 1,
            CliError::Runtime(_) => 2,
            CliError::Tolerance { .. } => 3,
        }
    }
}

fn runtime(context: &str) -> impl FnOnce(String) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::ValidateSphere(a) => cmd_validate_sphere(&a),
        Command::Bench(a) => {
            let stats = cmd_bench(&a)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            Ok(())
        }
        Command::Serve(a) => cmd_serve(&a, None),
        Command::ResampleInfo(a) => {
            let info = cmd_resample_info(&a)?;
            println!("{}", serde_json::to_string_pretty(&info).expect("info serialize"));
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<EngineConfig, CliError> {
    let cfg = EngineConfig::load_or_default(path)?;
    log::debug!("effective config:\n{}", cfg.to_toml_string());
    Ok(cfg)
}

fn load_cloud(path: &Path) -> Result<PointCloud, CliError> {
    load_cloud_path(path).map_err(|source| CliError::Cloud {
        path: path.display().to_string(),
        source,
    })
}

fn load_trajectory(path: &Path) -> Result<Trajectory, CliError> {
    let err = |source| CliError::Trajectory {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|e| err(e.into()))?;
    Trajectory::from_csv(std::io::BufReader::new(file)).map_err(err)
}

/// Loads, transforms per config and resamples.
fn build_lattice(cfg: &EngineConfig, cloud: &PointCloud) -> Result<VoxelLattice, CliError> {
    let t = cfg.transform().map_err(|e| ConfigError::Invalid(format!("[transform] {e}")))?;
    let moved = apply_transform(cloud, &t).map_err(|e| CliError::Runtime(e.to_string()))?;
    let lattice = resample_to_lattice(&moved, &cfg.lattice_config()).map_err(|e| CliError::Runtime(e.to_string()))?;
    if lattice.discarded() > 0 {
        log::warn!("{} points fell outside the lattice and were dropped", lattice.discarded());
    }
    log::info!("{} points -> {} active voxels", cloud.len(), lattice.len());
    Ok(lattice)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let cloud = load_cloud(&a.cloud)?;
    let trajectory = load_trajectory(&a.trajectory)?;
    let lattice = build_lattice(&cfg, &cloud)?;

    let mut session = cfg.session;
    if let Some(t) = a.ticks {
        session.max_ticks = t;
    }
    let physics = cfg.physics();
    let mut world = World::new(
        Arc::new(lattice),
        physics,
        HipSource::Scripted(trajectory),
        physics.density.r1,
    );
    let (trace, stats) = run_loop(&session, &mut world);
    log::info!("{} ticks, mean {:.1} us/tick", stats.ticks, stats.mean_us);

    let file = std::fs::File::create(&a.out).map_err(|e| runtime(&a.out.display().to_string())(e.to_string()))?;
    let mut w = std::io::BufWriter::new(file);
    write_trace(&trace, TraceFormat::from_path(&a.out), &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| runtime(&a.out.display().to_string())(e.to_string()))
}

pub fn cmd_validate_sphere(a: &ValidateArgs) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(ConfigError::Invalid(format!("--scale must be positive, got {}", a.scale)).into());
    }
    let v = cfg.validation;
    let run = run_sphere_validation(&cfg.sphere_protocol(a.scale), &cfg.protocol_physics(), v.rms_bound, v.max_bound)
        .map_err(|e| match e {
            OracleError::InvalidSpec(m) => CliError::Config(ConfigError::Invalid(format!("[validation] {m}"))),
            other => CliError::Runtime(other.to_string()),
        })?;
    let r = &run.report;
    let json = serde_json::to_string_pretty(r).expect("report serializes");
    match &a.out {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| runtime(&p.display().to_string())(e.to_string()))?,
        None => println!("{json}"),
    }
    eprintln!(
        "sphere R = {:.4} m: rms {:.2}%, max {:.2}% over {} ticks ({:.1} s)",
        r.sphere_radius_m,
        r.rms_rel_err * 100.0,
        r.max_rel_err * 100.0,
        r.ticks_compared,
        r.runtime_s
    );
    if r.passed {
        Ok(())
    } else {
        Err(CliError::Tolerance {
            rms: r.rms_rel_err,
            max: r.max_rel_err,
            rms_bound: r.rms_bound,
            max_bound: r.max_bound,
        })
    }
}

fn active_bounds(lattice: &VoxelLattice) -> Aabb {
    Aabb::from_points(lattice.voxels().iter().map(|v| &v.mean)).expect("resampled lattices are never empty")
}

/// Straight down from clear space above the cloud to its centre, then back up.
pub fn default_bench_trajectory(lattice: &VoxelLattice, clearance: f64, ticks: u64) -> Trajectory {
    let bb = active_bounds(lattice);
    let c = bb.center();
    let top = Point3::new(c.x, c.y, bb.max.z + clearance);
    let half = (ticks / 2).max(1);
    Trajectory::new(vec![(0, top), (half, c), (2 * half, top)]).expect("keyframes increase")
}

pub fn cmd_bench(a: &BenchArgs) -> Result<TimingStats, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let cloud = load_cloud(&a.cloud)?;
    let lattice = build_lattice(&cfg, &cloud)?;

    let mut session = cfg.session;
    session.mode = RunMode::AsFastAsPossible;
    if let Some(t) = a.ticks {
        session.max_ticks = t;
    }
    session.snapshot_decimation = session.max_ticks.max(1);
    let physics = cfg.physics();
    let trajectory = match &a.trajectory {
        Some(p) => load_trajectory(p)?,
        None => default_bench_trajectory(&lattice, 2.0 * physics.density.r2, session.max_ticks),
    };
    let mut world = World::new(
        Arc::new(lattice),
        physics,
        HipSource::Scripted(trajectory),
        physics.density.r1,
    );
    let (_, stats) = run_loop(&session, &mut world);
    Ok(stats)
}

/// Runs until `shutdown` is set. With `None`, Ctrl-C sets it.
pub fn cmd_serve(a: &ServeArgs, shutdown: Option<Arc<AtomicBool>>) -> Result<(), CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let cloud = load_cloud(&a.cloud)?;
    let transform = cfg.transform().map_err(|e| ConfigError::Invalid(format!("[transform] {e}")))?;
    let store = LatticeStore::new(cloud, cfg.lattice_config(), transform).map_err(|e| CliError::Runtime(e.to_string()))?;
    let current = store.current();
    let physics = cfg.physics();
    let bb = active_bounds(&current.lattice);
    let start = Point3::new(bb.center().x, bb.center().y, bb.max.z) + Vec3::z() * 2.0 * physics.density.r2;

    let shutdown = match shutdown {
        Some(s) => s,
        None => {
            let s = Arc::new(AtomicBool::new(false));
            let flag = s.clone();
            ctrlc::set_handler(move || flag.store(true, Ordering::Relaxed))
                .map_err(|e| CliError::Runtime(format!("cannot install signal handler: {e}")))?;
            s
        }
    };

    let b = cfg.bridge;
    let options = LiveOptions {
        rate_hz: cfg.session.rate_hz,
        publish_hz: b.snapshot_hz,
        channel_capacity: b.channel_capacity,
    };
    let summary = ConfigSummary::new(&physics, options.rate_hz, options.publish_hz);
    let bridge_options = BridgeOptions {
        preview_max_points: b.preview_max_points,
        ..BridgeOptions::default()
    };
    // bind before starting the loop so a busy port fails fast
    let listener = std::net::TcpListener::bind(&a.bind).map_err(|source| CliError::Bind {
        addr: a.bind.clone(),
        source,
    })?;
    let session = Arc::new(LiveSession::spawn(Arc::new(store), physics, start, options));
    let bridge = Bridge::from_listener(listener, session, summary, bridge_options).map_err(|source| CliError::Bind {
        addr: a.bind.clone(),
        source,
    })?;
    if let Ok(addr) = bridge.local_addr() {
        eprintln!("listening on ws://{addr}");
    }
    bridge.serve(shutdown);
    log::info!("shut down");
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResampleInfo {
    pub points: usize,
    pub active_voxels: usize,
    pub represented_points: usize,
    pub discarded_points: usize,
    pub mean_points_per_voxel: f64,
    pub max_points_per_voxel: u32,
    pub dims: [u32; 3],
    pub spacing_m: f64,
    pub bounds_min_m: [f64; 3],
    pub bounds_max_m: [f64; 3],
}

pub fn cmd_resample_info(a: &ResampleArgs) -> Result<ResampleInfo, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let cloud = load_cloud(&a.cloud)?;
    let lattice = build_lattice(&cfg, &cloud)?;
    let bb = active_bounds(&lattice);
    Ok(ResampleInfo {
        points: cloud.len(),
        active_voxels: lattice.len(),
        represented_points: lattice.represented_points(),
        discarded_points: lattice.discarded(),
        mean_points_per_voxel: lattice.represented_points() as f64 / lattice.len() as f64,
        max_points_per_voxel: lattice.voxels().iter().map(|v| v.count).max().unwrap_or(0),
        dims: lattice.config().dims,
        spacing_m: lattice.config().spacing,
        bounds_min_m: bb.min.coords.into(),
        bounds_max_m: bb.max.coords.into(),
    })
}
