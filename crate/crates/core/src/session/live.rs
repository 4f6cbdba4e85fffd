//! A session driven by live input: the loop runs on its own thread, reads
//! the HIP mailbox every tick, drains a control queue between ticks and
//! publishes rate-limited frames to any number of subscribers.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use arc_swap::ArcSwap;
use crossbeam_channel::{Receiver, Sender};
use tokio::sync::broadcast;

use super::{sleep_until, step_once, HipMailbox, HipSource, Physics, Snapshot, World};
use crate::cloud::{apply_transform, resample_to_lattice, AffineTransform, CloudError, LatticeConfig, PointCloud, VoxelLattice};
use crate::force::FrictionParams;
use crate::geom::{Point3, Vec3};

/// One resampled lattice and the transform that produced it.
#[derive(Debug)]
pub struct LatticeRevision {
    pub version: u64,
    pub transform: AffineTransform,
    pub lattice: Arc<VoxelLattice>,
}

/// The source cloud plus the currently published lattice. Rebuilds are
/// serialized; readers always see a complete revision.
#[derive(Debug)]
pub struct LatticeStore {
    base: PointCloud,
    config: LatticeConfig,
    current: ArcSwap<LatticeRevision>,
    rebuild: Mutex<()>,
}

impl LatticeStore {
    pub fn new(base: PointCloud, config: LatticeConfig, transform: AffineTransform) -> Result<Self, CloudError> {
        let lattice = resample_to_lattice(&apply_transform(&base, &transform)?, &config)?;
        Ok(Self {
            base,
            config,
            current: ArcSwap::from_pointee(LatticeRevision {
                version: 0,
                transform,
                lattice: Arc::new(lattice),
            }),
            rebuild: Mutex::new(()),
        })
    }

    pub fn current(&self) -> Arc<LatticeRevision> {
        self.current.load_full()
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    /// Re-runs transform → resample on the source cloud and publishes the
    /// result. On error the current revision stays in place.
    pub fn rebuild(&self, transform: AffineTransform) -> Result<Arc<LatticeRevision>, CloudError> {
        let _guard = self.rebuild.lock().unwrap_or_else(|e| e.into_inner());
        let lattice = resample_to_lattice(&apply_transform(&self.base, &transform)?, &self.config)?;
        let next = Arc::new(LatticeRevision {
            version: self.current.load().version + 1,
            transform,
            lattice: Arc::new(lattice),
        });
        self.current.store(next.clone());
        Ok(next)
    }
}

/// Commands applied by the loop thread between ticks.
#[derive(Debug, Clone)]
pub enum Control {
    SetFriction(FrictionParams),
    Reset,
    SwapLattice(Arc<LatticeRevision>),
}

/// What subscribers receive, at most `publish_hz` times a second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveFrame {
    pub snapshot: Snapshot,
    pub normal: Option<Vec3>,
    pub lattice_version: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiveOptions {
    pub rate_hz: u32,
    pub publish_hz: f64,
    /// Frames buffered per subscriber before the oldest are dropped.
    pub channel_capacity: usize,
}

/// Handles to a running live session.
pub struct LiveSession {
    pub mailbox: Arc<HipMailbox>,
    pub store: Arc<LatticeStore>,
    control: Sender<Control>,
    frames: broadcast::Sender<LiveFrame>,
    ticks: Arc<AtomicU64>,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
    physics: Physics,
}

impl LiveSession {
    /// Starts the loop with the proxy at `start`.
    pub fn spawn(store: Arc<LatticeStore>, physics: Physics, start: Point3, options: LiveOptions) -> Self {
        let mailbox = Arc::new(HipMailbox::new(start));
        let (control, inbox) = crossbeam_channel::unbounded();
        let (frames, _) = broadcast::channel(options.channel_capacity.max(1));
        let ticks = Arc::new(AtomicU64::new(0));
        let shutdown = Arc::new(AtomicBool::new(false));
        let revision = store.current();
        let world = World::new(
            revision.lattice.clone(),
            physics,
            HipSource::Live(mailbox.clone()),
            physics.density.r1,
        );
        let thread = {
            let frames = frames.clone();
            let ticks = ticks.clone();
            let shutdown = shutdown.clone();
            std::thread::Builder::new()
                .name("haptic-loop".into())
                .spawn(move || live_loop(world, revision.version, inbox, frames, ticks, shutdown, options))
                .expect("spawn haptic loop")
        };
        Self {
            mailbox,
            store,
            control,
            frames,
            ticks,
            shutdown,
            thread: Some(thread),
            physics,
        }
    }

    pub fn physics(&self) -> &Physics {
        &self.physics
    }

    pub fn subscribe(&self) -> broadcast::Receiver<LiveFrame> {
        self.frames.subscribe()
    }

    pub fn send(&self, c: Control) {
        // the loop only disconnects on shutdown
        let _ = self.control.send(c);
    }

    pub fn set_hip(&self, p: Point3) {
        self.mailbox.set(p);
    }

    /// Rebuilds the lattice under `transform` and hands it to the loop.
    pub fn set_transform(&self, transform: AffineTransform) -> Result<Arc<LatticeRevision>, CloudError> {
        let revision = self.store.rebuild(transform)?;
        self.send(Control::SwapLattice(revision.clone()));
        Ok(revision)
    }

    pub fn ticks(&self) -> u64 {
        self.ticks.load(Ordering::Relaxed)
    }

    pub fn stop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for LiveSession {
    fn drop(&mut self) {
        self.stop();
    }
}

fn live_loop(
    mut world: World,
    mut version: u64,
    inbox: Receiver<Control>,
    frames: broadcast::Sender<LiveFrame>,
    ticks: Arc<AtomicU64>,
    shutdown: Arc<AtomicBool>,
    options: LiveOptions,
) {
    let period = Duration::from_secs_f64(1.0 / options.rate_hz.max(1) as f64);
    let publish_every = Duration::from_secs_f64(1.0 / options.publish_hz.clamp(1e-3, 60.0));
    let mut deadline = Instant::now();
    let mut last_publish: Option<Instant> = None;
    let mut tick = 0u64;
    while !shutdown.load(Ordering::Relaxed) {
        for c in inbox.try_iter() {
            match c {
                Control::SetFriction(f) => world.physics.friction = f,
                Control::Reset => world.reset(tick),
                Control::SwapLattice(rev) => {
                    // a slow rebuild can arrive after a newer one
                    if rev.version > version {
                        version = rev.version;
                        world.set_lattice(rev.lattice.clone());
                    }
                }
            }
        }
        let (state, _, snapshot) = step_once(&mut world, tick);
        tick += 1;
        ticks.store(tick, Ordering::Relaxed);
        let now = Instant::now();
        if last_publish.is_none_or(|t| now - t >= publish_every) {
            last_publish = Some(now);
            // no subscribers is not an error
            let _ = frames.send(LiveFrame {
                snapshot,
                normal: state.n_hat,
                lattice_version: version,
            });
        }
        deadline += period;
        if deadline < now {
            // after a stall, resume from now instead of bursting
            deadline = now;
        }
        sleep_until(deadline);
    }
}
