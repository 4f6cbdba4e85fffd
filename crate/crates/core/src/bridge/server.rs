use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use tokio::sync::broadcast::error::TryRecvError;
use tungstenite::{Message, WebSocket};

use super::protocol::{parse_command, ConfigSummary, ServerMessage, ValidCommand, WireSnapshot};
use crate::session::{Control, LiveSession};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeOptions {
    pub preview_max_points: usize,
    /// How long a client thread waits for input before servicing output.
    pub poll_interval: Duration,
}

impl Default for BridgeOptions {
    fn default() -> Self {
        Self {
            preview_max_points: 50_000,
            poll_interval: Duration::from_millis(2),
        }
    }
}

pub struct Bridge {
    listener: TcpListener,
    session: Arc<LiveSession>,
    summary: ConfigSummary,
    options: BridgeOptions,
}

impl Bridge {
    pub fn bind<A: ToSocketAddrs>(
        addr: A,
        session: Arc<LiveSession>,
        summary: ConfigSummary,
        options: BridgeOptions,
    ) -> std::io::Result<Self> {
        Self::from_listener(TcpListener::bind(addr)?, session, summary, options)
    }

    pub fn from_listener(
        listener: TcpListener,
        session: Arc<LiveSession>,
        summary: ConfigSummary,
        options: BridgeOptions,
    ) -> std::io::Result<Self> {
        listener.set_nonblocking(true)?;
        Ok(Self {
            listener,
            session,
            summary,
            options,
        })
    }

    pub fn local_addr(&self) -> std::io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts clients until `shutdown` is set, then waits for their threads.
    pub fn serve(self, shutdown: Arc<AtomicBool>) {
        let mut clients: Vec<JoinHandle<()>> = Vec::new();
        while !shutdown.load(Ordering::Relaxed) {
            match self.listener.accept() {
                Ok((stream, peer)) => {
                    log::info!("viewer connected from {peer}");
                    let client = Client {
                        session: self.session.clone(),
                        summary: self.summary.clone(),
                        options: self.options,
                        shutdown: shutdown.clone(),
                    };
                    let spawned = std::thread::Builder::new()
                        .name(format!("viewer-{peer}"))
                        .spawn(move || {
                            if let Err(e) = client.run(stream) {
                                log::info!("viewer {peer} dropped: {e}");
                            }
                        });
                    match spawned {
                        Ok(h) => clients.push(h),
                        Err(e) => log::warn!("cannot spawn client thread: {e}"),
                    }
                    clients.retain(|h| !h.is_finished());
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => {
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => log::warn!("accept failed: {e}"),
            }
        }
        for h in clients {
            let _ = h.join();
        }
    }

    /// Serves on a background thread.
    pub fn spawn(self) -> std::io::Result<BridgeHandle> {
        let addr = self.local_addr()?;
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = shutdown.clone();
        let thread = std::thread::Builder::new()
            .name("bridge-acceptor".into())
            .spawn(move || self.serve(flag))?;
        Ok(BridgeHandle {
            addr,
            shutdown,
            thread: Some(thread),
        })
    }
}

pub struct BridgeHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl BridgeHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn stop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for BridgeHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

struct Client {
    session: Arc<LiveSession>,
    summary: ConfigSummary,
    options: BridgeOptions,
    shutdown: Arc<AtomicBool>,
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

impl Client {
    fn run(self, stream: TcpStream) -> Result<(), tungstenite::Error> {
        stream.set_nonblocking(false)?;
        stream.set_nodelay(true)?;
        stream.set_read_timeout(Some(Duration::from_secs(5)))?;
        let mut ws = tungstenite::accept(stream).map_err(|e| match e {
            tungstenite::HandshakeError::Failure(e) => e,
            tungstenite::HandshakeError::Interrupted(_) => {
                tungstenite::Error::Io(std::io::Error::new(ErrorKind::TimedOut, "handshake timed out"))
            }
        })?;
        ws.get_ref().set_read_timeout(Some(self.options.poll_interval))?;

        let mut frames = self.session.subscribe();
        let rev = self.session.store.current();
        let mut seen_version = rev.version;
        let max_points = self.options.preview_max_points;
        let mut summary = self.summary.clone();
        send(&mut ws, &ServerMessage::hello(summary.clone(), &rev, max_points))?;

        loop {
            if self.shutdown.load(Ordering::Relaxed) {
                let _ = ws.close(None);
                let _ = ws.flush();
                return Ok(());
            }
            match ws.read() {
                Ok(Message::Text(text)) => {
                    if let Some(reply) = self.apply(text.as_str(), &mut summary) {
                        send(&mut ws, &reply)?;
                    }
                }
                Ok(Message::Binary(_)) => {
                    send(&mut ws, &ServerMessage::error("binary frames are not supported"))?;
                }
                Ok(Message::Close(_)) => return Ok(()),
                Ok(_) => {}
                Err(e) if is_timeout(&e) => {}
                Err(tungstenite::Error::ConnectionClosed) => return Ok(()),
                Err(e) => return Err(e),
            }

            let rev = self.session.store.current();
            if rev.version > seen_version {
                seen_version = rev.version;
                send(&mut ws, &ServerMessage::cloud(&rev, max_points))?;
            }
            loop {
                match frames.try_recv() {
                    Ok(f) => send(&mut ws, &ServerMessage::Snapshot(WireSnapshot::from(&f)))?,
                    Err(TryRecvError::Empty) => break,
                    // drop-oldest: skip what we missed and carry on
                    Err(TryRecvError::Lagged(n)) => log::debug!("viewer lagged by {n} frames"),
                    Err(TryRecvError::Closed) => return Ok(()),
                }
            }
            match ws.flush() {
                Ok(()) => {}
                Err(e) if is_timeout(&e) => {}
                Err(e) => return Err(e),
            }
        }
    }

    /// Applies one inbound frame; returns an error frame for the sender.
    fn apply(&self, text: &str, summary: &mut ConfigSummary) -> Option<ServerMessage> {
        let cmd = match parse_command(text) {
            Ok(c) => c,
            Err(reason) => return Some(ServerMessage::error(reason)),
        };
        match cmd {
            ValidCommand::SetHip(p) => self.session.set_hip(p),
            ValidCommand::SetTransform(t) => {
                if let Err(e) = self.session.set_transform(t) {
                    return Some(ServerMessage::error(format!("set_transform: {e}")));
                }
            }
            ValidCommand::SetFriction(f) => {
                summary.friction = f;
                self.session.send(Control::SetFriction(f));
            }
            ValidCommand::Reset => self.session.send(Control::Reset),
        }
        None
    }
}

fn send(ws: &mut WebSocket<TcpStream>, msg: &ServerMessage) -> Result<(), tungstenite::Error> {
    match ws.write(Message::text(msg.to_json())) {
        Ok(()) => Ok(()),
        Err(e) if is_timeout(&e) => Ok(()),
        Err(e) => Err(e),
    }
}
