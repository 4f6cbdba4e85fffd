//! WebSocket endpoint for live viewers.
//!
//! One live session, any number of clients. Each client gets a hello frame,
//! then snapshots at the session's publish rate and a cloud frame whenever
//! the lattice is rebuilt. Commands from any client apply to the shared
//! session, last writer wins.

mod protocol;
mod server;

pub use protocol::{
    parse_command, ClientCommand, ConfigSummary, LatticeInfo, Preview, ServerMessage, ValidCommand,
    WireSnapshot, WireTransform, PROTOCOL_VERSION,
};
pub use server::{Bridge, BridgeHandle, BridgeOptions};
