//! Live host for two-seat episodes. Clients speak newline-delimited JSON
//! over TCP or WebSocket text frames (see [`protocol`]); each session
//! owns its world and applies turns one at a time, so what the seats see
//! is always what the log replays to.

use std::net::SocketAddr;
use std::path::PathBuf;

use thiserror::Error;

pub mod client;
pub mod protocol;
mod server;
pub mod session;
pub mod transport;

pub use server::{
    random_agent, serve, AgentFactory, SeatPolicy, ServerConfig, ServerHandle, SessionSummary, WorldSource,
    HUMAN_TIMEOUT,
};

#[derive(Debug, Error)]
pub enum ServerError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: SocketAddr, source: std::io::Error },
    #[error("cannot load world: {0}")]
    WorldLoadFailure(String),
    #[error("log directory {path} is not writable: {source}")]
    LogDir { path: PathBuf, source: std::io::Error },
    #[error("invalid server configuration: {0}")]
    Config(String),
}
