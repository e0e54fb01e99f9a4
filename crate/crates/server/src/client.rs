//! A minimal protocol client, used by tests and the `light` binary.

use std::time::Duration;

use tokio::net::TcpStream;

use crate::protocol::{Payload, Role, WireMessage, PROTOCOL_VERSION};
use crate::transport::{tcp_lines, Lines};

pub struct Client {
    lines: Lines,
    seq: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("connection closed")]
    Closed,
    #[error("timed out waiting for the server")]
    Timeout,
    #[error("bad message from server: {0}")]
    Bad(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Client {
    pub fn new(lines: Lines) -> Self {
        Client { lines, seq: 0 }
    }

    pub async fn connect(addr: std::net::SocketAddr) -> Result<Self, ClientError> {
        let sock = TcpStream::connect(addr).await?;
        sock.set_nodelay(true)?;
        Ok(Client::new(tcp_lines(sock)))
    }

    pub fn send(&mut self, payload: Payload) -> Result<(), ClientError> {
        self.seq += 1;
        self.send_raw(WireMessage { seq: self.seq, payload }.to_line())
    }

    /// Sends a line as is; the sequence counter is not touched.
    pub fn send_raw(&mut self, line: impl Into<String>) -> Result<(), ClientError> {
        self.lines.outbound.send(line.into()).map_err(|_| ClientError::Closed)
    }

    pub async fn recv_message(&mut self) -> Result<WireMessage, ClientError> {
        let line = self.lines.inbound.recv().await.ok_or(ClientError::Closed)?;
        WireMessage::parse(&line).map_err(|e| ClientError::Bad(format!("{e}: {line}")))
    }

    pub async fn recv(&mut self) -> Result<Payload, ClientError> {
        Ok(self.recv_message().await?.payload)
    }

    pub async fn recv_timeout(&mut self, wait: Duration) -> Result<Payload, ClientError> {
        tokio::time::timeout(wait, self.recv()).await.map_err(|_| ClientError::Timeout)?
    }

    /// `hello` then `join`; returns the server's hello.
    pub async fn handshake(&mut self, role: Role, seat: Option<&str>) -> Result<Payload, ClientError> {
        self.send(Payload::Hello { protocol: PROTOCOL_VERSION.to_owned(), name: None })?;
        let hello = self.recv().await?;
        if !matches!(hello, Payload::Hello { .. }) {
            return Err(ClientError::Bad(format!("expected hello, got {}", hello.kind())));
        }
        self.send(Payload::Join { role, seat: seat.map(str::to_owned) })?;
        Ok(hello)
    }
}
