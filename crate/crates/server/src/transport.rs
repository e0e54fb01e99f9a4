//! Adapters from concrete transports to a pair of line channels.
//!
//! Inbound closes when the peer goes away; dropping the outbound sender
//! closes the transport's write side.

use axum::extract::ws::{Message, WebSocket};
use futures_util::{SinkExt, StreamExt};
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::TcpStream;
use tokio::sync::mpsc::{unbounded_channel, UnboundedReceiver, UnboundedSender};

pub struct Lines {
    pub inbound: UnboundedReceiver<String>,
    pub outbound: UnboundedSender<String>,
}

/// Newline-delimited messages over TCP.
pub fn tcp_lines(stream: TcpStream) -> Lines {
    let (read, mut write) = stream.into_split();
    let (in_tx, inbound) = unbounded_channel();
    let (outbound, mut out_rx) = unbounded_channel::<String>();
    tokio::spawn(async move {
        let mut lines = BufReader::new(read).lines();
        while let Ok(Some(line)) = lines.next_line().await {
            if in_tx.send(line).is_err() {
                break;
            }
        }
    });
    tokio::spawn(async move {
        while let Some(mut line) = out_rx.recv().await {
            line.push('\n');
            if write.write_all(line.as_bytes()).await.is_err() {
                return;
            }
        }
        let _ = write.shutdown().await;
    });
    Lines { inbound, outbound }
}

/// One message per text frame.
pub fn ws_lines(socket: WebSocket) -> Lines {
    let (mut sink, mut stream) = socket.split();
    let (in_tx, inbound) = unbounded_channel();
    let (outbound, mut out_rx) = unbounded_channel::<String>();
    tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            match msg {
                Message::Text(t) => {
                    // a frame may still carry several newline-separated messages
                    for line in t.lines() {
                        if in_tx.send(line.to_owned()).is_err() {
                            return;
                        }
                    }
                }
                Message::Close(_) => return,
                _ => {}
            }
        }
    });
    tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if sink.send(Message::Text(line)).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    });
    Lines { inbound, outbound }
}

/// Two connected in-process endpoints.
pub fn memory_pair() -> (Lines, Lines) {
    let (a_tx, a_rx) = unbounded_channel();
    let (b_tx, b_rx) = unbounded_channel();
    (Lines { inbound: a_rx, outbound: b_tx }, Lines { inbound: b_rx, outbound: a_tx })
}
