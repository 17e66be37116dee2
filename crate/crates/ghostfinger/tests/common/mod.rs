#![allow(dead_code)]

use std::net::{SocketAddr, TcpStream};
use std::time::{Duration, Instant};

use ghostfinger::protocol::ServerMsg;
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

pub type Client = WebSocket<MaybeTlsStream<TcpStream>>;

pub fn connect(addr: SocketAddr) -> Client {
    let (ws, _) = tungstenite::connect(format!("ws://{addr}")).expect("connect");
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
    }
    ws
}

pub fn send(ws: &mut Client, text: &str) {
    ws.send(Message::Text(text.into())).expect("send");
}

/// Reads messages until `pred` accepts one or `timeout` passes.
pub fn wait_for(
    ws: &mut Client,
    timeout: Duration,
    mut pred: impl FnMut(&ServerMsg) -> bool,
) -> Option<ServerMsg> {
    let deadline = Instant::now() + timeout;
    while Instant::now() < deadline {
        match ws.read() {
            Ok(Message::Text(t)) => {
                let msg: ServerMsg = serde_json::from_str(t.as_str()).expect("server sends valid messages");
                if pred(&msg) {
                    return Some(msg);
                }
            }
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(
                    e.kind(),
                    std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
                ) => {}
            Err(e) => panic!("websocket error: {e}"),
        }
    }
    None
}

/// Collects `n` replies (acks and errors), skipping frames and events.
pub fn replies(ws: &mut Client, n: usize, timeout: Duration) -> Vec<ServerMsg> {
    let mut out = Vec::new();
    let deadline = Instant::now() + timeout;
    while out.len() < n && Instant::now() < deadline {
        let left = deadline.saturating_duration_since(Instant::now());
        if let Some(m) = wait_for(ws, left, |m| {
            !matches!(m, ServerMsg::Frame(_) | ServerMsg::DofEvent(_))
        }) {
            out.push(m);
        }
    }
    out
}
