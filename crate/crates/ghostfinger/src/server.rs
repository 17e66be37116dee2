//! Live session endpoint over WebSocket.
//!
//! Threads: one acceptor, one per client, one dispatcher, and the tick
//! thread that owns the session. The tick thread talks to the rest only
//! through two queues: commands in, messages out.

use std::collections::HashMap;
use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use crate::protocol::{self, ServerMsg};
use crate::session::{LiveCommand, Session};

const POLL: Duration = Duration::from_millis(5);
/// Messages a slow client may have queued before frames are dropped.
const CLIENT_QUEUE: usize = 1024;

#[derive(Debug)]
pub struct ServeConfig {
    /// 0 picks a free port.
    pub port: u16,
    /// Pace ticks against the wall clock instead of running flat out.
    pub realtime: bool,
}

/// A message from the tick thread, to one client or to all.
#[derive(Debug)]
struct Outgoing {
    to: Option<u64>,
    msg: ServerMsg,
}

type Clients = Arc<Mutex<HashMap<u64, SyncSender<Arc<String>>>>>;

/// Running server. Dropping it without calling [`ServerHandle::shutdown`]
/// leaves the threads running.
#[derive(Debug)]
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    ticks: Arc<AtomicU64>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// Ticks completed so far.
    pub fn ticks(&self) -> u64 {
        self.ticks.load(Ordering::Relaxed)
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::Relaxed);
        for t in self.threads {
            let _ = t.join();
        }
    }

    /// Blocks until the process is killed.
    pub fn wait(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }
}

/// Binds the port and starts serving `session`.
pub fn start(session: Session, cfg: &ServeConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(("127.0.0.1", cfg.port))
        .map_err(|e| io::Error::new(e.kind(), format!("cannot bind port {}: {e}", cfg.port)))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;

    let stop = Arc::new(AtomicBool::new(false));
    let ticks = Arc::new(AtomicU64::new(0));
    let clients: Clients = Arc::default();
    let (cmd_tx, cmd_rx) = mpsc::channel::<(u64, LiveCommand)>();
    let (out_tx, out_rx) = mpsc::channel::<Outgoing>();

    let mut threads = Vec::new();
    {
        let (stop, ticks) = (stop.clone(), ticks.clone());
        let realtime = cfg.realtime;
        threads.push(spawn("tick", move || {
            tick_loop(session, cmd_rx, out_tx, stop, ticks, realtime)
        }));
    }
    {
        let (stop, clients) = (stop.clone(), clients.clone());
        threads.push(spawn("dispatch", move || dispatch_loop(out_rx, clients, stop)));
    }
    {
        let stop = stop.clone();
        threads.push(spawn("accept", move || {
            accept_loop(listener, clients, cmd_tx, stop)
        }));
    }
    log::info!("serving on ws://{addr}");
    Ok(ServerHandle {
        addr,
        stop,
        ticks,
        threads,
    })
}

fn spawn(name: &str, f: impl FnOnce() + Send + 'static) -> JoinHandle<()> {
    thread::Builder::new()
        .name(format!("gf-{name}"))
        .spawn(f)
        .expect("spawn server thread")
}

fn tick_loop(
    mut session: Session,
    commands: Receiver<(u64, LiveCommand)>,
    out: Sender<Outgoing>,
    stop: Arc<AtomicBool>,
    ticks: Arc<AtomicU64>,
    realtime: bool,
) {
    let dt = session.config().dt();
    let (event_tx, event_rx) = mpsc::channel();
    session.add_event_hook(Box::new(move |e| {
        let _ = event_tx.send(*e);
    }));
    let start = Instant::now();
    let mut k: u64 = 0;
    while !stop.load(Ordering::Relaxed) {
        if realtime {
            let due = start + Duration::from_secs_f64(k as f64 * dt);
            if let Some(wait) = due.checked_duration_since(Instant::now()) {
                thread::sleep(wait);
            }
        }
        while let Ok((client, cmd)) = commands.try_recv() {
            session.push_live(Some(client), cmd);
        }
        let output = match session.tick() {
            Ok(o) => o,
            Err(e) => {
                log::error!("session stopped: {e}");
                let _ = out.send(Outgoing {
                    to: None,
                    msg: ServerMsg::error("SessionStopped", e.to_string()),
                });
                break;
            }
        };
        for reply in &output.replies {
            let msg = match &reply.outcome {
                Ok(ack) => ServerMsg::from_ack(ack),
                Err(err) => {
                    log::warn!("live command rejected: {err}");
                    ServerMsg::from_live_error(err)
                }
            };
            let _ = out.send(Outgoing {
                to: reply.client,
                msg,
            });
        }
        for event in event_rx.try_iter() {
            let _ = out.send(Outgoing {
                to: None,
                msg: ServerMsg::DofEvent(event),
            });
        }
        if let Some(frame) = output.frame {
            let _ = out.send(Outgoing {
                to: None,
                msg: ServerMsg::Frame(frame),
            });
        }
        k += 1;
        ticks.store(k, Ordering::Relaxed);
    }
}

fn dispatch_loop(out: Receiver<Outgoing>, clients: Clients, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::Relaxed) {
        let item = match out.recv_timeout(POLL) {
            Ok(item) => item,
            Err(RecvTimeoutError::Timeout) => continue,
            Err(RecvTimeoutError::Disconnected) => return,
        };
        let droppable = matches!(item.msg, ServerMsg::Frame(_));
        let text = Arc::new(item.msg.to_json());
        let mut map = clients.lock().expect("client map");
        map.retain(|id, tx| {
            if item.to.is_some_and(|to| to != *id) {
                return true;
            }
            match tx.try_send(text.clone()) {
                Ok(()) => true,
                Err(TrySendError::Full(_)) => {
                    if !droppable {
                        log::warn!("client {id} is not keeping up; dropped a reply");
                    }
                    true
                }
                Err(TrySendError::Disconnected(_)) => false,
            }
        });
    }
}

fn accept_loop(
    listener: TcpListener,
    clients: Clients,
    commands: Sender<(u64, LiveCommand)>,
    stop: Arc<AtomicBool>,
) {
    let mut next_id = 1u64;
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    while !stop.load(Ordering::Relaxed) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let id = next_id;
                next_id += 1;
                let (tx, rx) = mpsc::sync_channel(CLIENT_QUEUE);
                clients.lock().expect("client map").insert(id, tx);
                let (commands, stop, clients) = (commands.clone(), stop.clone(), clients.clone());
                log::info!("client {id} connected from {peer}");
                workers.push(spawn("client", move || {
                    if let Err(e) = client_loop(id, stream, rx, commands, stop) {
                        log::info!("client {id} closed: {e}");
                    }
                    clients.lock().expect("client map").remove(&id);
                }));
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
        workers.retain(|w| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
}

fn client_loop(
    id: u64,
    stream: TcpStream,
    outbound: Receiver<Arc<String>>,
    commands: Sender<(u64, LiveCommand)>,
    stop: Arc<AtomicBool>,
) -> Result<(), tungstenite::Error> {
    stream.set_nonblocking(false)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => {
            tungstenite::Error::Io(io::Error::new(io::ErrorKind::WouldBlock, "handshake interrupted"))
        }
    })?;
    ws.get_ref().set_read_timeout(Some(POLL))?;
    while !stop.load(Ordering::Relaxed) {
        match ws.read() {
            Ok(Message::Text(text)) => match protocol::decode(text.as_str()) {
                Ok(cmd) => {
                    if commands.send((id, cmd)).is_err() {
                        return Ok(());
                    }
                }
                Err(e) => {
                    log::warn!("client {id}: {e}");
                    ws.send(Message::Text(e.to_msg().to_json().into()))?;
                }
            },
            Ok(Message::Binary(_)) => {
                let msg = ServerMsg::error("MalformedMessage", "binary messages are not supported");
                log::warn!("client {id}: binary message");
                ws.send(Message::Text(msg.to_json().into()))?;
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {}
            Err(e) => return Err(e),
        }
        for text in outbound.try_iter() {
            ws.write(Message::Text(text.as_str().into()))?;
        }
        ws.flush()?;
    }
    let _ = ws.close(None);
    let _ = ws.flush();
    Ok(())
}
