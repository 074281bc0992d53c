//! Websocket transport for a [`Session`]. A single thread owns the session
//! and every connection; commands are applied in arrival order.

use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::time::{Duration, Instant};

use tungstenite::{Message, WebSocket};

use crate::session::{ServerMsg, Session};

const POLL: Duration = Duration::from_millis(2);

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

pub fn bind(port: u16) -> Result<TcpListener, ServeError> {
    match TcpListener::bind(("127.0.0.1", port)) {
        Ok(l) => Ok(l),
        Err(e) if e.kind() == ErrorKind::AddrInUse => Err(ServeError::PortInUse(port)),
        Err(e) => Err(e.into()),
    }
}

struct Client {
    ws: WebSocket<TcpStream>,
    peer: SocketAddr,
}

fn encode(msg: &ServerMsg) -> Message {
    Message::text(serde_json::to_string(msg).expect("messages serialize"))
}

fn send(client: &mut Client, msgs: &[ServerMsg]) -> bool {
    for m in msgs {
        if client.ws.send(encode(m)).is_err() {
            return false;
        }
    }
    true
}

/// Serve until `stop` returns true. States are broadcast to every client;
/// errors and capture confirmations go to the client that caused them.
pub fn serve(
    listener: TcpListener,
    mut session: Session,
    mut stop: impl FnMut() -> bool,
) -> Result<(), ServeError> {
    listener.set_nonblocking(true)?;
    let mut clients: Vec<Client> = Vec::new();
    let period = Duration::from_secs_f64(1.0 / session.tick_rate());
    let mut next_tick = Instant::now() + period;

    while !stop() {
        loop {
            match listener.accept() {
                Ok((stream, peer)) => {
                    stream.set_nonblocking(false)?;
                    match tungstenite::accept(stream) {
                        Ok(ws) => {
                            ws.get_ref()
                                .set_read_timeout(Some(Duration::from_millis(1)))?;
                            let mut c = Client { ws, peer };
                            let hello = [session.layout_msg(), session.snapshot()];
                            if send(&mut c, &hello) {
                                log::info!("client {peer} connected");
                                clients.push(c);
                            }
                        }
                        Err(e) => log::warn!("handshake with {peer} failed: {e}"),
                    }
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => break,
                Err(e) => return Err(e.into()),
            }
        }

        let mut broadcast = Vec::new();
        let mut dead = Vec::new();
        for (i, c) in clients.iter_mut().enumerate() {
            loop {
                match c.ws.read() {
                    Ok(Message::Text(t)) => {
                        let out = session.handle_text(t.as_str());
                        for m in out {
                            match m {
                                ServerMsg::State { .. } => broadcast.push(m),
                                _ => {
                                    if !send(c, &[m]) {
                                        dead.push(i);
                                    }
                                }
                            }
                        }
                    }
                    Ok(Message::Close(_)) => {
                        dead.push(i);
                        break;
                    }
                    Ok(_) => {}
                    Err(tungstenite::Error::Io(e))
                        if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) =>
                    {
                        break
                    }
                    Err(_) => {
                        dead.push(i);
                        break;
                    }
                }
            }
        }

        if !session.is_paused() && Instant::now() >= next_tick {
            broadcast.extend(session.tick());
            next_tick += period;
            if next_tick < Instant::now() {
                next_tick = Instant::now() + period;
            }
        } else if session.is_paused() {
            next_tick = Instant::now() + period;
        }

        if !broadcast.is_empty() {
            for (i, c) in clients.iter_mut().enumerate() {
                if !send(c, &broadcast) {
                    dead.push(i);
                }
            }
        }
        dead.sort_unstable();
        dead.dedup();
        for i in dead.into_iter().rev() {
            let c = clients.remove(i);
            log::info!("client {} disconnected", c.peer);
        }
        std::thread::sleep(POLL);
    }
    Ok(())
}
