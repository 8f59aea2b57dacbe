//! TCP service speaking the line protocol in [`super::protocol`].
//!
//! One thread owns the executive. Each client gets a reader thread feeding
//! an event queue and a writer thread draining its own outbound queue, so
//! nothing but the shutdown flag is shared.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::protocol::{parse_inbound, DskySnapshot, Outbound};
use super::{Executive, CYCLES_PER_SECOND};

#[derive(Debug, Clone, Copy)]
pub struct ServeConfig {
    /// Emulated cycles per wall-clock second.
    pub cycles_per_second: u64,
    /// Scheduling quantum of the emulator thread.
    pub slice: Duration,
    /// Minimum spacing of unsolicited snapshots.
    pub push_interval: Duration,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            cycles_per_second: CYCLES_PER_SECOND,
            slice: Duration::from_millis(10),
            push_interval: Duration::from_millis(50),
        }
    }
}

enum Event {
    Connected(u64, Sender<String>),
    Line(u64, String),
    Disconnected(u64),
}

pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting clients and stops the emulator thread.
    pub fn shutdown(mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Blocks until the server stops.
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Binds `listen` and serves `exec` in background threads.
pub fn serve(exec: Executive, listen: &str, config: ServeConfig) -> io::Result<ServerHandle> {
    let listener = TcpListener::bind(listen)?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let shutdown = Arc::new(AtomicBool::new(false));
    let (events_tx, events_rx) = mpsc::channel();

    let emulator = {
        let shutdown = shutdown.clone();
        thread::spawn(move || emulate(exec, events_rx, config, &shutdown))
    };
    let acceptor = {
        let shutdown = shutdown.clone();
        thread::spawn(move || accept(listener, events_tx, &shutdown))
    };
    Ok(ServerHandle {
        addr,
        shutdown,
        threads: vec![acceptor, emulator],
    })
}

fn accept(listener: TcpListener, events: Sender<Event>, shutdown: &AtomicBool) {
    let mut next_id = 0u64;
    while !shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let id = next_id;
                next_id += 1;
                if let Err(e) = spawn_client(id, stream, events.clone()) {
                    eprintln!("client {id}: {e}");
                }
            }
            Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                thread::sleep(Duration::from_millis(5))
            }
            Err(e) => {
                eprintln!("accept failed: {e}");
                thread::sleep(Duration::from_millis(50));
            }
        }
    }
}

fn spawn_client(id: u64, stream: TcpStream, events: Sender<Event>) -> io::Result<()> {
    stream.set_nonblocking(false)?;
    let mut writer = stream.try_clone()?;
    let (out_tx, out_rx) = mpsc::channel::<String>();
    if events.send(Event::Connected(id, out_tx)).is_err() {
        return Ok(());
    }
    thread::spawn(move || {
        for line in out_rx {
            if writer
                .write_all(line.as_bytes())
                .and_then(|_| writer.write_all(b"\n"))
                .is_err()
            {
                break;
            }
        }
        let _ = writer.shutdown(std::net::Shutdown::Both);
    });
    thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            if line.trim().is_empty() {
                continue;
            }
            if events.send(Event::Line(id, line)).is_err() {
                break;
            }
        }
        let _ = events.send(Event::Disconnected(id));
    });
    Ok(())
}

/// Snapshot fields that count as a visible change.
fn visible(s: &DskySnapshot) -> (&str, &str, &str, &str, &str, &str, &BTreeMap<String, bool>) {
    (&s.prog, &s.verb, &s.noun, &s.r1, &s.r2, &s.r3, &s.lamps)
}

fn emulate(
    mut exec: Executive,
    events: Receiver<Event>,
    config: ServeConfig,
    shutdown: &AtomicBool,
) {
    let mut clients: BTreeMap<u64, Sender<String>> = BTreeMap::new();
    let mut last_pushed = exec.snapshot();
    let mut last_push = Instant::now();
    let mut last_run = Instant::now();
    let mut owed = 0f64;

    while !shutdown.load(Ordering::SeqCst) {
        let first = match events.recv_timeout(config.slice) {
            Ok(ev) => Some(ev),
            Err(RecvTimeoutError::Timeout) => None,
            // The acceptor is gone; keep emulating until shutdown.
            Err(RecvTimeoutError::Disconnected) => {
                thread::sleep(config.slice);
                None
            }
        };
        for event in first
            .into_iter()
            .chain(std::iter::from_fn(|| events.try_recv().ok()))
        {
            match event {
                Event::Connected(id, tx) => {
                    clients.insert(id, tx);
                }
                Event::Disconnected(id) => {
                    clients.remove(&id);
                }
                Event::Line(id, line) => {
                    let reply = match parse_inbound(&line) {
                        Ok(message) => exec.handle(message),
                        Err(error) => error,
                    };
                    if let Some(tx) = clients.get(&id) {
                        let _ = tx.send(reply.to_line());
                    }
                }
            }
        }

        let now = Instant::now();
        owed += now.duration_since(last_run).as_secs_f64() * config.cycles_per_second as f64;
        last_run = now;
        // Never try to catch up more than a quarter second at once.
        owed = owed.min(config.cycles_per_second as f64 / 4.0);
        if owed >= 1.0 {
            let budget = owed as u64;
            exec.run_cycles(budget);
            owed -= budget as f64;
        }

        if now.duration_since(last_push) >= config.push_interval {
            let snap = exec.snapshot();
            if visible(&snap) != visible(&last_pushed) {
                let line = Outbound::Dsky(snap.clone()).to_line();
                clients.retain(|_, tx| tx.send(line.clone()).is_ok());
                last_pushed = snap;
                last_push = now;
            }
        }
    }
}
