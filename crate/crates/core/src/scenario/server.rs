//! Newline-delimited JSON over TCP for a single [`Session`].
//!
//! One client at a time. A reader thread queues incoming lines; the stepping
//! loop drains that queue between integration steps and paces frames to the
//! configured rate.

use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, TryRecvError};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{KuramotoError, Result};
use crate::scenario::config::ScenarioConfig;
use crate::scenario::session::{Message, Session};

pub const DEFAULT_FPS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ServeOptions {
    /// Frames per second of wall time; `0` disables pacing.
    pub fps: f64,
    pub steps_per_frame: usize,
    /// Stop after this many frames per connection (tests, recordings).
    pub max_frames: Option<u64>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        Self {
            fps: DEFAULT_FPS,
            steps_per_frame: 1,
            max_frames: None,
        }
    }
}

pub struct Server {
    listener: TcpListener,
    cfg: ScenarioConfig,
    base_dir: PathBuf,
    opts: ServeOptions,
}

impl Server {
    /// Validates the scenario and binds. Port 0 picks a free port.
    pub fn bind<A: ToSocketAddrs>(addr: A, cfg: ScenarioConfig, base_dir: &Path, opts: ServeOptions) -> Result<Self> {
        if !(opts.fps >= 0.0 && opts.fps.is_finite()) {
            return Err(KuramotoError::InvalidParameter {
                name: "fps",
                reason: format!("must be finite and >= 0, got {}", opts.fps),
            });
        }
        Session::new(cfg.clone(), base_dir, opts.steps_per_frame)?;
        let listener = TcpListener::bind(addr)?;
        Ok(Self {
            listener,
            cfg,
            base_dir: base_dir.to_path_buf(),
            opts,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.listener.local_addr()?)
    }

    /// Accepts one client and streams until it disconnects or `max_frames`
    /// is reached. Returns the number of frames sent.
    pub fn serve_one(&self) -> Result<u64> {
        let (stream, _) = self.listener.accept()?;
        let session = Session::new(self.cfg.clone(), &self.base_dir, self.opts.steps_per_frame)?;
        stream_session(session, stream, &self.opts)
    }

    /// Serves clients one after another, each with a fresh session.
    pub fn run(&self) -> Result<()> {
        loop {
            // A dropped client only ends its own session.
            let _ = self.serve_one();
        }
    }
}

fn send_all<W: Write>(out: &mut W, msgs: &[Message]) -> io::Result<()> {
    for m in msgs {
        writeln!(out, "{}", m.to_line())?;
    }
    out.flush()
}

fn is_disconnect(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::BrokenPipe | io::ErrorKind::ConnectionReset | io::ErrorKind::ConnectionAborted
    )
}

fn stream_session(mut session: Session, stream: TcpStream, opts: &ServeOptions) -> Result<u64> {
    stream.set_nodelay(true)?;
    let reader = stream.try_clone()?;
    let (tx, rx) = mpsc::channel::<String>();
    thread::spawn(move || {
        for line in BufReader::new(reader).lines() {
            match line {
                Ok(l) if l.trim().is_empty() => continue,
                Ok(l) => {
                    if tx.send(l).is_err() {
                        break;
                    }
                }
                Err(_) => break,
            }
        }
    });

    let mut out = BufWriter::new(stream);
    match send_all(&mut out, &[session.hello()]) {
        Ok(()) => {}
        Err(e) if is_disconnect(&e) => return Ok(0),
        Err(e) => return Err(e.into()),
    }

    let interval = (opts.fps > 0.0).then(|| Duration::from_secs_f64(1.0 / opts.fps));
    let mut next_due = Instant::now();
    let mut frames = 0u64;
    let mut client_gone = false;
    loop {
        if opts.max_frames.is_some_and(|m| frames >= m) {
            break;
        }
        let mut inbox = || match rx.try_recv() {
            Ok(l) => Some(l),
            Err(TryRecvError::Empty) => None,
            Err(TryRecvError::Disconnected) => {
                client_gone = true;
                None
            }
        };
        let msgs = session.tick(&mut inbox);
        match send_all(&mut out, &msgs) {
            Ok(()) => {}
            Err(e) if is_disconnect(&e) => break,
            Err(e) => return Err(e.into()),
        }
        frames += 1;
        if client_gone {
            break;
        }
        if let Some(dt) = interval {
            next_due += dt;
            let now = Instant::now();
            if next_due > now {
                thread::sleep(next_due - now);
            } else {
                next_due = now;
            }
        }
    }
    let _ = out.get_ref().shutdown(std::net::Shutdown::Write);
    Ok(frames)
}
