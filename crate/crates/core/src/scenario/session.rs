//! Steerable simulation session behind the streaming protocol.
//!
//! Every message is one JSON object on one line. The server speaks first
//! with a `hello`, then streams `frame`s. Clients send commands tagged by
//! `cmd`:
//!
//! ```text
//! {"cmd":"set_K","k":3.0}
//! {"cmd":"pause"}
//! {"cmd":"resume"}
//! {"cmd":"reset"}                                   // original theta0 spec
//! {"cmd":"reset","seed":7}                          // uniform random phases, seed 7
//! {"cmd":"reset","theta0":{"kind":"explicit","values":[0,1]}}
//! {"cmd":"set_topology","topology":"cycle","weight":1.0}
//! {"cmd":"set_n","n":50,"seed":3}
//! ```
//!
//! Each applied command is answered by an `ack` holding the simulation time
//! at which it took effect; a rejected one by an `error`, after which the
//! session carries on unchanged. `reset` and `set_n` restart time at 0.
//! `set_topology` keeps the current phases and time.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::diagnostics::order_parameter;
use crate::dynamics::{rk4_step, CouplingMode, OscillatorNetwork};
use crate::error::{KuramotoError, Result};
use crate::scenario::config::{ScenarioConfig, Theta0Spec, Topology};
use crate::thresholds::{threshold_report, ThresholdReport};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    #[serde(rename = "set_K", alias = "set_k")]
    SetK { k: f64 },
    Pause,
    Resume,
    Reset {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta0: Option<Theta0Spec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    SetTopology {
        topology: Topology,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<f64>,
    },
    SetN {
        n: usize,
        /// Seed for fresh random phases when the current `theta0` is explicit.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SetK { .. } => "set_K",
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::Reset { .. } => "reset",
            Command::SetTopology { .. } => "set_topology",
            Command::SetN { .. } => "set_n",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
    pub r: f64,
    pub psi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub protocol_version: u32,
    pub n: usize,
    pub k: f64,
    pub topology: Topology,
    pub coupling_mode: CouplingMode,
    pub h: f64,
    pub steps_per_frame: usize,
    pub paused: bool,
    pub thresholds: Option<ThresholdReport>,
    pub thresholds_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub cmd: String,
    /// Simulation time at which the command took effect.
    pub t: f64,
    pub k: f64,
    pub n: usize,
    pub topology: Topology,
    pub paused: bool,
    /// Present when the command changed the network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<ThresholdReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Frame(Frame),
    Ack(Ack),
    Error { message: String, t: f64 },
}

impl Message {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("protocol messages hold only finite numbers")
    }
}

/// Live simulation state. One owner steps it; commands are applied between
/// integration steps.
#[derive(Debug, Clone)]
pub struct Session {
    cfg: ScenarioConfig,
    base_dir: PathBuf,
    network: OscillatorNetwork,
    theta: DVector<f64>,
    steps: u64,
    paused: bool,
    steps_per_frame: usize,
}

impl Session {
    pub fn new(cfg: ScenarioConfig, base_dir: &Path, steps_per_frame: usize) -> Result<Self> {
        if steps_per_frame == 0 {
            return Err(KuramotoError::InvalidParameter {
                name: "steps_per_frame",
                reason: "must be at least 1".into(),
            });
        }
        cfg.validate()?;
        let network = cfg.build_network(base_dir)?;
        let theta = cfg.theta0.generate(cfg.network.n)?;
        Ok(Self {
            cfg,
            base_dir: base_dir.to_path_buf(),
            network,
            theta,
            steps: 0,
            paused: false,
            steps_per_frame,
        })
    }

    pub fn t(&self) -> f64 {
        self.steps as f64 * self.cfg.integrator.h
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn network(&self) -> &OscillatorNetwork {
        &self.network
    }

    pub fn theta(&self) -> &DVector<f64> {
        &self.theta
    }

    fn thresholds(&self) -> (Option<ThresholdReport>, Option<String>) {
        match threshold_report(&self.network, self.cfg.analysis.epsilon) {
            Ok(r) => (Some(r), None),
            Err(e) => (None, Some(e.to_string())),
        }
    }

    pub fn hello(&self) -> Message {
        let (thresholds, thresholds_error) = self.thresholds();
        Message::Hello(Hello {
            protocol_version: PROTOCOL_VERSION,
            n: self.network.n(),
            k: self.network.k(),
            topology: self.cfg.network.topology,
            coupling_mode: self.network.mode(),
            h: self.cfg.integrator.h,
            steps_per_frame: self.steps_per_frame,
            paused: self.paused,
            thresholds,
            thresholds_error,
        })
    }

    pub fn frame(&self) -> Frame {
        let op = order_parameter(&self.theta);
        Frame {
            t: self.t(),
            theta: self.theta.iter().copied().collect(),
            theta_dot: self.network.rhs(&self.theta).iter().copied().collect(),
            r: op.r,
            psi: op.psi,
        }
    }

    /// Parses and applies one command line; returns the ack or error message.
    pub fn handle_line(&mut self, line: &str) -> Message {
        match serde_json::from_str::<Command>(line.trim()) {
            Ok(cmd) => self.apply(cmd),
            Err(e) => Message::Error {
                message: format!("malformed command: {e}"),
                t: self.t(),
            },
        }
    }

    /// Applies a command atomically: on error nothing changes.
    pub fn apply(&mut self, cmd: Command) -> Message {
        let name = cmd.name();
        match self.try_apply(cmd) {
            Ok(changed_network) => Message::Ack(Ack {
                cmd: name.into(),
                t: self.t(),
                k: self.network.k(),
                n: self.network.n(),
                topology: self.cfg.network.topology,
                paused: self.paused,
                thresholds: if changed_network { self.thresholds().0 } else { None },
            }),
            Err(e) => Message::Error {
                message: format!("{name}: {e}"),
                t: self.t(),
            },
        }
    }

    fn try_apply(&mut self, cmd: Command) -> Result<bool> {
        match cmd {
            Command::SetK { k } => {
                let mut cfg = self.cfg.clone();
                cfg.network.k = k;
                cfg.validate()?;
                self.network = self.network.with_k(k)?;
                self.cfg = cfg;
                Ok(true)
            }
            Command::Pause => {
                self.paused = true;
                Ok(false)
            }
            Command::Resume => {
                self.paused = false;
                Ok(false)
            }
            Command::Reset { theta0, seed } => {
                let spec = match (theta0, seed) {
                    (Some(Theta0Spec::UniformRandom { .. }), Some(s)) | (None, Some(s)) => {
                        Theta0Spec::UniformRandom { seed: s }
                    }
                    (Some(spec), _) => spec,
                    (None, None) => self.cfg.theta0.clone(),
                };
                let theta = spec.generate(self.network.n())?;
                self.theta = theta;
                self.steps = 0;
                Ok(false)
            }
            Command::SetTopology { topology, weight } => {
                let mut cfg = self.cfg.clone();
                cfg.network.topology = topology;
                if let Some(w) = weight {
                    cfg.network.weight = w;
                }
                if topology != Topology::Custom {
                    cfg.network.adjacency = None;
                    cfg.network.adjacency_file = None;
                }
                if topology != Topology::Complete && cfg.network.coupling_mode == CouplingMode::MeanFieldComplete {
                    cfg.network.coupling_mode = CouplingMode::GraphIncidence;
                }
                self.rebuild(cfg, false)?;
                Ok(true)
            }
            Command::SetN { n, seed } => {
                let mut cfg = self.cfg.clone();
                if cfg.network.topology == Topology::Custom {
                    return Err(KuramotoError::Config("network.n: cannot resize a custom adjacency".into()));
                }
                cfg.network.n = n;
                if let Theta0Spec::Explicit { values } = &cfg.theta0 {
                    if values.len() != n {
                        cfg.theta0 = Theta0Spec::UniformRandom { seed: seed.unwrap_or(0) };
                    }
                }
                self.rebuild(cfg, true)?;
                Ok(true)
            }
        }
    }

    fn rebuild(&mut self, cfg: ScenarioConfig, restart: bool) -> Result<()> {
        cfg.validate()?;
        let network = cfg.build_network(&self.base_dir)?;
        let theta = if restart {
            cfg.theta0.generate(cfg.network.n)?
        } else {
            self.theta.clone()
        };
        self.network = network;
        self.theta = theta;
        self.cfg = cfg;
        if restart {
            self.steps = 0;
        }
        Ok(())
    }

    /// One RK4 step unless paused.
    pub fn step(&mut self) -> Result<()> {
        if self.paused {
            return Ok(());
        }
        let net = &self.network;
        let next = rk4_step(&self.theta, self.cfg.integrator.h, &mut |x: &DVector<f64>| net.rhs(x));
        if next.iter().any(|v| !v.is_finite()) {
            self.paused = true;
            return Err(KuramotoError::NonFinite { t: self.t() });
        }
        self.theta = next;
        self.steps += 1;
        Ok(())
    }

    /// Runs until the next frame is due, draining `inbox` before every step.
    /// Returns acks/errors in arrival order followed by the frame. While
    /// paused the frame repeats the current state.
    pub fn tick(&mut self, inbox: &mut dyn FnMut() -> Option<String>) -> Vec<Message> {
        let mut out = Vec::new();
        loop {
            while let Some(line) = inbox() {
                out.push(self.handle_line(&line));
            }
            if self.paused {
                break;
            }
            if let Err(e) = self.step() {
                out.push(Message::Error {
                    message: format!("{e}; session paused"),
                    t: self.t(),
                });
                break;
            }
            if self.steps.is_multiple_of(self.steps_per_frame as u64) {
                break;
            }
        }
        out.push(Message::Frame(self.frame()));
        out
    }
}
