//! Scenario configuration files (TOML).
//!
//! ```toml
//! name = "case-b"                      # optional
//!
//! [network]
//! topology = "cycle"                   # complete | cycle | path | custom
//! n = 5
//! coupling_mode = "weighted_adjacency" # mean_field_complete | graph_incidence | weighted_adjacency
//! k = 1.0
//! weight = 3.0                         # edge weight for generated topologies (default 1)
//! # custom only, exactly one of:
//! # adjacency = [[0, 1], [1, 0]]
//! # adjacency_file = "grid.txt"        # plain-text adjacency, relative to the config file
//!
//! [omega]
//! kind = "explicit"                    # explicit | uniform | normal
//! values = [5, 5, 5, 5, 5]             # explicit
//! # lo = -1.0, hi = 1.0, seed = 3     # uniform
//! # mu = 0.0, sigma = 1.0, seed = 3   # normal
//! mean_center = false                  # default false
//!
//! [theta0]
//! kind = "explicit"                    # explicit | uniform_random
//! values = [0, 1.7566, 2.5133, 3.8699, 5.0265]
//! # seed = 11                          # uniform_random on [0, 2π)
//!
//! [integrator]
//! method = "rk4"                       # default
//! h = 0.01                             # default
//! t_end = 50.0
//! sample_every = 1                     # default
//!
//! [outputs]                            # optional section
//! trace_csv = "trace.csv"
//! summary_json = "summary.json"
//!
//! [analysis]                           # optional section
//! epsilon = 0.19634954                 # enables K_inv and the cohesive-set rate
//! sync_tol = 1e-4
//! hold_fraction = 0.1
//! fixed_point_tol = 1e-10
//! fixed_point_max_iter = 500
//! ```
//!
//! Unknown keys are rejected. `coupling_mode` and `k` have no defaults.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{CouplingMode, IntegratorConfig, OscillatorNetwork};
use crate::error::{KuramotoError, Result};
use crate::graph::WeightedGraph;
use crate::scenario::rng::PhaseRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Complete,
    Cycle,
    Path,
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub topology: Topology,
    pub n: usize,
    pub coupling_mode: CouplingMode,
    pub k: f64,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency_file: Option<PathBuf>,
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OmegaSpec {
    Explicit {
        values: Vec<f64>,
        #[serde(default)]
        mean_center: bool,
    },
    Uniform {
        lo: f64,
        hi: f64,
        seed: u64,
        #[serde(default)]
        mean_center: bool,
    },
    Normal {
        mu: f64,
        sigma: f64,
        seed: u64,
        #[serde(default)]
        mean_center: bool,
    },
}

impl OmegaSpec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            OmegaSpec::Explicit { .. } => None,
            OmegaSpec::Uniform { seed, .. } | OmegaSpec::Normal { seed, .. } => Some(*seed),
        }
    }

    pub fn mean_center(&self) -> bool {
        match self {
            OmegaSpec::Explicit { mean_center, .. }
            | OmegaSpec::Uniform { mean_center, .. }
            | OmegaSpec::Normal { mean_center, .. } => *mean_center,
        }
    }

    fn set_seed(&mut self, s: u64) {
        if let OmegaSpec::Uniform { seed, .. } | OmegaSpec::Normal { seed, .. } = self {
            *seed = s;
        }
    }

    /// Draws (or copies) `n` natural frequencies.
    pub fn generate(&self, n: usize) -> Result<DVector<f64>> {
        let mut w = match self {
            OmegaSpec::Explicit { values, .. } => {
                if values.len() != n {
                    return Err(KuramotoError::Config(format!(
                        "omega.values: expected {n} entries (network.n), found {}",
                        values.len()
                    )));
                }
                DVector::from_vec(values.clone())
            }
            OmegaSpec::Uniform { lo, hi, seed, .. } => PhaseRng::new(*seed).uniform_vec(n, *lo, *hi),
            OmegaSpec::Normal { mu, sigma, seed, .. } => PhaseRng::new(*seed).normal_vec(n, *mu, *sigma),
        };
        if self.mean_center() {
            let m = w.mean();
            w.add_scalar_mut(-m);
        }
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Theta0Spec {
    Explicit { values: Vec<f64> },
    UniformRandom { seed: u64 },
}

impl Theta0Spec {
    pub fn seed(&self) -> Option<u64> {
        match self {
            Theta0Spec::Explicit { .. } => None,
            Theta0Spec::UniformRandom { seed } => Some(*seed),
        }
    }

    pub fn generate(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            Theta0Spec::Explicit { values } => {
                if values.len() != n {
                    return Err(KuramotoError::Config(format!(
                        "theta0.values: expected {n} entries (network.n), found {}",
                        values.len()
                    )));
                }
                Ok(DVector::from_vec(values.clone()))
            }
            Theta0Spec::UniformRandom { seed } => Ok(PhaseRng::new(*seed).uniform_phases(n)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_trace")]
    pub trace_csv: String,
    #[serde(default = "default_summary")]
    pub summary_json: String,
}

fn default_trace() -> String {
    "trace.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trace_csv: default_trace(),
            summary_json: default_summary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default = "default_sync_tol")]
    pub sync_tol: f64,
    #[serde(default = "default_hold_fraction")]
    pub hold_fraction: f64,
    #[serde(default = "default_fp_tol")]
    pub fixed_point_tol: f64,
    #[serde(default = "default_fp_iter")]
    pub fixed_point_max_iter: usize,
}

fn default_sync_tol() -> f64 {
    crate::diagnostics::SyncOptions::DEFAULT_TOL
}

fn default_hold_fraction() -> f64 {
    crate::diagnostics::SyncOptions::DEFAULT_HOLD_FRACTION
}

fn default_fp_tol() -> f64 {
    1e-10
}

fn default_fp_iter() -> usize {
    500
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            epsilon: None,
            sync_tol: default_sync_tol(),
            hold_fraction: default_hold_fraction(),
            fixed_point_tol: default_fp_tol(),
            fixed_point_max_iter: default_fp_iter(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub network: NetworkSpec,
    pub omega: OmegaSpec,
    pub theta0: Theta0Spec,
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default)]
    pub analysis: AnalysisSpec,
}

/// Parses and validates a scenario. Errors carry the TOML line/column or the
/// dotted field path.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| KuramotoError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| KuramotoError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        KuramotoError::Config(m) => KuramotoError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn cfg_err(field: &str, msg: impl std::fmt::Display) -> KuramotoError {
    KuramotoError::Config(format!("{field}: {msg}"))
}

impl ScenarioConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config always serializes")
    }

    /// Overrides every seed in the config.
    pub fn override_seed(&mut self, seed: u64) {
        self.omega.set_seed(seed);
        if let Theta0Spec::UniformRandom { seed: s } = &mut self.theta0 {
            *s = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let net = &self.network;
        let n = net.n;
        if n == 0 {
            return Err(cfg_err("network.n", "must be at least 1"));
        }
        if !(net.k >= 0.0 && net.k.is_finite()) {
            return Err(cfg_err("network.k", format!("must be finite and >= 0, got {}", net.k)));
        }
        if !(net.weight > 0.0 && net.weight.is_finite()) {
            return Err(cfg_err("network.weight", format!("must be positive, got {}", net.weight)));
        }
        match (net.topology, &net.adjacency, &net.adjacency_file) {
            (Topology::Custom, None, None) => {
                return Err(cfg_err("network", "custom topology needs `adjacency` or `adjacency_file`"))
            }
            (Topology::Custom, Some(_), Some(_)) => {
                return Err(cfg_err("network", "give only one of `adjacency` and `adjacency_file`"))
            }
            (Topology::Custom, Some(rows), None) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(cfg_err("network.adjacency", format!("must be {n}x{n} (network.n)")));
                }
                self.inline_graph()?;
            }
            (Topology::Custom, None, Some(_)) => {}
            (_, None, None) => {}
            (_, _, _) => {
                return Err(cfg_err("network", "`adjacency`/`adjacency_file` only apply to topology = \"custom\""))
            }
        }
        if net.coupling_mode == CouplingMode::MeanFieldComplete
            && (net.topology != Topology::Complete || net.weight != 1.0)
        {
            return Err(cfg_err(
                "network.coupling_mode",
                "mean_field_complete requires topology = \"complete\" with weight = 1",
            ));
        }
        self.omega.generate(n)?;
        self.theta0.generate(n)?;
        match &self.omega {
            OmegaSpec::Uniform { lo, hi, .. } if !(hi >= lo) => {
                return Err(cfg_err("omega", format!("need lo <= hi, got [{lo}, {hi}]")))
            }
            OmegaSpec::Normal { sigma, .. } if !(*sigma >= 0.0) => {
                return Err(cfg_err("omega.sigma", "must be nonnegative"))
            }
            _ => {}
        }
        self.integrator
            .validate()
            .map_err(|e| cfg_err("integrator", e))?;
        let a = &self.analysis;
        if let Some(eps) = a.epsilon {
            if !(eps > 0.0 && eps < std::f64::consts::FRAC_PI_4) {
                return Err(cfg_err("analysis.epsilon", format!("must lie in (0, π/4), got {eps}")));
            }
        }
        if !(a.sync_tol > 0.0) {
            return Err(cfg_err("analysis.sync_tol", "must be positive"));
        }
        if !(a.hold_fraction > 0.0 && a.hold_fraction <= 1.0) {
            return Err(cfg_err("analysis.hold_fraction", "must lie in (0, 1]"));
        }
        if !(a.fixed_point_tol > 0.0) {
            return Err(cfg_err("analysis.fixed_point_tol", "must be positive"));
        }
        Ok(())
    }

    fn inline_graph(&self) -> Result<WeightedGraph> {
        let rows = self.network.adjacency.as_ref().expect("checked by caller");
        let n = self.network.n;
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        WeightedGraph::from_adjacency(&m).map_err(|e| cfg_err("network.adjacency", e))
    }

    /// Builds the graph; `base_dir` resolves a relative `adjacency_file`.
    pub fn graph(&self, base_dir: &Path) -> Result<WeightedGraph> {
        let net = &self.network;
        let g = match net.topology {
            Topology::Complete => WeightedGraph::complete(net.n, net.weight)?,
            Topology::Cycle => WeightedGraph::cycle(net.n, net.weight)?,
            Topology::Path => WeightedGraph::path(net.n, net.weight)?,
            Topology::Custom => match &net.adjacency_file {
                Some(file) => {
                    let path = base_dir.join(file);
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| cfg_err("network.adjacency_file", format!("{}: {e}", path.display())))?;
                    let g = WeightedGraph::parse_adjacency(&text)
                        .map_err(|e| cfg_err("network.adjacency_file", e))?;
                    if g.n() != net.n {
                        return Err(cfg_err(
                            "network.adjacency_file",
                            format!("file has {} nodes, network.n = {}", g.n(), net.n),
                        ));
                    }
                    g
                }
                None => self.inline_graph()?,
            },
        };
        Ok(g)
    }

    pub fn build_network(&self, base_dir: &Path) -> Result<OscillatorNetwork> {
        let g = self.graph(base_dir)?;
        let omega = self.omega.generate(self.network.n)?;
        OscillatorNetwork::new(g, omega, self.network.k, self.network.coupling_mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASE_A: &str = r#"
name = "case-a"
[network]
topology = "custom"
n = 5
coupling_mode = "weighted_adjacency"
k = 1.0
adjacency = [[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0],[0,0,0,0,0]]
[omega]
kind = "explicit"
values = [1, 2, 3, 4, 5]
[theta0]
kind = "explicit"
values = [0, 0.4, 0.8, 1.2, 1.6]
[integrator]
t_end = 50.0
"#;

    const CASE_B: &str = r#"
[network]
topology = "cycle"
n = 5
coupling_mode = "weighted_adjacency"
k = 1.0
weight = 3.0
[omega]
kind = "explicit"
values = [5, 5, 5, 5, 5]
[theta0]
kind = "explicit"
values = [0.0, 1.7566370614359172, 2.5132741228718345, 3.8699111843077517, 5.026548245743669]
[integrator]
h = 0.01
t_end = 50.0
"#;

    #[test]
    fn case_a_parses_and_round_trips() {
        let cfg = parse_config(CASE_A).unwrap();
        assert_eq!(cfg.integrator.h, 0.01);
        assert_eq!(cfg.outputs.trace_csv, "trace.csv");
        let g = cfg.graph(Path::new(".")).unwrap();
        assert_eq!(g.edge_count(), 0);
        let again = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn case_b_parses() {
        let cfg = parse_config(CASE_B).unwrap();
        let net = cfg.build_network(Path::new(".")).unwrap();
        assert_eq!(net.graph().edge_count(), 5);
        assert!(net.graph().edges().iter().all(|e| e.w == 3.0));
        assert_eq!(net.omega(), &DVector::from_element(5, 5.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = CASE_B.replace("n = 5", "n = 3");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("omega.values"), "{err}");
        assert!(err.contains("expected 3"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let text = CASE_B.replace("weight = 3.0", "weight = 3.0\ncolour = 1");
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn missing_seed_is_rejected() {
        let text = CASE_B.replace(
            "kind = \"explicit\"\nvalues = [5, 5, 5, 5, 5]",
            "kind = \"normal\"\nmu = 0.0\nsigma = 1.0",
        );
        let err = parse_config(&text).unwrap_err().to_string();
        assert!(err.contains("seed"), "{err}");
    }

    #[test]
    fn coupling_mode_is_required() {
        let text = CASE_B.replace("coupling_mode = \"weighted_adjacency\"\n", "");
        assert!(parse_config(&text).unwrap_err().to_string().contains("coupling_mode"));
    }

    #[test]
    fn mean_field_needs_complete() {
        let text = CASE_B.replace("weighted_adjacency", "mean_field_complete");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn seeded_specs_reproduce_and_override() {
        let text = CASE_B
            .replace("kind = \"explicit\"\nvalues = [5, 5, 5, 5, 5]", "kind = \"normal\"\nmu = 0.0\nsigma = 1.0\nseed = 4\nmean_center = true");
        let mut cfg = parse_config(&text).unwrap();
        let a = cfg.omega.generate(5).unwrap();
        assert!(a.mean().abs() < 1e-15);
        assert_eq!(a, cfg.omega.generate(5).unwrap());
        cfg.override_seed(99);
        assert_eq!(cfg.omega.seed(), Some(99));
        assert_ne!(a, cfg.omega.generate(5).unwrap());
    }

    #[test]
    fn adjacency_file_is_resolved_relative_to_base() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("g.txt"), "3\n0 1 0\n1 0 1\n0 1 0\n").unwrap();
        let text = CASE_B
            .replace("topology = \"cycle\"", "topology = \"custom\"\nadjacency_file = \"g.txt\"")
            .replace("n = 5", "n = 3")
            .replace("[5, 5, 5, 5, 5]", "[1, 2, 3]")
            .replace(
                "[0.0, 1.7566370614359172, 2.5132741228718345, 3.8699111843077517, 5.026548245743669]",
                "[0, 0, 0]",
            );
        let cfg = parse_config(&text).unwrap();
        assert_eq!(cfg.graph(dir.path()).unwrap().edge_count(), 2);
        assert!(cfg.graph(Path::new("/nonexistent")).is_err());
    }
}
