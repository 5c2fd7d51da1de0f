//! Right-hand sides of the phase models, fixed-step RK4 integration and the
//! rotating-frame transform.
//!
//! Phases are kept unwrapped throughout; wrapping happens only in
//! diagnostics and output.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, invalid, KuramotoError, Result};
use crate::graph::{build_incidence, ensure_symmetric, OrientedIncidence, WeightedGraph};

/// Phase vector at a point in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub theta: DVector<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(theta: DVector<f64>, t: f64) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) || !t.is_finite() {
            return Err(KuramotoError::NonFinite { t });
        }
        Ok(Self { theta, t })
    }
}

/// How the coupling term is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// All-to-all unit coupling `(K/N) Σ sin(θ_j - θ_i)`, evaluated through
    /// the order parameter in O(n).
    MeanFieldComplete,
    /// `ω - (K/N) B diag(w) sin(Bᵀθ)`.
    GraphIncidence,
    /// `ω_i - Σ_j K a_ij sin(θ_i - θ_j)`, no `1/N` factor.
    WeightedAdjacency,
}

/// A full model instance: graph, natural frequencies, gain and normalization.
#[derive(Debug, Clone)]
pub struct OscillatorNetwork {
    graph: WeightedGraph,
    omega: DVector<f64>,
    k: f64,
    mode: CouplingMode,
    incidence: OrientedIncidence,
    weights: DVector<f64>,
    // K * adjacency, used only in WeightedAdjacency mode.
    coupling: DMatrix<f64>,
}

impl OscillatorNetwork {
    pub fn new(graph: WeightedGraph, omega: DVector<f64>, k: f64, mode: CouplingMode) -> Result<Self> {
        check_len("omega", graph.n(), omega.len())?;
        if !(k >= 0.0 && k.is_finite()) {
            return Err(invalid("K", format!("coupling gain must be finite and >= 0, got {k}")));
        }
        if omega.iter().any(|v| !v.is_finite()) {
            return Err(invalid("omega", "natural frequencies must be finite"));
        }
        if mode == CouplingMode::MeanFieldComplete {
            let n = graph.n();
            let complete = graph.edge_count() == n * (n - 1) / 2
                && graph.edges().iter().all(|e| e.w == 1.0);
            if !complete {
                return Err(invalid(
                    "coupling_mode",
                    "mean_field_complete requires the complete unit-weight graph",
                ));
            }
        }
        let incidence = build_incidence(&graph);
        let weights = graph.weights();
        let coupling = if mode == CouplingMode::WeightedAdjacency {
            graph.adjacency() * k
        } else {
            DMatrix::zeros(0, 0)
        };
        Ok(Self {
            graph,
            omega,
            k,
            mode,
            incidence,
            weights,
            coupling,
        })
    }

    /// All-to-all unit-weight network in mean-field form.
    pub fn mean_field(omega: DVector<f64>, k: f64) -> Result<Self> {
        let g = WeightedGraph::complete(omega.len().max(1), 1.0)?;
        Self::new(g, omega, k, CouplingMode::MeanFieldComplete)
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.graph.clone(), self.omega.clone(), k, self.mode)
    }

    pub fn with_omega(&self, omega: DVector<f64>) -> Result<Self> {
        Self::new(self.graph.clone(), omega, self.k, self.mode)
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    pub fn incidence(&self) -> &OrientedIncidence {
        &self.incidence
    }

    /// Per-edge gain multiplying `sin(θ_j - θ_i)`: `K w / N` for the
    /// normalized forms, `K w` for the weighted-adjacency form.
    pub fn edge_gains(&self) -> DVector<f64> {
        match self.mode {
            CouplingMode::MeanFieldComplete | CouplingMode::GraphIncidence => {
                &self.weights * (self.k / self.n() as f64)
            }
            CouplingMode::WeightedAdjacency => &self.weights * self.k,
        }
    }

    /// Symmetric coupling matrix `c_ij` such that the dynamics read
    /// `θ̇_i = ω_i - Σ_j c_ij sin(θ_i - θ_j)`.
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        match self.mode {
            CouplingMode::WeightedAdjacency => self.coupling.clone(),
            _ => self.graph.adjacency() * (self.k / self.n() as f64),
        }
    }

    pub fn rhs(&self, theta: &DVector<f64>) -> DVector<f64> {
        self.rhs_with_omega(theta, &self.omega)
    }

    pub(crate) fn rhs_with_omega(&self, theta: &DVector<f64>, omega: &DVector<f64>) -> DVector<f64> {
        match self.mode {
            CouplingMode::MeanFieldComplete => meanfield_unchecked(theta, omega, self.k),
            CouplingMode::GraphIncidence => {
                graph_unchecked(theta, omega, self.k, &self.incidence.matrix, &self.weights)
            }
            CouplingMode::WeightedAdjacency => weighted_unchecked(theta, omega, &self.coupling),
        }
    }
}

/// `θ̇_i = ω_i + (K/n) Σ_j sin(θ_j - θ_i)`, summed pairwise.
pub fn rhs_classic(theta: &DVector<f64>, omega: &DVector<f64>, k: f64) -> Result<DVector<f64>> {
    check_len("omega", theta.len(), omega.len())?;
    let n = theta.len();
    let scale = k / n as f64;
    Ok(DVector::from_fn(n, |i, _| {
        let s: f64 = theta.iter().map(|tj| (tj - theta[i]).sin()).sum();
        omega[i] + scale * s
    }))
}

/// `θ̇_i = ω_i + K r sin(ψ - θ_i)`, with `(r, ψ)` the order parameter.
pub fn rhs_meanfield_order(theta: &DVector<f64>, omega: &DVector<f64>, k: f64) -> Result<DVector<f64>> {
    check_len("omega", theta.len(), omega.len())?;
    Ok(meanfield_unchecked(theta, omega, k))
}

fn meanfield_unchecked(theta: &DVector<f64>, omega: &DVector<f64>, k: f64) -> DVector<f64> {
    let n = theta.len() as f64;
    let (s, c) = theta
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let (rs, rc) = (s / n, c / n);
    // K r sin(ψ - θ) = K (r sinψ cosθ - r cosψ sinθ)
    DVector::from_fn(theta.len(), |i, _| {
        omega[i] + k * (rs * theta[i].cos() - rc * theta[i].sin())
    })
}

/// `θ̇ = ω - (K/N) B diag(w) sin(Bᵀθ)`.
pub fn rhs_graph(
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    k: f64,
    b: &OrientedIncidence,
    w: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_len("omega", theta.len(), omega.len())?;
    check_len("theta", b.matrix.nrows(), theta.len())?;
    check_len("edge weights", b.matrix.ncols(), w.len())?;
    Ok(graph_unchecked(theta, omega, k, &b.matrix, w))
}

fn graph_unchecked(
    theta: &DVector<f64>,
    omega: &DVector<f64>,
    k: f64,
    b: &DMatrix<f64>,
    w: &DVector<f64>,
) -> DVector<f64> {
    let n = theta.len() as f64;
    let flow = (b.tr_mul(theta)).zip_map(w, |phi, wk| wk * phi.sin());
    omega - (b * flow) * (k / n)
}

/// `θ̇_i = ω_i - Σ_j a_ij sin(θ_i - θ_j)` for a symmetric, zero-diagonal `A`.
pub fn rhs_weighted(theta: &DVector<f64>, omega: &DVector<f64>, a: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_len("omega", theta.len(), omega.len())?;
    check_len("coupling matrix rows", theta.len(), a.nrows())?;
    ensure_symmetric(a, 0.0)?;
    if (0..a.nrows()).any(|i| a[(i, i)] != 0.0) {
        return Err(invalid("A", "coupling matrix must have zero diagonal"));
    }
    Ok(weighted_unchecked(theta, omega, a))
}

pub(crate) fn weighted_unchecked(theta: &DVector<f64>, omega: &DVector<f64>, a: &DMatrix<f64>) -> DVector<f64> {
    let n = theta.len();
    DVector::from_fn(n, |i, _| {
        let mut s = 0.0;
        for j in 0..n {
            let aij = a[(i, j)];
            if aij != 0.0 {
                s += aij * (theta[i] - theta[j]).sin();
            }
        }
        omega[i] - s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4,
}

/// Fixed-step integration settings.
///
/// The run takes `ceil(t_end / h)` steps; sample `k` is at time `k * h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub method: Method,
    #[serde(default = "IntegratorConfig::default_h")]
    pub h: f64,
    pub t_end: f64,
    #[serde(default = "IntegratorConfig::default_sample_every")]
    pub sample_every: usize,
}

impl IntegratorConfig {
    pub const DEFAULT_H: f64 = 0.01;

    fn default_h() -> f64 {
        Self::DEFAULT_H
    }

    fn default_sample_every() -> usize {
        1
    }

    pub fn new(h: f64, t_end: f64, sample_every: usize) -> Result<Self> {
        let cfg = Self {
            method: Method::Rk4,
            h,
            t_end,
            sample_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", format!("step must be positive, got {}", self.h)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(invalid("sample_every", "must be a positive integer"));
        }
        if self.h * self.sample_every as f64 > self.t_end * (1.0 + 1e-12) {
            return Err(invalid(
                "sample_every",
                format!(
                    "h * sample_every = {} exceeds t_end = {}",
                    self.h * self.sample_every as f64,
                    self.t_end
                ),
            ));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.h - 1e-9).ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    pub integrator: String,
    pub h: f64,
    pub sample_every: usize,
    pub seed: Option<u64>,
    pub network_digest: String,
}

/// Time-ordered samples of `(t, θ, θ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub times: Vec<f64>,
    pub thetas: Vec<DVector<f64>>,
    pub theta_dots: Vec<DVector<f64>>,
    pub metadata: TraceMetadata,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_theta(&self) -> &DVector<f64> {
        self.thetas.last().expect("trace is never empty")
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trace is never empty")
    }
}

/// Classic RK4 on `ẋ = f(x)`, invoking `sample(k, t, x)` at sampled steps.
pub(crate) fn rk4_run<F, S>(x0: DVector<f64>, cfg: &IntegratorConfig, mut f: F, mut sample: S) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
    S: FnMut(f64, &DVector<f64>),
{
    cfg.validate()?;
    let steps = cfg.steps();
    let h = cfg.h;
    let mut x = x0;
    sample(0.0, &x);
    for k in 1..=steps {
        x = rk4_step(&x, h, &mut f);
        let t = k as f64 * h;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(KuramotoError::NonFinite { t });
        }
        if k % cfg.sample_every == 0 || k == steps {
            sample(t, &x);
        }
    }
    Ok(x)
}

pub(crate) fn rk4_step<F>(x: &DVector<f64>, h: f64, f: &mut F) -> DVector<f64>
where
    F: FnMut(&DVector<f64>) -> DVector<f64>,
{
    let k1 = f(x);
    let k2 = f(&(x + &k1 * (h / 2.0)));
    let k3 = f(&(x + &k2 * (h / 2.0)));
    let k4 = f(&(x + &k3 * h));
    x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

/// Integrates the network from `theta0` with fixed-step RK4.
pub fn integrate(network: &OscillatorNetwork, theta0: &DVector<f64>, cfg: &IntegratorConfig) -> Result<SimulationTrace> {
    check_len("theta0", network.n(), theta0.len())?;
    if theta0.iter().any(|v| !v.is_finite()) {
        return Err(KuramotoError::NonFinite { t: 0.0 });
    }
    let mut times = Vec::new();
    let mut thetas = Vec::new();
    let mut theta_dots = Vec::new();
    rk4_run(theta0.clone(), cfg, |x| network.rhs(x), |t, x| {
        times.push(t);
        theta_dots.push(network.rhs(x));
        thetas.push(x.clone());
    })?;
    Ok(SimulationTrace {
        times,
        thetas,
        theta_dots,
        metadata: TraceMetadata {
            integrator: "rk4".into(),
            h: cfg.h,
            sample_every: cfg.sample_every,
            seed: None,
            network_digest: network.graph().digest(),
        },
    })
}

/// `θ̃(t) = θ(t) - Ω t`; frequencies shift by `-Ω`.
pub fn rotating_frame(trace: &SimulationTrace, omega_frame: f64) -> SimulationTrace {
    let thetas = trace
        .times
        .iter()
        .zip(&trace.thetas)
        .map(|(t, th)| th.map(|v| v - omega_frame * t))
        .collect();
    let theta_dots = trace.theta_dots.iter().map(|d| d.map(|v| v - omega_frame)).collect();
    SimulationTrace {
        times: trace.times.clone(),
        thetas,
        theta_dots,
        metadata: trace.metadata.clone(),
    }
}

/// State of inertial oscillators `m θ̈ + d θ̇ = τ - Σ k_ij sin(θ_i - θ_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderState {
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    pub m: DVector<f64>,
    pub d: DVector<f64>,
}

impl SecondOrderState {
    pub fn new(theta: DVector<f64>, theta_dot: DVector<f64>, m: DVector<f64>, d: DVector<f64>) -> Result<Self> {
        let n = theta.len();
        check_len("theta_dot", n, theta_dot.len())?;
        check_len("m", n, m.len())?;
        check_len("d", n, d.len())?;
        if m.iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("m", "inertias must be positive"));
        }
        if d.iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("d", "dampings must be positive"));
        }
        Ok(Self { theta, theta_dot, m, d })
    }
}

/// RK4 on the doubled state `(θ, θ̇)`. The trace stores the velocity state
/// as `theta_dots`.
pub fn integrate_second_order(
    state0: &SecondOrderState,
    tau: &DVector<f64>,
    k: &DMatrix<f64>,
    cfg: &IntegratorConfig,
) -> Result<SimulationTrace> {
    let n = state0.theta.len();
    check_len("tau", n, tau.len())?;
    check_len("coupling matrix rows", n, k.nrows())?;
    ensure_symmetric(k, 0.0)?;
    let x0 = DVector::from_iterator(2 * n, state0.theta.iter().chain(state0.theta_dot.iter()).copied());
    let zero = DVector::zeros(n);
    let f = |x: &DVector<f64>| {
        let theta = x.rows(0, n).into_owned();
        let force = weighted_unchecked(&theta, &zero, k);
        DVector::from_fn(2 * n, |r, _| {
            if r < n {
                x[n + r]
            } else {
                let i = r - n;
                (tau[i] + force[i] - state0.d[i] * x[n + i]) / state0.m[i]
            }
        })
    };
    let mut times = Vec::new();
    let mut thetas = Vec::new();
    let mut theta_dots = Vec::new();
    rk4_run(x0, cfg, f, |t, x| {
        times.push(t);
        thetas.push(x.rows(0, n).into_owned());
        theta_dots.push(x.rows(n, n).into_owned());
    })?;
    Ok(SimulationTrace {
        times,
        thetas,
        theta_dots,
        metadata: TraceMetadata {
            integrator: "rk4-second-order".into(),
            h: cfg.h,
            sample_every: cfg.sample_every,
            seed: None,
            network_digest: WeightedGraph::from_adjacency(k).map(|g| g.digest()).unwrap_or_default(),
        },
    })
}
