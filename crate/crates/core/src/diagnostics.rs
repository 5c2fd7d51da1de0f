//! Synchronization diagnostics: order parameters, cohesiveness, frequency-sync
//! detection, Lyapunov monitors, Jacobians and decay-rate fits.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{weighted_unchecked, SimulationTrace};
use crate::error::{check_len, invalid, KuramotoError, Result};
use crate::graph::{ensure_symmetric, sorted_symmetric_eigen, WeightedGraph};

/// Centroid `r e^{iψ}` of the phases on the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    pub r: f64,
    pub psi: f64,
}

pub fn order_parameter(theta: &DVector<f64>) -> OrderParameter {
    let n = theta.len().max(1) as f64;
    let (s, c) = theta
        .iter()
        .fold((0.0, 0.0), |(s, c), t| (s + t.sin(), c + t.cos()));
    let (s, c) = (s / n, c / n);
    let r = s.hypot(c);
    let psi = if r < 1e-12 { 0.0 } else { s.atan2(c) };
    OrderParameter { r, psi }
}

/// `r` from the quadratic form `r² = 1 - (1/N) z* L z`, `z = e^{jθ}`, with
/// `L = I - (1/N) 1 1ᵀ`.
pub fn order_parameter_graph(theta: &DVector<f64>) -> f64 {
    let n = theta.len();
    let nf = n as f64;
    let l = DMatrix::identity(n, n) - DMatrix::from_element(n, n, 1.0 / nf);
    let c = theta.map(f64::cos);
    let s = theta.map(f64::sin);
    let q = c.dot(&(&l * &c)) + s.dot(&(&l * &s));
    (1.0 - q / nf).max(0.0).sqrt()
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_to_pi(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// Geodesic distance between two angles on the circle, in `[0, π]`.
pub fn circular_distance(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b).abs()
}

/// Length of the shortest arc containing every phase (mod 2π).
pub fn minimal_containing_arc(theta: &DVector<f64>) -> f64 {
    if theta.len() <= 1 {
        return 0.0;
    }
    let mut w: Vec<f64> = theta.iter().map(|t| t.rem_euclid(TAU)).collect();
    w.sort_by(f64::total_cmp);
    let mut largest_gap = w[0] + TAU - w[w.len() - 1];
    for p in w.windows(2) {
        largest_gap = largest_gap.max(p[1] - p[0]);
    }
    (TAU - largest_gap).max(0.0)
}

/// Largest unwrapped pairwise difference `max θ - min θ`.
pub fn max_pairwise_difference(theta: &DVector<f64>) -> f64 {
    theta.max() - theta.min()
}

/// Arc or set-D cohesion bound `γ`. When built from `ε`, `γ = π/2 - 2ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CohesivenessSpec {
    pub gamma: f64,
    pub epsilon: Option<f64>,
}

impl CohesivenessSpec {
    pub fn arc(gamma: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&gamma) {
            return Err(invalid("gamma", format!("must lie in [0, π], got {gamma}")));
        }
        Ok(Self { gamma, epsilon: None })
    }

    pub fn from_epsilon(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < PI / 4.0) {
            return Err(invalid("epsilon", format!("must lie in (0, π/4), got {epsilon}")));
        }
        Ok(Self {
            gamma: FRAC_PI_2 - 2.0 * epsilon,
            epsilon: Some(epsilon),
        })
    }
}

pub fn is_arc_cohesive(theta: &DVector<f64>, spec: &CohesivenessSpec) -> bool {
    minimal_containing_arc(theta) <= spec.gamma
}

/// Every edge's circular distance is at most `gamma`.
pub fn is_graph_cohesive(theta: &DVector<f64>, graph: &WeightedGraph, gamma: f64) -> bool {
    graph
        .edges()
        .iter()
        .all(|e| circular_distance(theta[e.i], theta[e.j]) <= gamma)
}

/// Average natural frequency, the only frequency a symmetric network can
/// lock to.
pub fn sync_frequency(omega: &DVector<f64>) -> f64 {
    omega.mean()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncOptions {
    /// Max pairwise `|θ̇_i - θ̇_j|` accepted as synchronized.
    pub tol: f64,
    /// Minimum duration the condition must hold, through the end of the trace.
    pub hold: f64,
}

impl SyncOptions {
    pub const DEFAULT_TOL: f64 = 1e-4;
    pub const DEFAULT_HOLD_FRACTION: f64 = 0.1;

    pub fn for_duration(t_end: f64) -> Self {
        Self {
            tol: Self::DEFAULT_TOL,
            hold: Self::DEFAULT_HOLD_FRACTION * t_end,
        }
    }
}

/// Noise floor below which `‖δ‖` samples are excluded from the decay fit.
pub const DECAY_FIT_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncReport {
    pub is_frequency_synced: bool,
    pub t_sync: Option<f64>,
    pub omega_sync: Option<f64>,
    /// `‖θ̇ - Ω 1‖` per sample, `Ω` the instantaneous mean frequency.
    pub delta_norms: Vec<f64>,
    /// Decay rate `α` of `‖δ‖ ≈ e^{-αt}` over the pre-floor segment.
    pub fitted_decay_rate: Option<f64>,
}

fn frequency_spread(d: &DVector<f64>) -> f64 {
    d.max() - d.min()
}

/// Detects sustained frequency synchronization.
///
/// `t_sync` is the earliest sample from which the frequency spread stays
/// below `tol` through the end of the trace, provided that window lasts at
/// least `hold`.
pub fn detect_frequency_sync(trace: &SimulationTrace, opts: &SyncOptions) -> SyncReport {
    let spreads: Vec<f64> = trace.theta_dots.iter().map(frequency_spread).collect();
    let delta_norms: Vec<f64> = trace
        .theta_dots
        .iter()
        .map(|d| {
            let m = d.mean();
            d.iter().map(|v| (v - m) * (v - m)).sum::<f64>().sqrt()
        })
        .collect();

    let mut start = spreads.len();
    while start > 0 && spreads[start - 1] < opts.tol {
        start -= 1;
    }
    let synced = start < spreads.len() && trace.t_end() - trace.times[start] >= opts.hold;
    let (t_sync, omega_sync) = if synced {
        let window = &trace.theta_dots[start..];
        let total: f64 = window.iter().map(|d| d.mean()).sum();
        (Some(trace.times[start]), Some(total / window.len() as f64))
    } else {
        (None, None)
    };

    let end = decay_fit_end(&delta_norms, DECAY_FIT_FLOOR);
    let fitted_decay_rate = estimate_decay_rate(&delta_norms[..end], &trace.times[..end]).ok();

    SyncReport {
        is_frequency_synced: synced,
        t_sync,
        omega_sync,
        delta_norms,
        fitted_decay_rate,
    }
}

/// Index of the first norm below `floor` (or the length if none is).
pub fn decay_fit_end(norms: &[f64], floor: f64) -> usize {
    norms.iter().position(|&v| v < floor).unwrap_or(norms.len())
}

/// True when the max pairwise circular distance stays below `tol` from some
/// sample through the end of the trace, for at least `hold`.
pub fn detect_phase_sync(trace: &SimulationTrace, tol: f64, hold: f64) -> bool {
    let mut start = trace.len();
    while start > 0 && minimal_containing_arc(&trace.thetas[start - 1]) < tol {
        start -= 1;
    }
    start < trace.len() && trace.t_end() - trace.times[start] >= hold
}

/// Time-averaged frequencies `(θ(t_end) - θ(t_a)) / (t_end - t_a)` over the
/// trailing `fraction` of the trace.
pub fn mean_frequencies(trace: &SimulationTrace, fraction: f64) -> DVector<f64> {
    let t_end = trace.t_end();
    let t_a = t_end - fraction.clamp(0.0, 1.0) * (t_end - trace.times[0]);
    let a = trace.times.iter().position(|&t| t >= t_a).unwrap_or(0);
    let span = t_end - trace.times[a];
    if span <= 0.0 {
        return trace.theta_dots.last().cloned().unwrap_or_default();
    }
    (trace.final_theta() - &trace.thetas[a]) / span
}

/// Groups oscillators whose frequencies are chained within `gap` of each
/// other. Clusters are listed by increasing frequency; members sorted.
pub fn frequency_clusters(freqs: &DVector<f64>, gap: f64) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..freqs.len()).collect();
    idx.sort_by(|&a, &b| freqs[a].total_cmp(&freqs[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &idx {
        match clusters.last_mut() {
            Some(c) if freqs[i] - freqs[*c.last().unwrap()] <= gap => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    clusters
}

/// `U₁ = 1 - r²`.
pub fn lyapunov_u1(theta: &DVector<f64>) -> f64 {
    let r = order_parameter(theta).r;
    let u = (1.0 - r * r).max(0.0);
    debug_assert!((u - lyapunov_u1_edge_form(theta)).abs() <= 1e-10);
    u
}

/// Complete-graph edge form `4 ‖sin(Bᵀθ/2)‖² / N²` of `U₁`.
pub fn lyapunov_u1_edge_form(theta: &DVector<f64>) -> f64 {
    let n = theta.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = ((theta[j] - theta[i]) / 2.0).sin();
            acc += s * s;
        }
    }
    4.0 * acc / (n * n) as f64
}

/// `U₂ = θᵀ (N I - 1 1ᵀ) θ`.
pub fn lyapunov_u2(theta: &DVector<f64>) -> f64 {
    let n = theta.len();
    let lc = DMatrix::identity(n, n) * n as f64 - DMatrix::from_element(n, n, 1.0);
    theta.dot(&(lc * theta))
}

/// `S = ½ θ̇ᵀθ̇`.
pub fn kinetic_s(theta_dot: &DVector<f64>) -> f64 {
    0.5 * theta_dot.norm_squared()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    LocallyExponentiallyStable,
    Marginal,
    Unstable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JacobianInfo {
    pub j: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub classification: StabilityClass,
}

/// `J(θ) = -B diag(a_ij cos(θ_i - θ_j)) Bᵀ`, the negated Laplacian of the
/// cosine-weighted graph, for `θ̇_i = ω_i - Σ a_ij sin(θ_i - θ_j)`.
pub fn jacobian(theta: &DVector<f64>, a: &DMatrix<f64>) -> Result<JacobianInfo> {
    let n = theta.len();
    check_len("coupling matrix rows", n, a.nrows())?;
    ensure_symmetric(a, 0.0)?;
    let mut j = DMatrix::zeros(n, n);
    for p in 0..n {
        for q in p + 1..n {
            let w = a[(p, q)];
            if w == 0.0 {
                continue;
            }
            let c = w * (theta[p] - theta[q]).cos();
            j[(p, q)] += c;
            j[(q, p)] += c;
            j[(p, p)] -= c;
            j[(q, q)] -= c;
        }
    }
    let (eigenvalues, _) = sorted_symmetric_eigen(&j);
    let classification = classify(&eigenvalues);
    Ok(JacobianInfo {
        j,
        eigenvalues,
        classification,
    })
}

fn classify(eigenvalues: &[f64]) -> StabilityClass {
    let scale = eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-8 * scale;
    // Drop the structural zero (eigenvector 1).
    let Some(zero_at) = eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
    else {
        return StabilityClass::LocallyExponentiallyStable;
    };
    let rest = eigenvalues
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != zero_at)
        .map(|(_, &v)| v);
    let mut class = StabilityClass::LocallyExponentiallyStable;
    for v in rest {
        if v > tol {
            return StabilityClass::Unstable;
        }
        if v >= -tol {
            class = StabilityClass::Marginal;
        }
    }
    class
}

/// Max entrywise deviation between the analytic Jacobian and central finite
/// differences of the weighted-adjacency right-hand side.
pub fn jacobian_fd_check(theta: &DVector<f64>, a: &DMatrix<f64>, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(invalid("h", "finite-difference step must be positive"));
    }
    let analytic = jacobian(theta, a)?.j;
    let n = theta.len();
    let zero = DVector::zeros(n);
    let mut worst = 0.0f64;
    for col in 0..n {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[col] += h;
        minus[col] -= h;
        let diff = (weighted_unchecked(&plus, &zero, a) - weighted_unchecked(&minus, &zero, a)) / (2.0 * h);
        for row in 0..n {
            worst = worst.max((diff[row] - analytic[(row, col)]).abs());
        }
    }
    Ok(worst)
}

/// Least-squares decay rate `α` of `‖δ(t)‖ ≈ C e^{-αt}` over the given
/// window.
pub fn estimate_decay_rate(norms: &[f64], times: &[f64]) -> Result<f64> {
    check_len("times", norms.len(), times.len())?;
    if norms.len() < 10 {
        return Err(invalid("delta_norms", format!("need at least 10 samples, got {}", norms.len())));
    }
    if let Some(bad) = norms.iter().find(|&&v| !(v > 0.0)) {
        return Err(KuramotoError::InvalidParameter {
            name: "delta_norms",
            reason: format!("nonpositive norm {bad} in fit window"),
        });
    }
    let m = norms.len() as f64;
    let tm = times.iter().sum::<f64>() / m;
    let ym = norms.iter().map(|v| v.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in times.iter().zip(norms) {
        sxy += (t - tm) * (v.ln() - ym);
        sxx += (t - tm) * (t - tm);
    }
    if sxx == 0.0 {
        return Err(invalid("times", "fit window has zero time extent"));
    }
    Ok(-sxy / sxx)
}
