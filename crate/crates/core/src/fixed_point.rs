//! Phase-locked equilibria from the pseudoinverse fixed-point equation
//! `θ = L_W(Bᵀθ)^# (N ω / K)`, and an empirical critical-coupling search.
//!
//! With sinc edge weights `w_k = sin(φ_k)/φ_k` the identity
//! `B diag(w) Bᵀ θ = B sin(Bᵀθ)` turns the equilibrium condition into a
//! linear solve at frozen weights, which the solver iterates (Picard).

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{detect_frequency_sync, jacobian, StabilityClass, SyncOptions};
use crate::dynamics::{integrate, IntegratorConfig, OscillatorNetwork};
use crate::error::{invalid, KuramotoError, Result};
use crate::graph::{symmetric_pinv, weighted_laplacian, EdgePhases};
use crate::scenario::rng::PhaseRng;

/// `sin(φ)/φ` per edge, `1` at `φ = 0`.
pub fn sinc_weights(phi: &EdgePhases) -> DVector<f64> {
    phi.phi.map(sinc)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub theta_star: Vec<f64>,
    /// `‖θ̇(θ*)‖∞` in the rotating frame.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stability: StabilityClass,
    pub max_abs_phase: f64,
    pub max_edge_difference: f64,
}

fn center(v: &mut DVector<f64>) {
    let m = v.mean();
    v.add_scalar_mut(-m);
}

/// Solves for a phase-locked state of the network in the frame rotating at
/// the mean natural frequency.
///
/// Iterates `θ ← L_W(Bᵀθ)^# ω̄` with mean-centered `ω̄` and `W` the
/// per-edge gains times the sinc weights. When an iterate's residual grows,
/// the step is halved. Converged means the iterate moved less than `tol`
/// (sup norm) and the flow residual is below `10 tol`. Running out of
/// iterations is not an error; the result reports `converged = false`.
pub fn solve_fixed_point(
    network: &OscillatorNetwork,
    theta0: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointResult> {
    let n = network.n();
    crate::error::check_len("theta0", n, theta0.len())?;
    if !network.graph().is_connected() {
        let spec = crate::graph::spectrum(&crate::graph::laplacian(network.graph()), crate::graph::DEFAULT_ZERO_TOL)?;
        return Err(KuramotoError::Disconnected { lambda2: spec.lambda2 });
    }
    if !(network.k() > 0.0) {
        return Err(invalid("K", "fixed-point solve needs K > 0"));
    }
    if !(tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    let mut omega_c = network.omega().clone();
    center(&mut omega_c);
    let gains = network.edge_gains();
    let inc = network.incidence();
    let residual_of = |th: &DVector<f64>| network.rhs_with_omega(th, &omega_c).amax();

    let mut theta = theta0.clone();
    center(&mut theta);
    let mut residual = residual_of(&theta);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        let phi = inc.edge_phases(&theta)?;
        let w = sinc_weights(&phi).component_mul(&gains);
        let lw = weighted_laplacian(inc, &w)?;
        let (pinv, rank) = symmetric_pinv(&lw, 1e-12);
        if rank + 1 < n {
            // Weighted graph lost connectivity; map undefined here.
            break;
        }
        let mut next = pinv * &omega_c;
        center(&mut next);
        let mut next_res = residual_of(&next);
        if next_res > residual {
            next = &theta + (&next - &theta) * 0.5;
            next_res = residual_of(&next);
        }
        let step = (&next - &theta).amax();
        theta = next;
        residual = next_res;
        if !theta.iter().all(|v| v.is_finite()) {
            break;
        }
        if step < tol && residual < 10.0 * tol {
            converged = true;
            break;
        }
    }

    let phi = inc.edge_phases(&theta)?;
    let stability = jacobian(&theta, &network.coupling_matrix())?.classification;
    Ok(FixedPointResult {
        max_abs_phase: theta.amax(),
        max_edge_difference: if phi.phi.is_empty() { 0.0 } else { phi.phi.amax() },
        theta_star: theta.iter().copied().collect(),
        residual,
        iterations,
        converged,
        stability,
    })
}

/// How the bisection probes pick their initial phases.
#[derive(Debug, Clone, PartialEq)]
pub enum Theta0Policy {
    Fixed(DVector<f64>),
    /// Uniform on `[0, 2π)` from the documented seeded generator.
    UniformRandom { seed: u64 },
}

impl Theta0Policy {
    pub fn resolve(&self, n: usize) -> Result<DVector<f64>> {
        match self {
            Theta0Policy::Fixed(v) => {
                crate::error::check_len("theta0", n, v.len())?;
                Ok(v.clone())
            }
            Theta0Policy::UniformRandom { seed } => Ok(PhaseRng::new(*seed).uniform_phases(n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalSearch {
    pub k_lo: f64,
    pub k_hi: f64,
    pub sync_tol: f64,
    pub t_end: f64,
    pub h: f64,
    pub sample_every: usize,
    pub max_bisections: usize,
}

impl CriticalSearch {
    pub fn new(k_lo: f64, k_hi: f64, t_end: f64) -> Self {
        Self {
            k_lo,
            k_hi,
            sync_tol: SyncOptions::DEFAULT_TOL,
            t_end,
            h: IntegratorConfig::DEFAULT_H,
            sample_every: 1,
            max_bisections: 20,
        }
    }
}

/// Bisects on "simulate, then detect frequency sync" to locate the smallest
/// coupling that synchronizes the template network.
///
/// Returns `k_lo` directly when it already synchronizes. Stops after
/// `max_bisections` halvings or when the bracket is narrower than
/// `1e-3 k_hi`, returning the bracket midpoint.
pub fn empirical_critical_coupling(
    template: &OscillatorNetwork,
    theta0: &Theta0Policy,
    search: &CriticalSearch,
) -> Result<f64> {
    let CriticalSearch { k_lo, k_hi, .. } = *search;
    if !(k_lo >= 0.0 && k_hi > k_lo) {
        return Err(KuramotoError::InvalidBracket(format!(
            "need 0 <= K_lo < K_hi, got [{k_lo}, {k_hi}]"
        )));
    }
    let th0 = theta0.resolve(template.n())?;
    let cfg = IntegratorConfig::new(search.h, search.t_end, search.sample_every)?;
    let opts = SyncOptions {
        tol: search.sync_tol,
        hold: SyncOptions::DEFAULT_HOLD_FRACTION * search.t_end,
    };
    let synced = |k: f64| -> Result<bool> {
        let tr = integrate(&template.with_k(k)?, &th0, &cfg)?;
        Ok(detect_frequency_sync(&tr, &opts).is_frequency_synced)
    };
    if !synced(k_hi)? {
        return Err(KuramotoError::InvalidBracket(format!(
            "upper endpoint K_hi = {k_hi} does not synchronize"
        )));
    }
    if synced(k_lo)? {
        return Ok(k_lo);
    }
    let (mut lo, mut hi) = (k_lo, k_hi);
    for _ in 0..search.max_bisections {
        if hi - lo < 1e-3 * k_hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if synced(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
