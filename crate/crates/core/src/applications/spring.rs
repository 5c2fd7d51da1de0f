//! Particles on a unit ring coupled by elastic springs:
//! `m_i θ̈_i + d_i θ̇_i = τ_i - Σ_j k_ij sin(θ_i - θ_j)`.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{
    integrate_second_order, CouplingMode, IntegratorConfig, OscillatorNetwork, SecondOrderState, SimulationTrace,
};
use crate::error::{check_len, invalid, Result};
use crate::graph::{ensure_symmetric, WeightedGraph};

/// Spring energy `k (1 - cos(θ_i - θ_j))`.
pub fn spring_energy(theta_i: f64, theta_j: f64, k_ij: f64) -> f64 {
    k_ij * (1.0 - (theta_i - theta_j).cos())
}

/// Torque on particle `i`, `-∂U/∂θ_i = -k sin(θ_i - θ_j)`.
pub fn spring_torque(theta_i: f64, theta_j: f64, k_ij: f64) -> f64 {
    -k_ij * (theta_i - theta_j).sin()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpringRing {
    pub m: DVector<f64>,
    pub d: DVector<f64>,
    pub tau: DVector<f64>,
    pub k: DMatrix<f64>,
}

impl SpringRing {
    pub fn new(m: DVector<f64>, d: DVector<f64>, tau: DVector<f64>, k: DMatrix<f64>) -> Result<Self> {
        let n = m.len();
        check_len("d", n, d.len())?;
        check_len("tau", n, tau.len())?;
        check_len("stiffness rows", n, k.nrows())?;
        if m.iter().any(|&v| !(v > 0.0)) || d.iter().any(|&v| !(v > 0.0)) {
            return Err(invalid("m/d", "inertias and dampings must be positive"));
        }
        ensure_symmetric(&k, 0.0)?;
        if k.iter().any(|&v| v < 0.0) || (0..n).any(|i| k[(i, i)] != 0.0) {
            return Err(invalid("k", "stiffness must be nonnegative with zero diagonal"));
        }
        Ok(Self { m, d, tau, k })
    }

    pub fn n(&self) -> usize {
        self.m.len()
    }

    pub fn simulate(&self, theta0: &DVector<f64>, theta_dot0: &DVector<f64>, cfg: &IntegratorConfig) -> Result<SimulationTrace> {
        let s = SecondOrderState::new(theta0.clone(), theta_dot0.clone(), self.m.clone(), self.d.clone())?;
        integrate_second_order(&s, &self.tau, &self.k, cfg)
    }
}

/// First-order model obtained when damping dominates inertia:
/// `ω_i = τ_i / d_i`, `a_ij = k_ij / d_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OverdampedReduction {
    pub omega: DVector<f64>,
    /// Row `i` scaled by `1/d_i`; symmetric only for uniform damping.
    pub a: DMatrix<f64>,
}

impl OverdampedReduction {
    pub fn rhs(&self, theta: &DVector<f64>) -> DVector<f64> {
        let n = theta.len();
        DVector::from_fn(n, |i, _| {
            let s: f64 = (0..n).map(|j| self.a[(i, j)] * (theta[i] - theta[j]).sin()).sum();
            self.omega[i] - s
        })
    }

    /// Weighted-adjacency network; fails when dampings differ (asymmetric `a`).
    pub fn to_network(&self) -> Result<OscillatorNetwork> {
        let g = WeightedGraph::from_adjacency(&self.a)?;
        OscillatorNetwork::new(g, self.omega.clone(), 1.0, CouplingMode::WeightedAdjacency)
    }
}

pub fn spring_reduce_overdamped(ring: &SpringRing) -> OverdampedReduction {
    let n = ring.n();
    OverdampedReduction {
        omega: ring.tau.component_div(&ring.d),
        a: DMatrix::from_fn(n, n, |i, j| ring.k[(i, j)] / ring.d[i]),
    }
}
