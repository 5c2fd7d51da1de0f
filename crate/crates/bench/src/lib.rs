//! Fixtures shared by the criterion benchmarks.

use kuramoto_core::scenario::rng::PhaseRng;
use kuramoto_core::{CouplingMode, OscillatorNetwork, WeightedGraph};
use nalgebra::DVector;

/// Complete graph with seeded normal frequencies.
pub fn complete_network(n: usize, k: f64, mode: CouplingMode) -> OscillatorNetwork {
    let omega = PhaseRng::new(1).normal_vec(n, 0.0, 1.0);
    OscillatorNetwork::new(WeightedGraph::complete(n, 1.0).expect("n >= 1"), omega, k, mode).expect("valid network")
}

pub fn random_phases(n: usize) -> DVector<f64> {
    PhaseRng::new(2).uniform_phases(n)
}
