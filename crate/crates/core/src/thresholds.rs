//! Analytic coupling thresholds and convergence-rate bounds.
//!
//! Bounds built on `‖ω‖₂` mean-center the frequencies first (the rotating
//! frame has zero mean frequency); spread-based bounds are translation
//! invariant already.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dynamics::OscillatorNetwork;
use crate::error::{invalid, KuramotoError, Result};
use crate::graph::{laplacian, spectrum, DEFAULT_ZERO_TOL};

fn centered_norm(omega: &DVector<f64>) -> f64 {
    let m = omega.mean();
    omega.iter().map(|v| (v - m) * (v - m)).sum::<f64>().sqrt()
}

fn spread(omega: &DVector<f64>) -> f64 {
    if omega.is_empty() {
        0.0
    } else {
        omega.max() - omega.min()
    }
}

fn need_connected(lambda2: f64) -> Result<()> {
    if lambda2 > 0.0 {
        Ok(())
    } else {
        Err(KuramotoError::Disconnected { lambda2 })
    }
}

fn need_pair(n: usize) -> Result<()> {
    if n < 2 {
        Err(invalid("n", format!("onset bounds need at least 2 oscillators, got {n}")))
    } else {
        Ok(())
    }
}

fn need_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < PI / 4.0 {
        Ok(())
    } else {
        Err(invalid("epsilon", format!("must lie in (0, π/4), got {epsilon}")))
    }
}

/// Existence bound `2 √N ‖ω‖₂ / λ₂`.
pub fn k_lower_spectral(omega: &DVector<f64>, lambda2: f64) -> Result<f64> {
    need_connected(lambda2)?;
    let n = omega.len() as f64;
    Ok(2.0 * n.sqrt() * centered_norm(omega) / lambda2)
}

/// Uniqueness bound `(π²/4) N λ_max ‖ω‖₂ / λ₂²`.
pub fn k_unique(omega: &DVector<f64>, lambda2: f64, lambda_max: f64) -> Result<f64> {
    need_connected(lambda2)?;
    let n = omega.len() as f64;
    Ok(PI * PI / 4.0 * n * lambda_max * centered_norm(omega) / (lambda2 * lambda2))
}

/// Optimal phase gap of the onset analysis and the resulting `E_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetOptimum {
    /// Root `cos(Δ/2)` of `4c² + (N-2)c - 2 = 0`.
    pub cos_half_gap: f64,
    pub delta_opt: f64,
    pub e_max: f64,
}

pub fn e_max(n: usize) -> Result<OnsetOptimum> {
    need_pair(n)?;
    let m = (n - 2) as f64;
    let cos_half_gap = (-m + (m * m + 32.0).sqrt()) / 8.0;
    let delta_opt = 2.0 * cos_half_gap.clamp(-1.0, 1.0).acos();
    let e_max = 2.0 * delta_opt.sin() + 2.0 * m * (delta_opt / 2.0).sin();
    Ok(OnsetOptimum {
        cos_half_gap,
        delta_opt,
        e_max,
    })
}

/// Necessary onset gain `(ω_max - ω_min) N / E_max`.
pub fn k_c_onset(omega: &DVector<f64>) -> Result<f64> {
    let n = omega.len();
    let opt = e_max(n)?;
    Ok(spread(omega) * n as f64 / opt.e_max)
}

/// Classical bound `(ω_max - ω_min) N / (2 (N - 1))`.
pub fn k_l_classical(omega: &DVector<f64>) -> Result<f64> {
    let n = omega.len();
    need_pair(n)?;
    Ok(spread(omega) * n as f64 / (2.0 * (n - 1) as f64))
}

/// Gain `N (ω_max - ω_min) / (2 cos 2ε)` making the set
/// `|θ_i - θ_j| ≤ π/2 - 2ε` positively invariant. The strict inequality is
/// left to the caller.
pub fn k_inv(omega: &DVector<f64>, epsilon: f64) -> Result<f64> {
    need_epsilon(epsilon)?;
    Ok(omega.len() as f64 * spread(omega) / (2.0 * (2.0 * epsilon).cos()))
}

/// Local rate `(2K / πN) λ₂` for identical oscillators.
pub fn rate_identical(k: f64, n: usize, lambda2: f64) -> f64 {
    2.0 * k / (PI * n as f64) * lambda2
}

/// Rate `√(K sin 2ε)` for non-identical oscillators confined to the
/// cohesive set.
pub fn rate_nonidentical(k: f64, epsilon: f64) -> Result<f64> {
    need_epsilon(epsilon)?;
    if k < 0.0 {
        return Err(invalid("K", "coupling gain must be nonnegative"));
    }
    Ok((k * (2.0 * epsilon).sin()).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub n: usize,
    /// Always true: norm-based bounds use mean-centered frequencies.
    pub omega_mean_centered: bool,
    pub omega_norm2: f64,
    pub omega_spread: f64,
    pub lambda2: f64,
    pub lambda_max: f64,
    pub k: f64,
    pub epsilon: Option<f64>,
    pub k_lower_spectral: f64,
    pub k_unique: f64,
    pub e_max: f64,
    pub delta_opt: f64,
    pub k_c_onset: f64,
    pub k_l_classical: f64,
    pub k_inv: Option<f64>,
    pub rate_identical: f64,
    pub rate_nonidentical: Option<f64>,
}

/// Every bound for a network, from its graph spectrum and frequencies.
pub fn threshold_report(network: &OscillatorNetwork, epsilon: Option<f64>) -> Result<ThresholdReport> {
    let omega = network.omega();
    let n = network.n();
    let spec = spectrum(&laplacian(network.graph()), DEFAULT_ZERO_TOL)?;
    if !spec.is_connected() {
        return Err(KuramotoError::Disconnected {
            lambda2: spec.lambda2,
        });
    }
    let onset = e_max(n)?;
    let (k_inv, rate_nonidentical) = match epsilon {
        Some(eps) => (Some(k_inv(omega, eps)?), Some(rate_nonidentical(network.k(), eps)?)),
        None => (None, None),
    };
    Ok(ThresholdReport {
        n,
        omega_mean_centered: true,
        omega_norm2: centered_norm(omega),
        omega_spread: spread(omega),
        lambda2: spec.lambda2,
        lambda_max: spec.lambda_max,
        k: network.k(),
        epsilon,
        k_lower_spectral: k_lower_spectral(omega, spec.lambda2)?,
        k_unique: k_unique(omega, spec.lambda2, spec.lambda_max)?,
        e_max: onset.e_max,
        delta_opt: onset.delta_opt,
        k_c_onset: k_c_onset(omega)?,
        k_l_classical: k_l_classical(omega)?,
        k_inv,
        rate_identical: rate_identical(network.k(), n, spec.lambda2),
        rate_nonidentical,
    })
}
