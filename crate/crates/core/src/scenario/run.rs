//! Runs a scenario end to end and assembles its summary.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{detect_frequency_sync, mean_frequencies, order_parameter, StabilityClass, SyncOptions};
use crate::dynamics::{integrate, OscillatorNetwork, SimulationTrace};
use crate::error::{KuramotoError, Result};
use crate::fixed_point::solve_fixed_point;
use crate::scenario::config::ScenarioConfig;
use crate::scenario::output::{write_summary_json, write_trace_csv};
use crate::scenario::rng::{NORMAL_TRANSFORM, RNG_NAME};
use crate::thresholds::{threshold_report, ThresholdReport};

/// Fraction of the trace, counted from the end, averaged for `mean_r_tail`.
pub const TAIL_FRACTION: f64 = 0.2;
/// Fraction of the trace used for the time-averaged frequencies.
pub const FREQUENCY_WINDOW: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointDigest {
    pub converged: bool,
    pub residual: f64,
    pub iterations: usize,
    pub stability: StabilityClass,
    pub max_abs_phase: f64,
    pub max_edge_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub omega: Option<u64>,
    pub theta0: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: Option<String>,
    pub n: usize,
    pub k: f64,
    pub samples: usize,
    pub t_end: f64,
    pub final_r: f64,
    pub final_psi: f64,
    pub mean_r_tail: f64,
    pub is_frequency_synced: bool,
    pub t_sync: Option<f64>,
    pub omega_sync: Option<f64>,
    pub fitted_decay_rate: Option<f64>,
    /// Per-node frequencies averaged over the trailing `FREQUENCY_WINDOW`.
    pub mean_frequencies: Vec<f64>,
    pub thresholds: Option<ThresholdReport>,
    pub thresholds_error: Option<String>,
    pub fixed_point: Option<FixedPointDigest>,
    pub fixed_point_error: Option<String>,
    pub seeds: Seeds,
    pub rng: String,
    pub normal_transform: String,
    pub network_digest: String,
    pub config: ScenarioConfig,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub network: OscillatorNetwork,
    pub theta0: DVector<f64>,
    pub trace: SimulationTrace,
    pub summary: RunSummary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrittenFiles {
    pub trace_csv: PathBuf,
    pub summary_json: PathBuf,
}

fn context(cfg: &ScenarioConfig, stage: &str, e: KuramotoError) -> KuramotoError {
    let label = cfg.name.as_deref().unwrap_or("scenario");
    KuramotoError::Config(format!(
        "{label} (n={}, k={}): {stage}: {e}",
        cfg.network.n, cfg.network.k
    ))
}

/// Builds the network, integrates and analyses. `base_dir` resolves relative
/// paths inside the config. Nothing is written.
pub fn execute(cfg: &ScenarioConfig, base_dir: &Path) -> Result<ScenarioOutcome> {
    cfg.validate()?;
    let network = cfg.build_network(base_dir).map_err(|e| context(cfg, "building network", e))?;
    let theta0 = cfg.theta0.generate(cfg.network.n)?;
    let mut trace = integrate(&network, &theta0, &cfg.integrator).map_err(|e| context(cfg, "integrating", e))?;
    trace.metadata.seed = cfg.theta0.seed().or(cfg.omega.seed());
    let summary = summarize(cfg, &network, &trace);
    Ok(ScenarioOutcome {
        network,
        theta0,
        trace,
        summary,
    })
}

fn summarize(cfg: &ScenarioConfig, network: &OscillatorNetwork, trace: &SimulationTrace) -> RunSummary {
    let rs: Vec<f64> = trace.thetas.iter().map(|th| order_parameter(th).r).collect();
    let start = ((1.0 - TAIL_FRACTION) * rs.len() as f64).floor() as usize;
    let tail = &rs[start.min(rs.len() - 1)..];
    let last = order_parameter(trace.final_theta());

    let opts = SyncOptions {
        tol: cfg.analysis.sync_tol,
        hold: cfg.analysis.hold_fraction * trace.t_end(),
    };
    let sync = detect_frequency_sync(trace, &opts);

    let (thresholds, thresholds_error) = match threshold_report(network, cfg.analysis.epsilon) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let fp = solve_fixed_point(
        network,
        &DVector::zeros(network.n()),
        cfg.analysis.fixed_point_tol,
        cfg.analysis.fixed_point_max_iter,
    );
    let (fixed_point, fixed_point_error) = match fp {
        Ok(r) => (
            Some(FixedPointDigest {
                converged: r.converged,
                residual: r.residual,
                iterations: r.iterations,
                stability: r.stability,
                max_abs_phase: r.max_abs_phase,
                max_edge_difference: r.max_edge_difference,
            }),
            None,
        ),
        Err(e) => (None, Some(e.to_string())),
    };

    RunSummary {
        name: cfg.name.clone(),
        n: network.n(),
        k: network.k(),
        samples: trace.len(),
        t_end: trace.t_end(),
        final_r: last.r,
        final_psi: last.psi,
        mean_r_tail: tail.iter().sum::<f64>() / tail.len() as f64,
        is_frequency_synced: sync.is_frequency_synced,
        t_sync: sync.t_sync,
        omega_sync: sync.omega_sync,
        fitted_decay_rate: sync.fitted_decay_rate,
        mean_frequencies: mean_frequencies(trace, FREQUENCY_WINDOW).iter().copied().collect(),
        thresholds,
        thresholds_error,
        fixed_point,
        fixed_point_error,
        seeds: Seeds {
            omega: cfg.omega.seed(),
            theta0: cfg.theta0.seed(),
        },
        rng: RNG_NAME.into(),
        normal_transform: NORMAL_TRANSFORM.into(),
        network_digest: trace.metadata.network_digest.clone(),
        config: cfg.clone(),
    }
}

/// `execute`, then write the trace CSV and summary JSON into `out_dir`.
pub fn run_scenario(cfg: &ScenarioConfig, base_dir: &Path, out_dir: &Path) -> Result<(ScenarioOutcome, WrittenFiles)> {
    let outcome = execute(cfg, base_dir)?;
    std::fs::create_dir_all(out_dir).map_err(|e| KuramotoError::Io(format!("{}: {e}", out_dir.display())))?;
    let files = WrittenFiles {
        trace_csv: out_dir.join(&cfg.outputs.trace_csv),
        summary_json: out_dir.join(&cfg.outputs.summary_json),
    };
    write_trace_csv(&outcome.trace, &files.trace_csv)?;
    write_summary_json(&outcome.summary, &files.summary_json)?;
    Ok((outcome, files))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    const TWO_NODE: &str = r#"
name = "pair"
[network]
topology = "complete"
n = 2
coupling_mode = "mean_field_complete"
k = 2.0
[omega]
kind = "explicit"
values = [-0.5, 0.5]
[theta0]
kind = "explicit"
values = [0.0, 0.0]
[integrator]
t_end = 40.0
"#;

    #[test]
    fn two_node_summary() {
        let cfg = parse_config(TWO_NODE).unwrap();
        let out = execute(&cfg, Path::new(".")).unwrap();
        let s = &out.summary;
        assert!(s.is_frequency_synced);
        assert!(s.omega_sync.unwrap().abs() < 1e-6);
        // Locked gap satisfies sin Δ = 1/K; r = cos(Δ/2).
        let gap = (0.5f64).asin();
        assert!((s.final_r - (gap / 2.0).cos()).abs() < 1e-6);
        let fp = s.fixed_point.as_ref().unwrap();
        assert!(fp.converged);
        assert!((fp.max_edge_difference - gap).abs() < 1e-8);
        assert!(s.thresholds.is_some());
        assert_eq!(s.samples, 4001);
        assert_eq!(s.config, cfg);
    }

    #[test]
    fn disconnected_graph_keeps_running_without_thresholds() {
        let text = TWO_NODE
            .replace("topology = \"complete\"", "topology = \"custom\"\nadjacency = [[0, 0], [0, 0]]")
            .replace("mean_field_complete", "weighted_adjacency");
        let cfg = parse_config(&text).unwrap();
        let s = execute(&cfg, Path::new(".")).unwrap().summary;
        assert!(s.thresholds.is_none());
        assert!(s.thresholds_error.unwrap().contains("disconnected"));
        assert!(s.fixed_point_error.is_some());
        assert!(!s.is_frequency_synced);
        assert!((s.mean_frequencies[0] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn run_writes_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(TWO_NODE).unwrap();
        let (_, files) = run_scenario(&cfg, Path::new("."), &dir.path().join("nested")).unwrap();
        assert!(files.trace_csv.exists());
        assert!(files.summary_json.exists());
    }
}
