//! Parallel parameter sweeps over a base scenario.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KuramotoError, Result};
use crate::scenario::config::ScenarioConfig;
use crate::scenario::output::write_summary_json;
use crate::scenario::run::{execute, RunSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    /// Coupling gain `network.k`.
    K,
    /// Network size `network.n`.
    N,
}

impl FromStr for SweepParameter {
    type Err = KuramotoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "k" | "K" => Ok(Self::K),
            "n" | "N" => Ok(Self::N),
            _ => Err(KuramotoError::Config(format!("unknown sweep parameter {s:?} (expected k or n)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
}

fn apply(base: &ScenarioConfig, param: SweepParameter, value: f64) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    match param {
        SweepParameter::K => cfg.network.k = value,
        SweepParameter::N => {
            if !(value >= 1.0 && value.fract() == 0.0) {
                return Err(KuramotoError::Config(format!("network.n: sweep value {value} is not a positive integer")));
            }
            cfg.network.n = value as usize;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs one scenario per value in parallel. A failing value yields a row with
/// `error` set; the other rows are unaffected. Rows keep the input order.
pub fn sweep(base: &ScenarioConfig, param: SweepParameter, values: &[f64], base_dir: &Path) -> Vec<SweepRow> {
    values
        .par_iter()
        .map(|&value| match apply(base, param, value).and_then(|c| execute(&c, base_dir)) {
            Ok(out) => SweepRow {
                value,
                summary: Some(out.summary),
                error: None,
            },
            Err(e) => SweepRow {
                value,
                summary: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:?}"))
}

/// Compact table: one line per value.
pub fn sweep_csv(param: SweepParameter, rows: &[SweepRow]) -> String {
    let name = match param {
        SweepParameter::K => "k",
        SweepParameter::N => "n",
    };
    let mut s = format!("{name},final_r,mean_r_tail,is_frequency_synced,t_sync,omega_sync,error\n");
    for row in rows {
        match &row.summary {
            Some(sum) => writeln!(
                s,
                "{:?},{:?},{:?},{},{},{},",
                row.value,
                sum.final_r,
                sum.mean_r_tail,
                sum.is_frequency_synced,
                opt(sum.t_sync),
                opt(sum.omega_sync)
            ),
            None => writeln!(
                s,
                "{:?},,,,,,\"{}\"",
                row.value,
                row.error.as_deref().unwrap_or("").replace('"', "'")
            ),
        }
        .unwrap();
    }
    s
}

/// Writes `sweep.csv` and `sweep.json` into `out_dir`.
pub fn write_sweep(param: SweepParameter, rows: &[SweepRow], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| KuramotoError::Io(format!("{}: {e}", out_dir.display())))?;
    let csv = out_dir.join("sweep.csv");
    std::fs::write(&csv, sweep_csv(param, rows)).map_err(|e| KuramotoError::Io(format!("{}: {e}", csv.display())))?;
    write_summary_json(&rows, &out_dir.join("sweep.json"))
}
