//! Trace CSV and summary JSON.
//!
//! The trace CSV has one row per sample with columns
//! `t,theta_0..theta_{n-1},thetadot_0..thetadot_{n-1},r,psi`. Phases are
//! unwrapped. Floats use the shortest representation that parses back to the
//! same `f64`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use serde::Serialize;

use crate::diagnostics::order_parameter;
use crate::dynamics::SimulationTrace;
use crate::error::{KuramotoError, Result};

pub fn trace_header(n: usize) -> String {
    let mut h = String::from("t");
    for i in 0..n {
        write!(h, ",theta_{i}").unwrap();
    }
    for i in 0..n {
        write!(h, ",thetadot_{i}").unwrap();
    }
    h.push_str(",r,psi");
    h
}

/// Writes the trace CSV to any writer.
pub fn write_trace<W: Write>(trace: &SimulationTrace, mut w: W) -> Result<()> {
    let n = trace.thetas.first().map_or(0, |t| t.len());
    writeln!(w, "{}", trace_header(n))?;
    let mut line = String::new();
    for ((t, th), dth) in trace.times.iter().zip(&trace.thetas).zip(&trace.theta_dots) {
        line.clear();
        let op = order_parameter(th);
        write!(line, "{t:?}").unwrap();
        for v in th.iter().chain(dth.iter()) {
            write!(line, ",{v:?}").unwrap();
        }
        write!(line, ",{:?},{:?}", op.r, op.psi).unwrap();
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| KuramotoError::Io(format!("{}: {e}", path.display())))?;
    write_trace(trace, std::io::BufWriter::new(f))
}

/// One parsed row of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub theta: DVector<f64>,
    pub theta_dot: DVector<f64>,
    pub r: f64,
    pub psi: f64,
}

/// Parses a trace CSV written by [`write_trace`].
pub fn read_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| KuramotoError::Parse("empty trace".into()))?;
    let cols = header.split(',').count();
    if cols < 3 || (cols - 3) % 2 != 0 {
        return Err(KuramotoError::Parse(format!("unexpected header {header:?}")));
    }
    let n = (cols - 3) / 2;
    if header != trace_header(n) {
        return Err(KuramotoError::Parse(format!("unexpected header {header:?}")));
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| KuramotoError::Parse(format!("row {}: {e}", k + 2)))?;
            if vals.len() != cols {
                return Err(KuramotoError::Parse(format!("row {}: expected {cols} fields", k + 2)));
            }
            Ok(TraceRow {
                t: vals[0],
                theta: DVector::from_column_slice(&vals[1..1 + n]),
                theta_dot: DVector::from_column_slice(&vals[1 + n..1 + 2 * n]),
                r: vals[1 + 2 * n],
                psi: vals[2 + 2 * n],
            })
        })
        .collect()
}

pub fn write_summary_json<T: Serialize>(summary: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|e| KuramotoError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| KuramotoError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, OscillatorNetwork};
    use nalgebra::dvector;

    #[test]
    fn header_layout() {
        assert_eq!(trace_header(2), "t,theta_0,theta_1,thetadot_0,thetadot_1,r,psi");
    }

    #[test]
    fn csv_round_trips_bit_for_bit() {
        let net = OscillatorNetwork::mean_field(dvector![0.1, -0.3, 1.0 / 3.0], 1.3).unwrap();
        let cfg = IntegratorConfig::new(0.01, 2.0, 7).unwrap();
        let tr = integrate(&net, &dvector![0.0, 1e-7, 2.5], &cfg).unwrap();
        let mut buf = Vec::new();
        write_trace(&tr, &mut buf).unwrap();
        let rows = read_trace(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(rows.len(), tr.len());
        for (row, k) in rows.iter().zip(0..) {
            assert_eq!(row.t, tr.times[k]);
            assert_eq!(row.theta, tr.thetas[k]);
            assert_eq!(row.theta_dot, tr.theta_dots[k]);
            assert_eq!(row.r, order_parameter(&tr.thetas[k]).r);
        }
    }

    #[test]
    fn read_rejects_malformed() {
        assert!(read_trace("").is_err());
        assert!(read_trace("t,x,r,psi\n").is_err());
        assert!(read_trace("t,theta_0,thetadot_0,r,psi\n0,1,2\n").is_err());
    }
}
