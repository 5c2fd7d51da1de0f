//! Lossless power network with first-order node dynamics
//! `θ̇_i = P_i - Σ_j a_ij sin(θ_i - θ_j)`, `a_ij = |V_i| |V_j| |Y_ij|`.
//!
//! Text format, one record per line, `#` starts a comment:
//!
//! ```text
//! node <id> <P> <|V|>
//! branch <i> <j> <|Y|>
//! ```
//!
//! Node ids must be exactly `0..n` (any order). A branch may be listed once
//! per unordered pair.

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{rhs_weighted, CouplingMode, OscillatorNetwork};
use crate::error::{check_len, invalid, KuramotoError, Result};
use crate::graph::{ensure_symmetric, WeightedGraph};

#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    p: DVector<f64>,
    v: DVector<f64>,
    y_mag: DMatrix<f64>,
    a: DMatrix<f64>,
}

/// `a_ij = |V_i| |V_j| |Y_ij|`.
pub fn admittance_to_coupling(v: &DVector<f64>, y_mag: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = v.len();
    check_len("admittance rows", n, y_mag.nrows())?;
    check_len("admittance columns", n, y_mag.ncols())?;
    if let Some(bad) = v.iter().find(|&&x| !(x > 0.0)) {
        return Err(invalid("V", format!("voltage magnitudes must be positive, got {bad}")));
    }
    ensure_symmetric(y_mag, 0.0)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            v[i] * v[j] * y_mag[(i, j)]
        }
    }))
}

impl PowerNetwork {
    /// Diagonal entries of `y_mag` are ignored (they carry the row-sum
    /// self-admittance, not a coupling).
    pub fn new(p: DVector<f64>, v: DVector<f64>, y_mag: DMatrix<f64>) -> Result<Self> {
        check_len("P", v.len(), p.len())?;
        if y_mag.iter().any(|&y| y < 0.0 || !y.is_finite()) {
            return Err(invalid("Y", "admittance magnitudes must be finite and nonnegative"));
        }
        let a = admittance_to_coupling(&v, &y_mag)?;
        Ok(Self { p, v, y_mag, a })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn injections(&self) -> &DVector<f64> {
        &self.p
    }

    pub fn voltages(&self) -> &DVector<f64> {
        &self.v
    }

    pub fn admittance(&self) -> &DMatrix<f64> {
        &self.y_mag
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.a
    }

    /// Rejects isolated nodes and disconnected coupling graphs.
    pub fn validate(&self) -> Result<()> {
        let g = WeightedGraph::from_adjacency(&self.a)?;
        let isolated = g.isolated_nodes();
        if !isolated.is_empty() {
            return Err(KuramotoError::InvalidGraph(format!("isolated nodes {isolated:?}")));
        }
        if !g.is_connected() {
            return Err(KuramotoError::InvalidGraph(format!(
                "coupling graph has {} components",
                g.component_count()
            )));
        }
        Ok(())
    }

    /// The network as an oscillator model with `ω := P`, coupling `a`, `K = 1`.
    pub fn to_network(&self) -> Result<OscillatorNetwork> {
        let g = WeightedGraph::from_adjacency(&self.a)?;
        OscillatorNetwork::new(g, self.p.clone(), 1.0, CouplingMode::WeightedAdjacency)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut nodes: Vec<(usize, f64, f64, usize)> = Vec::new();
        let mut branches: Vec<(usize, usize, f64, usize)> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let ln = k + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| KuramotoError::Parse(format!("line {ln}: bad number {s:?}")))
            };
            let idx = |s: &str| -> Result<usize> {
                s.parse()
                    .map_err(|_| KuramotoError::Parse(format!("line {ln}: bad index {s:?}")))
            };
            match f.as_slice() {
                ["node", id, p, v] => nodes.push((idx(id)?, num(p)?, num(v)?, ln)),
                ["branch", i, j, y] => branches.push((idx(i)?, idx(j)?, num(y)?, ln)),
                _ => {
                    return Err(KuramotoError::Parse(format!(
                        "line {ln}: expected `node <id> <P> <|V|>` or `branch <i> <j> <|Y|>`"
                    )))
                }
            }
        }
        let n = nodes.len();
        if n == 0 {
            return Err(KuramotoError::Parse("no node records".into()));
        }
        let mut p = DVector::from_element(n, f64::NAN);
        let mut v = DVector::zeros(n);
        for &(id, pi, vi, ln) in &nodes {
            if id >= n || !p[id].is_nan() {
                return Err(KuramotoError::Parse(format!(
                    "line {ln}: node ids must be 0..{n} without repeats, got {id}"
                )));
            }
            p[id] = pi;
            v[id] = vi;
        }
        let mut y = DMatrix::zeros(n, n);
        for &(i, j, yij, ln) in &branches {
            if i >= n || j >= n || i == j {
                return Err(KuramotoError::Parse(format!("line {ln}: invalid branch ({i}, {j})")));
            }
            if y[(i, j)] != 0.0 {
                return Err(KuramotoError::Parse(format!("line {ln}: duplicate branch ({i}, {j})")));
            }
            y[(i, j)] = yij;
            y[(j, i)] = yij;
        }
        let net = Self::new(p, v, y)?;
        net.validate()?;
        Ok(net)
    }
}

/// Power-flow right-hand side; the weighted-adjacency model with `ω := P`.
pub fn power_rhs(theta: &DVector<f64>, net: &PowerNetwork) -> Result<DVector<f64>> {
    rhs_weighted(theta, &net.p, &net.a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn coupling_examples() {
        let y = dmatrix![0.0, 0.7; 0.7, 0.0];
        assert_eq!(admittance_to_coupling(&dvector![1.0, 1.0], &y).unwrap(), y);
        let a = admittance_to_coupling(&dvector![2.0, 3.0], &dmatrix![0.0, 0.5; 0.5, 0.0]).unwrap();
        assert_eq!(a[(0, 1)], 3.0);
        assert_eq!(a[(1, 0)], 3.0);
        assert!(admittance_to_coupling(&dvector![0.0, 1.0], &y).is_err());
    }

    #[test]
    fn isolated_node_is_flagged() {
        let y = dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 0.0; 0.0, 0.0, 0.0];
        let net = PowerNetwork::new(dvector![0.1, -0.1, 0.0], dvector![1.0, 1.0, 1.0], y).unwrap();
        let err = net.validate().unwrap_err();
        assert!(err.to_string().contains("isolated"));
    }

    #[test]
    fn rhs_matches_weighted_form_and_mean() {
        let y = dmatrix![0.0, 1.0, 0.5; 1.0, 0.0, 2.0; 0.5, 2.0, 0.0];
        let net = PowerNetwork::new(dvector![1.0, -0.4, -0.6], dvector![1.0, 1.1, 0.9], y).unwrap();
        let th = dvector![0.2, -0.3, 1.4];
        let d = power_rhs(&th, &net).unwrap();
        assert_eq!(d, rhs_weighted(&th, net.injections(), net.coupling()).unwrap());
        assert!(d.sum().abs() < 1e-14);
    }

    #[test]
    fn parse_records() {
        let text = "# two-bus\nnode 1 -0.5 1.0\nnode 0 0.5 1.0\nbranch 0 1 1.0 # line\n";
        let net = PowerNetwork::parse(text).unwrap();
        assert_eq!(net.injections(), &dvector![0.5, -0.5]);
        assert_eq!(net.coupling()[(0, 1)], 1.0);
        assert!(PowerNetwork::parse("node 0 1 1\nnode 0 1 1\n").is_err());
        assert!(PowerNetwork::parse("node 0 1 1\nnode 1 -1 1\n").is_err());
        assert!(PowerNetwork::parse("node 0 1 1\nnode 1 -1 1\nbranch 0 1 1\nbranch 1 0 2\n").is_err());
        assert!(PowerNetwork::parse("bus 0 1 1\n").is_err());
        assert!(PowerNetwork::parse("node 0 1 -1\nnode 1 -1 1\nbranch 0 1 1\n").is_err());
    }
}
