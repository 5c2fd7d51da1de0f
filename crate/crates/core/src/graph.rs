//! Weighted undirected graphs and their algebraic objects.
//!
//! Edges are oriented from the lower to the higher node index, so the
//! incidence column of edge `(i, j)` with `i < j` carries `-1` at row `i` and
//! `+1` at row `j`. The Laplacian `B diag(w) Bᵀ` does not depend on that
//! choice.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, KuramotoError, Result};

/// Relative tolerance below which a Laplacian eigenvalue counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected graph with strictly positive edge weights.
///
/// Edges are stored with `i < j`, sorted by `(i, j)`. Construction rejects self-loops, duplicate
/// pairs, out-of-range indices and nonpositive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(KuramotoError::InvalidGraph("graph needs at least one node".into()));
        }
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(KuramotoError::InvalidGraph(format!(
                    "edge ({a}, {b}) out of range for n = {n}"
                )));
            }
            if a == b {
                return Err(KuramotoError::InvalidGraph(format!("self-loop at node {a}")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(KuramotoError::InvalidGraph(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((i, j)) {
                return Err(KuramotoError::InvalidGraph(format!("duplicate edge ({i}, {j})")));
            }
            out.push(Edge { i, j, w });
        }
        // Canonical order keeps incidence columns and float sums independent
        // of how the edges were listed.
        out.sort_by_key(|e| (e.i, e.j));
        Ok(Self { n, edges: out })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, std::iter::empty())
    }

    pub fn complete(n: usize, w: f64) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, w))))
    }

    pub fn path(n: usize, w: f64) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i, w)))
    }

    /// Ring `0-1-...-(n-1)-0`. For `n = 2` this is a single edge.
    pub fn cycle(n: usize, w: f64) -> Result<Self> {
        let closing = if n > 2 { Some((0, n - 1, w)) } else { None };
        Self::new(n, (1..n).map(|i| (i - 1, i, w)).chain(closing))
    }

    /// Graph from a symmetric nonnegative adjacency matrix with zero diagonal.
    /// Zero entries mean "no edge".
    pub fn from_adjacency(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(KuramotoError::InvalidGraph(format!(
                "adjacency must be square, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let asym = max_asymmetry(a);
        if asym > 0.0 {
            return Err(KuramotoError::NotSymmetric(asym));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(KuramotoError::InvalidGraph(format!(
                    "nonzero diagonal entry at node {i}"
                )));
            }
            for j in i + 1..n {
                let w = a[(i, j)];
                if w < 0.0 || !w.is_finite() {
                    return Err(KuramotoError::InvalidGraph(format!(
                        "entry ({i}, {j}) = {w} is not a nonnegative real"
                    )));
                }
                if w > 0.0 {
                    edges.push((i, j, w));
                }
            }
        }
        Self::new(n, edges)
    }

    /// Parses the plain-text adjacency format: the first line is `n`, then
    /// `n` rows of `n` whitespace-separated nonnegative reals. Blank lines and
    /// lines starting with `#` are ignored.
    pub fn parse_adjacency(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, first) = lines
            .next()
            .ok_or_else(|| KuramotoError::Parse("empty adjacency file".into()))?;
        let n: usize = first
            .parse()
            .map_err(|_| KuramotoError::Parse(format!("line {ln}: expected node count, got {first:?}")))?;
        let mut a = DMatrix::zeros(n, n);
        for row in 0..n {
            let (ln, line) = lines.next().ok_or_else(|| {
                KuramotoError::Parse(format!("expected {n} matrix rows, found {row}"))
            })?;
            let vals: Vec<&str> = line.split_whitespace().collect();
            if vals.len() != n {
                return Err(KuramotoError::Parse(format!(
                    "line {ln}: expected {n} entries, found {}",
                    vals.len()
                )));
            }
            for (col, v) in vals.iter().enumerate() {
                a[(row, col)] = v
                    .parse()
                    .map_err(|_| KuramotoError::Parse(format!("line {ln}: bad number {v:?}")))?;
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(KuramotoError::Parse(format!("line {ln}: trailing content after matrix")));
        }
        Self::from_adjacency(&a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(self.edges.len(), self.edges.iter().map(|e| e.w))
    }

    pub fn adjacency(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.i, e.j)] = e.w;
            a[(e.j, e.i)] = e.w;
        }
        a
    }

    /// Same topology with every weight multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n, self.edges.iter().map(|e| (e.i, e.j, e.w * factor)))
    }

    /// Number of connected components, by union-find.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut count = self.n;
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a != b {
                parent[a] = b;
                count -= 1;
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() == 1
    }

    /// Nodes with no incident edge.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        (0..self.n).filter(|&i| deg[i] == 0).collect()
    }

    /// Short stable fingerprint of the graph, used in trace metadata.
    pub fn digest(&self) -> String {
        // FNV-1a over the edge list bit patterns.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.n as u64);
        for e in &self.edges {
            eat(e.i as u64);
            eat(e.j as u64);
            eat(e.w.to_bits());
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Edge `(i, j)` with `i < j` points from `i` to `j`.
    LowToHigh,
}

/// Node-by-edge incidence matrix; every column holds one `-1` and one `+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedIncidence {
    pub matrix: DMatrix<f64>,
    pub orientation: Orientation,
}

impl OrientedIncidence {
    /// `Bᵀθ`, the per-edge phase differences `θ_j - θ_i`.
    pub fn edge_phases(&self, theta: &DVector<f64>) -> Result<EdgePhases> {
        check_len("theta", self.matrix.nrows(), theta.len())?;
        Ok(EdgePhases {
            phi: self.matrix.tr_mul(theta),
        })
    }
}

/// Edge phase differences `φ = Bᵀθ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePhases {
    pub phi: DVector<f64>,
}

pub fn build_incidence(graph: &WeightedGraph) -> OrientedIncidence {
    let mut b = DMatrix::zeros(graph.n(), graph.edge_count());
    for (k, e) in graph.edges().iter().enumerate() {
        b[(e.i, k)] = -1.0;
        b[(e.j, k)] = 1.0;
    }
    OrientedIncidence {
        matrix: b,
        orientation: Orientation::LowToHigh,
    }
}

/// Weighted Laplacian `B diag(w) Bᵀ` assembled edge by edge.
pub fn laplacian(graph: &WeightedGraph) -> DMatrix<f64> {
    let n = graph.n();
    let mut l = DMatrix::zeros(n, n);
    for e in graph.edges() {
        l[(e.i, e.i)] += e.w;
        l[(e.j, e.j)] += e.w;
        l[(e.i, e.j)] -= e.w;
        l[(e.j, e.i)] -= e.w;
    }
    l
}

/// `B diag(w) Bᵀ` for arbitrary (possibly nonpositive) edge weights.
pub fn weighted_laplacian(inc: &OrientedIncidence, w: &DVector<f64>) -> Result<DMatrix<f64>> {
    check_len("edge weights", inc.matrix.ncols(), w.len())?;
    let bw = DMatrix::from_fn(inc.matrix.nrows(), inc.matrix.ncols(), |r, c| {
        inc.matrix[(r, c)] * w[c]
    });
    Ok(&bw * inc.matrix.transpose())
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn ensure_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(KuramotoError::DimensionMismatch {
            what: "matrix columns",
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let asym = max_asymmetry(m);
    if asym > tol {
        Err(KuramotoError::NotSymmetric(asym))
    } else {
        Ok(())
    }
}

/// Eigenvalues in nondecreasing order with matching eigenvector columns.
pub(crate) fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplacianSpectrum {
    pub eigenvalues: Vec<f64>,
    pub lambda2: f64,
    pub lambda_max: f64,
    pub zero_multiplicity: usize,
    /// Absolute threshold used to count zero eigenvalues.
    pub zero_threshold: f64,
}

impl LaplacianSpectrum {
    pub fn is_connected(&self) -> bool {
        self.zero_multiplicity == 1
    }
}

/// Full spectrum of a symmetric Laplacian.
///
/// `tol` is both the symmetry tolerance and the relative zero threshold:
/// an eigenvalue counts as zero when it is below `tol * max(1, λ_max)`.
pub fn spectrum(l: &DMatrix<f64>, tol: f64) -> Result<LaplacianSpectrum> {
    ensure_symmetric(l, tol)?;
    let (eigenvalues, _) = sorted_symmetric_eigen(l);
    let lambda_max = eigenvalues.last().copied().unwrap_or(0.0);
    let zero_threshold = tol * lambda_max.max(1.0);
    let zero_multiplicity = eigenvalues.iter().filter(|&&v| v < zero_threshold).count();
    let lambda2 = eigenvalues.get(1).copied().unwrap_or(0.0);
    Ok(LaplacianSpectrum {
        eigenvalues,
        lambda2,
        lambda_max,
        zero_multiplicity,
        zero_threshold,
    })
}

/// Eigendecomposition pseudoinverse of a symmetric matrix, dropping every
/// eigenvalue with magnitude below `tol * max(1, max|λ|)`. Returns the
/// pseudoinverse and the number of retained eigenvalues.
pub(crate) fn symmetric_pinv(m: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let n = m.nrows();
    let (values, vectors) = sorted_symmetric_eigen(m);
    let scale = values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let mut out = DMatrix::zeros(n, n);
    let mut rank = 0;
    for (k, &lam) in values.iter().enumerate() {
        if lam.abs() < tol * scale {
            continue;
        }
        rank += 1;
        let v = vectors.column(k);
        out += (v * v.transpose()) / lam;
    }
    (out, rank)
}

/// Moore-Penrose pseudoinverse `V Λ⁻¹ Vᵀ` of a connected graph's Laplacian.
pub fn pseudoinverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = spectrum(l, DEFAULT_ZERO_TOL)?;
    if !spec.is_connected() {
        return Err(KuramotoError::Disconnected {
            lambda2: spec.lambda2,
        });
    }
    let (_, vectors) = sorted_symmetric_eigen(l);
    let n = l.nrows();
    let mut out = DMatrix::zeros(n, n);
    for k in 1..n {
        let v = vectors.column(k);
        out += (v * v.transpose()) / spec.eigenvalues[k];
    }
    Ok(out)
}
