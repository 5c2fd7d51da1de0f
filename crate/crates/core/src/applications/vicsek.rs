//! Unit-speed planar particles steering their headings by the gradient law
//! `θ̇_i = ω₀ - K Σ_j a_ij sin(θ_i - θ_j)`, `ṙ_i = e^{iθ_i}`. `K > 0`
//! aligns headings, `K < 0` disperses them. The interaction graph is fixed.

use nalgebra::{DMatrix, DVector};

use crate::diagnostics::order_parameter;
use crate::dynamics::{rk4_step, weighted_unchecked};
use crate::error::{check_len, invalid, Result};
use crate::graph::ensure_symmetric;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSwarm {
    pub positions: Vec<[f64; 2]>,
    pub headings: DVector<f64>,
    pub omega0: f64,
    pub k: f64,
    pub a: DMatrix<f64>,
}

impl ParticleSwarm {
    pub fn new(positions: Vec<[f64; 2]>, headings: DVector<f64>, omega0: f64, k: f64, a: DMatrix<f64>) -> Result<Self> {
        let n = headings.len();
        check_len("positions", n, positions.len())?;
        check_len("interaction rows", n, a.nrows())?;
        ensure_symmetric(&a, 0.0)?;
        if a.iter().any(|&v| v < 0.0) {
            return Err(invalid("A", "interaction weights must be nonnegative"));
        }
        if headings.iter().any(|v| !v.is_finite()) {
            return Err(invalid("headings", "must be finite"));
        }
        Ok(Self {
            positions,
            headings,
            omega0,
            k,
            a,
        })
    }

    /// All-to-all unit interaction.
    pub fn all_to_all(positions: Vec<[f64; 2]>, headings: DVector<f64>, omega0: f64, k: f64) -> Result<Self> {
        let n = headings.len();
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        Self::new(positions, headings, omega0, k, a)
    }

    pub fn n(&self) -> usize {
        self.headings.len()
    }

    pub fn heading_order(&self) -> f64 {
        order_parameter(&self.headings).r
    }

    fn pack(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(3 * n, |r, _| match (r / n, r % n) {
            (0, i) => self.positions[i][0],
            (1, i) => self.positions[i][1],
            (_, i) => self.headings[i],
        })
    }
}

/// One RK4 step of the coupled position/heading system.
pub fn vicsek_step(swarm: &ParticleSwarm, h: f64) -> ParticleSwarm {
    let n = swarm.n();
    let coupling = &swarm.a * swarm.k;
    let omega = DVector::from_element(n, swarm.omega0);
    let mut f = |x: &DVector<f64>| {
        let th = x.rows(2 * n, n).into_owned();
        let dth = weighted_unchecked(&th, &omega, &coupling);
        DVector::from_fn(3 * n, |r, _| match (r / n, r % n) {
            (0, i) => th[i].cos(),
            (1, i) => th[i].sin(),
            (_, i) => dth[i],
        })
    };
    let x = rk4_step(&swarm.pack(), h, &mut f);
    ParticleSwarm {
        positions: (0..n).map(|i| [x[i], x[n + i]]).collect(),
        headings: x.rows(2 * n, n).into_owned(),
        omega0: swarm.omega0,
        k: swarm.k,
        a: swarm.a.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmRun {
    pub times: Vec<f64>,
    pub heading_r: Vec<f64>,
    /// Per-step snapshots of particle positions.
    pub positions: Vec<Vec<[f64; 2]>>,
    pub last: ParticleSwarm,
}

impl SwarmRun {
    pub fn final_heading_r(&self) -> f64 {
        *self.heading_r.last().expect("run has at least the initial sample")
    }
}

pub fn simulate_swarm(swarm: &ParticleSwarm, h: f64, t_end: f64) -> Result<SwarmRun> {
    if !(h > 0.0) || !(t_end > 0.0) {
        return Err(invalid("h/t_end", "step and duration must be positive"));
    }
    let steps = (t_end / h - 1e-9).ceil() as usize;
    let mut cur = swarm.clone();
    let mut run = SwarmRun {
        times: vec![0.0],
        heading_r: vec![cur.heading_order()],
        positions: vec![cur.positions.clone()],
        last: cur.clone(),
    };
    for k in 1..=steps {
        cur = vicsek_step(&cur, h);
        run.times.push(k as f64 * h);
        run.heading_r.push(cur.heading_order());
        run.positions.push(cur.positions.clone());
    }
    run.last = cur;
    Ok(run)
}

/// Runs the dispersing (`K < 0`) law and records the heading order parameter.
pub fn heading_dispersion_run(swarm: &ParticleSwarm, h: f64, t_end: f64) -> Result<SwarmRun> {
    if !(swarm.k < 0.0) {
        return Err(invalid("K", format!("dispersion needs K < 0, got {}", swarm.k)));
    }
    simulate_swarm(swarm, h, t_end)
}
