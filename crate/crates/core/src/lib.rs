//! Kuramoto oscillator networks: graph algebra, phase dynamics, diagnostics,
//! coupling thresholds, equilibrium solving, applied models and scenario I/O.

// `!(x > 0.0)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod applications;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod fixed_point;
pub mod graph;
pub mod scenario;
pub mod thresholds;

pub use nalgebra;

pub use diagnostics::{
    order_parameter, order_parameter_graph, JacobianInfo, OrderParameter, StabilityClass, SyncOptions, SyncReport,
};
pub use dynamics::{
    integrate, CouplingMode, IntegratorConfig, Method, OscillatorNetwork, PhaseState, SimulationTrace,
};
pub use error::{KuramotoError, Result};
pub use fixed_point::{solve_fixed_point, FixedPointResult};
pub use graph::{Edge, LaplacianSpectrum, OrientedIncidence, WeightedGraph};
pub use scenario::config::{parse_config, ScenarioConfig};
pub use thresholds::{threshold_report, ThresholdReport};
