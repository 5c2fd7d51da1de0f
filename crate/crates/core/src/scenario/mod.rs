//! Scenario files, batch runs, output writers and the streaming session.

pub mod config;
pub mod output;
pub mod rng;
pub mod run;
pub mod server;
pub mod session;
pub mod sweep;

pub use config::{load_config, parse_config, ScenarioConfig};
pub use run::{execute, run_scenario, RunSummary, ScenarioOutcome};
pub use sweep::{sweep, SweepParameter, SweepRow};
