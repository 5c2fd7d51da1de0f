//! Physical systems that reduce to Kuramoto-type phase dynamics.

pub mod power;
pub mod spring;
pub mod vicsek;

pub use power::{admittance_to_coupling, power_rhs, PowerNetwork};
pub use spring::{spring_energy, spring_reduce_overdamped, spring_torque, OverdampedReduction, SpringRing};
pub use vicsek::{heading_dispersion_run, simulate_swarm, vicsek_step, ParticleSwarm, SwarmRun};
