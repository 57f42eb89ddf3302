//! Departure-time user equilibrium for scheduled public transport.
//!
//! A [`Network`] holds stations, timetabled lines and OD demand. A
//! [`FlowDistribution`] says how many users of each OD take each
//! (departure time, route) option. [`simulate`] loads the distribution onto
//! the timetable under hard train capacity and first-come-first-serve
//! boarding, and an [`Evaluator`] turns the loading into generalized costs
//! and the system gap. The [`solver`] module searches for distributions
//! where no user gains by switching departure time.

pub mod cost;
pub mod error;
pub mod fixtures;
pub mod flow;
pub mod loading;
pub mod network;
pub mod report;
pub mod scenario;
pub mod solver;

pub use cost::{CostTable, CostWeights, Evaluation, Evaluator};
pub use error::{Error, Result};
pub use flow::FlowDistribution;
pub use loading::{simulate, simulate_with, LoadingResult, SimulationOptions};
pub use network::{Network, NetworkDescription, Time};
pub use scenario::{generate_initial, scale_demand, InitialSetting, Scenario};
pub use solver::{SolverConfig, SolverKind, SolverReport};
