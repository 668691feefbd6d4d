//! Siting and sizing of wind, solar and biomass generation on a radial
//! distribution feeder to minimize expected real-power loss.
//!
//! The pipeline:
//!
//! 1. [`grid`] loads and validates the feeder.
//! 2. [`stochastic`] fits hourly Rayleigh wind and Beta irradiance models and
//!    samples a weighted [`StateSet`].
//! 3. [`dg`] turns each sampled state into per-unit-capacity output.
//! 4. [`powerflow`] solves every state with a backward/forward sweep.
//! 5. [`optimizer`] searches allocations with a particle swarm, holding each
//!    kind's installed total fixed and penalizing voltage excursions.

pub mod cases;
pub mod dg;
pub mod grid;
pub mod optimizer;
pub mod powerflow;
pub mod stochastic;

use thiserror::Error;

pub use dg::{DgKind, DgModels, DgUnit, PvModuleParams, WindTurbineParams};
pub use grid::{load_network, Branch, Bus, Network, SystemBase, VoltageLimits};
pub use optimizer::{
    pso_optimize, repair_penetration, Allocation, CandidateBuses, Evaluator, ObjectiveReport, PenetrationSpec,
    PsoOutcome, PsoSettings, SearchSpace, SizingRules,
};
pub use powerflow::{solve, InjectionSet, PowerFlowResult, SweepSettings};
pub use stochastic::{build_state_set, BetaFit, HourlyProfile, ScenarioSettings, State, StateSet};

/// Any error the library can produce.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Grid(#[from] grid::GridError),
    #[error(transparent)]
    PowerFlow(#[from] powerflow::PowerFlowError),
    #[error(transparent)]
    Stochastic(#[from] stochastic::StochasticError),
    #[error(transparent)]
    Dg(#[from] dg::DgError),
    #[error(transparent)]
    Optimize(#[from] optimizer::OptimizeError),
}
