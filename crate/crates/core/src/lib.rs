//! Simulator of cumulative cultural evolution in populations whose members
//! learn socially with or without AI assistance.
//!
//! Agents repeatedly re-learn from the most skilled member of their group,
//! drawing a Gumbel-distributed outcome whose error and dispersion depend
//! on their AI-use strategy, then copy strategies from better-performing
//! partners. On top of the agent model the crate offers Monte Carlo
//! replicator dynamics, batch experiments and a CSV-emitting CLI (`cce`).
//!
//! Everything numeric is generic over [`Scalar`]; the aliases below fix
//! the common `f64` instantiation.

pub mod cli;
pub mod error;
pub mod experiment;
pub mod io;
pub mod model;
pub mod population;
pub mod replicator;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    adoption_probability, derive_strategy_params, sample_learning_outcome, Agent, AiEffects,
    BaseLearningParams, StrategyId, StrategyParams, StrategyTable,
};
pub use population::{
    init_population, run, AdopterPlan, AdopterSpec, GroupAssignment, OutsideScope,
    PopulationConfig, PopulationState, ScopeStats, Simulation, StepRecord,
};
pub use scalar::Scalar;

pub type PopulationConfigF64 = population::PopulationConfig<f64>;
pub type StepRecordF64 = population::StepRecord<f64>;
pub type SimplexPointF64 = replicator::SimplexPoint<f64>;
pub type PayoffEstimateF64 = replicator::PayoffEstimate<f64>;
pub type FieldSampleF64 = replicator::FieldSample<f64>;
pub type ExperimentConfigF64 = experiment::ExperimentConfig<f64>;
pub type AggregateRecordF64 = experiment::AggregateRecord<f64>;

pub type PopulationConfigF32 = population::PopulationConfig<f32>;
pub type StepRecordF32 = population::StepRecord<f32>;
