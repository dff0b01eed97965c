//! Importance sampling for rare events of multiscale Langevin diffusions
//!
//! ```text
//! dX = [-(ε/δ) Q'(X/δ) - V'(X)] dt + √ε √(2D) dW
//! ```
//!
//! with a periodic or random rough potential `Q`. The crate computes the
//! homogenized coefficients of both environments, builds controls from
//! subsolutions of the homogenized Hamilton-Jacobi equation, simulates
//! controlled trajectories with their likelihood ratios, and aggregates the
//! standard and importance-sampling estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod experiment;
pub mod periodic_env;
pub mod potential;
pub mod random_env;
pub mod rng;
pub mod simulator;
pub mod subsolution;

pub use error::{Error, Result};
pub use estimators::{
    aggregate, cross_check, payoff, CrossCheckReport, EstimatorKind, EstimatorSummary,
};
pub use experiment::{
    parse_config, preset, run_experiment, serialize_config, ExperimentResult, ExperimentSpec,
};
pub use periodic_env::{
    compute_constants, corrector_factor, effective_drift, EffectiveCoefficients, PeriodicModel,
};
pub use potential::{Potential, SharedPotential};
pub use random_env::{
    homogenized_constants, random_corrector_factor, sample_field, FieldRealization,
    GaussianFieldSpec, RandomHomogenized,
};
pub use simulator::{
    simulate_path, step_size, ControlScheme, ControlVariant, DtRule, Homogenization, LangevinModel,
    PathSimulator, SimMode, SimParams, TrajectoryOutcome,
};
pub use subsolution::{
    hamiltonian, verify_subsolution, Hamiltonian1D, Subsolution, VerificationGrid,
    VerificationReport,
};
