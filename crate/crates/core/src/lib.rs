//! Model-based safety analysis of synchronous parallel systems.
//!
//! Functional behavior is described by lock-step automata ([`model`]).
//! Failure modes are added as occurrence automata ([`failures`]), minimal
//! critical failure sets are found by deductive cause-consequence analysis
//! ([`qualitative`]) and hazard probabilities over bounded horizons by
//! probabilistic model checking ([`quantitative`]). Models can be written in
//! a small textual language ([`lang`]).

pub mod error;
pub mod failures;
pub mod lang;
pub mod model;
pub mod qualitative;
pub mod quantitative;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Probability;

/// Double-precision state space, the default for all analyses.
pub type StateSpace64 = model::StateSpace<f64>;
pub type StateSpace32 = model::StateSpace<f32>;
pub type ProbabilityVector64 = quantitative::ProbabilityVector<f64>;
pub type ProbabilityVector32 = quantitative::ProbabilityVector<f32>;
pub type HazardCurve64 = quantitative::HazardCurve<f64>;
pub type HazardCurve32 = quantitative::HazardCurve<f32>;
