//! Two-qubit realizations and constrained maximization of the Hardy value.

mod model;
mod optimize;

pub use model::{
    behavior_of_model, expression_with_gradient, probability_with_gradient, trace_probability,
    wrap_angle, QubitModel,
};
pub use optimize::{
    maximize_hardy, refine_from, stationarity, OptimizationResult, OptimizerConfig,
};
