//! Realigned Hardy paradoxes built from the two-setting-family AS Bell
//! inequalities, together with the machinery to bound them:
//!
//! - [`scenario`]: bipartite dichotomic scenarios with behaviors and sparse
//!   Bell expressions (CHSH in probability form and the `I_nn22` family).
//! - [`lhv`]: deterministic local strategies, classical maxima and Hardy
//!   soundness certificates by exhaustive enumeration.
//! - [`hardy`]: the original Hardy paradox and the realigned family.
//! - [`qubit`]: the two-qubit model (real Schmidt state, X–Z plane
//!   measurements) and penalty-method maximization of the Hardy value.
//! - [`npa`]: moment-matrix relaxations at levels 1–3 and a dense
//!   primal-dual interior-point SDP solver.
//!
//! The crate is `no_std` + `alloc` when the default `std` feature is
//! disabled. The `parallel` feature fans restarts and strategy enumeration
//! out over rayon; results are reduced deterministically.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod hardy;
pub mod lhv;
pub mod linalg;
pub mod npa;
pub mod qubit;
pub mod scenario;
pub mod tolerance;

pub use error::{Error, Result};
pub use hardy::{original_hardy, realigned_hardy, Condition, HardyCheck, HardyParadox};
pub use lhv::{
    behavior_of, certify_hardy_soundness, classical_max, enumerate_strategies, ClassicalMax,
    DeterministicStrategy, SoundnessReport,
};
pub use npa::{
    build_program, hardy_upper_bound, hardy_upper_bound_with, solve, MomentProgram, Monomial,
    SdpConfig, SdpSolution, SdpStatus,
};
pub use qubit::{
    behavior_of_model, maximize_hardy, refine_from, OptimizationResult, OptimizerConfig, QubitModel,
};
pub use scenario::{
    as_inequality, as_quantum_bound, chsh_probability_form, evaluate, Behavior, BellExpression,
    Event, Scenario,
};
