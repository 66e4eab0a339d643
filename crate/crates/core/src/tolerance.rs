//! Numerical tolerances shared across modules.

/// Behaviors must satisfy `|Σ_ij p(ij|xy) − 1| ≤ NORMALIZATION`.
pub const NORMALIZATION: f64 = 1e-12;

/// Entries may dip this far below zero before a behavior is rejected.
pub const NONNEGATIVITY: f64 = 1e-12;

/// Integer-valued expressions evaluated on deterministic behaviors count as
/// saturating the target when within this distance.
pub const SATURATION: f64 = 1e-12;

/// Default condition tolerance for deterministic behaviors.
pub const DETERMINISTIC_CHECK: f64 = 1e-12;

/// Default condition tolerance for optimizer outputs.
pub const OPTIMIZER_CHECK: f64 = 1e-6;

/// Largest `n` accepted by strategy enumeration (`4^12` joint strategies).
pub const MAX_ENUMERATION_SETTINGS: u16 = 12;
