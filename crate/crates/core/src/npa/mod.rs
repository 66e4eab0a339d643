//! NPA moment-matrix relaxations for two-party dichotomic scenarios.
//!
//! The operator alphabet holds only outcome-0 projectors `E_x`, `F_y`;
//! outcome-1 statistics follow from `I − E_x`, `I − F_y`. Level `l` uses
//! every canonical word of length at most `l` as the basis, and moment
//! matrices are real symmetric, so `w` and `w†` share a moment.

mod monomial;
mod program;
mod sdp;

pub use monomial::{Monomial, Symbol};
pub use program::{build_program, LinearForm, MomentProgram};
pub use sdp::{solve, SdpConfig, SdpSolution, SdpStatus};

use crate::error::Result;
use crate::hardy::HardyParadox;

/// Objective value of the level-`level` relaxation of `paradox`.
pub fn hardy_upper_bound(paradox: &HardyParadox, level: u8) -> Result<f64> {
    hardy_upper_bound_with(paradox, level, &SdpConfig::default()).map(|s| s.objective_value)
}

/// [`hardy_upper_bound`] with an explicit solver configuration, returning
/// the full solution.
pub fn hardy_upper_bound_with(
    paradox: &HardyParadox,
    level: u8,
    cfg: &SdpConfig,
) -> Result<SdpSolution> {
    solve(&build_program(paradox, level)?, cfg)
}
