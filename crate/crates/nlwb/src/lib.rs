//! File formats and command implementations behind the `nlwb` binary.
//!
//! Every command returns an [`commands::Outcome`] holding a [`RunReport`]
//! plus text and CSV renderings; the binary only picks a rendering and an
//! exit code.

pub mod commands;
pub mod published;
pub mod schema;
pub mod text;

pub use commands::{CommandError, Outcome, Target};
pub use schema::{RunReport, SchemaError, Versions, SCHEMA_VERSION};
