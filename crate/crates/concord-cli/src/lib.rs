//! Support library for the `concord` binary: file formats and the
//! cross-dataset drug-recall benchmark.
//!
//! The binary itself is a thin dispatcher; everything with behavior worth
//! testing lives here. Errors reuse [`concord::ConcordError`] so the exit
//! code mapping stays in one place.

pub mod input;
pub mod matrix;
pub mod recall;

/// Version stamped into every JSON document the binary emits.
pub const SCHEMA_VERSION: u32 = 1;
