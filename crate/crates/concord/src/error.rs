//! Error type shared by every module.

use thiserror::Error;

/// Failures surfaced by the statistics, fitting, and simulation routines.
///
/// The variants are deliberately coarse: callers mostly need to distinguish
/// "your input cannot carry this statistic" ([`DegenerateInput`],
/// [`UndefinedStatistic`]) from "the method itself gave up"
/// ([`PrecisionLimit`], [`NonConvergent`]).
///
/// [`DegenerateInput`]: ConcordError::DegenerateInput
/// [`UndefinedStatistic`]: ConcordError::UndefinedStatistic
/// [`PrecisionLimit`]: ConcordError::PrecisionLimit
/// [`NonConvergent`]: ConcordError::NonConvergent
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConcordError {
    /// The input carries no information for the requested estimate, e.g. a
    /// zero-variance vector handed to Pearson.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// The statistic is undefined on this input under the given parameters,
    /// e.g. rCI with no valid pairs. Distinct from [`DegenerateInput`]: the
    /// data may be fine, the parameters just leave nothing to sum over.
    /// Never silently mapped to 0.5.
    ///
    /// [`DegenerateInput`]: ConcordError::DegenerateInput
    #[error("undefined statistic: {0}")]
    UndefinedStatistic(String),

    /// A parameter violates its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The exact method cannot represent the answer in double precision;
    /// the message names the fallback (permutation testing).
    #[error("precision limit: {0}")]
    PrecisionLimit(String),

    /// An iterative fit failed to converge or failed its validity gates;
    /// the message carries diagnostics.
    #[error("non-convergent fit: {0}")]
    NonConvergent(String),
}
