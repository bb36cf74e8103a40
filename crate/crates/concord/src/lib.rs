//! Concordance-based association statistics for noisy measurements.
//!
//! The crate centers on the concordance index (CI) family: the plain CI, a
//! robust variant (rCI) that discards pairs whose differences fall inside
//! per-axis noise margins, and a kernelized variant (kCI) that soft-weights
//! pairs instead of discarding them. Pearson and Spearman are included as
//! baselines. Around the estimators sit the pieces needed to use them
//! honestly on noisy data:
//!
//! * exact null distributions of the CI from inversion-count generating
//!   polynomials, for tie-free and tied (multiset) data ([`exact_null`]);
//! * adaptive permutation testing with sequential early stopping
//!   ([`permutation`]);
//! * calibration of rCI thresholds and kCI kernels from replicate
//!   measurements ([`calibration`]);
//! * samplers and simulation harnesses for power and false-positive-rate
//!   experiments ([`simulation`]).
//!
//! All randomized operations take explicit seeds and are bit-for-bit
//! reproducible regardless of thread count.

pub mod calibration;
pub mod correlation;
pub mod error;
pub mod exact_null;
pub mod numeric;
pub mod permutation;
pub mod sample;
pub mod seed;
pub mod simulation;

pub use calibration::{
    bootstrap_thresholds, confusion_matrix, fit_kci_kernel, fit_noise, fit_rci_threshold,
    fit_rci_threshold_with, null_posterior_bound, pairwise_abs_deltas, storey_null_fraction,
    CalibrationResult, ConfusionMatrix, DeltaKind, DeltaSet, Ecdf, NoiseFamily, NoiseFit,
};
pub use correlation::{
    ci_fast, ci_naive, kci, pair_census, pearson, rci_fast, rci_naive, spearman,
    AssociationResult, KernelForm, KernelSpec, PairCensus, RciParams, Statistic, TiePolicy,
};
pub use error::ConcordError;
pub use exact_null::{
    asymptotic_ci_pvalue, asymptotic_pearson_pvalue, asymptotic_spearman_pvalue,
    exact_ci_midp_pvalue, exact_ci_pvalue, inversion_dist_multiset, inversion_dist_no_ties,
    Alternative, InversionDistribution, MultisetSpec,
};
pub use permutation::{
    adaptive_permutation_test, adaptive_permutation_test_with, fixed_permutation_test,
    fixed_permutation_test_with, Decision, PermDecision, StopSpec,
};
pub use sample::PairedSample;
pub use simulation::{
    add_noise, level_set_effect_size, run_null_calibration_sim, run_power_sim,
    sample_bivariate_beta, sample_bivariate_normal, solve_dirichlet_params, BivariateBetaSpec,
    FprRow, NoiseOutcome, NoiseSpec, NullCalibConfig, NullCalibReport, PValueMethod, PowerCell,
    PowerConfig, PowerGrid, QqPoint, SampleFamily, DEFAULT_BETA_A, DEFAULT_BETA_B,
};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, ConcordError>;
