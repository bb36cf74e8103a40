//! Synthetic data generation and Monte Carlo harnesses.
//!
//! Two sampling families are provided: a bivariate Gaussian with exact
//! Pearson correlation `r`, and a bivariate beta model built from a
//! four-component Dirichlet so that both marginals are Beta(a, b) on
//! [0, 1] while the correlation is tunable. The latter mimics bounded
//! viability scores; the Dirichlet construction keeps the marginals
//! exact rather than approximating them with a copula.
//!
//! On top of the samplers sit three harnesses: a power grid over
//! (statistic, effect size, sample size) cells, a null calibration run
//! that collects p-values from independent data for QQ plots and
//! false-positive tables, and a closed-form Fisher-z level-set solver
//! used to locate effect sizes of prescribed asymptotic power.
//!
//! Every harness is deterministic per seed: replication streams are
//! derived as `mix(mix(seed, cell), rep)` so grid cells can run
//! concurrently and aggregation stays order-independent (all sums that
//! cross replication boundaries are integer counts).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta as BetaDist, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as GaussianDist};
use std::collections::BTreeMap;

use crate::calibration::NoiseFamily;
use crate::correlation::{ci_fast, pearson, spearman, Statistic};
use crate::error::ConcordError;
use crate::exact_null::{
    asymptotic_ci_pvalue, asymptotic_pearson_pvalue, asymptotic_spearman_pvalue,
    exact_ci_midp_pvalue, exact_ci_pvalue, inversion_dist_no_ties, Alternative,
    InversionDistribution,
};
use crate::numeric::brent_root;
use crate::permutation::{adaptive_permutation_test, StopSpec};
use crate::sample::PairedSample;
use crate::seed::mix;
use crate::Result;

/// Default beta marginal shapes, chosen to resemble right-skewed
/// bounded response scores.
pub const DEFAULT_BETA_A: f64 = 1.2;
pub const DEFAULT_BETA_B: f64 = 4.5;

/// Marginal distribution family for synthetic samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFamily {
    /// Standard normal marginals, exact Gaussian dependence.
    Normal,
    /// Beta(a, b) marginals on [0, 1] via the Dirichlet construction.
    Beta { a: f64, b: f64 },
}

impl SampleFamily {
    pub fn beta_default() -> Self {
        SampleFamily::Beta {
            a: DEFAULT_BETA_A,
            b: DEFAULT_BETA_B,
        }
    }
}

/// A solved bivariate beta model.
///
/// Let (U1, U2, U3, U4) ~ Dirichlet(a1, a2, a3, a4) and set
/// X = U1 + U3, Y = U2 + U3. With a1 = a2, a3 = a - a1 and
/// a4 = b - a1 both marginals are Beta(a, b) and the shared component
/// U3 induces positive correlation. The constructor solves for the
/// `a1` that hits `target_r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateBetaSpec {
    /// First marginal shape, shared by X and Y.
    pub a: f64,
    /// Second marginal shape, shared by X and Y.
    pub b: f64,
    /// Requested model correlation.
    pub target_r: f64,
    /// Solved Dirichlet parameters (a1, a2, a3, a4); a1 = a2,
    /// a3 = a - a1, a4 = b - a1, all strictly positive.
    pub dirichlet_params: [f64; 4],
}

/// Model correlation of (X, Y) as a function of the shared weight a1.
///
/// From the Dirichlet moments Cov(Ui, Uj) = -ai aj / (a0^2 (a0 + 1))
/// and Var(Ui) = ai (a0 - ai) / (a0^2 (a0 + 1)) with a0 = a + b,
/// Var(X) = Var(Y) reduces to the Beta(a, b) variance and
/// corr(X, Y) = 1 - a1 (a + b) / (a b). Linear in a1, so the solver
/// converges immediately; we still bracket it like any other root.
fn beta_model_correlation(a: f64, b: f64, a1: f64) -> f64 {
    1.0 - a1 * (a + b) / (a * b)
}

/// Solve for Dirichlet parameters giving Beta(a, b) marginals with
/// correlation `target_r`.
///
/// Feasibility requires a1 in (0, min(a, b)); correlation approaches
/// its supremum `r_max` = 1 as a1 -> 0, so `target_r` must lie in
/// [0, 1). The achieved model correlation matches the target to 1e-6.
pub fn solve_dirichlet_params(a: f64, b: f64, target_r: f64) -> Result<BivariateBetaSpec> {
    if !(a > 0.0 && a.is_finite()) || !(b > 0.0 && b.is_finite()) {
        return Err(ConcordError::InvalidParameter(format!("beta marginal shapes must be positive, got ({a}, {b})")));
    }
    // a1 -> 0 drives corr -> 1; the open boundary makes r_max = 1.
    let r_max = 1.0;
    if !target_r.is_finite() || target_r < 0.0 || target_r >= r_max {
        return Err(ConcordError::InvalidParameter(format!( "target correlation {target_r} outside feasible range [0, r_max) with r_max = {r_max}" )));
    }
    let cap = a.min(b);
    let lo = cap * 1e-12;
    let hi = cap * (1.0 - 1e-12);
    let f = |s: f64| beta_model_correlation(a, b, s) - target_r;
    let a1 = brent_root(f, lo, hi, 1e-12, 200).map_err(|_| ConcordError::NonConvergent(format!("dirichlet parameter search for target correlation {target_r}")))?;
    let spec = BivariateBetaSpec {
        a,
        b,
        target_r,
        dirichlet_params: [a1, a1, a - a1, b - a1],
    };
    debug_assert!(spec.dirichlet_params.iter().all(|&p| p > 0.0));
    debug_assert!((beta_model_correlation(a, b, a1) - target_r).abs() <= 1e-6);
    Ok(spec)
}

/// Draw n pairs from the bivariate beta model.
///
/// Each pair normalizes four independent Gamma(ai, 1) draws to a
/// Dirichlet vector and sums components: X = U1 + U3, Y = U2 + U3.
pub fn sample_bivariate_beta(n: usize, spec: &BivariateBetaSpec, seed: u64) -> Result<PairedSample> {
    let gammas: Vec<Gamma<f64>> = spec
        .dirichlet_params
        .iter()
        .map(|&shape| {
            Gamma::new(shape, 1.0).map_err(|_| ConcordError::InvalidParameter(format!("invalid gamma shape {shape}")))
        })
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u = [0.0f64; 4];
        let mut sum = 0.0;
        // Underflow to an all-zero vector is practically impossible,
        // but redrawing keeps the output well-defined either way.
        while sum == 0.0 {
            for (slot, g) in u.iter_mut().zip(&gammas) {
                *slot = g.sample(&mut rng);
            }
            sum = u.iter().sum();
        }
        x.push((u[0] + u[2]) / sum);
        y.push((u[1] + u[2]) / sum);
    }
    PairedSample::new(x, y)
}

/// Draw n pairs from a bivariate normal with correlation `r` and
/// standard normal marginals. Requires |r| < 1.
pub fn sample_bivariate_normal(n: usize, r: f64, seed: u64) -> Result<PairedSample> {
    if !r.is_finite() || r.abs() >= 1.0 {
        return Err(ConcordError::InvalidParameter(format!("normal correlation must satisfy |r| < 1, got {r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail = (1.0 - r * r).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        x.push(z1);
        y.push(r * z1 + tail * z2);
    }
    PairedSample::new(x, y)
}

/// Additive measurement-noise model applied to the response axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Noise family; only Laplace is supported here, matching the
    /// heavy-tailed replicate deltas seen in practice.
    pub family: NoiseFamily,
    pub location: f64,
    /// Scale in response units; must be positive.
    pub scale: f64,
    /// Values are clamped back into these bounds after perturbation.
    pub bounds: [f64; 2],
}

impl NoiseSpec {
    /// Laplace noise with the unit-interval bounds used for viability
    /// scores.
    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        Self::new(NoiseFamily::Laplace, location, scale, [0.0, 1.0])
    }

    pub fn new(family: NoiseFamily, location: f64, scale: f64, bounds: [f64; 2]) -> Result<Self> {
        if family != NoiseFamily::Laplace {
            return Err(ConcordError::InvalidParameter("only laplace noise is supported".to_string()));
        }
        if !(scale > 0.0 && scale.is_finite()) || !location.is_finite() {
            return Err(ConcordError::InvalidParameter(format!("noise requires finite location and positive scale, got ({location}, {scale})")));
        }
        if !(bounds[0].is_finite() && bounds[1].is_finite() && bounds[0] < bounds[1]) {
            return Err(ConcordError::InvalidParameter(format!("noise bounds must be finite and ordered, got {bounds:?}")));
        }
        Ok(NoiseSpec {
            family,
            location,
            scale,
            bounds,
        })
    }
}

/// A noised sample plus how many values the bounds clipped.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseOutcome {
    pub sample: PairedSample,
    /// Number of y values that landed outside the bounds and were
    /// clamped back.
    pub clamped: usize,
}

impl NoiseOutcome {
    pub fn clamped_fraction(&self) -> f64 {
        self.clamped as f64 / self.sample.n() as f64
    }
}

/// Add Laplace noise to the y axis only and clamp back into bounds.
///
/// The x axis is left untouched: the model is noise on the measured
/// response, not on the condition labels. Input values must already
/// lie within the bounds. As scale -> 0 the output converges to the
/// input.
pub fn add_noise(sample: &PairedSample, noise: &NoiseSpec, seed: u64) -> Result<NoiseOutcome> {
    let inside = |v: f64| v >= noise.bounds[0] && v <= noise.bounds[1];
    if !sample.x().iter().chain(sample.y()).all(|&v| inside(v)) {
        return Err(ConcordError::InvalidParameter(format!("sample values fall outside noise bounds {:?}", noise.bounds)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut clamped = 0usize;
    let y: Vec<f64> = sample
        .y()
        .iter()
        .map(|&v| {
            // Inverse-CDF Laplace draw: u uniform on [-1/2, 1/2).
            let u: f64 = rng.random::<f64>() - 0.5;
            let draw = noise.location - noise.scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
            let shifted = v + draw;
            if inside(shifted) {
                shifted
            } else {
                clamped += 1;
                shifted.clamp(noise.bounds[0], noise.bounds[1])
            }
        })
        .collect();
    Ok(NoiseOutcome {
        sample: sample.with_y(y),
        clamped,
    })
}

/// Configuration for a power grid run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub family: SampleFamily,
    pub statistics: Vec<Statistic>,
    /// Effect sizes (model correlations), one grid axis.
    pub effect_sizes: Vec<f64>,
    /// Sample sizes, the other grid axis.
    pub sample_sizes: Vec<usize>,
    pub alpha: f64,
    pub replications: u64,
    /// Optional response noise applied after sampling.
    pub noise: Option<NoiseSpec>,
    pub seed: u64,
}

impl PowerConfig {
    /// The default grid: r from 0 to 0.5 in steps of 0.1, n from 50
    /// to 300 in steps of 50, alpha 1e-3, 1000 replications.
    pub fn default_grid(family: SampleFamily, statistics: Vec<Statistic>, seed: u64) -> Self {
        PowerConfig {
            family,
            statistics,
            effect_sizes: (0..=5).map(|i| i as f64 * 0.1).collect(),
            sample_sizes: (1..=6).map(|i| i * 50).collect(),
            alpha: 1e-3,
            replications: 1000,
            noise: None,
            seed,
        }
    }
}

/// One grid cell: a statistic evaluated at one (r, n) point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub statistic: Statistic,
    pub effect_size: f64,
    pub sample_size: usize,
    pub alpha: f64,
    pub replications: u64,
    pub rejections: u64,
    /// rejections / replications.
    pub power: f64,
    /// Mean fraction of y values clamped by the noise bounds, zero
    /// when the run is noise-free.
    pub clamped_fraction: f64,
}

/// Full power surface; rows follow the configuration's iteration
/// order (statistic-major, then effect size, then sample size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGrid {
    pub cells: Vec<PowerCell>,
    pub seed: u64,
}

impl PowerGrid {
    /// Monte Carlo standard error of one cell's power estimate.
    pub fn standard_error(cell: &PowerCell) -> f64 {
        (cell.power * (1.0 - cell.power) / cell.replications as f64).sqrt()
    }
}

fn draw_sample(
    family: &SampleFamily,
    beta: Option<&BivariateBetaSpec>,
    n: usize,
    r: f64,
    seed: u64,
) -> Result<PairedSample> {
    match family {
        SampleFamily::Normal => sample_bivariate_normal(n, r, seed),
        SampleFamily::Beta { .. } => {
            let spec = beta.expect("beta spec solved per cell");
            sample_bivariate_beta(n, spec, seed)
        }
    }
}

/// Run the full power grid.
///
/// Each replication draws a fresh sample, optionally perturbs the
/// response axis, and runs the adaptive permutation test; a
/// replication counts as a rejection when the test stops Significant
/// or exhausts its budget with a p estimate at or below alpha. Cells
/// are embarrassingly parallel and replication seeds derive from
/// (seed, cell index, replication index), so the output is
/// bit-for-bit reproducible regardless of thread count.
pub fn run_power_sim(config: &PowerConfig) -> Result<PowerGrid> {
    if config.statistics.is_empty()
        || config.effect_sizes.is_empty()
        || config.sample_sizes.is_empty()
    {
        return Err(ConcordError::InvalidParameter("power grid needs at least one statistic, effect size, and sample size" .to_string()));
    }
    if config.replications == 0 {
        return Err(ConcordError::InvalidParameter("power grid needs at least one replication".to_string()));
    }
    let stop = StopSpec::for_alpha(config.alpha)?;
    let mut cells = Vec::new();
    let mut cell_idx = 0u64;
    for statistic in &config.statistics {
        for &r in &config.effect_sizes {
            for &n in &config.sample_sizes {
                let beta_spec = match config.family {
                    SampleFamily::Beta { a, b } => Some(solve_dirichlet_params(a, b, r)?),
                    SampleFamily::Normal => None,
                };
                let cell_seed = mix(config.seed, cell_idx);
                let (rejections, clamped_values, value_count) = (0..config.replications)
                    .into_par_iter()
                    .map(|rep| -> Result<(u64, u64, u64)> {
                        let rep_seed = mix(cell_seed, rep);
                        let sample = draw_sample(
                            &config.family,
                            beta_spec.as_ref(),
                            n,
                            r,
                            mix(rep_seed, 0),
                        )?;
                        let (sample, clamped) = match &config.noise {
                            Some(noise) => {
                                let out = add_noise(&sample, noise, mix(rep_seed, 1))?;
                                (out.sample, out.clamped as u64)
                            }
                            None => (sample, 0),
                        };
                        let decision = adaptive_permutation_test(
                            &sample,
                            statistic,
                            &stop,
                            mix(rep_seed, 2),
                        )?;
                        let hit = u64::from(decision.rejects(config.alpha));
                        Ok((hit, clamped, n as u64))
                    })
                    .try_reduce(
                        || (0, 0, 0),
                        |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)),
                    )?;
                cells.push(PowerCell {
                    statistic: statistic.clone(),
                    effect_size: r,
                    sample_size: n,
                    alpha: config.alpha,
                    replications: config.replications,
                    rejections,
                    power: rejections as f64 / config.replications as f64,
                    clamped_fraction: if value_count == 0 {
                        0.0
                    } else {
                        clamped_values as f64 / value_count as f64
                    },
                });
                cell_idx += 1;
            }
        }
    }
    Ok(PowerGrid {
        cells,
        seed: config.seed,
    })
}

/// P-value procedures compared by the null calibration harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    ExactCi,
    /// Snake case would split the trailing P; keep the name aligned
    /// with [`PValueMethod::label`].
    #[serde(rename = "exact_ci_midp")]
    ExactCiMidP,
    AsymptoticCi,
    AsymptoticPearson,
    AsymptoticSpearman,
}

impl PValueMethod {
    pub fn all() -> Vec<PValueMethod> {
        vec![
            PValueMethod::ExactCi,
            PValueMethod::ExactCiMidP,
            PValueMethod::AsymptoticCi,
            PValueMethod::AsymptoticPearson,
            PValueMethod::AsymptoticSpearman,
        ]
    }

    pub fn label(&self) -> &'static str {
        match self {
            PValueMethod::ExactCi => "exact_ci",
            PValueMethod::ExactCiMidP => "exact_ci_midp",
            PValueMethod::AsymptoticCi => "asymptotic_ci",
            PValueMethod::AsymptoticPearson => "asymptotic_pearson",
            PValueMethod::AsymptoticSpearman => "asymptotic_spearman",
        }
    }
}

/// Configuration for the null calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibConfig {
    pub family: SampleFamily,
    pub sample_sizes: Vec<usize>,
    pub repetitions: u64,
    pub methods: Vec<PValueMethod>,
    /// Alphas at which false-positive rates are tabulated.
    pub alphas: Vec<f64>,
    /// Maximum QQ points emitted per (method, n) combination.
    pub qq_points: usize,
    pub seed: u64,
}

impl NullCalibConfig {
    pub fn new(
        family: SampleFamily,
        sample_sizes: Vec<usize>,
        repetitions: u64,
        methods: Vec<PValueMethod>,
        seed: u64,
    ) -> Self {
        NullCalibConfig {
            family,
            sample_sizes,
            repetitions,
            methods,
            alphas: vec![1e-4, 1e-3, 1e-2, 0.05],
            qq_points: 512,
            seed,
        }
    }
}

/// One row of the false-positive-rate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprRow {
    pub method: PValueMethod,
    pub sample_size: usize,
    pub alpha: f64,
    pub repetitions: u64,
    pub false_positives: u64,
    /// Draws on which the method's estimator broke down (for example a
    /// non-positive plug-in variance at small n); excluded from `rate`.
    pub degenerate_draws: u64,
    /// false_positives / (repetitions - degenerate_draws); 1.0 would
    /// mean every usable null sample rejected.
    pub rate: f64,
}

/// One QQ-plot point: a theoretical uniform quantile against the
/// matching empirical p-value quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqPoint {
    pub method: PValueMethod,
    pub sample_size: usize,
    pub theoretical: f64,
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullCalibReport {
    pub fpr: Vec<FprRow>,
    pub qq: Vec<QqPoint>,
}

fn independent_null_sample(family: &SampleFamily, n: usize, seed: u64) -> Result<PairedSample> {
    match family {
        SampleFamily::Normal => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            PairedSample::new(x, y)
        }
        SampleFamily::Beta { a, b } => {
            let dist = BetaDist::new(*a, *b).map_err(|_| ConcordError::InvalidParameter(format!("invalid beta shapes ({a}, {b})")))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = (0..n).map(|_| dist.sample(&mut rng)).collect();
            let y = (0..n).map(|_| dist.sample(&mut rng)).collect();
            PairedSample::new(x, y)
        }
    }
}

fn method_pvalue(
    method: PValueMethod,
    sample: &PairedSample,
    exact: Option<&InversionDistribution>,
) -> Result<f64> {
    match method {
        PValueMethod::ExactCi => {
            let ci = ci_fast(sample)?.estimate;
            exact_ci_pvalue(
                ci,
                exact.expect("exact null cached for this n"),
                Alternative::TwoSided,
            )
        }
        PValueMethod::ExactCiMidP => {
            let ci = ci_fast(sample)?.estimate;
            exact_ci_midp_pvalue(
                ci,
                exact.expect("exact null cached for this n"),
                Alternative::TwoSided,
            )
        }
        PValueMethod::AsymptoticCi => asymptotic_ci_pvalue(sample),
        PValueMethod::AsymptoticPearson => {
            asymptotic_pearson_pvalue(pearson(sample)?.estimate, sample.n() as u64)
        }
        PValueMethod::AsymptoticSpearman => {
            asymptotic_spearman_pvalue(spearman(sample)?.estimate, sample.n() as u64)
        }
    }
}

/// Collect p-values from independent (null) samples and summarize
/// them as false-positive rates and QQ-plot data.
///
/// The exact CI null distribution is computed once per sample size.
/// Replications parallelize with the same seed fan-out as the power
/// grid; p-values are gathered per replication index, so the report
/// is reproducible bit-for-bit.
///
/// A draw on which one method's estimator degenerates (the plug-in
/// CI variance can go non-positive at small n) does not abort the
/// run: the draw is dropped from that method's rows and tallied in
/// [`FprRow::degenerate_draws`]. Configuration errors still fail fast.
pub fn run_null_calibration_sim(config: &NullCalibConfig) -> Result<NullCalibReport> {
    if config.methods.is_empty() || config.sample_sizes.is_empty() {
        return Err(ConcordError::InvalidParameter("null calibration needs at least one method and sample size".to_string()));
    }
    if config.repetitions == 0 {
        return Err(ConcordError::InvalidParameter("null calibration needs at least one repetition".to_string()));
    }
    let needs_exact = config
        .methods
        .iter()
        .any(|m| matches!(m, PValueMethod::ExactCi | PValueMethod::ExactCiMidP));
    let mut exact_cache: BTreeMap<usize, InversionDistribution> = BTreeMap::new();
    if needs_exact {
        for &n in &config.sample_sizes {
            exact_cache.insert(n, inversion_dist_no_ties(n as u64)?);
        }
    }
    let mut fpr = Vec::new();
    let mut qq = Vec::new();
    for (ni, &n) in config.sample_sizes.iter().enumerate() {
        let exact = exact_cache.get(&n);
        let cell_seed = mix(config.seed, ni as u64);
        // One Vec<f64> per method, filled in replication order.
        let per_rep: Vec<Vec<f64>> = (0..config.repetitions)
            .into_par_iter()
            .map(|rep| -> Result<Vec<f64>> {
                let sample = independent_null_sample(&config.family, n, mix(cell_seed, rep))?;
                config
                    .methods
                    .iter()
                    .map(|&m| match method_pvalue(m, &sample, exact) {
                        Ok(p) => Ok(p),
                        // One method failing on one draw is a property of
                        // the method at this n, not of the run; mark the
                        // draw and keep going.
                        Err(ConcordError::DegenerateInput(_))
                        | Err(ConcordError::UndefinedStatistic(_)) => Ok(f64::NAN),
                        Err(e) => Err(e),
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for (mi, &method) in config.methods.iter().enumerate() {
            let mut ps: Vec<f64> = per_rep.iter().map(|row| row[mi]).collect();
            ps.retain(|p| !p.is_nan());
            let degenerate_draws = config.repetitions - ps.len() as u64;
            for &alpha in &config.alphas {
                let false_positives = ps.iter().filter(|&&p| p <= alpha).count() as u64;
                fpr.push(FprRow {
                    method,
                    sample_size: n,
                    alpha,
                    repetitions: config.repetitions,
                    false_positives,
                    degenerate_draws,
                    rate: false_positives as f64 / ps.len() as f64,
                });
            }
            if ps.is_empty() {
                continue;
            }
            ps.sort_by(|p, q| p.total_cmp(q));
            let points = config.qq_points.min(ps.len());
            for j in 0..points {
                let prob = (j as f64 + 0.5) / points as f64;
                let idx = ((prob * ps.len() as f64) as usize).min(ps.len() - 1);
                qq.push(QqPoint {
                    method,
                    sample_size: n,
                    theoretical: prob,
                    empirical: ps[idx],
                });
            }
        }
    }
    Ok(NullCalibReport { fpr, qq })
}

/// Effect size whose two-sided Fisher-z test has the given asymptotic
/// power.
///
/// Under H1 with correlation r, atanh(r_hat) is approximately normal
/// with mean atanh(r) and standard deviation 1/sqrt(n - 3), so power
/// at level alpha is Phi(e sqrt(n-3) - z) + Phi(-e sqrt(n-3) - z)
/// with e = atanh(r) and z the two-sided critical value. The map from
/// e to power is strictly increasing, so the target is bracketed and
/// solved by bisection-backed root finding. `power_target == alpha`
/// returns exactly 0; larger n shrinks the returned r.
pub fn level_set_effect_size(power_target: f64, n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConcordError::InvalidParameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n < 4 {
        return Err(ConcordError::InvalidParameter(format!("Fisher-z power needs n >= 4, got {n}")));
    }
    if !power_target.is_finite() || power_target < alpha || power_target >= 1.0 {
        return Err(ConcordError::InvalidParameter(format!("power target {power_target} outside [alpha, 1) with alpha = {alpha}")));
    }
    if power_target == alpha {
        return Ok(0.0);
    }
    let gauss = GaussianDist::new(0.0, 1.0).expect("unit normal");
    let z = gauss.inverse_cdf(1.0 - alpha / 2.0);
    let root_n = ((n - 3) as f64).sqrt();
    let power = |e: f64| gauss.cdf(e * root_n - z) + gauss.cdf(-e * root_n - z);
    let f = |e: f64| power(e) - power_target;
    // e = 10 corresponds to r within 4e-9 of 1; power there is
    // numerically 1 for any n >= 4.
    let e = brent_root(f, 0.0, 10.0, 1e-12, 200).map_err(|_| ConcordError::NonConvergent(format!("no effect size in (0, 1) reaches power {power_target}")))?;
    Ok(e.tanh())
}
