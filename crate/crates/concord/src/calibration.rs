//! Calibration of rCI thresholds and kCI kernels from replicate data.
//!
//! The inputs are two sets of absolute measurement differences: S0 from
//! replicate pairs of the same item (pure noise) and S from pairs of
//! distinct items (noise mixed with real differences). An upper bound on
//! the probability that a difference exceeding t is still noise follows
//! from Bayes' rule with P(h0) <= 1:
//!
//! ```text
//! P(h0 | delta > t) <= [1 - F0(t)] / [1 - F(t)]
//! ```
//!
//! Thresholding that bound yields a confusion matrix as a function of t;
//! the rCI threshold maximizes its Matthews correlation coefficient, and
//! the kCI kernel is a two-parameter logistic fitted to the complementary
//! posterior P(h1 | delta > t).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{logistic_weight, KernelSpec};
use crate::error::ConcordError;
use crate::seed::mix;
use crate::Result;

/// Search grids are capped at this many quantile-spaced points.
const MAX_GRID: usize = 512;

/// Pairwise pooling switches from all pairs to seeded subsampling above
/// this many pairs.
const MAX_POOLED_PAIRS: u64 = 1_000_000;

/// Which side of the calibration contrast a delta set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaKind {
    /// Differences between replicate measurements of the same item: S0.
    Replicate,
    /// Differences between measurements of distinct items: S.
    Population,
}

/// A set of absolute measurement differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSet {
    values: Vec<f64>,
    kind: DeltaKind,
}

impl DeltaSet {
    pub fn new(values: Vec<f64>, kind: DeltaKind) -> Result<Self> {
        if values.is_empty() {
            return Err(ConcordError::DegenerateInput(
                "delta set must contain at least one value".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ConcordError::InvalidParameter(
                "deltas must be finite and >= 0".into(),
            ));
        }
        Ok(Self { values, kind })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> DeltaKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// All pairwise absolute differences of a measurement vector, the pooling
/// used to build S from population measurements. Above 10^6 pairs a seeded
/// uniform subsample of 10^6 is drawn instead.
pub fn pairwise_abs_deltas(values: &[f64], seed: u64) -> Vec<f64> {
    let n = values.len();
    let pairs = n as u64 * (n as u64 - 1) / 2;
    if pairs <= MAX_POOLED_PAIRS {
        let mut out = Vec::with_capacity(pairs as usize);
        for j in 1..n {
            for i in 0..j {
                out.push((values[i] - values[j]).abs());
            }
        }
        out
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(MAX_POOLED_PAIRS as usize);
        while out.len() < MAX_POOLED_PAIRS as usize {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                out.push((values[i] - values[j]).abs());
            }
        }
        out
    }
}

/// Right-continuous empirical CDF: eval(t) is the fraction of values <= t.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(ConcordError::DegenerateInput(
                "ecdf of an empty sample".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConcordError::InvalidParameter(
                "ecdf values must be finite".into(),
            ));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { sorted })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= t) as f64 / self.sorted.len() as f64
    }

    /// 1 - eval(t): the fraction of values strictly above t.
    pub fn survival(&self, t: f64) -> f64 {
        (self.sorted.len() - self.sorted.partition_point(|&v| v <= t)) as f64
            / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// Upper bound on P(h0 | delta > t): the tail ratio min(1, G0(t) / G(t)).
///
/// Errors when S has no mass above t, where the conditional is undefined.
/// A t beyond the replicate support but inside S gives exactly 0.
pub fn null_posterior_bound(t: f64, s0: &DeltaSet, s: &DeltaSet) -> Result<f64> {
    let e0 = Ecdf::new(s0.values())?;
    let e = Ecdf::new(s.values())?;
    bound_from_ecdfs(t, &e0, &e)
}

fn bound_from_ecdfs(t: f64, e0: &Ecdf, e: &Ecdf) -> Result<f64> {
    let g = e.survival(t);
    if g == 0.0 {
        return Err(ConcordError::DegenerateInput(format!(
            "no population deltas above t = {t}: posterior bound undefined"
        )));
    }
    Ok((e0.survival(t) / g).min(1.0))
}

/// Confusion matrix of the threshold rule "call a difference real iff
/// delta > t", rows conditioned on the rule's output, columns ordered
/// (h1, h0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// P(h1 | delta > t).
    pub p_h1_above: f64,
    /// P(h0 | delta > t).
    pub p_h0_above: f64,
    /// P(h1 | delta <= t).
    pub p_h1_below: f64,
    /// P(h0 | delta <= t).
    pub p_h0_below: f64,
}

/// Builds the confusion matrix at threshold t from the Bayes bound, scaled
/// by an estimate of the overall null fraction (1.0 keeps the conservative
/// P(h0) <= 1). Both rows sum to 1 by construction; each side of t must
/// carry S mass.
pub fn confusion_matrix(
    t: f64,
    s0: &DeltaSet,
    s: &DeltaSet,
    null_fraction_estimate: f64,
) -> Result<ConfusionMatrix> {
    let e0 = Ecdf::new(s0.values())?;
    let e = Ecdf::new(s.values())?;
    confusion_from_ecdfs(t, &e0, &e, null_fraction_estimate)
}

fn confusion_from_ecdfs(t: f64, e0: &Ecdf, e: &Ecdf, f0: f64) -> Result<ConfusionMatrix> {
    if !(f0 > 0.0 && f0 <= 1.0) {
        return Err(ConcordError::InvalidParameter(format!(
            "null fraction estimate must lie in (0, 1] (got {f0})"
        )));
    }
    let g = e.survival(t);
    let f = e.eval(t);
    if g == 0.0 || f == 0.0 {
        return Err(ConcordError::DegenerateInput(format!(
            "population deltas all on one side of t = {t}: confusion matrix undefined"
        )));
    }
    let p_h0_above = (f0 * e0.survival(t) / g).min(1.0);
    let p_h0_below = (f0 * e0.eval(t) / f).min(1.0);
    Ok(ConfusionMatrix {
        p_h1_above: 1.0 - p_h0_above,
        p_h0_above,
        p_h1_below: 1.0 - p_h0_below,
        p_h0_below,
    })
}

/// Output of the calibration fits. `fit_rci_threshold` populates
/// `threshold` and `mcc_curve`; `fit_kci_kernel` populates
/// `posterior_curve` and `kernel`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub threshold: Option<f64>,
    /// (t, MCC) at every candidate threshold where the MCC is defined.
    pub mcc_curve: Vec<(f64, f64)>,
    /// (t, P(h1 | delta > t)) after isotonic cleanup, non-decreasing in t.
    pub posterior_curve: Vec<(f64, f64)>,
    pub kernel: Option<KernelSpec>,
}

/// Matthews correlation coefficient of the confusion matrix at t, using
/// the S-side masses to convert conditionals into joints. None when a
/// marginal is empty.
fn mcc_at(t: f64, e0: &Ecdf, e: &Ecdf, f0: f64) -> Option<f64> {
    let m = confusion_from_ecdfs(t, e0, e, f0).ok()?;
    let g = e.survival(t);
    let f = e.eval(t);
    let tp = g * m.p_h1_above;
    let fp = g * m.p_h0_above;
    let fn_ = f * m.p_h1_below;
    let tn = f * m.p_h0_below;
    let denom = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
    if denom <= 0.0 {
        return None;
    }
    // Rounding in the product/sqrt can push the ratio an ulp past 1.
    Some(((tp * tn - fp * fn_) / denom.sqrt()).clamp(-1.0, 1.0))
}

/// Fits the rCI threshold: grid search for the t maximizing the MCC, with
/// the conservative null fraction of 1. Ties break toward the smaller
/// threshold.
pub fn fit_rci_threshold(s0: &DeltaSet, s: &DeltaSet) -> Result<CalibrationResult> {
    fit_rci_threshold_with(s0, s, 1.0)
}

/// Threshold fit with an explicit null-fraction estimate, e.g. from
/// [`storey_null_fraction`].
pub fn fit_rci_threshold_with(
    s0: &DeltaSet,
    s: &DeltaSet,
    null_fraction_estimate: f64,
) -> Result<CalibrationResult> {
    let e0 = Ecdf::new(s0.values())?;
    let e = Ecdf::new(s.values())?;
    let grid = threshold_grid(s0.values(), s.values());
    let mut curve = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for &t in &grid {
        let Some(mcc) = mcc_at(t, &e0, &e, null_fraction_estimate) else {
            continue;
        };
        curve.push((t, mcc));
        // Improvements below 1e-12 are float noise; treating them as ties
        // keeps the argmax at the smallest threshold.
        if best.map_or(true, |(_, b)| mcc > b + 1e-12) {
            best = Some((t, mcc));
        }
    }
    let Some((threshold, _)) = best else {
        return Err(ConcordError::DegenerateInput(
            "mcc undefined at every candidate threshold; are the delta sets identical?".into(),
        ));
    };
    Ok(CalibrationResult {
        threshold: Some(threshold),
        mcc_curve: curve,
        posterior_curve: Vec::new(),
        kernel: None,
    })
}

/// Fits the kCI logistic kernel to the posterior curve P(h1 | delta > t).
///
/// The raw curve is made non-decreasing by isotonic regression (the raw
/// ECDF ratio is noisy and the target is a probability that can only grow
/// with t), clamped away from {0, 1}, and fitted by damped Gauss-Newton
/// least squares seeded from a logit-linear regression.
pub fn fit_kci_kernel(s0: &DeltaSet, s: &DeltaSet) -> Result<CalibrationResult> {
    let e0 = Ecdf::new(s0.values())?;
    let e = Ecdf::new(s.values())?;
    let mut ts = Vec::new();
    let mut ps = Vec::new();
    for t in threshold_grid(s0.values(), s.values()) {
        let Ok(bound) = bound_from_ecdfs(t, &e0, &e) else {
            continue;
        };
        ts.push(t);
        ps.push(1.0 - bound);
    }
    if ts.len() < 8 {
        return Err(ConcordError::DegenerateInput(format!(
            "posterior curve computable on only {} grid points (need >= 8)",
            ts.len()
        )));
    }
    let mut ps = isotonic_non_decreasing(&ps);
    for p in &mut ps {
        *p = p.clamp(1e-6, 1.0 - 1e-6);
    }
    if ps[ps.len() - 1] - ps[0] < 1e-9 {
        return Err(ConcordError::DegenerateInput(
            "posterior curve is constant; no sigmoid shape to fit".into(),
        ));
    }

    let (slope, midpoint) = fit_logistic(&ts, &ps)?;
    let kernel = KernelSpec::logistic(slope, midpoint).map_err(|e| {
        ConcordError::NonConvergent(format!(
            "kernel fit produced invalid parameters (slope {slope:.4}, midpoint {midpoint:.4}): {e}"
        ))
    })?;
    let t_max = *ts.last().unwrap();
    let w0 = logistic_weight(0.0, slope, midpoint);
    let wmax = logistic_weight(t_max, slope, midpoint);
    if !(w0 < 0.5 && wmax > 0.5) {
        return Err(ConcordError::NonConvergent(format!(
            "fitted kernel is not a rising sigmoid on the data range: \
             w(0) = {w0:.4}, w({t_max:.4}) = {wmax:.4}, slope {slope:.4}, midpoint {midpoint:.4}"
        )));
    }
    Ok(CalibrationResult {
        threshold: None,
        mcc_curve: Vec::new(),
        posterior_curve: ts.into_iter().zip(ps).collect(),
        kernel: Some(kernel),
    })
}

/// Candidate thresholds: the distinct pooled deltas, reduced to at most
/// [`MAX_GRID`] quantile-spaced points for determinism and bounded cost.
fn threshold_grid(s0: &[f64], s: &[f64]) -> Vec<f64> {
    let mut pooled: Vec<f64> = s0.iter().chain(s).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();
    if pooled.len() <= MAX_GRID {
        return pooled;
    }
    let mut grid: Vec<f64> = (0..MAX_GRID)
        .map(|i| {
            let q = i as f64 / (MAX_GRID - 1) as f64;
            pooled[((q * (pooled.len() - 1) as f64).round() as usize).min(pooled.len() - 1)]
        })
        .collect();
    grid.dedup();
    grid
}

/// Pool-adjacent-violators: least-squares non-decreasing fit.
fn isotonic_non_decreasing(v: &[f64]) -> Vec<f64> {
    let mut blocks: Vec<(f64, usize)> = Vec::new();
    for &x in v {
        let (mut sum, mut count) = (x, 1usize);
        while let Some(&(ps, pc)) = blocks.last() {
            if ps / pc as f64 > sum / count as f64 {
                sum += ps;
                count += pc;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut out = Vec::with_capacity(v.len());
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        out.extend(std::iter::repeat(mean).take(count));
    }
    out
}

/// Least-squares fit of w(t) = 1 / (1 + exp(slope (t - midpoint))) to
/// (ts, ps) by Levenberg-damped Gauss-Newton, initialized from an OLS
/// regression of logit(p) on t.
fn fit_logistic(ts: &[f64], ps: &[f64]) -> Result<(f64, f64)> {
    let n = ts.len() as f64;
    let mt = ts.iter().sum::<f64>() / n;
    let logits: Vec<f64> = ps.iter().map(|&p| (p / (1.0 - p)).ln()).collect();
    let ml = logits.iter().sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for (&t, &l) in ts.iter().zip(&logits) {
        stt += (t - mt) * (t - mt);
        stl += (t - mt) * (l - ml);
    }
    if stt == 0.0 || stl <= 0.0 {
        return Err(ConcordError::NonConvergent(
            "posterior curve has no rising trend; cannot seed logistic fit".into(),
        ));
    }
    // logit(w) = -slope (t - midpoint), so the OLS slope b estimates
    // -slope and the intercept a estimates slope * midpoint.
    let b = stl / stt;
    let a = ml - b * mt;
    let mut slope = -b;
    let mut midpoint = -a / b;

    let sse = |sl: f64, mid: f64| -> f64 {
        ts.iter()
            .zip(ps)
            .map(|(&t, &p)| {
                let r = logistic_weight(t, sl, mid) - p;
                r * r
            })
            .sum()
    };
    let mut err = sse(slope, midpoint);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Gauss-Newton normal equations for the 2-parameter residual.
        let (mut j11, mut j12, mut j22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&t, &p) in ts.iter().zip(ps) {
            let w = logistic_weight(t, slope, midpoint);
            let r = w - p;
            let d_slope = -w * (1.0 - w) * (t - midpoint);
            let d_mid = w * (1.0 - w) * slope;
            j11 += d_slope * d_slope;
            j12 += d_slope * d_mid;
            j22 += d_mid * d_mid;
            g1 += d_slope * r;
            g2 += d_mid * r;
        }
        let mut stepped = false;
        for _ in 0..25 {
            let a11 = j11 * (1.0 + lambda);
            let a22 = j22 * (1.0 + lambda);
            let det = a11 * a22 - j12 * j12;
            if det.abs() < 1e-300 {
                break;
            }
            let ds = (-g1 * a22 + g2 * j12) / det;
            let dm = (-g2 * a11 + g1 * j12) / det;
            let (cs, cm) = (slope + ds, midpoint + dm);
            let cand = sse(cs, cm);
            if cand.is_finite() && cand < err {
                let converged = err - cand < 1e-14 * err.max(1e-300);
                slope = cs;
                midpoint = cm;
                err = cand;
                lambda = (lambda * 0.3).max(1e-12);
                stepped = true;
                if converged {
                    return Ok((slope, midpoint));
                }
                break;
            }
            lambda *= 10.0;
        }
        if !stepped {
            break;
        }
    }
    if err.is_finite() {
        Ok((slope, midpoint))
    } else {
        Err(ConcordError::NonConvergent(
            "logistic fit diverged to non-finite residuals".into(),
        ))
    }
}

/// Storey-style estimate of the null fraction in S: the mass ratio
/// F_S(t_lambda) / F_S0(t_lambda) in a small-delta region where the
/// alternative contributes little. Off by default everywhere; pass the
/// result to [`fit_rci_threshold_with`] or [`confusion_matrix`] to use it.
pub fn storey_null_fraction(s0: &DeltaSet, s: &DeltaSet, t_lambda: f64) -> Result<f64> {
    let f0 = Ecdf::new(s0.values())?.eval(t_lambda);
    if f0 == 0.0 {
        return Err(ConcordError::InvalidParameter(format!(
            "no replicate deltas at or below t_lambda = {t_lambda}"
        )));
    }
    Ok((Ecdf::new(s.values())?.eval(t_lambda) / f0).min(1.0))
}

/// Bootstrap replicates of the fitted rCI threshold: both delta sets are
/// resampled with replacement and refitted. Returns the thresholds of the
/// replicates that fit successfully, in replicate order; the spread
/// quantifies threshold stability and is always reported by callers.
pub fn bootstrap_thresholds(
    s0: &DeltaSet,
    s: &DeltaSet,
    replicates: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if replicates < 2 {
        return Err(ConcordError::InvalidParameter(
            "bootstrap needs at least 2 replicates".into(),
        ));
    }
    let mut out = Vec::new();
    for rep in 0..replicates {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, rep));
        let resample = |v: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect()
        };
        let b0 = DeltaSet::new(resample(s0.values(), &mut rng), s0.kind())?;
        let b = DeltaSet::new(resample(s.values(), &mut rng), s.kind())?;
        if let Ok(fit) = fit_rci_threshold(&b0, &b) {
            out.push(fit.threshold.expect("threshold fit populates threshold"));
        }
    }
    if out.len() < 2 {
        return Err(ConcordError::DegenerateInput(
            "fewer than 2 bootstrap replicates produced a defined threshold".into(),
        ));
    }
    Ok(out)
}

/// Noise distribution families fitted to signed replicate differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Laplace,
    Gaussian,
}

/// Maximum-likelihood fit of a noise family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub family: NoiseFamily,
    pub location: f64,
    pub scale: f64,
}

/// MLE fit to signed differences. Laplace: median and mean absolute
/// deviation from it; Gaussian: mean and population standard deviation.
pub fn fit_noise(deltas: &[f64], family: NoiseFamily) -> Result<NoiseFit> {
    if deltas.len() < 2 {
        return Err(ConcordError::DegenerateInput(
            "noise fit needs at least 2 values".into(),
        ));
    }
    if deltas.iter().any(|v| !v.is_finite()) {
        return Err(ConcordError::InvalidParameter(
            "noise fit values must be finite".into(),
        ));
    }
    let (location, scale) = match family {
        NoiseFamily::Laplace => {
            let med = median(deltas);
            let mad = deltas.iter().map(|v| (v - med).abs()).sum::<f64>() / deltas.len() as f64;
            (med, mad)
        }
        NoiseFamily::Gaussian => {
            let n = deltas.len() as f64;
            let mean = deltas.iter().sum::<f64>() / n;
            let var = deltas.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        }
    };
    if scale == 0.0 {
        return Err(ConcordError::DegenerateInput(
            "noise fit: zero scale (all values identical)".into(),
        ));
    }
    Ok(NoiseFit {
        family,
        location,
        scale,
    })
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}
