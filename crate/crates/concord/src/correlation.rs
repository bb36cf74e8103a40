//! The five association statistics: Pearson, Spearman, CI, rCI, kCI.
//!
//! The concordance index (CI) is the fraction of observation pairs ordered
//! the same way by both variables. The robust CI (rCI) keeps only "valid"
//! pairs whose differences clear per-axis noise margins delta_x, delta_y;
//! the kernelized CI (kCI) replaces the hard margin with a smooth weight on
//! each pair. rCI is exactly the heavyside special case of kCI, and the
//! unit kernel recovers the plain CI.
//!
//! Every statistic has a brute-force reference implementation; CI and rCI
//! additionally have O(n log n) fast paths that produce identical counts and
//! therefore bit-identical estimates. kCI is a genuine O(n^2) sum and has no
//! subquadratic form.

use serde::{Deserialize, Serialize};

use crate::error::ConcordError;
use crate::numeric::Fenwick;
use crate::sample::PairedSample;
use crate::Result;

/// Noise margins for rCI: a pair is valid iff |dx| > delta_x and
/// |dy| > delta_y, both strict. Exact equality with the margin lands in the
/// invalid set, so delta = 0 still discards exactly tied pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RciParams {
    pub delta_x: f64,
    pub delta_y: f64,
}

impl RciParams {
    pub fn new(delta_x: f64, delta_y: f64) -> Result<Self> {
        for (name, v) in [("delta_x", delta_x), ("delta_y", delta_y)] {
            if !v.is_finite() || v < 0.0 {
                return Err(ConcordError::InvalidParameter(format!(
                    "{name} must be finite and >= 0 (got {v})"
                )));
            }
        }
        Ok(Self { delta_x, delta_y })
    }
}

/// Pair-weighting kernel for kCI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelForm {
    /// w = 1 for every pair; kCI degenerates to CI.
    Unit,
    /// w = 1 iff both margins are strictly cleared; kCI degenerates to rCI.
    Heavyside { delta_x: f64, delta_y: f64 },
    /// Per-axis weight 1 / (1 + exp(slope * (|d| - midpoint))) with
    /// slope < 0, so the weight rises from ~0 at |d| = 0 to 1 for large
    /// differences.
    Logistic { slope: f64, midpoint: f64 },
}

/// How per-axis weights combine into the pair weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    /// w(dx, dy) = k(|dx|) * k(|dy|); the only rule implemented. It is
    /// symmetric, monotone in both arguments, and makes the heavyside
    /// specialization of rCI exact.
    Product,
}

/// A validated kernel: form plus combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub form: KernelForm,
    pub combination: Combination,
}

impl KernelSpec {
    pub fn unit() -> Self {
        Self {
            form: KernelForm::Unit,
            combination: Combination::Product,
        }
    }

    pub fn heavyside(delta_x: f64, delta_y: f64) -> Result<Self> {
        let p = RciParams::new(delta_x, delta_y)?;
        Ok(Self {
            form: KernelForm::Heavyside {
                delta_x: p.delta_x,
                delta_y: p.delta_y,
            },
            combination: Combination::Product,
        })
    }

    pub fn logistic(slope: f64, midpoint: f64) -> Result<Self> {
        if !slope.is_finite() || slope >= 0.0 {
            return Err(ConcordError::InvalidParameter(format!(
                "logistic slope must be finite and < 0 (got {slope})"
            )));
        }
        if !midpoint.is_finite() || midpoint < 0.0 {
            return Err(ConcordError::InvalidParameter(format!(
                "logistic midpoint must be finite and >= 0 (got {midpoint})"
            )));
        }
        Ok(Self {
            form: KernelForm::Logistic { slope, midpoint },
            combination: Combination::Product,
        })
    }

    /// Per-axis weight of an absolute difference along x.
    pub(crate) fn axis_weight_x(&self, d: f64) -> f64 {
        match self.form {
            KernelForm::Unit => 1.0,
            KernelForm::Heavyside { delta_x, .. } => f64::from(u8::from(d > delta_x)),
            KernelForm::Logistic { slope, midpoint } => logistic_weight(d, slope, midpoint),
        }
    }

    /// Per-axis weight of an absolute difference along y.
    pub(crate) fn axis_weight_y(&self, d: f64) -> f64 {
        match self.form {
            KernelForm::Unit => 1.0,
            KernelForm::Heavyside { delta_y, .. } => f64::from(u8::from(d > delta_y)),
            KernelForm::Logistic { slope, midpoint } => logistic_weight(d, slope, midpoint),
        }
    }

    /// Joint weight of a pair with absolute differences (dx, dy).
    pub fn weight(&self, dx: f64, dy: f64) -> f64 {
        match self.combination {
            Combination::Product => self.axis_weight_x(dx) * self.axis_weight_y(dy),
        }
    }
}

pub(crate) fn logistic_weight(d: f64, slope: f64, midpoint: f64) -> f64 {
    1.0 / (1.0 + (slope * (d - midpoint)).exp())
}

/// Which statistic an [`AssociationResult`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Pearson,
    Spearman,
    Ci,
    Rci,
    Kci,
}

impl std::fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StatisticKind::Pearson => "pearson",
            StatisticKind::Spearman => "spearman",
            StatisticKind::Ci => "ci",
            StatisticKind::Rci => "rci",
            StatisticKind::Kci => "kci",
        };
        f.write_str(s)
    }
}

/// A statistic request carrying its parameters, accepted by the permutation
/// and simulation layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Pearson,
    Spearman,
    Ci,
    Rci(RciParams),
    Kci(KernelSpec),
}

impl Statistic {
    pub fn kind(&self) -> StatisticKind {
        match self {
            Statistic::Pearson => StatisticKind::Pearson,
            Statistic::Spearman => StatisticKind::Spearman,
            Statistic::Ci => StatisticKind::Ci,
            Statistic::Rci(_) => StatisticKind::Rci,
            Statistic::Kci(_) => StatisticKind::Kci,
        }
    }

    /// Value of the statistic under independence: 0.5 for the concordance
    /// family, 0 for the correlations. Permutation tests measure exceedance
    /// as distance from this center.
    pub fn null_center(&self) -> f64 {
        match self {
            Statistic::Pearson | Statistic::Spearman => 0.0,
            _ => 0.5,
        }
    }

    /// Evaluates the statistic on a sample, using the fast paths.
    pub fn evaluate(&self, sample: &PairedSample) -> Result<AssociationResult> {
        match self {
            Statistic::Pearson => pearson(sample),
            Statistic::Spearman => spearman(sample),
            Statistic::Ci => ci_fast(sample),
            Statistic::Rci(p) => rci_fast(sample, *p),
            Statistic::Kci(k) => kci(sample, *k),
        }
    }
}

impl std::fmt::Display for Statistic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Statistic::Rci(p) => write!(f, "rci(dx={},dy={})", p.delta_x, p.delta_y),
            Statistic::Kci(k) => match k.form {
                KernelForm::Unit => write!(f, "kci(unit)"),
                KernelForm::Heavyside { delta_x, delta_y } => {
                    write!(f, "kci(heavyside,dx={delta_x},dy={delta_y})")
                }
                KernelForm::Logistic { slope, midpoint } => {
                    write!(f, "kci(logistic,slope={slope},mid={midpoint})")
                }
            },
            other => write!(f, "{}", other.kind()),
        }
    }
}

/// Result of evaluating one statistic on one sample.
///
/// `effective_pairs` is the number of observation pairs that carried the
/// estimate: C(n,2) for Pearson/Spearman/CI, the valid-pair count for rCI,
/// and the total kernel weight on the unordered-pair scale for kCI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub statistic: StatisticKind,
    pub estimate: f64,
    pub effective_pairs: f64,
    pub n: usize,
}

/// Tie handling for the plain CI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Tied pairs count as non-concordant but stay in the denominator; the
    /// strict-indicator reading of the CI definition. Default.
    #[default]
    CountAsNonConcordant,
    /// Tied pairs are removed from numerator and denominator, the
    /// conventional Kendall-style alternative.
    Exclude,
}

/// Sample product-moment correlation.
pub fn pearson(sample: &PairedSample) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let n = sample.n() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ConcordError::DegenerateInput(
            "pearson requires nonzero variance in both vectors".into(),
        ));
    }
    Ok(AssociationResult {
        statistic: StatisticKind::Pearson,
        estimate: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0),
        effective_pairs: sample.n_pairs(),
        n: sample.n(),
    })
}

/// Spearman rank correlation: Pearson on midranks, ties averaged.
pub fn spearman(sample: &PairedSample) -> Result<AssociationResult> {
    for (name, v) in [("x", sample.x()), ("y", sample.y())] {
        if v.iter().all(|&a| a == v[0]) {
            return Err(ConcordError::DegenerateInput(format!(
                "spearman requires >= 2 distinct values in {name}"
            )));
        }
    }
    let ranked = PairedSample::new(midranks(sample.x()), midranks(sample.y()))?;
    let r = pearson(&ranked)?;
    Ok(AssociationResult {
        statistic: StatisticKind::Spearman,
        ..r
    })
}

/// Midranks of a vector: 1-based ranks with ties receiving the average of
/// the ranks they span.
pub(crate) fn midranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // Average of 1-based ranks i+1 ..= j+1.
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Concordance index by pair enumeration, default tie policy.
pub fn ci_naive(sample: &PairedSample) -> Result<AssociationResult> {
    ci_naive_with(sample, TiePolicy::default())
}

/// Concordance index by O(n^2) pair enumeration.
pub fn ci_naive_with(sample: &PairedSample, ties: TiePolicy) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let (mut concordant, mut tied) = (0u64, 0u64);
    for j in 1..x.len() {
        for i in 0..j {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 || dy == 0.0 {
                tied += 1;
            } else if (dx > 0.0) == (dy > 0.0) {
                concordant += 1;
            }
        }
    }
    ci_from_counts(sample, concordant, tied, ties)
}

fn ci_from_counts(
    sample: &PairedSample,
    concordant: u64,
    tied: u64,
    ties: TiePolicy,
) -> Result<AssociationResult> {
    let denom = match ties {
        TiePolicy::CountAsNonConcordant => sample.n_pairs(),
        TiePolicy::Exclude => {
            let d = sample.n_pairs() - tied as f64;
            if d == 0.0 {
                return Err(ConcordError::UndefinedStatistic(
                    "ci with tie exclusion: every pair is tied".into(),
                ));
            }
            d
        }
    };
    Ok(AssociationResult {
        statistic: StatisticKind::Ci,
        estimate: concordant as f64 / denom,
        effective_pairs: denom,
        n: sample.n(),
    })
}

/// Concordance index in O(n log n), default tie policy.
pub fn ci_fast(sample: &PairedSample) -> Result<AssociationResult> {
    ci_fast_with(sample, TiePolicy::default())
}

/// Concordance index in O(n log n): sort by (x, y), count discordant pairs
/// as strict merge-sort inversions of the y sequence, and recover the
/// concordant count from tie-run inclusion/exclusion. Produces the same
/// integer counts as [`ci_naive_with`], hence a bit-identical estimate.
pub fn ci_fast_with(sample: &PairedSample, ties: TiePolicy) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        x[a].partial_cmp(&x[b])
            .unwrap()
            .then(y[a].partial_cmp(&y[b]).unwrap())
    });

    // Pairs tied in x, and tied in both, from run lengths in sorted order.
    let (mut tx, mut txy) = (0u64, 0u64);
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        tx += pairs_of(j - i + 1);
        // Sub-runs tied in y within the x run; y is ascending inside the
        // run, so equal values are adjacent.
        let mut a = i;
        while a <= j {
            let mut b = a;
            while b + 1 <= j && y[idx[b + 1]] == y[idx[a]] {
                b += 1;
            }
            txy += pairs_of(b - a + 1);
            a = b + 1;
        }
        i = j + 1;
    }

    // Pairs tied in y, from the y multiset alone.
    let mut ys: Vec<f64> = y.to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ty = tie_pairs_sorted(&ys);

    // Discordant pairs are strict inversions of y in (x, y)-sorted order:
    // within an x run y is ascending, so only cross-run strict descents
    // count, which is exactly the discordance condition.
    let mut seq: Vec<f64> = idx.iter().map(|&k| y[k]).collect();
    let mut buf = vec![0.0; n];
    let discordant = count_strict_inversions(&mut seq, &mut buf);

    let total = n as u64 * (n as u64 - 1) / 2;
    let tied = tx + ty - txy;
    let concordant = total - tied - discordant;
    ci_from_counts(sample, concordant, tied, ties)
}

pub(crate) fn pairs_of(run: usize) -> u64 {
    let r = run as u64;
    r * (r - 1) / 2
}

/// Number of tied pairs in an ascending-sorted slice.
pub(crate) fn tie_pairs_sorted(sorted: &[f64]) -> u64 {
    let mut t = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        t += pairs_of(j - i + 1);
        i = j + 1;
    }
    t
}

/// Counts pairs (i < j) with seq[i] > seq[j] by bottom-up merge sort.
/// `seq` is sorted in place; `buf` must have the same length.
pub(crate) fn count_strict_inversions(seq: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = seq.len();
    debug_assert_eq!(buf.len(), n);
    let mut inversions = 0u64;
    let mut width = 1;
    while width < n {
        let mut lo = 0;
        while lo + width < n {
            let mid = lo + width;
            let hi = (mid + width).min(n);
            // Merge seq[lo..mid] and seq[mid..hi] into buf, counting the
            // left elements strictly greater than each taken right element.
            let (mut i, mut j, mut k) = (lo, mid, lo);
            while i < mid && j < hi {
                if seq[j] < seq[i] {
                    inversions += (mid - i) as u64;
                    buf[k] = seq[j];
                    j += 1;
                } else {
                    buf[k] = seq[i];
                    i += 1;
                }
                k += 1;
            }
            buf[k..k + (mid - i)].copy_from_slice(&seq[i..mid]);
            k += mid - i;
            buf[k..k + (hi - j)].copy_from_slice(&seq[j..hi]);
            seq[lo..hi].copy_from_slice(&buf[lo..hi]);
            lo = hi;
        }
        width *= 2;
    }
    inversions
}

/// Robust CI by O(n^2) pair enumeration.
pub fn rci_naive(sample: &PairedSample, params: RciParams) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let (mut concordant, mut valid) = (0u64, 0u64);
    for j in 1..x.len() {
        for i in 0..j {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx.abs() > params.delta_x && dy.abs() > params.delta_y {
                valid += 1;
                if (dx > 0.0) == (dy > 0.0) {
                    concordant += 1;
                }
            }
        }
    }
    rci_from_counts(sample, concordant, valid)
}

fn rci_from_counts(
    sample: &PairedSample,
    concordant: u64,
    valid: u64,
) -> Result<AssociationResult> {
    if valid == 0 {
        return Err(ConcordError::UndefinedStatistic(
            "rci: no pair clears both delta margins".into(),
        ));
    }
    Ok(AssociationResult {
        statistic: StatisticKind::Rci,
        estimate: concordant as f64 / valid as f64,
        effective_pairs: valid as f64,
        n: sample.n(),
    })
}

/// Robust CI in O(n log n).
///
/// Sweep the observations in ascending-x order. For the current j, the
/// partners i with x_j - x_i > delta_x form a prefix of the sorted order
/// (IEEE subtraction is weakly monotone in its arguments, so the predicate
/// is downward closed), maintained by a window pointer. Within the window,
/// the y condition splits at value thresholds found by binary search over
/// the distinct y values, and a Fenwick tree over y ranks counts window
/// members on each side. Every margin predicate is evaluated in exactly the
/// form the naive version uses, so the counts, and hence the estimate, are
/// bit-identical to [`rci_naive`].
pub fn rci_fast(sample: &PairedSample, params: RciParams) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let n = x.len();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());

    let mut unique_y: Vec<f64> = y.to_vec();
    unique_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
    unique_y.dedup();
    let rank_of = |v: f64| unique_y.partition_point(|&u| u < v);

    let mut fen = Fenwick::new(unique_y.len());
    let (mut concordant, mut valid) = (0u64, 0u64);
    let mut w = 0usize; // window: order[..w] are the i with x_j - x_i > delta_x
    for (pos, &j) in order.iter().enumerate() {
        while w < pos && x[j] - x[order[w]] > params.delta_x {
            fen.add(rank_of(y[order[w]]));
            w += 1;
        }
        if w == 0 {
            continue;
        }
        // Window members with y_j - y_i > delta_y are concordant with j
        // (both differences positive); those with y_i - y_j > delta_y are
        // discordant. Each predicate is downward/upward closed in y_i.
        let lo = unique_y.partition_point(|&u| y[j] - u > params.delta_y);
        let hi = unique_y.partition_point(|&u| !(u - y[j] > params.delta_y));
        let below = fen.prefix(lo);
        let above = w as u64 - fen.prefix(hi);
        concordant += below;
        valid += below + above;
    }
    rci_from_counts(sample, concordant, valid)
}

/// Kernelized CI: kCI = 2 * sum_{i != j} w(dx, dy) * I(x_i > x_j and
/// y_i > y_j) / sum_{i != j} w(dx, dy), an O(n^2) sum over ordered pairs.
/// The factor 2 makes the unit kernel reduce exactly to the CI, and the
/// heavyside kernel exactly to the rCI.
pub fn kci(sample: &PairedSample, kernel: KernelSpec) -> Result<AssociationResult> {
    let (x, y) = (sample.x(), sample.y());
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for j in 1..x.len() {
        for i in 0..j {
            let w = kernel.weight((x[i] - x[j]).abs(), (y[i] - y[j]).abs());
            // Both orderings of the unordered pair carry the same weight;
            // at most one of them satisfies the strict indicator.
            den += 2.0 * w;
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx != 0.0 && dy != 0.0 && (dx > 0.0) == (dy > 0.0) {
                num += w;
            }
        }
    }
    if den == 0.0 {
        return Err(ConcordError::UndefinedStatistic(
            "kci: total kernel weight is zero".into(),
        ));
    }
    Ok(AssociationResult {
        statistic: StatisticKind::Kci,
        estimate: 2.0 * num / den,
        effective_pairs: den / 2.0,
        n: sample.n(),
    })
}

/// Classification of every unordered pair under rCI margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCensus {
    /// Valid pairs ordered the same way by x and y.
    pub concordant: u64,
    /// Valid pairs ordered opposite ways.
    pub discordant: u64,
    /// Pairs exactly tied in x or in y.
    pub tied: u64,
    /// Untied pairs inside a delta margin.
    pub invalid: u64,
}

impl PairCensus {
    pub fn total(&self) -> u64 {
        self.concordant + self.discordant + self.tied + self.invalid
    }
}

/// Counts concordant / discordant / tied / invalid pairs under the given
/// margins. The four counts sum to C(n,2); concordant + discordant equals
/// the rCI denominator (exact ties never clear a strict margin).
pub fn pair_census(sample: &PairedSample, params: RciParams) -> PairCensus {
    let (x, y) = (sample.x(), sample.y());
    let mut c = PairCensus {
        concordant: 0,
        discordant: 0,
        tied: 0,
        invalid: 0,
    };
    for j in 1..x.len() {
        for i in 0..j {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 || dy == 0.0 {
                c.tied += 1;
            } else if dx.abs() > params.delta_x && dy.abs() > params.delta_y {
                if (dx > 0.0) == (dy > 0.0) {
                    c.concordant += 1;
                } else {
                    c.discordant += 1;
                }
            } else {
                c.invalid += 1;
            }
        }
    }
    c
}
