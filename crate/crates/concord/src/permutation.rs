//! Adaptive and fixed permutation tests.
//!
//! The adaptive test treats the unknown permutation p-value p as the
//! success probability of the exceedance stream and runs a generalized
//! sequential likelihood-ratio test of p <= alpha - delta against
//! p >= alpha + delta, stopping as soon as either hypothesis accumulates a
//! log-likelihood advantage of ln(1/epsilon). Samples whose p-value sits
//! inside the indifference band run to the permutation cap and come back
//! `Exhausted` with their estimate; the caller decides.
//!
//! Determinism: draw b of a test with master seed s is a pure function of
//! (s, b, retry count), so results are independent of thread count and of
//! where a run was interrupted. Only y is permuted.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{
    count_strict_inversions, midranks, pairs_of, tie_pairs_sorted, KernelSpec, RciParams,
    Statistic,
};
use crate::error::ConcordError;
use crate::exact_null::Alternative;
use crate::numeric::Fenwick;
use crate::sample::PairedSample;
use crate::seed::mix3;
use crate::Result;

/// Above this n the kCI evaluator stops precomputing pairwise weight
/// tables (two n^2 f64 matrices) and recomputes kernel weights per pair.
const KCI_TABLE_LIMIT: usize = 1024;

/// Stopping rule for the adaptive test.
///
/// `delta` is the half-width of the indifference band around `alpha`;
/// `epsilon` bounds the probability of stopping on the wrong side when the
/// true p-value lies outside the band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopSpec {
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub max_permutations: u64,
}

impl StopSpec {
    pub fn new(alpha: f64, delta: f64, epsilon: f64, max_permutations: u64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConcordError::InvalidParameter(format!(
                "alpha must lie in (0, 1) (got {alpha})"
            )));
        }
        if !(delta > 0.0 && delta < alpha && alpha + delta < 1.0) {
            return Err(ConcordError::InvalidParameter(format!(
                "delta must satisfy 0 < delta < alpha and alpha + delta < 1 (got {delta})"
            )));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ConcordError::InvalidParameter(format!(
                "epsilon must lie in (0, 1) (got {epsilon})"
            )));
        }
        let floor = (1.0 / alpha).ceil() as u64;
        if max_permutations < floor {
            return Err(ConcordError::InvalidParameter(format!(
                "max_permutations must be at least ceil(1/alpha) = {floor} (got {max_permutations})"
            )));
        }
        Ok(Self {
            alpha,
            delta,
            epsilon,
            max_permutations,
        })
    }

    /// Defaults used throughout: band half-width alpha/1000, error budget
    /// e^-10, cap 100/alpha draws.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        Self::new(
            alpha,
            alpha * 1e-3,
            (-10.0f64).exp(),
            (100.0 / alpha).ceil() as u64,
        )
    }

    /// GLR boundary check after `used` draws with `exceedances` hits.
    pub(crate) fn boundary(&self, exceedances: u64, used: u64) -> Option<Decision> {
        let k = exceedances as f64;
        let n = used as f64;
        let phat = k / n;
        let low = self.alpha - self.delta;
        let high = self.alpha + self.delta;
        let ll = |p: f64| {
            let mut l = 0.0;
            if k > 0.0 {
                l += k * p.ln();
            }
            if n - k > 0.0 {
                l += (n - k) * (1.0 - p).ln();
            }
            l
        };
        let threshold = -self.epsilon.ln();
        let ll_low = ll(phat.min(low));
        let ll_high = ll(phat.max(high));
        if ll_low - ll_high >= threshold {
            Some(Decision::Significant)
        } else if ll_high - ll_low >= threshold {
            Some(Decision::NotSignificant)
        } else {
            None
        }
    }
}

/// Outcome of a permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// The p-value is below alpha with high confidence.
    Significant,
    /// The p-value is above alpha with high confidence.
    NotSignificant,
    /// The permutation cap was reached without a verdict; `p_estimate`
    /// carries the best estimate. Fixed-budget tests always report this.
    Exhausted,
}

/// Decision plus the evidence behind it. `p_estimate` is the add-one
/// estimate (b + 1) / (K + 1), which is never exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermDecision {
    pub decision: Decision,
    pub p_estimate: f64,
    pub permutations_used: u64,
    pub exceedances: u64,
    pub seed: u64,
}

impl PermDecision {
    /// The rejection rule used by the simulation harnesses: a firm
    /// `Significant`, or an exhausted run whose estimate still clears
    /// alpha.
    pub fn rejects(&self, alpha: f64) -> bool {
        match self.decision {
            Decision::Significant => true,
            Decision::NotSignificant => false,
            Decision::Exhausted => self.p_estimate <= alpha,
        }
    }
}

/// Two-sided adaptive permutation test. See
/// [`adaptive_permutation_test_with`].
pub fn adaptive_permutation_test(
    sample: &PairedSample,
    statistic: &Statistic,
    stop: &StopSpec,
    seed: u64,
) -> Result<PermDecision> {
    adaptive_permutation_test_with(sample, statistic, stop, seed, Alternative::TwoSided)
}

/// Adaptive permutation test with explicit alternative.
///
/// Exceedance compares deviations from the statistic's null center:
/// two-sided uses |T_b - c| >= |T - c|, one-sided the signed deviation.
/// Ties count as exceedances, which together with the add-one estimate
/// keeps the test valid. A statistic undefined on the observed data is an
/// error; on a permuted dataset it triggers a redraw, and more than
/// max(1, 1%) of attempts undefined is an error rather than a silently
/// biased null.
pub fn adaptive_permutation_test_with(
    sample: &PairedSample,
    statistic: &Statistic,
    stop: &StopSpec,
    seed: u64,
    alternative: Alternative,
) -> Result<PermDecision> {
    run_permutations(
        sample,
        statistic,
        seed,
        alternative,
        stop.max_permutations,
        |exc, used| stop.boundary(exc, used),
    )
}

/// Fixed-budget permutation test: always runs `permutations` draws and
/// reports `Exhausted` with the add-one estimate. The draw stream is the
/// one the adaptive test consumes, so the two agree replay-for-replay.
pub fn fixed_permutation_test(
    sample: &PairedSample,
    statistic: &Statistic,
    permutations: u64,
    seed: u64,
) -> Result<PermDecision> {
    fixed_permutation_test_with(sample, statistic, permutations, seed, Alternative::TwoSided)
}

/// Fixed-budget test with explicit alternative.
pub fn fixed_permutation_test_with(
    sample: &PairedSample,
    statistic: &Statistic,
    permutations: u64,
    seed: u64,
    alternative: Alternative,
) -> Result<PermDecision> {
    if permutations == 0 {
        return Err(ConcordError::InvalidParameter(
            "fixed test needs at least one permutation".into(),
        ));
    }
    run_permutations(sample, statistic, seed, alternative, permutations, |_, _| {
        None
    })
}

fn run_permutations(
    sample: &PairedSample,
    statistic: &Statistic,
    seed: u64,
    alternative: Alternative,
    max_permutations: u64,
    mut boundary: impl FnMut(u64, u64) -> Option<Decision>,
) -> Result<PermDecision> {
    let observed = statistic.evaluate(sample)?.estimate;
    let center = statistic.null_center();
    let dev_obs = observed - center;
    let mut evaluator = PermEvaluator::prepare(statistic, sample)?;

    let n = sample.n();
    let identity: Vec<usize> = (0..n).collect();
    let mut perm = identity.clone();

    let mut exceedances = 0u64;
    let mut redraws = 0u64;
    let mut decision = Decision::Exhausted;
    let mut used = 0u64;

    'draws: for b in 0..max_permutations {
        let t = loop {
            let attempt = redraws; // global counter doubles as retry salt
            let mut rng = ChaCha8Rng::seed_from_u64(mix3(seed, b, attempt));
            perm.copy_from_slice(&identity);
            for i in (1..n).rev() {
                let j = rng.random_range(0..=i);
                perm.swap(i, j);
            }
            match evaluator.eval(&perm) {
                Ok(t) => break t,
                Err(ConcordError::UndefinedStatistic(_)) => {
                    redraws += 1;
                    let budget = (0.01 * (used + redraws) as f64).ceil().max(1.0);
                    if redraws as f64 > budget {
                        return Err(ConcordError::DegenerateInput(format!(
                            "permutation null is degenerate: statistic undefined on {redraws} \
                             of {} resampled datasets",
                            used + redraws
                        )));
                    }
                }
                Err(e) => return Err(e),
            }
        };
        used = b + 1;
        let dev = t - center;
        let exceeds = match alternative {
            Alternative::TwoSided => dev.abs() >= dev_obs.abs(),
            Alternative::Greater => dev >= dev_obs,
            Alternative::Less => dev <= dev_obs,
        };
        if exceeds {
            exceedances += 1;
        }
        if let Some(d) = boundary(exceedances, used) {
            decision = d;
            break 'draws;
        }
    }

    Ok(PermDecision {
        decision,
        p_estimate: (exceedances + 1) as f64 / (used + 1) as f64,
        permutations_used: used,
        exceedances,
        seed,
    })
}

/// Per-statistic state reused across permutations. Each variant reproduces
/// the arithmetic of the plain evaluator on the permuted sample operation
/// for operation, so its estimates are bit-identical to evaluating
/// [`Statistic::evaluate`] on the materialized permutation.
enum PermEvaluator {
    /// Also serves Spearman, prepared on midranks.
    Pearson(PreparedPearson),
    Ci(PreparedCi),
    Rci(PreparedRci),
    KciTable(PreparedKciTable),
    KciDirect {
        x: Vec<f64>,
        y: Vec<f64>,
        kernel: KernelSpec,
    },
}

impl PermEvaluator {
    fn prepare(statistic: &Statistic, sample: &PairedSample) -> Result<Self> {
        Ok(match statistic {
            Statistic::Pearson => {
                Self::Pearson(PreparedPearson::new(sample.x().to_vec(), sample.y().to_vec()))
            }
            Statistic::Spearman => Self::Pearson(PreparedPearson::new(
                midranks(sample.x()),
                midranks(sample.y()),
            )),
            Statistic::Ci => Self::Ci(PreparedCi::new(sample)),
            Statistic::Rci(p) => Self::Rci(PreparedRci::new(sample, *p)),
            Statistic::Kci(k) => {
                if sample.n() <= KCI_TABLE_LIMIT {
                    Self::KciTable(PreparedKciTable::new(sample, *k))
                } else {
                    Self::KciDirect {
                        x: sample.x().to_vec(),
                        y: sample.y().to_vec(),
                        kernel: *k,
                    }
                }
            }
        })
    }

    fn eval(&mut self, perm: &[usize]) -> Result<f64> {
        match self {
            Self::Pearson(p) => p.eval(perm),
            Self::Ci(c) => c.eval(perm),
            Self::Rci(r) => r.eval(perm),
            Self::KciTable(k) => k.eval(perm),
            Self::KciDirect { x, y, kernel } => kci_direct(x, y, *kernel, perm),
        }
    }
}

struct PreparedPearson {
    /// x centered on its mean; the x sum of squares never changes.
    xc: Vec<f64>,
    sxx: f64,
    y: Vec<f64>,
    n: f64,
}

impl PreparedPearson {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let xc: Vec<f64> = x.iter().map(|&a| a - mx).collect();
        let mut sxx = 0.0;
        for &dx in &xc {
            sxx += dx * dx;
        }
        Self { xc, sxx, y, n }
    }

    fn eval(&self, perm: &[usize]) -> Result<f64> {
        // The y mean is recomputed in permuted order, exactly as a fresh
        // evaluation would see it.
        let my = perm.iter().map(|&p| self.y[p]).sum::<f64>() / self.n;
        let (mut syy, mut sxy) = (0.0, 0.0);
        for (dx, &p) in self.xc.iter().zip(perm) {
            let dy = self.y[p] - my;
            syy += dy * dy;
            sxy += dx * dy;
        }
        if self.sxx == 0.0 || syy == 0.0 {
            return Err(ConcordError::UndefinedStatistic(
                "correlation of a constant vector".into(),
            ));
        }
        Ok((sxy / (self.sxx * syy).sqrt()).clamp(-1.0, 1.0))
    }
}

struct PreparedCi {
    y: Vec<f64>,
    /// Indices in ascending-x order and the x-tie runs over positions.
    idx: Vec<usize>,
    runs: Vec<(usize, usize)>,
    tx: u64,
    ty: u64,
    total_pairs: f64,
    seq: Vec<f64>,
    buf: Vec<f64>,
}

impl PreparedCi {
    fn new(sample: &PairedSample) -> Self {
        let (x, y) = (sample.x(), sample.y());
        let n = x.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());
        let mut runs = Vec::new();
        let mut tx = 0;
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && x[idx[j + 1]] == x[idx[i]] {
                j += 1;
            }
            tx += pairs_of(j - i + 1);
            runs.push((i, j));
            i = j + 1;
        }
        let mut ys = y.to_vec();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ty = tie_pairs_sorted(&ys);
        Self {
            y: y.to_vec(),
            idx,
            runs,
            tx,
            ty,
            total_pairs: sample.n_pairs(),
            seq: vec![0.0; n],
            buf: vec![0.0; n],
        }
    }

    fn eval(&mut self, perm: &[usize]) -> Result<f64> {
        // Rebuild the y sequence in (x, y)-sorted order: ascending within
        // each x run. Counts depend only on the per-run value multisets,
        // so this matches a full re-sort of the permuted sample.
        let mut txy = 0u64;
        for &(s, e) in &self.runs {
            for p in s..=e {
                self.seq[p] = self.y[perm[self.idx[p]]];
            }
            if e > s {
                self.seq[s..=e].sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let mut a = s;
                while a <= e {
                    let mut b = a;
                    while b + 1 <= e && self.seq[b + 1] == self.seq[a] {
                        b += 1;
                    }
                    txy += pairs_of(b - a + 1);
                    a = b + 1;
                }
            }
        }
        let discordant = count_strict_inversions(&mut self.seq, &mut self.buf);
        let total = self.total_pairs as u64;
        let tied = self.tx + self.ty - txy;
        let concordant = total - tied - discordant;
        Ok(concordant as f64 / self.total_pairs)
    }
}

struct PreparedRci {
    order: Vec<usize>,
    /// Window size at each sweep position; the x margin never changes.
    w_pos: Vec<usize>,
    /// Rank of each original y value among the distinct sorted values.
    yrank: Vec<usize>,
    /// Per-rank search thresholds for the y margin, both sides.
    lo_tab: Vec<usize>,
    hi_tab: Vec<usize>,
    fen: Fenwick,
}

impl PreparedRci {
    fn new(sample: &PairedSample, params: RciParams) -> Self {
        let (x, y) = (sample.x(), sample.y());
        let n = x.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).unwrap());

        let mut w_pos = vec![0usize; n];
        let mut w = 0;
        for (pos, &j) in order.iter().enumerate() {
            while w < pos && x[j] - x[order[w]] > params.delta_x {
                w += 1;
            }
            w_pos[pos] = w;
        }

        let mut unique_y: Vec<f64> = y.to_vec();
        unique_y.sort_by(|a, b| a.partial_cmp(b).unwrap());
        unique_y.dedup();
        let yrank: Vec<usize> = y
            .iter()
            .map(|&v| unique_y.partition_point(|&u| u < v))
            .collect();
        let lo_tab: Vec<usize> = unique_y
            .iter()
            .map(|&v| unique_y.partition_point(|&u| v - u > params.delta_y))
            .collect();
        let hi_tab: Vec<usize> = unique_y
            .iter()
            .map(|&v| unique_y.partition_point(|&u| !(u - v > params.delta_y)))
            .collect();

        Self {
            order,
            w_pos,
            yrank,
            lo_tab,
            hi_tab,
            fen: Fenwick::new(unique_y.len()),
        }
    }

    fn eval(&mut self, perm: &[usize]) -> Result<f64> {
        self.fen.clear();
        let (mut concordant, mut valid) = (0u64, 0u64);
        let mut w = 0usize;
        for pos in 0..self.order.len() {
            while w < self.w_pos[pos] {
                self.fen.add(self.yrank[perm[self.order[w]]]);
                w += 1;
            }
            if w == 0 {
                continue;
            }
            let r = self.yrank[perm[self.order[pos]]];
            let below = self.fen.prefix(self.lo_tab[r]);
            let above = w as u64 - self.fen.prefix(self.hi_tab[r]);
            concordant += below;
            valid += below + above;
        }
        if valid == 0 {
            return Err(ConcordError::UndefinedStatistic(
                "rci: no pair clears both delta margins".into(),
            ));
        }
        Ok(concordant as f64 / valid as f64)
    }
}

struct PreparedKciTable {
    n: usize,
    /// Axis weights of |x_i - x_j| and |y_a - y_b|, full n x n.
    wx: Vec<f64>,
    wy: Vec<f64>,
    /// Pairwise difference signs, so the strict concordance indicator is a
    /// sign product.
    sx: Vec<i8>,
    sy: Vec<i8>,
}

impl PreparedKciTable {
    fn new(sample: &PairedSample, kernel: KernelSpec) -> Self {
        let (x, y) = (sample.x(), sample.y());
        let n = x.len();
        let mut wx = vec![0.0; n * n];
        let mut wy = vec![0.0; n * n];
        let mut sx = vec![0i8; n * n];
        let mut sy = vec![0i8; n * n];
        for i in 0..n {
            for j in 0..n {
                let dx = x[i] - x[j];
                let dy = y[i] - y[j];
                wx[i * n + j] = kernel.axis_weight_x(dx.abs());
                wy[i * n + j] = kernel.axis_weight_y(dy.abs());
                sx[i * n + j] = sign8(dx);
                sy[i * n + j] = sign8(dy);
            }
        }
        Self { n, wx, wy, sx, sy }
    }

    fn eval(&self, perm: &[usize]) -> Result<f64> {
        let n = self.n;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for j in 1..n {
            let b = perm[j];
            for i in 0..j {
                let a = perm[i];
                let w = self.wx[i * n + j] * self.wy[a * n + b];
                den += 2.0 * w;
                if i32::from(self.sx[i * n + j]) * i32::from(self.sy[a * n + b]) > 0 {
                    num += w;
                }
            }
        }
        if den == 0.0 {
            return Err(ConcordError::UndefinedStatistic(
                "kci: total kernel weight is zero".into(),
            ));
        }
        Ok(2.0 * num / den)
    }
}

fn sign8(d: f64) -> i8 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

fn kci_direct(x: &[f64], y: &[f64], kernel: KernelSpec, perm: &[usize]) -> Result<f64> {
    let (mut num, mut den) = (0.0f64, 0.0f64);
    for j in 1..x.len() {
        for i in 0..j {
            let dx = x[i] - x[j];
            let dy = y[perm[i]] - y[perm[j]];
            let w = kernel.weight(dx.abs(), dy.abs());
            den += 2.0 * w;
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
    Ok(2.0 * num / den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(x: &[f64], y: &[f64]) -> PairedSample {
        PairedSample::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn stop_spec_validation() {
        assert!(StopSpec::new(0.05, 0.0005, 1e-4, 2000).is_ok());
        assert!(StopSpec::new(0.0, 0.0005, 1e-4, 2000).is_err());
        assert!(StopSpec::new(0.05, 0.06, 1e-4, 2000).is_err());
        assert!(StopSpec::new(0.05, 0.0, 1e-4, 2000).is_err());
        assert!(StopSpec::new(0.05, 0.0005, 0.0, 2000).is_err());
        assert!(StopSpec::new(0.05, 0.0005, 1e-4, 19).is_err());
        let s = StopSpec::for_alpha(0.001).unwrap();
        assert_eq!(s.max_permutations, 100_000);
        assert!(s.delta > 0.0 && s.delta < s.alpha);
    }

    #[test]
    fn boundary_hits_at_expected_rates() {
        // All-exceedance stream: not significant within a handful of draws.
        let s = StopSpec::for_alpha(0.05).unwrap();
        let first = (1..100)
            .find(|&n| s.boundary(n, n) == Some(Decision::NotSignificant))
            .unwrap();
        assert!(first <= 6, "took {first} draws");
        // Zero-exceedance stream: significance near 10/alpha draws.
        let s = StopSpec::for_alpha(0.01).unwrap();
        let first = (1..20_000)
            .find(|&n| s.boundary(0, n) == Some(Decision::Significant))
            .unwrap();
        assert!((900..1100).contains(&first), "took {first} draws");
        // A stream sitting exactly on alpha never decides.
        let s = StopSpec::for_alpha(0.05).unwrap();
        for n in 1..=1000u64 {
            assert_eq!(s.boundary(n / 20, n), None);
        }
    }

    #[test]
    fn adaptive_detects_strong_association() {
        let x: Vec<f64> = (0..40).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0 + 1.0).collect();
        let s = sample(&x, &y);
        let stop = StopSpec::for_alpha(0.01).unwrap();
        let d = adaptive_permutation_test(&s, &Statistic::Pearson, &stop, 7).unwrap();
        assert_eq!(d.decision, Decision::Significant);
        assert_eq!(d.exceedances, 0);
        assert!(d.p_estimate < 0.01);
        assert!(d.permutations_used >= 900);
    }

    #[test]
    fn adaptive_rejects_nothing_on_noise() {
        let x: Vec<f64> = (0..30).map(f64::from).collect();
        let y: Vec<f64> = (0..30).map(|i| f64::from((i * 17) % 30)).collect();
        let s = sample(&x, &y);
        let stop = StopSpec::for_alpha(0.05).unwrap();
        let d = adaptive_permutation_test(&s, &Statistic::Ci, &stop, 3).unwrap();
        assert_eq!(d.decision, Decision::NotSignificant);
        assert!(d.permutations_used < stop.max_permutations);
        assert!(d.p_estimate > 0.05);
    }

    #[test]
    fn same_seed_same_decision() {
        let x: Vec<f64> = (0..25).map(f64::from).collect();
        let y: Vec<f64> = (0..25).map(|i| f64::from((i * 11) % 25)).collect();
        let s = sample(&x, &y);
        let stop = StopSpec::for_alpha(0.05).unwrap();
        let a = adaptive_permutation_test(&s, &Statistic::Spearman, &stop, 99).unwrap();
        let b = adaptive_permutation_test(&s, &Statistic::Spearman, &stop, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fixed_test_reports_exhausted() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = (0..20).map(|i| f64::from((i * 7) % 20)).collect();
        let s = sample(&x, &y);
        let d = fixed_permutation_test(&s, &Statistic::Ci, 199, 5).unwrap();
        assert_eq!(d.decision, Decision::Exhausted);
        assert_eq!(d.permutations_used, 199);
        assert_eq!(
            d.p_estimate,
            (d.exceedances + 1) as f64 / 200.0
        );
        assert!(fixed_permutation_test(&s, &Statistic::Ci, 0, 5).is_err());
    }

    #[test]
    fn undefined_observed_statistic_is_an_error() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = (0..10).map(|i| f64::from(i) * 0.5).collect();
        let s = sample(&x, &y);
        let stop = StopSpec::for_alpha(0.05).unwrap();
        let stat = Statistic::Rci(RciParams::new(100.0, 100.0).unwrap());
        assert!(matches!(
            adaptive_permutation_test(&s, &stat, &stop, 1),
            Err(ConcordError::UndefinedStatistic(_))
        ));
    }

    #[test]
    fn mostly_undefined_null_is_degenerate() {
        // x pairs clear the margin only against the last point; y pairs
        // only between the extreme values 0 and 1. The observed data keeps
        // those apart (defined), but 8 of 10 permutations park the y
        // extremes away from the x hub and leave no valid pair.
        let mut x = vec![0.0; 10];
        x[9] = 1.0;
        let mut y = vec![0.5; 10];
        y[0] = 1.0;
        y[9] = 0.0;
        let s = sample(&x, &y);
        let stop = StopSpec::for_alpha(0.05).unwrap();
        let stat = Statistic::Rci(RciParams::new(0.7, 0.7).unwrap());
        assert!(matches!(
            adaptive_permutation_test(&s, &stat, &stop, 11),
            Err(ConcordError::DegenerateInput(_))
        ));
    }

    #[test]
    fn one_sided_alternatives_bracket_two_sided() {
        let x: Vec<f64> = (0..24).map(f64::from).collect();
        let y: Vec<f64> = (0..24).map(|i| f64::from(i) + f64::from((i * 13) % 24)).collect();
        let s = sample(&x, &y);
        let g =
            fixed_permutation_test_with(&s, &Statistic::Ci, 499, 2, Alternative::Greater).unwrap();
        let l = fixed_permutation_test_with(&s, &Statistic::Ci, 499, 2, Alternative::Less).unwrap();
        // Complementary tails: every draw exceeds in exactly one direction
        // unless it ties the observed deviation.
        assert!(g.exceedances + l.exceedances >= 499);
        assert!(g.p_estimate < l.p_estimate);
    }
}
