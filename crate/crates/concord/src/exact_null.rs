//! Exact null distributions of the CI, and the asymptotic reference tests.
//!
//! Under independence, the CI of a tie-free sample is a deterministic
//! transform of the number of inversions of a uniformly random permutation,
//! whose counts I_n(k) have the generating polynomial
//!
//! ```text
//! Phi_n(x) = prod_{j=1..n} (1 + x + ... + x^(j-1))
//! ```
//!
//! (Margolius, "Permutations with inversions", J. Integer Sequences 4
//! (2001)). When ties form a multiset with multiplicities a_1..a_m, the
//! counts are the coefficients of the Gaussian (q-)multinomial
//! [a; a_1..a_m]_x (Andrews, "The Theory of Partitions", ch. 3).
//!
//! Both polynomials are expanded here without any coefficient-space
//! multiplication or division: every factor is evaluated in closed form at
//! the M-th roots of unity, the per-bin product is accumulated, and a single
//! inverse FFT recovers the coefficients, which are rounded to the nearest
//! integer. Counts are kept as f64, which holds them up to n = 170 before
//! n! overflows; beyond that callers are directed to permutation testing.
//!
//! A note on precision: for large n the inverse transform carries absolute
//! noise of order n! * 1e-13 per coefficient, so far-tail counts whose true
//! relative mass is below ~1e-12 are meaningless. Every quantity this
//! module is used for (bulk pmf values, p-values down to remotely testable
//! magnitudes) lives where the relative error of the cdf is ~1e-9 or
//! better.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use crate::error::ConcordError;
use crate::sample::PairedSample;
use crate::Result;

/// Largest element count whose raw inversion counts fit in double
/// precision (170! < f64::MAX < 171!).
pub const MAX_EXACT_N: u64 = 170;

/// Direction of a significance test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// Evidence of concordance (CI above 0.5, few inversions).
    Greater,
    /// Evidence of discordance.
    Less,
}

/// Exact probability mass over inversion counts k = 0..=max_inversions.
///
/// `counts` holds the raw arrangement counts as reals (exact integers while
/// they fit; the paper-stated n <= 170 regime), `pmf` the normalized
/// probabilities. Both spec'd representations are therefore available
/// directly. Tail sums are precomputed from each end so p-value queries are
/// O(1) and tail-accurate.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionDistribution {
    pub n_elements: u64,
    pub max_inversions: u64,
    pub counts: Vec<f64>,
    pub pmf: Vec<f64>,
    cdf: Vec<f64>,
    sf: Vec<f64>,
}

impl InversionDistribution {
    fn from_counts(n_elements: u64, counts: Vec<f64>) -> Self {
        let total: f64 = counts.iter().sum();
        let pmf: Vec<f64> = counts.iter().map(|c| c / total).collect();
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for c in &counts {
            acc += c;
            cdf.push((acc / total).min(1.0));
        }
        let mut sf = vec![0.0; pmf.len()];
        let mut acc = 0.0;
        for (k, c) in counts.iter().enumerate().rev() {
            acc += c;
            sf[k] = (acc / total).min(1.0);
        }
        Self {
            n_elements,
            max_inversions: (counts.len() - 1) as u64,
            counts,
            pmf,
            cdf,
            sf,
        }
    }

    /// P(K <= k).
    pub fn cdf(&self, k: u64) -> f64 {
        if k >= self.max_inversions {
            1.0
        } else {
            self.cdf[k as usize]
        }
    }

    /// P(K >= k).
    pub fn sf(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else if k > self.max_inversions {
            0.0
        } else {
            self.sf[k as usize]
        }
    }

    /// Inversion count nearest to a CI value: k = round((1 - ci) * K).
    pub fn inversions_for_ci(&self, ci: f64) -> u64 {
        (((1.0 - ci) * self.max_inversions as f64).round() as u64).min(self.max_inversions)
    }
}

/// Tie structure of a vector: class multiplicities a_1..a_m, total a.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultisetSpec {
    multiplicities: Vec<u64>,
}

impl MultisetSpec {
    pub fn new(multiplicities: Vec<u64>) -> Result<Self> {
        if multiplicities.iter().any(|&a| a == 0) {
            return Err(ConcordError::InvalidParameter(
                "multiset multiplicities must all be >= 1".into(),
            ));
        }
        let spec = Self { multiplicities };
        if spec.total() < 2 {
            return Err(ConcordError::InvalidParameter(
                "multiset total must be >= 2".into(),
            ));
        }
        Ok(spec)
    }

    /// Multiplicities of the equivalence classes of exactly equal values,
    /// in ascending value order. This is how a tied observation vector maps
    /// onto its inversion null.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut mult = Vec::new();
        let mut i = 0;
        while i < v.len() {
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            mult.push((j - i + 1) as u64);
            i = j + 1;
        }
        Self::new(mult)
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.multiplicities
    }

    pub fn total(&self) -> u64 {
        self.multiplicities.iter().sum()
    }

    /// Maximum inversion count: pairs drawn from distinct classes.
    pub fn max_inversions(&self) -> u64 {
        let a = self.total();
        let sq: u64 = self.multiplicities.iter().map(|&x| x * x).sum();
        (a * a - sq) / 2
    }
}

/// One multiplicative factor of the generating polynomial, evaluated in
/// closed form at roots of unity. z_j denotes 1 + x + ... + x^(j-1).
enum Factor {
    /// z_m in the numerator.
    Plain { m: u64 },
    /// z_m / z_k with k | m: the cancelled form 1 + x^k + ... + x^(m-k).
    Quotient { k: u64, m: u64 },
    /// A leftover denominator z_k that found no numerator multiple.
    Denom { k: u64 },
}

/// Complex accumulator with an explicit power-of-two exponent, so products
/// of hundreds of factors can pass through magnitudes far outside f64
/// range (leftover denominators can push intermediates below 1e-400).
#[derive(Clone, Copy)]
struct Scaled {
    v: Complex64,
    exp: i32,
}

impl Scaled {
    fn one() -> Self {
        Self {
            v: Complex64::new(1.0, 0.0),
            exp: 0,
        }
    }

    fn mul(&mut self, w: Complex64) {
        self.v *= w;
        self.renorm();
    }

    fn div(&mut self, w: Complex64) {
        self.v /= w;
        self.renorm();
    }

    fn renorm(&mut self) {
        let m = self.v.re.abs().max(self.v.im.abs());
        if m > 1e100 {
            self.v *= 2f64.powi(-400);
            self.exp += 400;
        } else if m > 0.0 && m < 1e-100 {
            self.v *= 2f64.powi(400);
            self.exp -= 400;
        }
    }

    /// self / other collapsed to a plain complex number. The true bin
    /// values are bounded by n! so the combined exponent always lands in
    /// range; underflow of genuinely tiny bins flushes to zero.
    fn ratio(mut self, other: Scaled) -> Complex64 {
        self.v /= other.v;
        let mut e = self.exp - other.exp;
        while e > 400 {
            self.v *= 2f64.powi(400);
            e -= 400;
        }
        while e < -400 {
            self.v *= 2f64.powi(-400);
            e += 400;
        }
        self.v * 2f64.powi(e)
    }
}

/// Shared engine: evaluates the factor product at all M-th roots of unity,
/// inverse-transforms once, rounds, and symmetrizes.
fn dist_from_factors(
    n_elements: u64,
    k_max: u64,
    factors: &[Factor],
    expected_total: f64,
) -> Result<InversionDistribution> {
    if k_max == 0 {
        return Ok(InversionDistribution::from_counts(n_elements, vec![1.0]));
    }
    let m_fft = (k_max as usize + 1).next_power_of_two().max(2);
    let m64 = m_fft as u64;
    let scale = 1.0 / m_fft as f64;

    // roots[s] = exp(-2 pi i s / M); factor zeros are detected by exact
    // integer index arithmetic, never by comparing floats to zero.
    let roots: Vec<Complex64> = (0..m_fft)
        .map(|s| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * s as f64 / m_fft as f64))
        .collect();

    let mut bins = vec![Complex64::new(0.0, 0.0); m_fft];
    for (t, bin) in bins.iter_mut().enumerate() {
        let t64 = t as u64;
        if t == 0 {
            let mut acc = Scaled::one();
            for f in factors {
                match *f {
                    Factor::Plain { m } => acc.mul(Complex64::new(m as f64, 0.0)),
                    Factor::Quotient { k, m } => acc.mul(Complex64::new((m / k) as f64, 0.0)),
                    Factor::Denom { k } => acc.div(Complex64::new(k as f64, 0.0)),
                }
            }
            *bin = acc.ratio(Scaled::one()) * scale;
            continue;
        }
        let x = roots[t];
        let x_conj = roots[m_fft - t];
        let xm1 = x - 1.0;
        let power = |j: u64| roots[((j * t64) % m64) as usize];
        let mut num = Scaled::one();
        let mut den = Scaled::one();
        // Zero orders: the polynomial identity guarantees numerator zeros
        // cover denominator zeros at every root; equal orders are resolved
        // by first-derivative residuals (z_j has only simple roots here).
        let (mut zeros_num, mut zeros_den) = (0u32, 0u32);
        for f in factors {
            match *f {
                Factor::Plain { m } => {
                    if (m * t64) % m64 == 0 {
                        zeros_num += 1;
                        num.mul(m as f64 * x_conj / xm1);
                    } else {
                        num.mul((power(m) - 1.0) / xm1);
                    }
                }
                Factor::Quotient { k, m } => {
                    if (k * t64) % m64 == 0 {
                        // x^k = 1: every term of 1 + x^k + ... is 1.
                        num.mul(Complex64::new((m / k) as f64, 0.0));
                    } else if (m * t64) % m64 == 0 {
                        zeros_num += 1;
                        num.mul(m as f64 * x_conj / (power(k) - 1.0));
                    } else {
                        num.mul((power(m) - 1.0) / (power(k) - 1.0));
                    }
                }
                Factor::Denom { k } => {
                    if (k * t64) % m64 == 0 {
                        zeros_den += 1;
                        den.mul(k as f64 * x_conj / xm1);
                    } else {
                        den.mul((power(k) - 1.0) / xm1);
                    }
                }
            }
        }
        assert!(
            zeros_num >= zeros_den,
            "inversion generating function has a pole at bin {t}: this is a defect"
        );
        *bin = if zeros_num > zeros_den {
            Complex64::new(0.0, 0.0)
        } else {
            num.ratio(den) * scale
        };
    }

    FftPlanner::new().plan_fft_inverse(m_fft).process(&mut bins);

    // Symmetrize (I(k) = I(K - k) exactly), round, clamp transform noise.
    let k_max_us = k_max as usize;
    let counts: Vec<f64> = (0..=k_max_us)
        .map(|k| {
            let s = 0.5 * (bins[k].re + bins[k_max_us - k].re);
            s.round().max(0.0)
        })
        .collect();

    let total: f64 = counts.iter().sum();
    if !(total.is_finite() && ((total - expected_total) / expected_total).abs() < 1e-9) {
        return Err(ConcordError::PrecisionLimit(format!(
            "inversion counts failed normalization: got {total:e}, expected {expected_total:e}"
        )));
    }
    Ok(InversionDistribution::from_counts(n_elements, counts))
}

/// Exact inversion-count distribution of a tie-free permutation of n
/// elements, from the coefficients of Phi_n(x).
pub fn inversion_dist_no_ties(n: u64) -> Result<InversionDistribution> {
    if n < 2 {
        return Err(ConcordError::InvalidParameter(format!(
            "inversion distribution needs n >= 2 (got {n})"
        )));
    }
    if n > MAX_EXACT_N {
        return Err(ConcordError::PrecisionLimit(format!(
            "n = {n} > {MAX_EXACT_N}: raw counts overflow double precision; \
             use permutation testing instead"
        )));
    }
    let factors: Vec<Factor> = (2..=n).map(|m| Factor::Plain { m }).collect();
    let expected: f64 = (2..=n).map(|j| j as f64).product();
    dist_from_factors(n, n * (n - 1) / 2, &factors, expected)
}

/// Exact inversion-count distribution over arrangements of a multiset,
/// from the coefficients of the q-multinomial [a; a_1..a_m]_x.
///
/// The division by denominator q-factorials is eliminated where possible by
/// greedily cancelling each denominator factor z_k against the smallest
/// unused numerator factor z_m with k | m (quotient 1 + x^k + ... +
/// x^(m-k)). A perfect matching does not always exist (multiplicities
/// (4,4) already strand two denominator factors), so leftovers are handled
/// inside the transform-space evaluation, where the polynomial identity
/// keeps every bin finite.
pub fn inversion_dist_multiset(spec: &MultisetSpec) -> Result<InversionDistribution> {
    let alpha = spec.total();
    if alpha > MAX_EXACT_N {
        return Err(ConcordError::PrecisionLimit(format!(
            "multiset total {alpha} > {MAX_EXACT_N}: raw counts overflow double precision; \
             use permutation testing instead"
        )));
    }

    let mut avail = vec![false; alpha as usize + 1];
    for m in 2..=alpha {
        avail[m as usize] = true;
    }
    let mut dens: Vec<u64> = spec
        .multiplicities
        .iter()
        .flat_map(|&a| 2..=a)
        .collect();
    dens.sort_unstable_by(|a, b| b.cmp(a));

    let mut factors = Vec::new();
    for k in dens {
        let mut found = None;
        let mut m = k;
        while m <= alpha {
            if avail[m as usize] {
                found = Some(m);
                break;
            }
            m += k;
        }
        match found {
            Some(m) => {
                avail[m as usize] = false;
                if m > k {
                    factors.push(Factor::Quotient { k, m });
                }
            }
            None => factors.push(Factor::Denom { k }),
        }
    }
    for m in 2..=alpha {
        if avail[m as usize] {
            factors.push(Factor::Plain { m });
        }
    }

    let ln_total = ln_gamma(alpha as f64 + 1.0)
        - spec
            .multiplicities
            .iter()
            .map(|&a| ln_gamma(a as f64 + 1.0))
            .sum::<f64>();
    dist_from_factors(alpha, spec.max_inversions(), &factors, ln_total.exp())
}

/// Exact p-value of an observed CI against an inversion null.
///
/// High concordance means few inversions, so `Greater` is the lower tail in
/// k. The CI is rounded to the nearest attainable inversion count.
pub fn exact_ci_pvalue(
    ci: f64,
    null: &InversionDistribution,
    alternative: Alternative,
) -> Result<f64> {
    let k = checked_inversions(ci, null)?;
    Ok(match alternative {
        Alternative::Greater => null.cdf(k),
        Alternative::Less => null.sf(k),
        Alternative::TwoSided => (2.0 * null.cdf(k).min(null.sf(k))).min(1.0),
    })
}

/// Mid-p variant of [`exact_ci_pvalue`]: half the mass of the attained
/// count is removed from each tail. Used for uniformity diagnostics and QQ
/// plots, where the plain discrete p-value's staircase bias matters.
pub fn exact_ci_midp_pvalue(
    ci: f64,
    null: &InversionDistribution,
    alternative: Alternative,
) -> Result<f64> {
    let k = checked_inversions(ci, null)?;
    let half = 0.5 * null.pmf[k as usize];
    Ok(match alternative {
        Alternative::Greater => null.cdf(k) - half,
        Alternative::Less => null.sf(k) - half,
        Alternative::TwoSided => (2.0 * (null.cdf(k) - half).min(null.sf(k) - half)).min(1.0),
    })
}

fn checked_inversions(ci: f64, null: &InversionDistribution) -> Result<u64> {
    if !(0.0..=1.0).contains(&ci) {
        return Err(ConcordError::InvalidParameter(format!(
            "ci must lie in [0, 1] (got {ci})"
        )));
    }
    Ok(null.inversions_for_ci(ci))
}

/// Two-sided p-value of a Pearson correlation under the exact normal-theory
/// null: t = r * sqrt((n-2) / (1-r^2)) on n-2 degrees of freedom.
pub fn asymptotic_pearson_pvalue(r: f64, n: u64) -> Result<f64> {
    t_statistic_pvalue(r, n, "r")
}

/// Two-sided p-value of a Spearman correlation via the same t
/// approximation on n-2 degrees of freedom. This replaces the Edgeworth
/// expansion of David, Kendall & Stuart; it serves only as the asymptotic
/// foil in the calibration experiments.
pub fn asymptotic_spearman_pvalue(rho: f64, n: u64) -> Result<f64> {
    t_statistic_pvalue(rho, n, "rho")
}

fn t_statistic_pvalue(r: f64, n: u64, name: &str) -> Result<f64> {
    if n < 3 {
        return Err(ConcordError::InvalidParameter(format!(
            "t approximation needs n >= 3 (got {n})"
        )));
    }
    if !r.is_finite() || r.abs() > 1.0 {
        return Err(ConcordError::InvalidParameter(format!(
            "{name} must lie in [-1, 1] (got {r})"
        )));
    }
    if r.abs() == 1.0 {
        return Ok(0.0);
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    Ok(2.0 * dist.cdf(-t.abs()))
}

/// Asymptotic normal p-value for the CI, using Noether's variance built
/// from per-observation concordance counts.
///
/// With c_i (d_i) the number of partners strictly concordant (discordant)
/// with observation i, the plug-in estimates are
///
/// ```text
/// pc  = sum c_i / (n(n-1))             pd  = sum d_i / (n(n-1))
/// pcc = sum c_i(c_i-1) / (n(n-1)(n-2)) pdd analogous
/// pcd = sum c_i d_i / (n(n-1)(n-2))
/// C   = pc / (pc + pd)
/// var = (4/n) (pd^2 pcc - 2 pc pd pcd + pc^2 pdd) / (pc + pd)^4
/// ```
///
/// and z = (C - 1/2) / sqrt(var) is referred to N(0,1), two-sided. The
/// formula follows Noether (1967) as given in Pencina & D'Agostino,
/// "Overall C as a measure of discrimination in survival analysis",
/// Statistics in Medicine 23 (2004), eq. (4)-(5). This test exists to
/// reproduce its own miscalibration at moderate n; prefer the exact or
/// permutation nulls for inference.
pub fn asymptotic_ci_pvalue(sample: &PairedSample) -> Result<f64> {
    let n = sample.n();
    if n < 3 {
        return Err(ConcordError::InvalidParameter(format!(
            "asymptotic ci test needs n >= 3 (got {n})"
        )));
    }
    let (x, y) = (sample.x(), sample.y());
    let mut c = vec![0.0f64; n];
    let mut d = vec![0.0f64; n];
    for j in 1..n {
        for i in 0..j {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 || dy == 0.0 {
                continue;
            }
            if (dx > 0.0) == (dy > 0.0) {
                c[i] += 1.0;
                c[j] += 1.0;
            } else {
                d[i] += 1.0;
                d[j] += 1.0;
            }
        }
    }
    let nf = n as f64;
    let pairs2 = nf * (nf - 1.0);
    let pairs3 = pairs2 * (nf - 2.0);
    let pc = c.iter().sum::<f64>() / pairs2;
    let pd = d.iter().sum::<f64>() / pairs2;
    if pc + pd == 0.0 {
        return Err(ConcordError::DegenerateInput(
            "asymptotic ci test: every pair is tied".into(),
        ));
    }
    let chat = pc / (pc + pd);
    if chat == 0.5 {
        return Ok(1.0);
    }
    let pcc = c.iter().map(|&v| v * (v - 1.0)).sum::<f64>() / pairs3;
    let pdd = d.iter().map(|&v| v * (v - 1.0)).sum::<f64>() / pairs3;
    let pcd = c.iter().zip(&d).map(|(&a, &b)| a * b).sum::<f64>() / pairs3;
    let var = (4.0 / nf) * (pd * pd * pcc - 2.0 * pc * pd * pcd + pc * pc * pdd)
        / (pc + pd).powi(4);
    if var > 0.0 && var.is_finite() {
        let z = (chat - 0.5) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        Ok(2.0 * normal.cdf(-z.abs()))
    } else if pc == 0.0 || pd == 0.0 {
        // Perfect (dis)concordance: the variance estimate collapses to 0
        // while C sits at an extreme; the z statistic diverges.
        Ok(0.0)
    } else {
        Err(ConcordError::DegenerateInput(format!(
            "asymptotic ci test: non-positive variance estimate {var:e} away from the null center"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn no_ties_small_counts() {
        assert_eq!(inversion_dist_no_ties(2).unwrap().counts, vec![1.0, 1.0]);
        // All 6 permutations of 3 elements by inversion count.
        let d = inversion_dist_no_ties(3).unwrap();
        assert_eq!(d.counts, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(d.max_inversions, 3);
        let d = inversion_dist_no_ties(4).unwrap();
        assert_eq!(d.counts, vec![1.0, 3.0, 5.0, 6.0, 5.0, 3.0, 1.0]);
    }

    #[test]
    fn no_ties_domain_checks() {
        assert!(matches!(
            inversion_dist_no_ties(1),
            Err(ConcordError::InvalidParameter(_))
        ));
        assert!(matches!(
            inversion_dist_no_ties(171),
            Err(ConcordError::PrecisionLimit(_))
        ));
        // The stated boundary itself must work.
        let d = inversion_dist_no_ties(170).unwrap();
        assert_abs_diff_eq!(d.pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn pmf_is_symmetric_and_normalized() {
        for n in [5u64, 17, 60, 100] {
            let d = inversion_dist_no_ties(n).unwrap();
            let k = d.max_inversions as usize;
            for i in 0..=k {
                assert_eq!(d.pmf[i], d.pmf[k - i], "n={n} bin {i}");
            }
            assert_abs_diff_eq!(d.pmf.iter().sum::<f64>(), 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn multiset_small_counts() {
        // Arrangements of {a,a,b}: bab has 1, bba has 2, aab has 0... the
        // inversion counts are 0,1,2 once each.
        let d = inversion_dist_multiset(&MultisetSpec::new(vec![2, 1]).unwrap()).unwrap();
        assert_eq!(d.counts, vec![1.0, 1.0, 1.0]);
        // {a,a,b,b}: C(4,2) = 6 arrangements, counts 1,1,2,1,1 over k=0..4.
        let d = inversion_dist_multiset(&MultisetSpec::new(vec![2, 2]).unwrap()).unwrap();
        assert_eq!(d.counts, vec![1.0, 1.0, 2.0, 1.0, 1.0]);
        // Single class: one arrangement, zero inversions.
        let d = inversion_dist_multiset(&MultisetSpec::new(vec![4]).unwrap()).unwrap();
        assert_eq!(d.counts, vec![1.0]);
    }

    #[test]
    fn multiset_of_singletons_is_the_permutation_null() {
        let d1 = inversion_dist_multiset(&MultisetSpec::new(vec![1; 7]).unwrap()).unwrap();
        let d2 = inversion_dist_no_ties(7).unwrap();
        assert_eq!(d1.counts, d2.counts);
    }

    #[test]
    fn multiset_strands_factors_but_stays_exact() {
        // (4,4) defeats greedy cancellation; the leftover path must still
        // produce the exact central Gaussian binomial [8 choose 4]_x.
        let d = inversion_dist_multiset(&MultisetSpec::new(vec![4, 4]).unwrap()).unwrap();
        assert_eq!(d.counts.iter().sum::<f64>(), 70.0);
        assert_eq!(d.max_inversions, 16);
        assert_eq!(d.counts[0], 1.0);
        assert_eq!(d.counts[1], 1.0);
        assert_eq!(d.counts[2], 2.0);
        // Coefficients of [8 choose 4]_x peak at 8 for k = 8.
        assert_eq!(d.counts[8], 8.0);
    }

    #[test]
    fn multiset_spec_validation_and_from_values() {
        assert!(MultisetSpec::new(vec![]).is_err());
        assert!(MultisetSpec::new(vec![0, 2]).is_err());
        assert!(MultisetSpec::new(vec![1]).is_err());
        let s = MultisetSpec::from_values(&[3.0, 1.0, 3.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.multiplicities(), &[1, 1, 3]);
        assert_eq!(s.total(), 5);
        assert_eq!(s.max_inversions(), (25 - 11) / 2);
    }

    #[test]
    fn exact_pvalue_frozen_values() {
        let d = inversion_dist_no_ties(3).unwrap();
        // One of 3! = 6 permutations has zero inversions.
        assert_abs_diff_eq!(
            exact_ci_pvalue(1.0, &d, Alternative::Greater).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            exact_ci_pvalue(0.0, &d, Alternative::Less).unwrap(),
            1.0 / 6.0,
            epsilon = 1e-15
        );
        assert_eq!(
            exact_ci_pvalue(0.5, &d, Alternative::TwoSided).unwrap(),
            1.0
        );
        assert!(exact_ci_pvalue(1.5, &d, Alternative::Greater).is_err());
    }

    #[test]
    fn midp_shrinks_each_tail() {
        let d = inversion_dist_no_ties(6).unwrap();
        for ci in [1.0, 0.8, 0.5, 0.2] {
            for alt in [Alternative::Greater, Alternative::Less] {
                let plain = exact_ci_pvalue(ci, &d, alt).unwrap();
                let mid = exact_ci_midp_pvalue(ci, &d, alt).unwrap();
                assert!(mid < plain);
                assert!(mid > 0.0);
            }
        }
    }

    #[test]
    fn pearson_pvalue_frozen_values() {
        assert_eq!(asymptotic_pearson_pvalue(0.0, 50).unwrap(), 1.0);
        assert_eq!(asymptotic_pearson_pvalue(1.0, 10).unwrap(), 0.0);
        assert!(asymptotic_pearson_pvalue(0.999_999_9, 30).unwrap() < 1e-12);
        // t = 0.3 sqrt(98 / 0.91) = 3.11325 on 98 df.
        let p = asymptotic_pearson_pvalue(0.3, 100).unwrap();
        assert_abs_diff_eq!(p, 0.00243, epsilon = 2e-5);
        assert!(asymptotic_pearson_pvalue(1.2, 10).is_err());
        assert!(asymptotic_pearson_pvalue(0.5, 2).is_err());
    }

    #[test]
    fn spearman_pvalue_frozen_values() {
        assert_eq!(asymptotic_spearman_pvalue(0.0, 12).unwrap(), 1.0);
        // t = 0.8 sqrt(8 / 0.36) = 3.77124 on 8 df.
        let p = asymptotic_spearman_pvalue(0.8, 10).unwrap();
        assert_abs_diff_eq!(p, 0.00544, epsilon = 2e-5);
        assert!(asymptotic_spearman_pvalue(0.95, 8).unwrap() < 1e-3);
    }

    #[test]
    fn noether_test_edge_cases() {
        let s = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(asymptotic_ci_pvalue(&s).unwrap(), 0.0);
        // 3 concordant, 3 discordant pairs: C lands exactly on 0.5.
        let s = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0], vec![2.0, 4.0, 1.0, 3.0]).unwrap();
        assert_eq!(asymptotic_ci_pvalue(&s).unwrap(), 1.0);
        // All pairs tied in x.
        let s = PairedSample::new(vec![1.0, 1.0, 1.0], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            asymptotic_ci_pvalue(&s),
            Err(ConcordError::DegenerateInput(_))
        ));
    }

    #[test]
    fn noether_test_moderate_sample() {
        // A mildly concordant sample should give a p-value strictly inside
        // (0, 1); exact magnitude is pinned by the oracle integration test.
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..30)
            .map(|i| i as f64 + if i % 3 == 0 { 9.0 } else { -2.5 } * ((i % 7) as f64))
            .collect();
        let s = PairedSample::new(x, y).unwrap();
        let p = asymptotic_ci_pvalue(&s).unwrap();
        assert!(p > 0.0 && p < 1.0);
    }
}
