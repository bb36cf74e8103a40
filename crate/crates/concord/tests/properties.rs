//! Invariant checks for the concordance family.
//!
//! The unit tests inside each module pin frozen values; these tests assert
//! the identities that must hold for arbitrary input: symmetry in the two
//! vectors, invariance under order-preserving maps, reversal antisymmetry,
//! the [0, 1] range, null centering, and the stopping rule's workload
//! profile. Inputs live on the dyadic grid k/64 with |k| <= 640 so that
//! every value, difference, shift by a multiple of 1/8, and cube is exact
//! in f64; that lets most assertions demand bit equality instead of hiding
//! behind a tolerance.

use proptest::prelude::*;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use concord::{
    adaptive_permutation_test, ci_fast, fixed_permutation_test, inversion_dist_multiset, kci,
    rci_fast, spearman, KernelSpec, MultisetSpec, PairedSample, RciParams, Statistic, StopSpec,
};

fn grid_value() -> impl Strategy<Value = f64> {
    (-640i32..=640).prop_map(|k| f64::from(k) / 64.0)
}

fn grid_pair(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(grid_value(), n),
            proptest::collection::vec(grid_value(), n),
        )
    })
}

/// Distinct grid values in random order, for tests that need tie-free data.
fn distinct_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    let candidates: Vec<f64> = (-640i32..=640).map(|k| f64::from(k) / 64.0).collect();
    proptest::sample::subsequence(candidates, n).prop_shuffle()
}

fn tie_free_pair(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max_n).prop_flat_map(|n| (distinct_vec(n), distinct_vec(n)))
}

fn sample(x: &[f64], y: &[f64]) -> PairedSample {
    PairedSample::new(x.to_vec(), y.to_vec()).unwrap()
}

/// Both sides defined: bit-equal estimates. Both undefined: fine. Mixed
/// definedness is itself a symmetry violation.
fn assert_same_outcome(
    a: concord::Result<concord::AssociationResult>,
    b: concord::Result<concord::AssociationResult>,
) -> std::result::Result<(), TestCaseError> {
    match (a, b) {
        (Ok(a), Ok(b)) => prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits()),
        (Err(_), Err(_)) => {}
        (a, b) => prop_assert!(false, "definedness differs: {:?} vs {:?}", a, b),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn ci_is_symmetric_in_its_arguments((x, y) in grid_pair(40)) {
        let a = ci_fast(&sample(&x, &y)).unwrap();
        let b = ci_fast(&sample(&y, &x)).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        prop_assert_eq!(a.effective_pairs.to_bits(), b.effective_pairs.to_bits());
    }

    #[test]
    fn rci_is_symmetric_once_the_deltas_swap_too(
        (x, y) in grid_pair(40),
        dx in 1usize..=16,
        dy in 1usize..=16,
    ) {
        let (dx, dy) = (dx as f64 / 8.0, dy as f64 / 8.0);
        let a = rci_fast(&sample(&x, &y), RciParams::new(dx, dy).unwrap());
        let b = rci_fast(&sample(&y, &x), RciParams::new(dy, dx).unwrap());
        assert_same_outcome(a, b)?;
    }

    #[test]
    fn ci_and_spearman_ignore_increasing_transforms((x, y) in grid_pair(40)) {
        // (k/64)^3 = k^3 / 2^18 is exact for |k| <= 640, and cubing
        // preserves both strict order and ties, so the estimates must
        // come out bit-identical, not merely close.
        let cube = |v: &f64| v * v * v;
        let cx: Vec<f64> = x.iter().map(cube).collect();
        let cy: Vec<f64> = y.iter().map(cube).collect();

        let base = ci_fast(&sample(&x, &y)).unwrap();
        prop_assert_eq!(
            ci_fast(&sample(&cx, &y)).unwrap().estimate.to_bits(),
            base.estimate.to_bits()
        );
        prop_assert_eq!(
            ci_fast(&sample(&x, &cy)).unwrap().estimate.to_bits(),
            base.estimate.to_bits()
        );

        let rho = |a: &[f64], b: &[f64]| spearman(&sample(a, b)).map(|r| r.estimate.to_bits());
        match (rho(&x, &y), rho(&cx, &cy)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "definedness differs: {:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn rci_and_kci_ignore_shared_shifts(
        (x, y) in grid_pair(30),
        cx in -64i32..=64,
        cy in -64i32..=64,
        d in 1usize..=12,
    ) {
        // Shifts by j/8 keep every coordinate an exact dyadic, so the
        // pairwise differences, and with them every validity flag and
        // kernel weight, are reproduced bit for bit.
        let (cx, cy) = (f64::from(cx) / 8.0, f64::from(cy) / 8.0);
        let sx: Vec<f64> = x.iter().map(|v| v + cx).collect();
        let sy: Vec<f64> = y.iter().map(|v| v + cy).collect();

        let params = RciParams::new(d as f64 / 8.0, d as f64 / 16.0).unwrap();
        assert_same_outcome(
            rci_fast(&sample(&x, &y), params),
            rci_fast(&sample(&sx, &sy), params),
        )?;

        let kernel = KernelSpec::logistic(-20.0, 0.25).unwrap();
        let a = kci(&sample(&x, &y), kernel).unwrap();
        let b = kci(&sample(&sx, &sy), kernel).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
    }

    #[test]
    fn negating_y_complements_ci((x, y) in tie_free_pair(40)) {
        // Tie-free, so reversal swaps the concordant and discordant sets
        // exactly; the two divisions round separately, hence the epsilon.
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let a = ci_fast(&sample(&x, &y)).unwrap().estimate;
        let b = ci_fast(&sample(&x, &neg)).unwrap().estimate;
        prop_assert!((a + b - 1.0).abs() < 1e-12, "ci {} + reversed {} != 1", a, b);
    }

    #[test]
    fn estimates_stay_inside_the_unit_interval(
        (x, y) in grid_pair(40),
        d in 1usize..=16,
        slope in 5.0f64..40.0,
        mid in 1usize..=16,
    ) {
        let s = sample(&x, &y);
        let mut results = vec![ci_fast(&s)];
        results.push(rci_fast(&s, RciParams::new(d as f64 / 8.0, d as f64 / 8.0).unwrap()));
        results.push(kci(&s, KernelSpec::unit()));
        results.push(kci(&s, KernelSpec::logistic(-slope, mid as f64 / 16.0).unwrap()));
        results.push(kci(&s, KernelSpec::heavyside(d as f64 / 8.0, d as f64 / 16.0).unwrap()));
        for r in results.into_iter().flatten() {
            prop_assert!(
                (0.0..=1.0).contains(&r.estimate),
                "estimate {} outside [0, 1]", r.estimate
            );
            prop_assert!(r.effective_pairs >= 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kci_is_symmetric_with_kernel_axes_swapped(
        (x, y) in grid_pair(30),
        slope in 5.0f64..40.0,
        mid in 1usize..=16,
        dx in 1usize..=12,
        dy in 1usize..=12,
    ) {
        // The logistic kernel applies the same weight on both axes, so
        // swapping x and y leaves every product term unchanged.
        let logistic = KernelSpec::logistic(-slope, mid as f64 / 16.0).unwrap();
        let a = kci(&sample(&x, &y), logistic).unwrap();
        let b = kci(&sample(&y, &x), logistic).unwrap();
        prop_assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());

        // Heavyside carries per-axis thresholds, which must swap with the
        // arguments just like the rCI deltas do.
        let (dx, dy) = (dx as f64 / 8.0, dy as f64 / 8.0);
        assert_same_outcome(
            kci(&sample(&x, &y), KernelSpec::heavyside(dx, dy).unwrap()),
            kci(&sample(&y, &x), KernelSpec::heavyside(dy, dx).unwrap()),
        )?;
    }

    #[test]
    fn multiset_null_is_symmetric_and_normalized(
        mult in proptest::collection::vec(1u64..=4, 2..=6)
    ) {
        // Reversing a word maps k inversions to max - k, a bijection on
        // arrangements, so the counts must be exactly palindromic. Totals
        // here stay below 2^53 and the counts are exact integers.
        let dist = inversion_dist_multiset(&MultisetSpec::new(mult).unwrap()).unwrap();
        let m = dist.counts.len();
        for k in 0..m {
            prop_assert_eq!(dist.counts[k].to_bits(), dist.counts[m - 1 - k].to_bits());
        }
        let total: f64 = dist.pmf.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9, "pmf sums to {}", total);
        prop_assert!(dist.pmf.iter().all(|&p| p >= 0.0));
    }
}

/// Independent shuffles of y center CI at 1/2. Monte Carlo contract:
/// mean over 10^4 shuffles at n = 100 lands within 0.01.
#[test]
fn shuffled_y_centers_ci_at_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let x: Vec<f64> = (0..100).map(|_| rng.random()).collect();
    let mut y: Vec<f64> = (0..100).map(|_| rng.random()).collect();
    let mut sum = 0.0;
    for _ in 0..10_000 {
        y.shuffle(&mut rng);
        sum += ci_fast(&sample(&x, &y)).unwrap().estimate;
    }
    let mean = sum / 1e4;
    assert!((mean - 0.5).abs() < 0.01, "shuffle mean {mean}");
}

/// A point nudged across the rCI validity boundary moves the hard-threshold
/// estimate by a full pair while the logistic kCI responds in O(epsilon).
#[test]
fn kci_moves_smoothly_where_rci_jumps() {
    // x[1] - x[0] = 0.125 = delta_x exactly (all dyadic), so pair (0, 1)
    // is invalid before the nudge and valid after; every other x gap is
    // at least 0.25, clear of the boundary.
    let x = vec![
        0.25, 0.375, 0.625, 0.875, 1.125, 1.4375, 1.75, 2.0, 2.3125, 2.625, 2.875, 3.25,
    ];
    let y = vec![
        0.10, 0.30, 0.22, 0.52, 0.44, 0.72, 0.60, 0.92, 1.00, 0.80, 1.12, 1.20,
    ];
    let eps = 2e-6;
    let mut x_nudged = x.clone();
    x_nudged[1] += eps;

    let params = RciParams::new(0.125, 0.01).unwrap();
    let kernel = KernelSpec::logistic(-20.0, 0.25).unwrap();

    let rci_jump = (rci_fast(&sample(&x_nudged, &y), params).unwrap().estimate
        - rci_fast(&sample(&x, &y), params).unwrap().estimate)
        .abs();
    let kci_step = (kci(&sample(&x_nudged, &y), kernel).unwrap().estimate
        - kci(&sample(&x, &y), kernel).unwrap().estimate)
        .abs();

    assert!(rci_jump > 1e-3, "rci jump {rci_jump} too small");
    assert!(kci_step < 1e-4, "kci step {kci_step} not O(eps)");
    assert!(
        rci_jump > 10.0 * kci_step,
        "rci jump {rci_jump} not clearly larger than kci step {kci_step}"
    );
}

/// The adaptive test works hardest when the true p-value sits near alpha
/// and stops early when it is far away on either side.
#[test]
fn stopping_effort_peaks_near_alpha() {
    let alpha = 0.05;
    let stop = StopSpec::for_alpha(alpha).unwrap();
    let stat = Statistic::Ci;
    let mut rng = ChaCha8Rng::seed_from_u64(60601);

    let mut near = Vec::new();
    let mut far = Vec::new();
    for i in 0..300u64 {
        let x: Vec<f64> = (0..25).map(|_| rng.random()).collect();
        let y: Vec<f64> = (0..25).map(|_| rng.random()).collect();
        let s = PairedSample::new(x, y).unwrap();
        // Classify each null draw by a long fixed run, then measure the
        // adaptive test's effort on the same data with a fresh seed.
        let probe = fixed_permutation_test(&s, &stat, 1500, 7_000 + i).unwrap();
        let adapt = adaptive_permutation_test(&s, &stat, &stop, 9_000 + i).unwrap();
        if (probe.p_estimate - alpha).abs() < 0.03 {
            near.push(adapt.permutations_used);
        } else if (probe.p_estimate - alpha).abs() > 0.25 {
            far.push(adapt.permutations_used);
        }
    }

    let median = |v: &mut Vec<u64>| {
        v.sort_unstable();
        v[v.len() / 2]
    };
    assert!(near.len() >= 5, "only {} draws near alpha", near.len());
    assert!(far.len() >= 50, "only {} draws far from alpha", far.len());
    let (m_near, m_far) = (median(&mut near), median(&mut far));
    assert!(
        m_near >= 4 * m_far,
        "median effort near alpha ({m_near}) should dwarf far ({m_far})"
    );
}
