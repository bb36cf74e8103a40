//! Small numeric utilities shared across modules.

use crate::error::ConcordError;
use crate::Result;

/// Fenwick (binary indexed) tree over item counts, used by the O(n log n)
/// rCI sweep. Ranks are 0-based; `prefix(k)` counts items with rank < k.
pub(crate) struct Fenwick {
    tree: Vec<u32>,
    len: usize,
}

impl Fenwick {
    pub fn new(len: usize) -> Self {
        Self {
            tree: vec![0; len + 1],
            len,
        }
    }

    pub fn clear(&mut self) {
        self.tree.fill(0);
    }

    pub fn add(&mut self, rank: usize) {
        debug_assert!(rank < self.len);
        let mut i = rank + 1;
        while i <= self.len {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted items with rank < k.
    pub fn prefix(&self, k: usize) -> u64 {
        let mut i = k.min(self.len);
        let mut sum = 0u64;
        while i > 0 {
            sum += u64::from(self.tree[i]);
            i -= i & i.wrapping_neg();
        }
        sum
    }
}

/// Brent's method for a root of `f` in the bracket [a, b].
///
/// Requires f(a) and f(b) of opposite sign (or one of them zero). Converges
/// to |x - root| <= xtol. The usual combination of bisection, secant, and
/// inverse quadratic steps; see Brent, "Algorithms for Minimization without
/// Derivatives" (1973), ch. 4.
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(ConcordError::InvalidParameter(format!(
            "brent_root: no sign change on [{a}, {b}] (f = {fa}, {fb})"
        )));
    }
    // c is the previous iterate; (b, fb) is the best root estimate.
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = b - a;
    for _ in 0..max_iter {
        if fb.abs() > fc.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() < tol || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // Secant step.
                (2.0 * m * s, 1.0 - s)
            } else {
                // Inverse quadratic interpolation.
                let q = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0)),
                    (q - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q / 2.0).abs() * 2.0) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol {
            d
        } else if m > 0.0 {
            tol
        } else {
            -tol
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Err(ConcordError::NonConvergent(format!(
        "brent_root: no convergence in {max_iter} iterations (last x = {b})"
    )))
}
