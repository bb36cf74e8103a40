//! Paired observation vectors, the universal input to every statistic.

use serde::{Deserialize, Serialize};

use crate::error::ConcordError;
use crate::Result;

/// Two aligned measurement vectors of equal length n >= 2.
///
/// Construction rejects NaN and infinite entries so the statistics never
/// have to re-validate. The vectors are immutable after construction;
/// sharing a sample across threads is safe and cheap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    /// Builds a sample, validating lengths and finiteness.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(ConcordError::InvalidParameter(format!(
                "x and y must have equal length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        if x.len() < 2 {
            return Err(ConcordError::InvalidParameter(format!(
                "need at least 2 paired observations (got {})",
                x.len()
            )));
        }
        if let Some(i) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
            return Err(ConcordError::InvalidParameter(format!(
                "non-finite entry at flattened position {i}"
            )));
        }
        Ok(Self { x, y })
    }

    /// Builds a sample from option-valued columns, keeping only rows where
    /// both measurements are present (pairwise complete observations).
    pub fn from_pairwise_complete(x: &[Option<f64>], y: &[Option<f64>]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(ConcordError::InvalidParameter(format!(
                "x and y must have equal length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (a, b) in x.iter().zip(y) {
            if let (Some(a), Some(b)) = (a, b) {
                xs.push(*a);
                ys.push(*b);
            }
        }
        if xs.len() < 2 {
            return Err(ConcordError::DegenerateInput(format!(
                "fewer than 2 complete pairs ({} of {})",
                xs.len(),
                x.len()
            )));
        }
        Self::new(xs, ys)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// Number of unordered observation pairs, C(n,2), as f64.
    pub fn n_pairs(&self) -> f64 {
        let n = self.n() as f64;
        n * (n - 1.0) / 2.0
    }

    /// Sample with x and y swapped; useful for symmetry checks.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Sample with the same x and a replaced y. Lengths must match; used by
    /// noise injection and permutation plumbing.
    pub(crate) fn with_y(&self, y: Vec<f64>) -> Self {
        debug_assert_eq!(y.len(), self.x.len());
        Self {
            x: self.x.clone(),
            y,
        }
    }
}
