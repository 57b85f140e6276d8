use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::CriterionError;
use crate::math;

/// Samples `s_j` at strictly increasing indices `T_j`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SampledSequence {
    index: Vec<f64>,
    values: Vec<f64>,
}

impl SampledSequence {
    pub fn new(index: Vec<f64>, values: Vec<f64>) -> Result<Self, CriterionError> {
        if index.len() != values.len() {
            return Err(CriterionError::Sequence("index and values differ in length"));
        }
        if index.len() < 2 {
            return Err(CriterionError::TooFewSamples {
                needed: 2,
                found: index.len(),
            });
        }
        if index.iter().any(|t| !t.is_finite()) || index.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CriterionError::Sequence("index must be finite and strictly increasing"));
        }
        Ok(Self { index, values })
    }

    /// Samples at `1, 2, …, n`.
    pub fn from_values(values: Vec<f64>) -> Result<Self, CriterionError> {
        let index = (1..=values.len()).map(|j| j as f64).collect();
        Self::new(index, values)
    }

    pub fn index(&self) -> &[f64] {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Pointwise product; indices must agree exactly.
    pub fn product(&self, other: &Self) -> Result<Self, CriterionError> {
        if self.index != other.index {
            return Err(CriterionError::IndexMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self {
            index: self.index.clone(),
            values,
        })
    }

    pub fn negated(&self) -> Self {
        Self {
            index: self.index.clone(),
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    fn tail(&self, tail_fraction: f64) -> Result<&[f64], CriterionError> {
        if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
            return Err(CriterionError::TailFraction(tail_fraction));
        }
        let n = self.values.len();
        let len = (math::ceil(tail_fraction * n as f64) as usize).clamp(2, n);
        Ok(&self.values[n - len..])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Trend {
    Decreasing,
    Increasing,
    Oscillating,
    Flat,
}

pub const LIMINF_CAVEAT: &str = "finite-sample estimate; not a proof";

/// Relative step size below which a sequence counts as flat.
const DELTA: f64 = 1e-6;

/// Tail infimum of a sampled sequence, standing in for `liminf`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LiminfEstimate {
    /// Minimum over the tail samples.
    pub estimate: f64,
    /// The tail keeps falling by steps that do not shrink.
    pub unbounded_below: bool,
    pub tail_fraction: f64,
    pub tail_len: usize,
    pub trend: Trend,
    pub caveat: &'static str,
}

impl LiminfEstimate {
    /// `estimate`, or `−∞` when the tail is unbounded below.
    pub fn value(&self) -> f64 {
        if self.unbounded_below {
            f64::NEG_INFINITY
        } else {
            self.estimate
        }
    }
}

fn classify(tail: &[f64]) -> Trend {
    let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let last = tail[tail.len() - 1];
    if hi - lo <= DELTA * (1.0 + last.abs()) {
        return Trend::Flat;
    }
    let steps = || tail.windows(2).map(|w| w[1] - w[0]);
    if steps().all(|d| d <= 0.0) {
        Trend::Decreasing
    } else if steps().all(|d| d >= 0.0) {
        Trend::Increasing
    } else {
        Trend::Oscillating
    }
}

/// Every tail step falls by at least `δ·(1 + |s|)` and the drops do not
/// shrink; shrinking drops (e.g. `1/T`) point at a finite limit instead.
fn falls_without_bound(tail: &[f64]) -> bool {
    let mut prev_drop = 0.0f64;
    for w in tail.windows(2) {
        let drop = w[0] - w[1];
        if drop < DELTA * (1.0 + w[0].abs()) {
            return false;
        }
        if drop < prev_drop * (1.0 - DELTA) {
            return false;
        }
        prev_drop = drop;
    }
    true
}

pub fn liminf_estimate(s: &SampledSequence, tail_fraction: f64) -> Result<LiminfEstimate, CriterionError> {
    let tail = s.tail(tail_fraction)?;
    let estimate = tail.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(LiminfEstimate {
        estimate,
        unbounded_below: falls_without_bound(tail),
        tail_fraction,
        tail_len: tail.len(),
        trend: classify(tail),
        caveat: LIMINF_CAVEAT,
    })
}

/// Comparison of `liminf(a·b)` with `liminf(a)·lim(b)`, valid when `b`
/// converges and both liminfs are positive.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ProductReport {
    pub liminf_product: f64,
    pub liminf_a: f64,
    pub liminf_b: f64,
    /// `lim b` (its last tail sample) when `b` is detected convergent.
    pub limit_b: Option<f64>,
    /// `liminf(a)·lim(b)`, or `liminf(a)·liminf(b)` when `b` does not converge.
    pub rhs: f64,
    pub discrepancy: f64,
    pub b_convergent: bool,
    pub verified: bool,
    pub status: String,
}

pub fn liminf_product_check(
    a: &SampledSequence,
    b: &SampledSequence,
    tail_fraction: f64,
    tail_tol: f64,
) -> Result<ProductReport, CriterionError> {
    let ab = a.product(b)?;
    let la = liminf_estimate(a, tail_fraction)?;
    let lb = liminf_estimate(b, tail_fraction)?;
    let lab = liminf_estimate(&ab, tail_fraction)?;
    let b_tail = b.tail(tail_fraction)?;
    let (lo, hi) = b_tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let b_convergent = hi - lo <= tail_tol;
    let limit_b = b_convergent.then(|| b_tail[b_tail.len() - 1]);
    let rhs = la.estimate * limit_b.unwrap_or(lb.estimate);
    let discrepancy = (lab.estimate - rhs).abs();
    let positive = la.estimate > 0.0 && lb.estimate > 0.0;
    let verified = b_convergent && positive && discrepancy <= tail_tol;
    let status = if !b_convergent {
        format!(
            "unverified: b not convergent (liminf(ab) = {:?}, liminf(a)*liminf(b) = {:?})",
            lab.estimate, rhs
        )
    } else if !positive {
        String::from("unverified: liminf of a or b not positive")
    } else if verified {
        format!("verified: |liminf(ab) - liminf(a)*lim(b)| = {discrepancy:e} <= {tail_tol:e}")
    } else {
        format!("failed: |liminf(ab) - liminf(a)*lim(b)| = {discrepancy:e} > {tail_tol:e}")
    };
    Ok(ProductReport {
        liminf_product: lab.estimate,
        liminf_a: la.estimate,
        liminf_b: lb.estimate,
        limit_b,
        rhs,
        discrepancy,
        b_convergent,
        verified,
        status,
    })
}
