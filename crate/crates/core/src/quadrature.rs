//! Composite quadrature on uniform grids, and the two integral functionals
//! everything else is built from: the accumulated value `W(T) = ∫₀^T U(c) dt`
//! and the value difference `D(T) = W₁(T) − W₂(T)`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{Grid, Problem, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum QuadratureRule {
    Trapezoid,
    /// Composite Simpson; with an odd interval count the final interval is
    /// closed with the trapezoid rule.
    #[default]
    Simpson,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("expected {expected} samples, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("trajectories are on different grids")]
    GridMismatch,
    #[error("utility evaluation failed at node {node}: {source}")]
    Utility { node: usize, source: EvalError },
}

/// Composite rule value of `samples` over `grid`.
pub fn integrate(samples: &[f64], grid: &Grid, rule: QuadratureRule) -> Result<f64, QuadratureError> {
    let expected = grid.node_count();
    if samples.len() != expected {
        return Err(QuadratureError::LengthMismatch {
            expected,
            found: samples.len(),
        });
    }
    let n = grid.intervals();
    if n == 0 || grid.horizon() == 0.0 {
        return Ok(0.0);
    }
    let h = grid.step();
    Ok(match rule {
        QuadratureRule::Trapezoid => trapezoid(samples, h),
        QuadratureRule::Simpson => {
            if n == 1 {
                trapezoid(samples, h)
            } else if n.is_multiple_of(2) {
                simpson(samples, h)
            } else {
                simpson(&samples[..n], h) + trapezoid(&samples[n - 1..], h)
            }
        }
    })
}

fn trapezoid(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    let inner: f64 = f[1..n].iter().sum();
    h * (0.5 * (f[0] + f[n]) + inner)
}

// Requires an even number of intervals.
fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    debug_assert!(n.is_multiple_of(2) && n >= 2);
    let odd: f64 = f[1..n].iter().step_by(2).sum();
    let even: f64 = f[2..n].iter().step_by(2).sum();
    h / 3.0 * (f[0] + f[n] + 4.0 * odd + 2.0 * even)
}

/// Node weights of the composite rule; they sum to the horizon.
pub fn weights(grid: &Grid, rule: QuadratureRule) -> Vec<f64> {
    let n = grid.intervals();
    let mut w = alloc::vec![0.0; n + 1];
    if n == 0 {
        return w;
    }
    let h = grid.step();
    let trap = |w: &mut [f64], from: usize| {
        for i in from..n {
            w[i] += 0.5 * h;
            w[i + 1] += 0.5 * h;
        }
    };
    match rule {
        QuadratureRule::Trapezoid => trap(&mut w, 0),
        QuadratureRule::Simpson if n == 1 => trap(&mut w, 0),
        QuadratureRule::Simpson => {
            let m = n - n % 2;
            for i in (0..m).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            trap(&mut w, m);
        }
    }
    w
}

fn utility_samples(traj: &Trajectory, p: &Problem) -> Result<Vec<f64>, QuadratureError> {
    traj.control
        .iter()
        .enumerate()
        .map(|(node, &c)| {
            p.utility_at(c)
                .map_err(|source| QuadratureError::Utility { node, source })
        })
        .collect()
}

/// `∫₀^T U(c(t)) dt`; the result is also stored in `traj.value`.
pub fn accumulated_value(traj: &mut Trajectory, p: &Problem, rule: QuadratureRule) -> Result<f64, QuadratureError> {
    let u = utility_samples(traj, p)?;
    let w = integrate(&u, &traj.grid, rule)?;
    traj.value = w;
    Ok(w)
}

/// `D(T) = ∫₀^T (U(c₁) − U(c₂)) dt`, integrated as one difference so that
/// linearly growing values do not cancel.
pub fn value_difference(
    first: &Trajectory,
    second: &Trajectory,
    p: &Problem,
    rule: QuadratureRule,
) -> Result<f64, QuadratureError> {
    if first.grid != second.grid {
        return Err(QuadratureError::GridMismatch);
    }
    let a = utility_samples(first, p)?;
    let b = utility_samples(second, p)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    integrate(&diff, &first.grid, rule)
}
