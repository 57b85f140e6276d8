// Pointwise maximization of H(c) = U(c) + λ·g(c, k) over the control box.

use crate::problem::Problem;

use super::SolverError;

pub(crate) struct ControlChoice {
    pub c: f64,
    /// More than one interior stationary point was a candidate.
    pub ambiguous: bool,
}

/// `∂H/∂c` at `(c, k, λ)`, `None` when it cannot be evaluated.
pub(crate) fn hamiltonian_slope(p: &Problem, c: f64, k: f64, lambda: f64) -> Option<f64> {
    let u = p.utility_dual(c).ok()?;
    let g = p.dynamics_dc(c, k).ok()?;
    let s = u.deriv + lambda * g.deriv;
    s.is_finite().then_some(s)
}

fn hamiltonian(p: &Problem, c: f64, k: f64, lambda: f64) -> f64 {
    match (p.utility_at(c), p.dynamics_at(c, k)) {
        (Ok(u), Ok(g)) => u + lambda * g,
        _ => f64::NEG_INFINITY,
    }
}

/// Slope at a bound, nudged inward when the bound itself is a singular
/// point of `U′` (e.g. `√c` at zero).
fn slope_near(p: &Problem, c: f64, inward: f64, k: f64, lambda: f64) -> Option<(f64, f64)> {
    if let Some(s) = hamiltonian_slope(p, c, k, lambda) {
        return Some((c, s));
    }
    let nudged = c + inward * 1e-12 * c.abs().max(1.0);
    hamiltonian_slope(p, nudged, k, lambda).map(|s| (nudged, s))
}

const SCAN_POINTS: usize = 9;

pub(crate) fn recover_control(p: &Problem, k: f64, lambda: f64) -> Result<ControlChoice, SolverError> {
    let fail = || SolverError::ControlRecovery { k, lambda };
    let (lo, hi) = p.control_bounds;
    if lo.is_finite() && hi.is_finite() {
        return recover_bounded(p, k, lambda, lo, hi).ok_or_else(fail);
    }
    // Expand from a finite anchor until the slope changes sign.
    let anchor = if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    };
    let (anchor, s0) = if lo.is_finite() {
        slope_near(p, anchor, 1.0, k, lambda).ok_or_else(fail)?
    } else if hi.is_finite() {
        slope_near(p, anchor, -1.0, k, lambda).ok_or_else(fail)?
    } else {
        (anchor, hamiltonian_slope(p, anchor, k, lambda).ok_or_else(fail)?)
    };
    if s0 == 0.0 {
        return Ok(ControlChoice {
            c: anchor,
            ambiguous: false,
        });
    }
    let dir = if s0 > 0.0 { 1.0 } else { -1.0 };
    if (dir > 0.0 && anchor == hi) || (dir < 0.0 && anchor == lo) {
        return Ok(ControlChoice {
            c: anchor,
            ambiguous: false,
        });
    }
    let mut step = anchor.abs().max(1.0);
    let mut prev = anchor;
    for _ in 0..80 {
        let mut next = anchor + dir * step;
        next = next.clamp(lo, hi);
        let s = match hamiltonian_slope(p, next, k, lambda) {
            Some(s) => s,
            None => return Err(fail()),
        };
        if s * dir <= 0.0 {
            let (a, b) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            let c = refine_root(p, k, lambda, a, b).ok_or_else(fail)?;
            return Ok(ControlChoice { c, ambiguous: false });
        }
        if next == lo || next == hi {
            return Ok(ControlChoice {
                c: next,
                ambiguous: false,
            });
        }
        prev = next;
        step *= 2.0;
        if step > 1e12 {
            break;
        }
    }
    Err(fail())
}

fn recover_bounded(p: &Problem, k: f64, lambda: f64, lo: f64, hi: f64) -> Option<ControlChoice> {
    let (a, sa) = slope_near(p, lo, 1.0, k, lambda)?;
    let (b, sb) = slope_near(p, hi, -1.0, k, lambda)?;
    let mut candidates: [f64; SCAN_POINTS + 1] = [f64::NAN; SCAN_POINTS + 1];
    let mut count = 0usize;
    if sa <= 0.0 {
        candidates[count] = lo;
        count += 1;
    }
    let mut interior = 0usize;
    let mut x_prev = a;
    let mut s_prev = sa;
    for j in 1..SCAN_POINTS {
        let x = if j == SCAN_POINTS - 1 {
            b
        } else {
            a + (b - a) * j as f64 / (SCAN_POINTS - 1) as f64
        };
        let s = if j == SCAN_POINTS - 1 {
            sb
        } else {
            hamiltonian_slope(p, x, k, lambda)?
        };
        if s_prev > 0.0 && s <= 0.0 {
            let root = if s == 0.0 {
                x
            } else {
                refine_root(p, k, lambda, x_prev, x)?
            };
            // a root sitting on the nudged upper end is the upper bound itself
            let root = if root == b { hi } else { root };
            if count < candidates.len() {
                candidates[count] = root;
                count += 1;
                interior += 1;
            }
        }
        x_prev = x;
        s_prev = s;
    }
    if sb > 0.0 && count < candidates.len() {
        candidates[count] = hi;
        count += 1;
    }
    if count == 0 {
        return None;
    }
    let mut best = candidates[0];
    if count > 1 {
        let mut best_h = hamiltonian(p, best, k, lambda);
        for &c in &candidates[1..count] {
            let h = hamiltonian(p, c, k, lambda);
            if h > best_h {
                best = c;
                best_h = h;
            }
        }
    }
    Some(ControlChoice {
        c: best,
        ambiguous: interior > 1,
    })
}

/// Root of the slope on `[a, b]` with `slope(a) > 0 ≥ slope(b)`
/// (Illinois variant of regula falsi).
fn refine_root(p: &Problem, k: f64, lambda: f64, mut a: f64, mut b: f64) -> Option<f64> {
    let f = |x: f64| hamiltonian_slope(p, x, k, lambda);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fb == 0.0 {
        return Some(b);
    }
    let mut side = 0i8;
    for _ in 0..200 {
        let width = b - a;
        if width.abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1e-300) {
            break;
        }
        let mut x = (a * fb - b * fa) / (fb - fa);
        if !(x > a && x < b) {
            x = 0.5 * (a + b);
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Some(x);
        }
        if fx > 0.0 {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        } else {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        }
    }
    Some(0.5 * (a + b))
}
