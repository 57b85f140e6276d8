//! Single shooting on the initial costate `λ(0)`.
//!
//! The coupled system is `k̇ = g(c*, k)`, `λ̇ = −λ·∂g/∂k(c*, k)` with
//! `c* = argmax_c U(c) + λ g(c, k)` recovered at every stage. The terminal
//! condition is `λ(T) = 0` when the free-terminal path stays above the state
//! bound, and `k(T) = k_lb` (with `λ(T) ≥ 0`) when it does not.

use alloc::vec::Vec;

use crate::problem::{Grid, Problem};

use super::control::recover_control;
use super::{Integrator, SolverError, SolverOptions, Terminal};

pub(crate) struct Shot {
    pub control: Vec<f64>,
    pub state: Vec<f64>,
    pub costate: Vec<f64>,
    pub ambiguous: usize,
}

pub(crate) struct ShootingResult {
    pub shot: Shot,
    pub lambda0: f64,
    pub terminal: Terminal,
    pub iterations: usize,
}

/// `(k̇, λ̇, c*)` at `(k, λ)`.
fn rhs(p: &Problem, k: f64, lambda: f64) -> Result<(f64, f64, f64, bool), SolverError> {
    let choice = recover_control(p, k, lambda)?;
    let g = p.dynamics_dk(choice.c, k).map_err(SolverError::Eval)?;
    Ok((g.value, -lambda * g.deriv, choice.c, choice.ambiguous))
}

pub(crate) fn integrate(p: &Problem, grid: &Grid, lambda0: f64, integrator: Integrator) -> Result<Shot, SolverError> {
    let n = grid.node_count();
    let h = grid.step();
    let mut shot = Shot {
        control: Vec::with_capacity(n),
        state: Vec::with_capacity(n),
        costate: Vec::with_capacity(n),
        ambiguous: 0,
    };
    let (mut k, mut lam) = (p.initial_capital, lambda0);
    let (mut dk, mut dl, c0, amb) = rhs(p, k, lam)?;
    shot.control.push(c0);
    shot.state.push(k);
    shot.costate.push(lam);
    shot.ambiguous += amb as usize;
    for _ in 0..grid.intervals() {
        let (k1, l1) = match integrator {
            Integrator::Rk4 => {
                let (a_k, a_l) = (dk, dl);
                let (b_k, b_l, _, _) = rhs(p, k + 0.5 * h * a_k, lam + 0.5 * h * a_l)?;
                let (c_k, c_l, _, _) = rhs(p, k + 0.5 * h * b_k, lam + 0.5 * h * b_l)?;
                let (d_k, d_l, _, _) = rhs(p, k + h * c_k, lam + h * c_l)?;
                (
                    k + h / 6.0 * (a_k + 2.0 * b_k + 2.0 * c_k + d_k),
                    lam + h / 6.0 * (a_l + 2.0 * b_l + 2.0 * c_l + d_l),
                )
            }
            Integrator::Trapezoid => trapezoid_step(p, h, k, lam, dk, dl)?,
        };
        if !(k1.is_finite() && l1.is_finite()) {
            return Err(SolverError::Diverged);
        }
        k = k1;
        lam = l1;
        let (nk, nl, c, amb) = rhs(p, k, lam)?;
        dk = nk;
        dl = nl;
        shot.control.push(c);
        shot.state.push(k);
        shot.costate.push(lam);
        shot.ambiguous += amb as usize;
    }
    Ok(shot)
}

/// Implicit trapezoid step for the coupled `(k, λ)` system.
fn trapezoid_step(p: &Problem, h: f64, k: f64, lam: f64, dk: f64, dl: f64) -> Result<(f64, f64), SolverError> {
    let residual = |x: (f64, f64)| -> Result<(f64, f64), SolverError> {
        let (fk, fl, _, _) = rhs(p, x.0, x.1)?;
        Ok((x.0 - k - 0.5 * h * (dk + fk), x.1 - lam - 0.5 * h * (dl + fl)))
    };
    // Heun predictor
    let (pk, pl, _, _) = rhs(p, k + h * dk, lam + h * dl)?;
    let mut x = (k + 0.5 * h * (dk + pk), lam + 0.5 * h * (dl + pl));
    let done =
        |d: (f64, f64), x: (f64, f64)| d.0.abs() <= 1e-14 * (1.0 + x.0.abs()) && d.1.abs() <= 1e-14 * (1.0 + x.1.abs());

    let mut r = residual(x)?;
    for _ in 0..30 {
        if r.0 == 0.0 && r.1 == 0.0 {
            return Ok(x);
        }
        let dk_ = 1e-7 * (1.0 + x.0.abs());
        let dl_ = 1e-7 * (1.0 + x.1.abs());
        let rk = residual((x.0 + dk_, x.1))?;
        let rl = residual((x.0, x.1 + dl_))?;
        let j = [
            [(rk.0 - r.0) / dk_, (rl.0 - r.0) / dl_],
            [(rk.1 - r.1) / dk_, (rl.1 - r.1) / dl_],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let d = (
            (r.0 * j[1][1] - r.1 * j[0][1]) / det,
            (j[0][0] * r.1 - j[1][0] * r.0) / det,
        );
        let next = (x.0 - d.0, x.1 - d.1);
        let r_next = residual(next)?;
        let norm = |v: (f64, f64)| v.0.abs().max(v.1.abs());
        if norm(r_next) > norm(r) && !done(d, next) {
            break;
        }
        x = next;
        r = r_next;
        if done(d, x) {
            return Ok(x);
        }
    }
    // fixed-point fallback, contracting for small h
    for _ in 0..500 {
        let (fk, fl, _, _) = rhs(p, x.0, x.1)?;
        let next = (k + 0.5 * h * (dk + fk), lam + 0.5 * h * (dl + fl));
        let d = (next.0 - x.0, next.1 - x.1);
        x = next;
        if done(d, x) {
            return Ok(x);
        }
    }
    Err(SolverError::Diverged)
}

/// Newton with finite-difference slope and backtracking, then regula falsi on
/// any sign change seen along the way.
pub(crate) fn solve_scalar(
    mut f: impl FnMut(f64) -> Option<f64>,
    guesses: &[f64],
    tol: f64,
    max_iter: usize,
) -> Option<(f64, usize)> {
    let mut iterations = 0usize;
    let mut neg: Option<(f64, f64)> = None;
    let mut pos: Option<(f64, f64)> = None;
    let record = |x: f64, v: f64, neg: &mut Option<(f64, f64)>, pos: &mut Option<(f64, f64)>| {
        let slot = if v < 0.0 { neg } else { pos };
        if slot.is_none_or(|(_, best)| v.abs() < best.abs()) {
            *slot = Some((x, v));
        }
    };

    for &x0 in guesses {
        let Some(mut fx) = f(x0) else { continue };
        let mut x = x0;
        record(x, fx, &mut neg, &mut pos);
        for _ in 0..max_iter {
            if fx.abs() <= tol {
                return Some((x, iterations));
            }
            iterations += 1;
            let delta = 1e-7 * x.abs().max(1.0);
            let (xd, fd) = match f(x + delta) {
                Some(v) => (x + delta, v),
                None => match f(x - delta) {
                    Some(v) => (x - delta, v),
                    None => break,
                },
            };
            record(xd, fd, &mut neg, &mut pos);
            let slope = (fd - fx) / (xd - x);
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            let step = -fx / slope;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let xn = x + t * step;
                if let Some(vn) = f(xn) {
                    record(xn, vn, &mut neg, &mut pos);
                    if vn.abs() < fx.abs() {
                        x = xn;
                        fx = vn;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        if fx.abs() <= tol {
            return Some((x, iterations));
        }
    }

    // Widen around the first guess if no sign change has been seen yet.
    if neg.is_none() || pos.is_none() {
        let x0 = *guesses.first()?;
        let mut s = x0.abs().max(1.0) * 0.5;
        for _ in 0..60 {
            for x in [x0 + s, x0 - s] {
                if let Some(v) = f(x) {
                    record(x, v, &mut neg, &mut pos);
                }
            }
            if neg.is_some() && pos.is_some() {
                break;
            }
            s *= 2.0;
        }
    }
    let ((mut a, mut fa), (mut b, mut fb)) = (neg?, pos?);
    let mut side = 0i8;
    for _ in 0..400 {
        iterations += 1;
        let mut x = (a * fb - b * fa) / (fb - fa);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(x > lo && x < hi) {
            x = 0.5 * (a + b);
        }
        let v = f(x)?;
        if v.abs() <= tol {
            return Some((x, iterations));
        }
        if v < 0.0 {
            a = x;
            fa = v;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = v;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= 4.0 * f64::EPSILON * a.abs().max(b.abs()) {
            return None;
        }
    }
    None
}

fn min_state(shot: &Shot) -> (usize, f64) {
    shot.state
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, k)| if k < acc.1 { (i, k) } else { acc })
}

/// Shoots for the free terminal condition, then for the binding terminal
/// state if the free path dips below the state bound. `prefer` tries one
/// regime first (used when warm-starting from a previous solve).
pub(crate) fn shoot(
    p: &Problem,
    grid: &Grid,
    opts: &SolverOptions,
    integrator: Integrator,
    guesses: &[f64],
    prefer: Option<Terminal>,
) -> Result<ShootingResult, SolverError> {
    let lb = p.state_lower_bound;
    let k_scale = p.initial_capital.abs().max(1.0);
    let state_slack = 1e-9 * k_scale;
    let terminal_tol = opts.newton_tol * k_scale;

    let free = |x: f64| -> Option<f64> {
        integrate(p, grid, x, integrator)
            .ok()
            .map(|s| *s.costate.last().expect("non-empty grid"))
    };
    let binding = |x: f64| -> Option<f64> {
        integrate(p, grid, x, integrator)
            .ok()
            .map(|s| *s.state.last().expect("non-empty grid") - lb)
    };

    let mut free_attempt: Option<(f64, usize, Shot)> = None;
    let mut iterations = 0usize;
    let order: [Terminal; 2] = match prefer {
        Some(Terminal::Binding) => [Terminal::Binding, Terminal::Free],
        _ => [Terminal::Free, Terminal::Binding],
    };
    let mut extra: Vec<f64> = Vec::new();
    for regime in order {
        let mut starts = extra.clone();
        starts.extend_from_slice(guesses);
        let found = match regime {
            Terminal::Free => solve_scalar(free, &starts, opts.newton_tol, opts.max_newton_iters),
            Terminal::Binding => solve_scalar(binding, &starts, terminal_tol, opts.max_newton_iters),
        };
        let Some((lambda0, its)) = found else { continue };
        iterations += its;
        let shot = integrate(p, grid, lambda0, integrator)?;
        let (_, lowest) = min_state(&shot);
        match regime {
            Terminal::Free => {
                if lowest >= lb - state_slack {
                    return Ok(ShootingResult {
                        shot,
                        lambda0,
                        terminal: Terminal::Free,
                        iterations,
                    });
                }
                extra.push(lambda0);
                free_attempt = Some((lambda0, its, shot));
            }
            Terminal::Binding => {
                let lam_t = *shot.costate.last().expect("non-empty grid");
                if lowest >= lb - state_slack && lam_t >= -opts.newton_tol {
                    return Ok(ShootingResult {
                        shot,
                        lambda0,
                        terminal: Terminal::Binding,
                        iterations,
                    });
                }
                extra.push(lambda0);
            }
        }
    }
    if let Some((_, _, shot)) = free_attempt {
        let (node, k) = min_state(&shot);
        return Err(SolverError::StateLowerBound {
            node,
            t: grid.node(node),
            k,
        });
    }
    Err(SolverError::NewtonDivergence {
        iterations: iterations.max(opts.max_newton_iters),
    })
}
