//! Direct transcription: node controls are the unknowns, states follow from
//! implicit trapezoid steps, and the objective is the trapezoid quadrature of
//! `U`. State bounds are handled with an augmented Lagrangian; the control
//! box by projection. Gradients come from the discrete adjoint recursion.

use alloc::vec;
use alloc::vec::Vec;

use crate::problem::{self, Grid, Problem, ProblemError};
use crate::quadrature::{self, QuadratureRule};

use super::SolverError;

/// Augmented-Lagrangian state for `k_i ≥ k_lb`, `i = 1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Penalty {
    pub multipliers: Vec<f64>,
    pub rho: f64,
}

impl Penalty {
    pub fn new(grid: &Grid, rho: f64) -> Self {
        Self {
            multipliers: vec![0.0; grid.node_count()],
            rho,
        }
    }
}

/// Objective value, its gradient in the node controls, and the discrete
/// adjoint `p_1..p_N` (index 0 unused).
#[derive(Debug, Clone)]
pub struct ObjectiveEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub adjoint: Vec<f64>,
    pub state: Vec<f64>,
}

fn lift(e: ProblemError) -> SolverError {
    SolverError::Problem(e)
}

/// `J(c) = Σ w_i U(c_i) − Σ ψ(k_i − k_lb)` with trapezoid weights and the
/// augmented-Lagrangian term `ψ`.
pub fn objective_and_gradient(
    p: &Problem,
    grid: &Grid,
    control: &[f64],
    penalty: &Penalty,
) -> Result<ObjectiveEval, SolverError> {
    let n = grid.intervals();
    let h = grid.step();
    let w = quadrature::weights(grid, QuadratureRule::Trapezoid);
    let state = problem::trapezoid_states(p, grid, control).map_err(lift)?;
    let lb = p.state_lower_bound;
    let rho = penalty.rho;

    let mut value = 0.0;
    let mut u_prime = vec![0.0; n + 1];
    for i in 0..=n {
        let u = p.utility_dual(control[i]).map_err(SolverError::Eval)?;
        value += w[i] * u.value;
        u_prime[i] = u.deriv;
    }
    // q_i = −ψ'(s_i) ≥ 0
    let mut q = vec![0.0; n + 1];
    for i in 1..=n {
        let s = state[i] - lb;
        let mu = penalty.multipliers[i];
        if mu - rho * s > 0.0 {
            value -= -mu * s + 0.5 * rho * s * s;
            q[i] = mu - rho * s;
        } else {
            value -= -mu * mu / (2.0 * rho);
        }
    }

    let mut g_c = vec![0.0; n + 1];
    let mut g_k = vec![0.0; n + 1];
    for i in 0..=n {
        g_c[i] = p.dynamics_dc(control[i], state[i]).map_err(SolverError::Eval)?.deriv;
        g_k[i] = p.dynamics_dk(control[i], state[i]).map_err(SolverError::Eval)?.deriv;
    }

    let mut adjoint = vec![0.0; n + 1];
    if n >= 1 {
        adjoint[n] = q[n] / (1.0 - 0.5 * h * g_k[n]);
        for j in (1..n).rev() {
            adjoint[j] = (q[j] + adjoint[j + 1] * (1.0 + 0.5 * h * g_k[j])) / (1.0 - 0.5 * h * g_k[j]);
        }
    }
    let mut gradient = vec![0.0; n + 1];
    for j in 0..=n {
        let mut coupling = 0.0;
        if j < n {
            coupling += adjoint[j + 1];
        }
        if j >= 1 {
            coupling += adjoint[j];
        }
        gradient[j] = w[j] * u_prime[j] + 0.5 * h * g_c[j] * coupling;
    }
    Ok(ObjectiveEval {
        value,
        gradient,
        adjoint,
        state,
    })
}

pub(crate) struct CollocationResult {
    pub control: Vec<f64>,
    pub state: Vec<f64>,
    pub costate: Vec<f64>,
    pub iterations: usize,
}

/// Projection bounds, nudged inward where `U′` is singular at the bound.
fn effective_bounds(p: &Problem) -> (f64, f64) {
    let (mut lo, mut hi) = p.control_bounds;
    if lo.is_finite() && p.utility_dual(lo).is_err() {
        lo += 1e-12 * lo.abs().max(1.0);
    }
    if hi.is_finite() && p.utility_dual(hi).is_err() {
        hi -= 1e-12 * hi.abs().max(1.0);
    }
    (lo, hi)
}

pub(crate) fn solve(
    p: &Problem,
    grid: &Grid,
    initial: f64,
    max_iters: usize,
    step_tol: f64,
) -> Result<CollocationResult, SolverError> {
    let n = grid.intervals();
    let (lo, hi) = effective_bounds(p);
    let project = |c: f64| c.clamp(lo, hi);
    let mut control = vec![project(initial); n + 1];
    let mut penalty = Penalty::new(grid, 10.0);
    let lb = p.state_lower_bound;
    let violation_tol = 1e-9 * p.initial_capital.abs().max(1.0);

    let mut iterations = 0usize;
    let mut alpha = 1.0f64;
    let w = quadrature::weights(grid, QuadratureRule::Trapezoid);
    let mut last_violation = f64::INFINITY;
    let mut eval = objective_and_gradient(p, grid, &control, &penalty)?;
    for _outer in 0..30 {
        // projected gradient ascent with Armijo backtracking
        let mut converged = false;
        while iterations < max_iters {
            iterations += 1;
            let direction: Vec<f64> = eval.gradient.iter().zip(&w).map(|(g, w)| g / w).collect();
            let mut accepted = None;
            let mut a = (alpha * 2.0).min(1e6);
            for _ in 0..60 {
                let trial: Vec<f64> = control
                    .iter()
                    .zip(&direction)
                    .map(|(c, d)| project(c + a * d))
                    .collect();
                if let Ok(te) = objective_and_gradient(p, grid, &trial, &penalty) {
                    let predicted: f64 = eval
                        .gradient
                        .iter()
                        .zip(trial.iter().zip(&control))
                        .map(|(g, (t, c))| g * (t - c))
                        .sum();
                    if te.value >= eval.value + 1e-4 * predicted {
                        accepted = Some((trial, te));
                        break;
                    }
                }
                a *= 0.5;
            }
            let Some((trial, te)) = accepted else {
                converged = true;
                break;
            };
            alpha = a;
            let change = trial
                .iter()
                .zip(&control)
                .map(|(t, c)| (t - c).abs())
                .fold(0.0, f64::max);
            control = trial;
            eval = te;
            if change <= step_tol {
                converged = true;
                break;
            }
        }
        let violation = eval.state[1..].iter().map(|k| (lb - k).max(0.0)).fold(0.0, f64::max);
        let active = penalty.multipliers[1..].iter().any(|&m| m > 0.0);
        if converged && violation <= violation_tol && (!active || outer_done(&eval, &penalty, lb)) {
            break;
        }
        if iterations >= max_iters {
            if violation <= violation_tol && converged {
                break;
            }
            return Err(SolverError::Collocation { iterations, violation });
        }
        for i in 1..=n {
            let s = eval.state[i] - lb;
            penalty.multipliers[i] = (penalty.multipliers[i] - penalty.rho * s).max(0.0);
        }
        if violation > 0.25 * last_violation {
            penalty.rho *= 10.0;
        }
        last_violation = violation;
        eval = objective_and_gradient(p, grid, &control, &penalty)?;
    }

    // costate from the adjoint: λ_0 = p_1, λ_j = (p_j + p_{j+1})/2, λ_N = p_N
    let adj = &eval.adjoint;
    let mut costate = vec![0.0; n + 1];
    if n >= 1 {
        costate[0] = adj[1];
        for j in 1..n {
            costate[j] = 0.5 * (adj[j] + adj[j + 1]);
        }
        costate[n] = adj[n];
    }
    let state = eval.state;
    if let Some((node, &k)) = state.iter().enumerate().find(|(_, &k)| k < lb - 1e-6) {
        return Err(SolverError::StateLowerBound {
            node,
            t: grid.node(node),
            k,
        });
    }
    Ok(CollocationResult {
        control,
        state,
        costate,
        iterations,
    })
}

// Multipliers have settled: another update would not move them.
fn outer_done(eval: &ObjectiveEval, penalty: &Penalty, lb: f64) -> bool {
    eval.state.iter().zip(&penalty.multipliers).skip(1).all(|(k, &m)| {
        let updated = (m - penalty.rho * (k - lb)).max(0.0);
        (updated - m).abs() <= 1e-10 * (1.0 + m.abs())
    })
}
