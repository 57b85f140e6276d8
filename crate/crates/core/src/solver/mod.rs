//! Finite-horizon solves via the Hamiltonian `H(c, k, λ) = U(c) + λ·g(c, k)`.
//!
//! [`solve_finite_horizon`] runs Pontryagin single shooting (with a direct
//! collocation fallback under [`SolveMethod::Auto`]). [`dp_oracle`] is an
//! independent brute-force check of the optimal value.

use alloc::boxed::Box;
use alloc::vec::Vec;

use thiserror::Error;

use crate::expr::EvalError;
use crate::problem::{Grid, Problem, ProblemError, Trajectory};
use crate::quadrature::{self, QuadratureError, QuadratureRule};

pub mod collocation;
mod control;
mod dp;
mod shooting;

pub use dp::{dp_oracle, DpGrid, DpResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("horizon must be positive and finite, got {0}")]
    Horizon(f64),
    #[error("invalid solver options: {0}")]
    Options(&'static str),
    #[error("shooting did not converge after {iterations} Newton iterations")]
    NewtonDivergence { iterations: usize },
    #[error("no maximizer of the Hamiltonian in the control bounds (k = {k}, lambda = {lambda})")]
    ControlRecovery { k: f64, lambda: f64 },
    #[error("state hits its lower bound at node {node} (t = {t}, k = {k})")]
    StateLowerBound { node: usize, t: f64, k: f64 },
    #[error("integration produced a non-finite value")]
    Diverged,
    #[error("collocation stopped after {iterations} iterations with state violation {violation}")]
    Collocation { iterations: usize, violation: f64 },
    #[error("shooting failed ({shooting}); collocation failed ({collocation})")]
    AllMethodsFailed {
        shooting: Box<SolverError>,
        collocation: Box<SolverError>,
    },
    #[error("the oracle needs finite control bounds")]
    UnboundedControls,
    #[error("oracle grids need at least two nodes and one time step")]
    DpGrid,
    #[error("oracle rollout left the state grid at step {step} (k = {k} > k_max = {k_max})")]
    InsufficientKMax { step: usize, k: f64, k_max: f64 },
    #[error("oracle found no feasible control at step {step}")]
    DpInfeasible { step: usize },
    #[error("residual evaluation failed at node {node}: {source}")]
    Residual { node: usize, source: EvalError },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SolveMethod {
    PmpShooting,
    Collocation,
    #[default]
    Auto,
}

/// Integrator for the coupled state/costate system during shooting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta.
    Rk4,
    /// Implicit trapezoid; satisfies the trapezoidal residuals exactly.
    Trapezoid,
}

/// Which terminal condition closed the shooting problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Terminal {
    /// `λ(T) = 0`, terminal state above its bound.
    Free,
    /// `k(T) = k_lb`, `λ(T) ≥ 0`.
    Binding,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub collocation_max_iters: usize,
    pub collocation_step_tol: f64,
    /// Grid intervals `N` (nodes `N + 1`).
    pub intervals: usize,
    /// Re-solve the RK4 shooting result with the implicit trapezoid
    /// integrator, warm-started at the RK4 costate.
    pub discrete_polish: bool,
    /// Rule for the reported value `W`.
    #[cfg_attr(feature = "serde", serde(skip))]
    pub rule: QuadratureRule,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            newton_tol: 1e-10,
            max_newton_iters: 50,
            collocation_max_iters: 5000,
            collocation_step_tol: 1e-9,
            intervals: 200,
            discrete_polish: true,
            rule: QuadratureRule::Simpson,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.newton_tol > 0.0) {
            return Err(SolverError::Options("newton_tol must be positive"));
        }
        if !(self.collocation_step_tol > 0.0) {
            return Err(SolverError::Options("collocation_step_tol must be positive"));
        }
        if self.intervals < 1 {
            return Err(SolverError::Options("at least two grid nodes are required"));
        }
        if self.max_newton_iters == 0 || self.collocation_max_iters == 0 {
            return Err(SolverError::Options("iteration limits must be positive"));
        }
        Ok(())
    }
}

/// First-order-condition residuals of a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ResidualReport {
    /// Max trapezoidal defect of `k̇ = g(c, k)`.
    pub dynamics_residual: f64,
    /// Max `|∂H/∂c|` at interior controls, sign-consistent violation at bounds.
    pub stationarity_residual: f64,
    /// `|λ_N|` when the terminal state is above its bound, `max(0, −λ_N)`
    /// when it sits on the bound.
    pub transversality_residual: f64,
    /// Max trapezoidal defect of `λ̇ = −∂H/∂k`.
    pub costate_residual: f64,
    /// Whether `k_N` sits on the state lower bound.
    pub terminal_state_binding: bool,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.dynamics_residual
            .max(self.stationarity_residual)
            .max(self.transversality_residual)
            .max(self.costate_residual)
    }
}

/// Terminal capital within this distance of the bound counts as binding.
pub const TERMINAL_BINDING_TOL: f64 = 1e-6;

/// Residuals of the maximum principle along `traj`.
pub fn hamiltonian_residuals(traj: &Trajectory, p: &Problem) -> Result<ResidualReport, SolverError> {
    let n = traj.grid.node_count();
    for len in [traj.control.len(), traj.state.len(), traj.costate.len()] {
        if len != n {
            return Err(ProblemError::LengthMismatch {
                expected: n,
                found: len,
            }
            .into());
        }
    }
    let h = traj.grid.step();
    let (lo, hi) = p.control_bounds;
    let mut g = Vec::with_capacity(n);
    let mut h_k = Vec::with_capacity(n);
    let mut stationarity = 0.0f64;
    for i in 0..n {
        let (c, k, lam) = (traj.control[i], traj.state[i], traj.costate[i]);
        let at = |source| SolverError::Residual { node: i, source };
        let gk = p.dynamics_dk(c, k).map_err(at)?;
        g.push(gk.value);
        h_k.push(lam * gk.deriv);
        let slope = match control::hamiltonian_slope(p, c, k, lam) {
            Some(s) => s,
            None => {
                // singular bound (e.g. √c at 0): use the inward neighbour
                let inward = if c == lo { 1.0 } else { -1.0 };
                let nudged = c + inward * 1e-12 * c.abs().max(1.0);
                match control::hamiltonian_slope(p, nudged, k, lam) {
                    Some(s) => s,
                    None => {
                        let err = p.utility_dual(c).err().unwrap_or(EvalError::NonFinite { op: "dH/dc" });
                        return Err(at(err));
                    }
                }
            }
        };
        let violation = if c <= lo {
            slope.max(0.0)
        } else if c >= hi {
            (-slope).max(0.0)
        } else {
            slope.abs()
        };
        stationarity = stationarity.max(violation);
    }
    let mut dynamics = 0.0f64;
    let mut costate = 0.0f64;
    for i in 0..n - 1 {
        let dk = traj.state[i + 1] - traj.state[i] - 0.5 * h * (g[i] + g[i + 1]);
        dynamics = dynamics.max(dk.abs());
        let dl = traj.costate[i + 1] - traj.costate[i] + 0.5 * h * (h_k[i] + h_k[i + 1]);
        costate = costate.max(dl.abs());
    }
    let lam_t = traj.costate[n - 1];
    let binding = traj.state[n - 1] - p.state_lower_bound <= TERMINAL_BINDING_TOL;
    let transversality = if binding { (-lam_t).max(0.0) } else { lam_t.abs() };
    Ok(ResidualReport {
        dynamics_residual: dynamics,
        stationarity_residual: stationarity,
        transversality_residual: transversality,
        costate_residual: costate,
        terminal_state_binding: binding,
    })
}

/// A solved finite-horizon problem.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Solution {
    pub trajectory: Trajectory,
    pub residuals: ResidualReport,
    /// Method that produced the trajectory (never `Auto`).
    pub method: SolveMethod,
    /// Shooting integrator, when shooting produced the trajectory.
    pub integrator: Option<Integrator>,
    pub terminal: Terminal,
    pub iterations: usize,
    /// Nodes where the control recovery saw several interior maximizers and
    /// picked the one with the largest Hamiltonian.
    pub ambiguous_controls: usize,
}

impl Solution {
    pub fn horizon(&self) -> f64 {
        self.trajectory.horizon()
    }
}

/// Solves on `[0, T]` with `opts.intervals` uniform steps.
pub fn solve_finite_horizon(p: &Problem, horizon: f64, opts: &SolverOptions) -> Result<Solution, SolverError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(SolverError::Horizon(horizon));
    }
    opts.validate()?;
    let grid = Grid::new(horizon, opts.intervals)?;
    solve_on_grid(p, &grid, opts)
}

/// As [`solve_finite_horizon`] on an explicit grid.
pub fn solve_on_grid(p: &Problem, grid: &Grid, opts: &SolverOptions) -> Result<Solution, SolverError> {
    if !(grid.horizon() > 0.0) {
        return Err(SolverError::Horizon(grid.horizon()));
    }
    opts.validate()?;
    match opts.method {
        SolveMethod::PmpShooting => solve_by_shooting(p, grid, opts),
        SolveMethod::Collocation => solve_by_collocation(p, grid, opts),
        SolveMethod::Auto => match solve_by_shooting(p, grid, opts) {
            Ok(s) => Ok(s),
            Err(shooting) => solve_by_collocation(p, grid, opts).map_err(|collocation| SolverError::AllMethodsFailed {
                shooting: Box::new(shooting),
                collocation: Box::new(collocation),
            }),
        },
    }
}

fn finish(
    p: &Problem,
    grid: &Grid,
    opts: &SolverOptions,
    control: Vec<f64>,
    state: Vec<f64>,
    costate: Vec<f64>,
) -> Result<(Trajectory, ResidualReport), SolverError> {
    let mut traj = Trajectory::new(grid.clone(), control, state, costate)?;
    quadrature::accumulated_value(&mut traj, p, opts.rule)?;
    let residuals = hamiltonian_residuals(&traj, p)?;
    Ok((traj, residuals))
}

/// Consumption level that keeps `k₀` stationary, when one exists in bounds.
fn steady_consumption(p: &Problem) -> Option<f64> {
    let k0 = p.initial_capital;
    let (lo, hi) = p.control_bounds;
    let lo = lo.max(-1e6);
    let hi = hi.min(1e6);
    let f = |c: f64| p.dynamics_at(c, k0).ok();
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Some(a);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 || (b - a) <= 1e-14 * m.abs().max(1.0) {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Initial costate guesses: zero, then the shadow price making the
/// steady-state consumption level stationary for `H`.
fn costate_guesses(p: &Problem) -> Vec<f64> {
    let mut out = alloc::vec![0.0];
    if let Some(c) = steady_consumption(p) {
        let k0 = p.initial_capital;
        if let (Ok(u), Ok(g)) = (p.utility_dual(c), p.dynamics_dc(c, k0)) {
            if g.deriv != 0.0 {
                let lam = -u.deriv / g.deriv;
                if lam.is_finite() && lam != 0.0 {
                    out.push(lam);
                }
            }
        }
    }
    out
}

fn solve_by_shooting(p: &Problem, grid: &Grid, opts: &SolverOptions) -> Result<Solution, SolverError> {
    let guesses = costate_guesses(p);
    let rk = shooting::shoot(p, grid, opts, Integrator::Rk4, &guesses, None)?;
    let mut chosen = (rk, Integrator::Rk4);
    if opts.discrete_polish {
        let warm = [chosen.0.lambda0];
        if let Ok(tr) = shooting::shoot(p, grid, opts, Integrator::Trapezoid, &warm, Some(chosen.0.terminal)) {
            chosen = (tr, Integrator::Trapezoid);
        }
    }
    let (res, integrator) = chosen;
    let iterations = res.iterations;
    let ambiguous = res.shot.ambiguous;
    let (trajectory, residuals) = finish(p, grid, opts, res.shot.control, res.shot.state, res.shot.costate)?;
    Ok(Solution {
        trajectory,
        residuals,
        method: SolveMethod::PmpShooting,
        integrator: Some(integrator),
        terminal: res.terminal,
        iterations,
        ambiguous_controls: ambiguous,
    })
}

fn solve_by_collocation(p: &Problem, grid: &Grid, opts: &SolverOptions) -> Result<Solution, SolverError> {
    let (lo, hi) = p.control_bounds;
    let start = steady_consumption(p).unwrap_or(0.0).clamp(lo, hi);
    let res = collocation::solve(p, grid, start, opts.collocation_max_iters, opts.collocation_step_tol)?;
    let (trajectory, residuals) = finish(p, grid, opts, res.control, res.state, res.costate)?;
    let terminal = if residuals.terminal_state_binding {
        Terminal::Binding
    } else {
        Terminal::Free
    };
    Ok(Solution {
        trajectory,
        residuals,
        method: SolveMethod::Collocation,
        integrator: None,
        terminal,
        iterations: res.iterations,
        ambiguous_controls: 0,
    })
}
