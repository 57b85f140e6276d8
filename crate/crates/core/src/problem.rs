//! Problem instances `max ∫₀^T U(c) dt` s.t. `k̇ = g(c, k)`, `k(0) = k₀`,
//! free terminal state; uniform grids; sampled trajectories.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::dual::Dual;
use crate::expr::{Bindings, EvalError, Expr, Var};
use crate::math;
use crate::quadrature::{self, QuadratureRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("initial capital must be positive and finite, got {0}")]
    InitialCapital(f64),
    #[error("invalid control bounds [{0}, {1}]")]
    ControlBounds(f64, f64),
    #[error("initial capital {k0} lies below the state lower bound {bound}")]
    StateBound { k0: f64, bound: f64 },
    #[error("{slot} references undeclared variable `{var}`")]
    Undeclared { slot: &'static str, var: String },
    #[error("invalid grid: horizon {horizon}, {intervals} intervals")]
    Grid { horizon: f64, intervals: usize },
    #[error("array length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("at least 3 probe samples are required, got {0}")]
    TooFewSamples(usize),
    #[error("control level {0} outside the control bounds")]
    ControlOutOfBounds(f64),
    #[error("state fell below its lower bound at node {node} (t = {t}, k = {k})")]
    StateBelowBound { node: usize, t: f64, k: f64 },
    #[error("evaluation failed at node {node}: {source}")]
    Eval { node: usize, source: EvalError },
    #[error("implicit trapezoid step did not converge at node {node}")]
    Step { node: usize },
}

/// Uniform grid `t_i = i·T/N`, `i = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Grid {
    horizon: f64,
    intervals: usize,
}

impl Grid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self, ProblemError> {
        let ok = horizon.is_finite()
            && horizon >= 0.0
            && ((horizon == 0.0 && intervals == 0) || (horizon > 0.0 && intervals >= 1));
        if !ok {
            return Err(ProblemError::Grid { horizon, intervals });
        }
        Ok(Self { horizon, intervals })
    }

    /// Grid on `[0, horizon]` whose spacing does not exceed `max_step`.
    pub fn with_max_step(horizon: f64, max_step: f64) -> Result<Self, ProblemError> {
        if horizon == 0.0 {
            return Self::new(0.0, 0);
        }
        let n = math::ceil(horizon / max_step - 1e-9).max(1.0) as usize;
        Self::new(horizon, n)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    pub fn step(&self) -> f64 {
        if self.intervals == 0 {
            0.0
        } else {
            self.horizon / self.intervals as f64
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.horizon
        } else {
            i as f64 * self.horizon / self.intervals as f64
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.intervals).map(|i| self.node(i))
    }

    /// Index of the node equal to `t`, if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let guess = math::round(t / self.horizon * self.intervals as f64);
        if !(0.0..=self.intervals as f64).contains(&guess) {
            return None;
        }
        let i = guess as usize;
        (self.node(i) == t).then_some(i)
    }

    /// Linear interpolation of node `values` at `t ∈ [0, T]`. Exact node
    /// hits return the stored sample unchanged.
    pub fn interpolate(&self, values: &[f64], t: f64) -> Option<f64> {
        if values.len() != self.node_count() || !(0.0..=self.horizon).contains(&t) {
            return None;
        }
        if self.intervals == 0 {
            return Some(values[0]);
        }
        // first node strictly greater than t
        let (mut lo, mut hi) = (0usize, self.intervals);
        if t >= self.node(hi) {
            return Some(values[hi]);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.node(mid) <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t0 = self.node(lo);
        if t == t0 {
            return Some(values[lo]);
        }
        let f = (t - t0) / (self.node(hi) - t0);
        Some(values[lo] + f * (values[hi] - values[lo]))
    }
}

/// Sampled control, state and costate on a grid, with the accumulated value
/// `W = ∫₀^T U(c) dt` (NaN until computed).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Trajectory {
    pub grid: Grid,
    pub control: Vec<f64>,
    pub state: Vec<f64>,
    pub costate: Vec<f64>,
    pub value: f64,
}

impl Trajectory {
    pub fn new(grid: Grid, control: Vec<f64>, state: Vec<f64>, costate: Vec<f64>) -> Result<Self, ProblemError> {
        let expected = grid.node_count();
        for len in [control.len(), state.len(), costate.len()] {
            if len != expected {
                return Err(ProblemError::LengthMismatch { expected, found: len });
            }
        }
        Ok(Self {
            grid,
            control,
            state,
            costate,
            value: f64::NAN,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.grid.horizon()
    }

    /// Linear resampling onto `grid`, which must lie inside this horizon.
    /// Resampling onto the own grid returns identical samples. The value is
    /// carried over only in that case.
    pub fn resample(&self, grid: &Grid) -> Option<Trajectory> {
        if *grid == self.grid {
            return Some(self.clone());
        }
        let pick = |v: &[f64]| -> Option<Vec<f64>> { grid.nodes().map(|t| self.grid.interpolate(v, t)).collect() };
        let mut out = Trajectory::new(
            grid.clone(),
            pick(&self.control)?,
            pick(&self.state)?,
            pick(&self.costate)?,
        )
        .ok()?;
        out.value = f64::NAN;
        Some(out)
    }

    /// Restriction to `[0, horizon]`: an exact prefix when `horizon` is a
    /// node, a same-spacing resample otherwise.
    pub fn restrict(&self, horizon: f64) -> Option<Trajectory> {
        if horizon == self.horizon() {
            return Some(self.clone());
        }
        if let Some(i) = self.grid.index_of(horizon) {
            let grid = Grid::new(horizon, i).ok()?;
            return Trajectory::new(
                grid,
                self.control[..=i].to_vec(),
                self.state[..=i].to_vec(),
                self.costate[..=i].to_vec(),
            )
            .ok();
        }
        let grid = Grid::with_max_step(horizon, self.grid.step()).ok()?;
        self.resample(&grid)
    }
}

/// One optimization instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    /// `U(c)`, in `c` only.
    pub utility: Expr,
    /// `g(c, k)`, right-hand side of `k̇`.
    pub dynamics: Expr,
    pub initial_capital: f64,
    /// `[c_min, c_max]`; either side may be infinite.
    pub control_bounds: (f64, f64),
    pub state_lower_bound: f64,
    pub label: String,
}

impl Problem {
    pub fn new(
        utility: Expr,
        dynamics: Expr,
        initial_capital: f64,
        control_bounds: (f64, f64),
    ) -> Result<Self, ProblemError> {
        let p = Self {
            utility,
            dynamics,
            initial_capital,
            control_bounds,
            state_lower_bound: 0.0,
            label: String::new(),
        };
        p.check()?;
        Ok(p)
    }

    /// Parses both expressions and builds the problem.
    pub fn from_sources(
        utility: &str,
        dynamics: &str,
        initial_capital: f64,
        control_bounds: (f64, f64),
    ) -> Result<Self, ProblemSourceError> {
        let u = Expr::parse(utility).map_err(|e| ProblemSourceError::Parse {
            slot: "utility",
            source: e,
        })?;
        let g = Expr::parse(dynamics).map_err(|e| ProblemSourceError::Parse {
            slot: "dynamics",
            source: e,
        })?;
        Ok(Self::new(u, g, initial_capital, control_bounds)?)
    }

    pub fn with_state_lower_bound(mut self, bound: f64) -> Result<Self, ProblemError> {
        self.state_lower_bound = bound;
        self.check()?;
        Ok(self)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_control_bounds(mut self, lo: f64, hi: f64) -> Result<Self, ProblemError> {
        self.control_bounds = (lo, hi);
        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), ProblemError> {
        let k0 = self.initial_capital;
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(ProblemError::InitialCapital(k0));
        }
        let (lo, hi) = self.control_bounds;
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(ProblemError::ControlBounds(lo, hi));
        }
        if self.state_lower_bound.is_nan() || self.state_lower_bound > k0 {
            return Err(ProblemError::StateBound {
                k0,
                bound: self.state_lower_bound,
            });
        }
        if let Some(v) = self.utility.undeclared(&[Var::C]).into_iter().next() {
            return Err(ProblemError::Undeclared {
                slot: "utility",
                var: v.name().into(),
            });
        }
        if let Some(v) = self.dynamics.undeclared(&[Var::C, Var::K]).into_iter().next() {
            return Err(ProblemError::Undeclared {
                slot: "dynamics",
                var: v.name().into(),
            });
        }
        Ok(())
    }

    pub fn control_in_bounds(&self, c: f64) -> bool {
        let (lo, hi) = self.control_bounds;
        c >= lo && c <= hi
    }

    pub fn has_finite_bounds(&self) -> bool {
        self.control_bounds.0.is_finite() && self.control_bounds.1.is_finite()
    }

    pub fn utility_at(&self, c: f64) -> Result<f64, EvalError> {
        self.utility.eval(&Bindings::ck(c, 0.0))
    }

    /// `(U(c), U′(c))`.
    pub fn utility_dual(&self, c: f64) -> Result<Dual, EvalError> {
        self.utility.eval_dual(&Bindings::ck(c, 0.0), &Var::C)
    }

    pub fn dynamics_at(&self, c: f64, k: f64) -> Result<f64, EvalError> {
        self.dynamics.eval(&Bindings::ck(c, k))
    }

    /// `(g, ∂g/∂c)`.
    pub fn dynamics_dc(&self, c: f64, k: f64) -> Result<Dual, EvalError> {
        self.dynamics.eval_dual(&Bindings::ck(c, k), &Var::C)
    }

    /// `(g, ∂g/∂k)`.
    pub fn dynamics_dk(&self, c: f64, k: f64) -> Result<Dual, EvalError> {
        self.dynamics.eval_dual(&Bindings::ck(c, k), &Var::K)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemSourceError {
    #[error("cannot parse {slot}: {source}")]
    Parse {
        slot: &'static str,
        source: crate::expr::ParseError,
    },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// The two models that ship with the toolkit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub enum BuiltinModel {
    /// Shortest path from a point to a line: `U = −(1+c²)^½`, `k̇ = c`,
    /// `k(0) = A`, unbounded controls.
    Geodesic { a: f64 },
    /// `U = c^γ/γ`, `k̇ = r·k − c`, controls in `[0, c_max]`.
    Ramsey { r: f64, exponent: f64, k0: f64, c_max: f64 },
}

impl BuiltinModel {
    pub fn geodesic(a: f64) -> Self {
        BuiltinModel::Geodesic { a }
    }

    /// `U = 2√c`.
    pub fn ramsey(r: f64, k0: f64, c_max: f64) -> Self {
        BuiltinModel::Ramsey {
            r,
            exponent: 0.5,
            k0,
            c_max,
        }
    }

    pub fn utility_source(&self) -> String {
        match self {
            BuiltinModel::Geodesic { .. } => "-(1+c^2)^0.5".into(),
            BuiltinModel::Ramsey { exponent, .. } if *exponent == 0.5 => "2*sqrt(c)".into(),
            BuiltinModel::Ramsey { exponent, .. } => format!("{:?}*c^{:?}", 1.0 / exponent, exponent),
        }
    }

    pub fn dynamics_source(&self) -> String {
        match self {
            BuiltinModel::Geodesic { .. } => "c".into(),
            BuiltinModel::Ramsey { r, .. } => format!("{r:?}*k - c"),
        }
    }

    pub fn problem(&self) -> Result<Problem, ProblemSourceError> {
        let (k0, bounds, label) = match *self {
            BuiltinModel::Geodesic { a } => (a, (f64::NEG_INFINITY, f64::INFINITY), format!("geodesic(A={a:?})")),
            BuiltinModel::Ramsey { r, exponent, k0, c_max } => {
                if !(exponent > 0.0 && exponent < 1.0) || !r.is_finite() {
                    return Err(ProblemError::ControlBounds(0.0, c_max).into());
                }
                (
                    k0,
                    (0.0, c_max),
                    format!("ramsey(r={r:?}, gamma={exponent:?}, k0={k0:?})"),
                )
            }
        };
        Ok(Problem::from_sources(&self.utility_source(), &self.dynamics_source(), k0, bounds)?.with_label(label))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Severity {
    Warning,
    Violation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum DiagnosticKind {
    /// `U′(c) ≤ 0` somewhere.
    NotIncreasing,
    /// `U′` fails to decrease between neighbouring probes.
    NotConcave,
    /// `U(c) < 0` somewhere; allowed, but the ratio argument needs `∫U > 0`.
    NegativeUtility,
    /// `U` or `U′` could not be evaluated at a probe.
    UtilityDomain,
    /// `g` could not be evaluated at minimal consumption and `k₀`.
    DynamicsDomain,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    pub severity: Severity,
    /// First probe point where the issue was seen.
    pub at: f64,
    /// How many probes showed it.
    pub count: usize,
    pub message: String,
}

/// Probes `U` on `sample_count` points of `[max(c_min, 1e-9), min(c_max, 1e6)]`
/// (geometrically spaced when the interval is positive) and `g` at minimal
/// consumption. An empty list means every probe passed.
pub fn validate_model(p: &Problem, sample_count: usize) -> Result<Vec<Diagnostic>, ProblemError> {
    if sample_count < 3 {
        return Err(ProblemError::TooFewSamples(sample_count));
    }
    let lo = p.control_bounds.0.max(1e-9);
    let hi = p.control_bounds.1.min(1e6);
    let probes: Vec<f64> = (0..sample_count)
        .map(|j| {
            let s = j as f64 / (sample_count - 1) as f64;
            if j == sample_count - 1 {
                hi
            } else if lo > 0.0 {
                lo * math::powf(hi / lo, s)
            } else {
                lo + s * (hi - lo)
            }
        })
        .collect();

    let mut found: Vec<Diagnostic> = Vec::new();
    let mut note = |kind, severity, at: f64, message: String| {
        if let Some(d) = found.iter_mut().find(|d| d.kind == kind) {
            d.count += 1;
        } else {
            found.push(Diagnostic {
                kind,
                severity,
                at,
                count: 1,
                message,
            });
        }
    };

    let mut prev: Option<(f64, f64)> = None;
    for &c in &probes {
        match p.utility_dual(c) {
            Ok(d) => {
                if d.value < 0.0 {
                    note(
                        DiagnosticKind::NegativeUtility,
                        Severity::Warning,
                        c,
                        format!("integrand is negative-valued (U({c:?}) = {:?})", d.value),
                    );
                }
                if d.deriv <= 0.0 {
                    note(
                        DiagnosticKind::NotIncreasing,
                        Severity::Violation,
                        c,
                        format!("U is not strictly increasing (U'({c:?}) = {:?})", d.deriv),
                    );
                }
                if let Some((pc, pd)) = prev {
                    if d.deriv - pd >= 0.0 {
                        note(
                            DiagnosticKind::NotConcave,
                            Severity::Violation,
                            c,
                            format!("U' does not decrease on [{pc:?}, {c:?}]"),
                        );
                    }
                }
                prev = Some((c, d.deriv));
            }
            Err(e) => {
                note(
                    DiagnosticKind::UtilityDomain,
                    Severity::Violation,
                    c,
                    format!("U cannot be evaluated at {c:?}: {e}"),
                );
                prev = None;
            }
        }
    }

    let c_min = if p.control_bounds.0.is_finite() {
        p.control_bounds.0
    } else {
        lo
    };
    if let Err(e) = p.dynamics_at(c_min, p.initial_capital) {
        note(
            DiagnosticKind::DynamicsDomain,
            Severity::Violation,
            c_min,
            format!("g cannot be evaluated at minimal consumption: {e}"),
        );
    }
    Ok(found)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Attainability {
    pub attainable: bool,
    /// Largest trapezoidal dynamics defect `|k_{i+1} − k_i − h/2 (g_i + g_{i+1})|`.
    pub max_residual: f64,
}

/// Checks initial condition, control bounds, state bound and the trapezoidal
/// dynamics defect (against `tol·h`).
pub fn is_attainable(traj: &Trajectory, p: &Problem, tol: f64) -> Result<Attainability, ProblemError> {
    let n = traj.grid.node_count();
    for len in [traj.control.len(), traj.state.len(), traj.costate.len()] {
        if len != n {
            return Err(ProblemError::LengthMismatch {
                expected: n,
                found: len,
            });
        }
    }
    let mut ok = (traj.state[0] - p.initial_capital).abs() <= tol;
    ok &= traj.control.iter().all(|&c| p.control_in_bounds(c));
    ok &= traj.state.iter().all(|&k| k >= p.state_lower_bound - tol);

    let h = traj.grid.step();
    let mut g_prev = match p.dynamics_at(traj.control[0], traj.state[0]) {
        Ok(g) => g,
        Err(_) => {
            return Ok(Attainability {
                attainable: false,
                max_residual: f64::INFINITY,
            })
        }
    };
    let mut worst = 0.0f64;
    for i in 0..traj.grid.intervals() {
        let g_next = match p.dynamics_at(traj.control[i + 1], traj.state[i + 1]) {
            Ok(g) => g,
            Err(_) => {
                return Ok(Attainability {
                    attainable: false,
                    max_residual: f64::INFINITY,
                })
            }
        };
        let defect = traj.state[i + 1] - traj.state[i] - 0.5 * h * (g_prev + g_next);
        worst = worst.max(defect.abs());
        g_prev = g_next;
    }
    ok &= worst <= tol * h;
    Ok(Attainability {
        attainable: ok,
        max_residual: worst,
    })
}

/// Constant consumption `c_level`, state by classical RK4 from `k₀`,
/// zero costate, value by Simpson.
pub fn constant_path(p: &Problem, c_level: f64, grid: &Grid) -> Result<Trajectory, ProblemError> {
    if !p.control_in_bounds(c_level) {
        return Err(ProblemError::ControlOutOfBounds(c_level));
    }
    let n = grid.node_count();
    let h = grid.step();
    let mut state = Vec::with_capacity(n);
    let mut k = p.initial_capital;
    state.push(k);
    let rhs = |node: usize, k: f64| {
        p.dynamics_at(c_level, k)
            .map_err(|source| ProblemError::Eval { node, source })
    };
    for i in 0..grid.intervals() {
        let k1 = rhs(i, k)?;
        let k2 = rhs(i, k + 0.5 * h * k1)?;
        let k3 = rhs(i, k + 0.5 * h * k2)?;
        let k4 = rhs(i, k + h * k3)?;
        k += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if k < p.state_lower_bound {
            return Err(ProblemError::StateBelowBound {
                node: i + 1,
                t: grid.node(i + 1),
                k,
            });
        }
        state.push(k);
    }
    finish(p, grid, alloc::vec![c_level; n], state)
}

/// State generated from node controls by implicit trapezoid steps, so that
/// the dynamics defect is zero up to rounding.
pub fn path_from_controls(p: &Problem, grid: &Grid, control: Vec<f64>) -> Result<Trajectory, ProblemError> {
    if control.len() != grid.node_count() {
        return Err(ProblemError::LengthMismatch {
            expected: grid.node_count(),
            found: control.len(),
        });
    }
    if let Some(&c) = control.iter().find(|&&c| !p.control_in_bounds(c)) {
        return Err(ProblemError::ControlOutOfBounds(c));
    }
    let state = trapezoid_states(p, grid, &control)?;
    if let Some((node, &k)) = state.iter().enumerate().find(|(_, &k)| k < p.state_lower_bound) {
        return Err(ProblemError::StateBelowBound {
            node,
            t: grid.node(node),
            k,
        });
    }
    finish(p, grid, control, state)
}

/// Two consumption levels switching at `switch_time`; see
/// [`path_from_controls`] for the state.
pub fn piecewise_constant_path(
    p: &Problem,
    levels: (f64, f64),
    switch_time: f64,
    grid: &Grid,
) -> Result<Trajectory, ProblemError> {
    let control = grid
        .nodes()
        .map(|t| if t < switch_time { levels.0 } else { levels.1 })
        .collect();
    path_from_controls(p, grid, control)
}

fn finish(p: &Problem, grid: &Grid, control: Vec<f64>, state: Vec<f64>) -> Result<Trajectory, ProblemError> {
    let n = grid.node_count();
    let mut traj = Trajectory::new(grid.clone(), control, state, alloc::vec![0.0; n])?;
    quadrature::accumulated_value(&mut traj, p, QuadratureRule::Simpson).map_err(|e| match e {
        quadrature::QuadratureError::Utility { node, source } => ProblemError::Eval { node, source },
        _ => ProblemError::LengthMismatch { expected: n, found: 0 },
    })?;
    Ok(traj)
}

pub(crate) fn trapezoid_states(p: &Problem, grid: &Grid, control: &[f64]) -> Result<Vec<f64>, ProblemError> {
    let h = grid.step();
    let mut state = Vec::with_capacity(control.len());
    let mut k = p.initial_capital;
    state.push(k);
    for i in 0..grid.intervals() {
        k = trapezoid_step(p, h, control[i], k, control[i + 1]).map_err(|e| match e {
            StepError::Eval(source) => ProblemError::Eval { node: i + 1, source },
            StepError::NoConvergence => ProblemError::Step { node: i + 1 },
        })?;
        state.push(k);
    }
    Ok(state)
}

pub(crate) enum StepError {
    Eval(EvalError),
    NoConvergence,
}

/// Solves `x = k + h/2 (g(c, k) + g(c_next, x))` for `x` by Newton.
pub(crate) fn trapezoid_step(p: &Problem, h: f64, c: f64, k: f64, c_next: f64) -> Result<f64, StepError> {
    let g0 = p.dynamics_at(c, k).map_err(StepError::Eval)?;
    let base = k + 0.5 * h * g0;
    let mut x = k + h * g0;
    for _ in 0..60 {
        let d = p.dynamics_dk(c_next, x).map_err(StepError::Eval)?;
        let phi = x - base - 0.5 * h * d.value;
        let slope = 1.0 - 0.5 * h * d.deriv;
        if slope == 0.0 {
            return Err(StepError::NoConvergence);
        }
        let dx = phi / slope;
        x -= dx;
        if dx.abs() <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Err(StepError::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geodesic() -> Problem {
        BuiltinModel::geodesic(5.0).problem().unwrap()
    }

    fn ramsey() -> Problem {
        BuiltinModel::ramsey(0.05, 10.0, 3.0).problem().unwrap()
    }

    #[test]
    fn grid_nodes() {
        let g = Grid::new(10.0, 4).unwrap();
        let t: Vec<f64> = g.nodes().collect();
        assert_eq!(t, alloc::vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert!(Grid::new(1.0, 0).is_err());
        assert!(Grid::new(-1.0, 3).is_err());
        assert_eq!(Grid::with_max_step(40.0, 0.025).unwrap().intervals(), 1600);
        assert_eq!(g.index_of(7.5), Some(3));
        assert_eq!(g.index_of(7.0), None);
    }

    #[test]
    fn interpolation_hits_nodes_exactly() {
        let g = Grid::new(3.0, 7).unwrap();
        let v: Vec<f64> = g.nodes().map(|t| math::sin(t) * 1e3).collect();
        for (i, t) in g.nodes().enumerate() {
            assert_eq!(g.interpolate(&v, t).unwrap().to_bits(), v[i].to_bits());
        }
        let mid = g.interpolate(&v, 0.5 * (g.node(2) + g.node(3))).unwrap();
        assert!((mid - 0.5 * (v[2] + v[3])).abs() < 1e-9);
        assert!(g.interpolate(&v, 3.5).is_none());
    }

    #[test]
    fn builtin_expansions() {
        let g = geodesic();
        assert_eq!(g.utility, Expr::parse("-(1+c^2)^0.5").unwrap());
        assert_eq!(g.utility_at(0.0), Ok(-1.0));
        assert_eq!(g.control_bounds, (f64::NEG_INFINITY, f64::INFINITY));
        let r = ramsey();
        assert_eq!(r.utility, Expr::parse("2*sqrt(c)").unwrap());
        assert_eq!(r.dynamics, Expr::parse("0.05*k - c").unwrap());
        assert_eq!(r.control_bounds, (0.0, 3.0));
        let iso = BuiltinModel::Ramsey {
            r: 0.05,
            exponent: 0.25,
            k0: 1.0,
            c_max: 2.0,
        };
        let u = iso.problem().unwrap().utility_at(16.0).unwrap();
        assert!((u - 8.0).abs() < 1e-12);
    }

    #[test]
    fn problem_invariants() {
        assert!(matches!(
            Problem::from_sources("c", "k", 0.0, (0.0, 1.0)),
            Err(ProblemSourceError::Problem(ProblemError::InitialCapital(_)))
        ));
        assert!(matches!(
            Problem::from_sources("c*k", "k", 1.0, (0.0, 1.0)),
            Err(ProblemSourceError::Problem(ProblemError::Undeclared {
                slot: "utility",
                ..
            }))
        ));
        assert!(matches!(
            Problem::from_sources("c", "k*t", 1.0, (0.0, 1.0)),
            Err(ProblemSourceError::Problem(ProblemError::Undeclared {
                slot: "dynamics",
                ..
            }))
        ));
        assert!(matches!(
            Problem::from_sources("c", "k", 1.0, (1.0, 1.0)),
            Err(ProblemSourceError::Problem(ProblemError::ControlBounds(..)))
        ));
    }

    #[test]
    fn validate_ramsey_is_clean() {
        assert_eq!(validate_model(&ramsey(), 200).unwrap(), alloc::vec![]);
    }

    #[test]
    fn validate_geodesic_warns_about_negative_integrand() {
        let d = validate_model(&geodesic(), 200).unwrap();
        let warnings: Vec<_> = d.iter().filter(|d| d.severity == Severity::Warning).collect();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].kind, DiagnosticKind::NegativeUtility);
        assert!(!d.iter().any(|d| d.kind == DiagnosticKind::NotConcave));
        // −(1+c²)^½ falls on c > 0, which the probe reports honestly
        assert!(d.iter().any(|d| d.kind == DiagnosticKind::NotIncreasing));
    }

    #[test]
    fn validate_flags_convex_utility() {
        let p = Problem::from_sources("c^2", "0.05*k - c", 1.0, (0.0, 10.0)).unwrap();
        let d = validate_model(&p, 50).unwrap();
        assert!(d.iter().any(|d| d.kind == DiagnosticKind::NotConcave));
        assert!(validate_model(&p, 2).is_err());
    }

    #[test]
    fn attainability() {
        let p = geodesic();
        let g = Grid::new(10.0, 100).unwrap();
        let traj = Trajectory::new(
            g.clone(),
            alloc::vec![0.0; 101],
            alloc::vec![5.0; 101],
            alloc::vec![0.0; 101],
        )
        .unwrap();
        let a = is_attainable(&traj, &p, 1e-6).unwrap();
        assert!(a.attainable);
        assert_eq!(a.max_residual, 0.0);

        let mut off = traj.clone();
        off.state[0] = 4.0;
        assert!(!is_attainable(&off, &p, 1e-6).unwrap().attainable);

        let r = ramsey();
        let steady = Trajectory::new(g, alloc::vec![0.5; 101], alloc::vec![10.0; 101], alloc::vec![0.0; 101]).unwrap();
        let a = is_attainable(&steady, &r, 1e-9).unwrap();
        assert!(a.attainable);
        assert!(a.max_residual <= 1e-12);
    }

    #[test]
    fn constant_paths() {
        let g = Grid::new(10.0, 100).unwrap();
        let traj = constant_path(&geodesic(), 0.0, &g).unwrap();
        assert!(traj.state.iter().all(|&k| k == 5.0));
        assert!((traj.value + 10.0).abs() < 1e-12);

        let r = ramsey();
        let steady = constant_path(&r, 0.5, &Grid::new(7.0, 33).unwrap()).unwrap();
        assert!(steady.state.iter().all(|&k| k.to_bits() == 10.0f64.to_bits()));

        let err = constant_path(&r, 2.0, &Grid::new(20.0, 200).unwrap()).unwrap_err();
        // k(t) = 40 − 30 e^{0.05 t} reaches zero at t = 20 ln(4/3) ≈ 5.75
        match err {
            ProblemError::StateBelowBound { t, .. } => assert!((5.7..5.9).contains(&t), "t={t}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            constant_path(&r, 4.0, &g),
            Err(ProblemError::ControlOutOfBounds(_))
        ));
    }

    #[test]
    fn controls_path_is_trapezoid_consistent() {
        let r = ramsey();
        let g = Grid::new(20.0, 80).unwrap();
        let traj = piecewise_constant_path(&r, (1.0, 0.2), 7.3, &g).unwrap();
        let a = is_attainable(&traj, &r, 1e-9).unwrap();
        assert!(a.attainable, "{a:?}");
        assert!(traj.control[0] == 1.0 && traj.control[80] == 0.2);
    }

    #[test]
    fn restriction_prefix() {
        let r = ramsey();
        let g = Grid::new(20.0, 80).unwrap();
        let traj = constant_path(&r, 0.3, &g).unwrap();
        let five = traj.restrict(5.0).unwrap();
        assert_eq!(five.grid, Grid::new(5.0, 20).unwrap());
        assert_eq!(&five.state[..], &traj.state[..=20]);
        let own = traj.resample(&g).unwrap();
        assert_eq!(own, traj);
    }
}
