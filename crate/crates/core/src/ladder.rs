//! Horizon ladders: solve `T_i = T₀·factor^i`, then measure how the
//! solutions settle on a fixed window `[0, T_w]` and take the limit path
//! `c°(t) = lim c_T(t)`.
//!
//! Convergence is a sup-norm Cauchy test on the window. The limit samples are
//! the largest-horizon solution restricted to the window; nothing is
//! extrapolated in `T`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::problem::{self, Grid, Problem, ProblemError, Trajectory};
use crate::solver::{self, ResidualReport, Solution, SolverError, SolverOptions};

/// Entries must be attainable to this tolerance.
pub const ATTAINABILITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error("invalid schedule: {0}")]
    Schedule(&'static str),
    #[error("solve failed at T = {horizon}: {source}")]
    Solve { horizon: f64, source: SolverError },
    #[error("entry {index} has horizon {found}, schedule expects {expected}")]
    HorizonMismatch { index: usize, expected: f64, found: f64 },
    #[error("entry at T = {horizon} is not attainable (defect {residual})")]
    NotAttainable { horizon: f64, residual: f64 },
    #[error("window fraction must lie in (0, 1], got {0}")]
    WindowFraction(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("window {window} exceeds the smallest horizon {smallest}")]
    Window { window: f64, smallest: f64 },
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// Geometric horizon schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Schedule {
    pub t0: f64,
    pub factor: f64,
    pub count: usize,
}

impl Schedule {
    pub fn new(t0: f64, factor: f64, count: usize) -> Result<Self, LadderError> {
        let s = Self { t0, factor, count };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), LadderError> {
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            return Err(LadderError::Schedule("t0 must be positive and finite"));
        }
        if !(self.factor > 1.0 && self.factor.is_finite()) {
            return Err(LadderError::Schedule("factor must exceed 1"));
        }
        if self.count < 2 {
            return Err(LadderError::Schedule("count must be at least 2"));
        }
        if !self.horizon(self.count - 1).is_finite() {
            return Err(LadderError::Schedule("largest horizon overflows"));
        }
        Ok(())
    }

    pub fn horizon(&self, i: usize) -> f64 {
        self.t0 * crate::math::powf(self.factor, i as f64)
    }

    pub fn horizons(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.horizon(i)).collect()
    }

    /// Grid for entry `i`: spacing at most `T₀ / base_intervals`, so every
    /// entry refines the window the same way.
    pub fn grid(&self, i: usize, base_intervals: usize) -> Result<Grid, ProblemError> {
        Grid::with_max_step(self.horizon(i), self.t0 / base_intervals as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LadderEntry {
    pub horizon: f64,
    pub trajectory: Trajectory,
    /// Residuals of the solve, when the entry came from the solver.
    pub residuals: Option<ResidualReport>,
}

/// Solutions over an increasing schedule of horizons. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonLadder {
    problem: Problem,
    schedule: Schedule,
    entries: Vec<LadderEntry>,
}

/// Solves every horizon of `schedule` in order.
pub fn build_ladder(p: &Problem, schedule: Schedule, opts: &SolverOptions) -> Result<HorizonLadder, LadderError> {
    schedule.validate()?;
    let mut solutions = Vec::with_capacity(schedule.count);
    for i in 0..schedule.count {
        solutions.push(solve_entry(p, &schedule, i, opts)?);
    }
    HorizonLadder::from_solutions(p.clone(), schedule, solutions)
}

/// Solves entry `i` of `schedule`; independent of every other entry.
pub fn solve_entry(p: &Problem, schedule: &Schedule, i: usize, opts: &SolverOptions) -> Result<Solution, LadderError> {
    let horizon = schedule.horizon(i);
    let tag = |source| LadderError::Solve { horizon, source };
    let grid = schedule.grid(i, opts.intervals).map_err(|e| tag(e.into()))?;
    solver::solve_on_grid(p, &grid, opts).map_err(tag)
}

impl HorizonLadder {
    pub fn from_solutions(p: Problem, schedule: Schedule, solutions: Vec<Solution>) -> Result<Self, LadderError> {
        let entries = solutions
            .into_iter()
            .map(|s| (s.trajectory, Some(s.residuals)))
            .collect();
        Self::assemble(p, schedule, entries)
    }

    /// Ladder from externally produced trajectories (e.g. loaded from disk).
    pub fn from_trajectories(
        p: Problem,
        schedule: Schedule,
        trajectories: Vec<Trajectory>,
    ) -> Result<Self, LadderError> {
        let entries = trajectories.into_iter().map(|t| (t, None)).collect();
        Self::assemble(p, schedule, entries)
    }

    fn assemble(
        p: Problem,
        schedule: Schedule,
        items: Vec<(Trajectory, Option<ResidualReport>)>,
    ) -> Result<Self, LadderError> {
        schedule.validate()?;
        if items.len() != schedule.count {
            return Err(LadderError::Schedule("entry count differs from the schedule"));
        }
        let mut entries = Vec::with_capacity(items.len());
        for (index, (mut trajectory, residuals)) in items.into_iter().enumerate() {
            let expected = schedule.horizon(index);
            let found = trajectory.horizon();
            if (found - expected).abs() > 1e-12 * expected {
                return Err(LadderError::HorizonMismatch { index, expected, found });
            }
            let att = problem::is_attainable(&trajectory, &p, ATTAINABILITY_TOL)?;
            if !att.attainable {
                return Err(LadderError::NotAttainable {
                    horizon: found,
                    residual: att.max_residual,
                });
            }
            if trajectory.value.is_nan() {
                crate::quadrature::accumulated_value(&mut trajectory, &p, Default::default()).map_err(|e| {
                    LadderError::Solve {
                        horizon: found,
                        source: e.into(),
                    }
                })?;
            }
            entries.push(LadderEntry {
                horizon: found,
                trajectory,
                residuals,
            });
        }
        Ok(Self {
            problem: p,
            schedule,
            entries,
        })
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn entries(&self) -> &[LadderEntry] {
        &self.entries
    }

    pub fn horizons(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.horizon).collect()
    }

    pub fn entry_at(&self, horizon: f64) -> Option<&LadderEntry> {
        self.entries.iter().find(|e| e.horizon == horizon)
    }

    /// The largest-horizon trajectory, used as `c°` beyond the window.
    pub fn largest(&self) -> &Trajectory {
        &self.entries[self.entries.len() - 1].trajectory
    }

    fn window_grid(&self, window_fraction: f64) -> Result<Grid, LadderError> {
        if !(window_fraction > 0.0 && window_fraction <= 1.0) {
            return Err(LadderError::WindowFraction(window_fraction));
        }
        let first = &self.entries[0].trajectory;
        let window = window_fraction * self.schedule.t0;
        if window > first.horizon() {
            return Err(LadderError::Window {
                window,
                smallest: first.horizon(),
            });
        }
        Ok(Grid::with_max_step(window, first.grid.step())?)
    }
}

fn on_window(traj: &Trajectory, grid: &Grid) -> Trajectory {
    let restricted = traj.restrict(grid.horizon()).expect("window lies inside every horizon");
    restricted
        .resample(grid)
        .expect("window grid lies inside the restriction")
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn window_sup_diffs(ladder: &HorizonLadder, grid: &Grid) -> (Vec<f64>, Trajectory) {
    let mut sup_diffs = Vec::with_capacity(ladder.entries.len() - 1);
    let mut prev = on_window(&ladder.entries[0].trajectory, grid);
    for e in &ladder.entries[1..] {
        let cur = on_window(&e.trajectory, grid);
        sup_diffs.push(sup_diff(&cur.control, &prev.control));
        prev = cur;
    }
    (sup_diffs, prev)
}

/// `(c°, k°)` on the window with the Cauchy diagnostics that back it.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct LimitPath {
    pub window: f64,
    pub grid: Grid,
    pub control: Vec<f64>,
    pub state: Vec<f64>,
    pub costate: Vec<f64>,
    pub converged: bool,
    pub tol: f64,
    /// `max_window |c_{T_{j+1}} − c_{T_j}|` for successive entries.
    pub sup_diffs: Vec<f64>,
    /// Horizon whose solution supplies the samples.
    pub source_horizon: f64,
    pub extrapolation_note: String,
}

impl LimitPath {
    pub fn as_trajectory(&self) -> Trajectory {
        Trajectory::new(
            self.grid.clone(),
            self.control.clone(),
            self.state.clone(),
            self.costate.clone(),
        )
        .expect("limit samples match the window grid")
    }
}

/// Differences this far below `tol` count as zero in the monotonicity test.
const NOISE_FRACTION: f64 = 1e-3;

pub fn extract_limit_path(ladder: &HorizonLadder, window_fraction: f64, tol: f64) -> Result<LimitPath, LadderError> {
    if !(tol > 0.0) {
        return Err(LadderError::Tolerance(tol));
    }
    let grid = ladder.window_grid(window_fraction)?;
    let (sup_diffs, last) = window_sup_diffs(ladder, &grid);
    let floor = NOISE_FRACTION * tol;
    let n = sup_diffs.len();
    let settled = sup_diffs[n - 1] <= tol;
    let non_increasing = n < 2 || sup_diffs[n - 1] <= sup_diffs[n - 2].max(floor);
    let source_horizon = ladder.largest().horizon();
    Ok(LimitPath {
        window: grid.horizon(),
        extrapolation_note: format!(
            "samples are the T = {source_horizon:?} solution on [0, {:?}]; no extrapolation in T",
            grid.horizon()
        ),
        grid,
        control: last.control,
        state: last.state,
        costate: last.costate,
        converged: settled && non_increasing,
        tol,
        sup_diffs,
        source_horizon,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EntrySummary {
    pub horizon: f64,
    pub intervals: usize,
    /// `W(T) = ∫₀^T U(c) dt`.
    pub value: f64,
    pub terminal_state: f64,
    pub residuals: Option<ResidualReport>,
}

/// Per-entry values and residuals plus window differences; carries no verdict.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvergenceReport {
    pub label: String,
    pub window: f64,
    pub sup_diffs: Vec<f64>,
    pub entries: Vec<EntrySummary>,
}

pub fn convergence_report(ladder: &HorizonLadder, window_fraction: f64) -> Result<ConvergenceReport, LadderError> {
    let grid = ladder.window_grid(window_fraction)?;
    let (sup_diffs, _) = window_sup_diffs(ladder, &grid);
    let entries = ladder
        .entries
        .iter()
        .map(|e| EntrySummary {
            horizon: e.horizon,
            intervals: e.trajectory.grid.intervals(),
            value: e.trajectory.value,
            terminal_state: e.trajectory.state[e.trajectory.state.len() - 1],
            residuals: e.residuals,
        })
        .collect();
    Ok(ConvergenceReport {
        label: ladder.problem.label.clone(),
        window: grid.horizon(),
        sup_diffs,
        entries,
    })
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ladder {} on window [0, {}]", self.label, self.window)?;
        writeln!(
            f,
            "{:>12} {:>8} {:>16} {:>14} {:>12}",
            "T", "N", "W(T)", "k(T)", "max resid"
        )?;
        for e in &self.entries {
            let resid = e.residuals.map_or(f64::NAN, |r| r.max());
            writeln!(
                f,
                "{:>12.6} {:>8} {:>16.9e} {:>14.6e} {:>12.3e}",
                e.horizon, e.intervals, e.value, e.terminal_state, resid
            )?;
        }
        for (j, d) in self.sup_diffs.iter().enumerate() {
            writeln!(f, "sup|c_{} - c_{}| = {:.3e}", j + 1, j, d)?;
        }
        Ok(())
    }
}
