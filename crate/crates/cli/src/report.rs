//! JSON reports. Output is a pure function of the inputs: no timings, no
//! host details, fields in a fixed order.

use std::path::Path;

use anyhow::{Context, Result};
use horizon_core::criterion::{ConditionReport, OvertakingVerdict, Verdict};
use horizon_core::ladder::{ConvergenceReport, LimitPath};
use horizon_core::problem::Diagnostic;
use horizon_core::quadrature::QuadratureRule;
use horizon_core::solver::{Integrator, ResidualReport, Solution, SolveMethod, Terminal};
use serde::Serialize;

use crate::challengers::ChallengerShape;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub label: String,
    pub horizon: f64,
    pub intervals: usize,
    pub rule: QuadratureRule,
    pub method: SolveMethod,
    pub integrator: Option<Integrator>,
    pub terminal: Terminal,
    pub iterations: usize,
    pub ambiguous_controls: usize,
    pub value: f64,
    pub terminal_state: f64,
    pub residuals: ResidualReport,
    pub diagnostics: Vec<Diagnostic>,
}

impl SolveReport {
    pub fn new(label: &str, rule: QuadratureRule, s: &Solution, diagnostics: Vec<Diagnostic>) -> Self {
        let t = &s.trajectory;
        Self {
            schema_version: SCHEMA_VERSION,
            command: "solve",
            label: label.to_owned(),
            horizon: t.horizon(),
            intervals: t.grid.intervals(),
            rule,
            method: s.method,
            integrator: s.integrator,
            terminal: s.terminal,
            iterations: s.iterations,
            ambiguous_controls: s.ambiguous_controls,
            value: t.value,
            terminal_state: t.state[t.state.len() - 1],
            residuals: s.residuals,
            diagnostics,
        }
    }
}

/// Limit path metadata; the samples themselves go to `limit.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct LimitSummary {
    pub window: f64,
    pub intervals: usize,
    pub converged: bool,
    pub tol: f64,
    pub sup_diffs: Vec<f64>,
    pub source_horizon: f64,
    pub extrapolation_note: String,
}

impl From<&LimitPath> for LimitSummary {
    fn from(l: &LimitPath) -> Self {
        Self {
            window: l.window,
            intervals: l.grid.intervals(),
            converged: l.converged,
            tol: l.tol,
            sup_diffs: l.sup_diffs.clone(),
            source_horizon: l.source_horizon,
            extrapolation_note: l.extrapolation_note.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub horizons: Vec<f64>,
    pub convergence: ConvergenceReport,
    pub limit: LimitSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChallengerOutcome {
    pub index: usize,
    pub shape: ChallengerShape,
    pub verdict: OvertakingVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChallengerSummary {
    pub seed: u64,
    pub requested: usize,
    pub generated: usize,
    pub draws: usize,
    pub no_challenger_overtakes: bool,
    pub overtaking: Vec<usize>,
    /// Largest `liminf (W_cand − W_lim)` over the challengers.
    pub max_reverse_liminf: Option<f64>,
    pub scope: &'static str,
    pub warning: Option<String>,
    pub challengers: Vec<ChallengerOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Satisfied,
    Violated,
    Overtaken,
    Inconclusive,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Satisfied => 0,
            Outcome::Violated | Outcome::Overtaken => 3,
            Outcome::Inconclusive => 4,
        }
    }

    /// Overtaking or a violated condition wins over everything else; an
    /// unconverged limit downgrades a satisfied condition.
    pub fn combine(condition: Verdict, limit_converged: bool, overtaken: bool) -> Self {
        if overtaken {
            Outcome::Overtaken
        } else {
            match condition {
                Verdict::Violated => Outcome::Violated,
                Verdict::Satisfied if limit_converged => Outcome::Satisfied,
                _ => Outcome::Inconclusive,
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub label: String,
    pub rule: QuadratureRule,
    pub horizons: Vec<f64>,
    pub diagnostics: Vec<Diagnostic>,
    pub convergence: ConvergenceReport,
    pub limit: LimitSummary,
    pub condition: ConditionReport,
    pub weak_maximality: ChallengerSummary,
    pub outcome: Outcome,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub candidate: String,
    pub reference: String,
    pub horizons: Vec<f64>,
    pub verdict: OvertakingVerdict,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?).with_context(|| format!("cannot write {}", path.display()))
}
