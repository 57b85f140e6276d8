//! Command implementations shared by the binary and the tests.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use horizon_core::criterion::{self, CriterionError, PathFamily};
use horizon_core::ladder::{self, HorizonLadder, LadderError, LimitPath};
use horizon_core::problem::{self, Diagnostic, Problem};
use horizon_core::solver;

use crate::challengers;
use crate::config::{Run, RunConfig};
use crate::csvio;
use crate::parallel;
use crate::report::{
    self, ChallengerOutcome, ChallengerSummary, CheckReport, CompareReport, LadderReport, LimitSummary, Outcome,
    SolveReport, SCHEMA_VERSION,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;

/// Utility probes used for model diagnostics.
const DIAGNOSTIC_SAMPLES: usize = 64;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn solver(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_SOLVER,
            error: error.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Core errors already print their source; skip causes that repeat it.
        let mut prev = self.error.to_string();
        f.write_str(&prev)?;
        for cause in self.error.chain().skip(1) {
            let msg = cause.to_string();
            if !prev.ends_with(&msg) {
                write!(f, ": {msg}")?;
            }
            prev = msg;
        }
        Ok(())
    }
}

impl From<LadderError> for Failure {
    fn from(e: LadderError) -> Self {
        match e {
            LadderError::Solve { .. } | LadderError::NotAttainable { .. } => Failure::solver(e),
            _ => Failure::input(e),
        }
    }
}

impl From<CriterionError> for Failure {
    fn from(e: CriterionError) -> Self {
        Failure::solver(e)
    }
}

/// `--out`, then the config's `output_dir`, then `out`.
pub fn output_dir(cli: Option<&Path>, config: Option<&RunConfig>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

pub fn load_run(path: &Path) -> Result<Run, Failure> {
    RunConfig::load(path)
        .and_then(RunConfig::validate)
        .map_err(Failure::input)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::input(anyhow!("cannot create {}: {e}", dir.display())))
}

fn diagnostics(p: &Problem) -> Result<Vec<Diagnostic>, Failure> {
    problem::validate_model(p, DIAGNOSTIC_SAMPLES).map_err(Failure::input)
}

pub fn solve(run: &Run, horizon: f64, out: &Path) -> Result<SolveReport, Failure> {
    let cfg = &run.config;
    let diags = diagnostics(&run.problem)?;
    let sol = solver::solve_finite_horizon(&run.problem, horizon, &cfg.solver).map_err(|e| match e {
        solver::SolverError::Horizon(_) => Failure::input(e),
        _ => Failure::solver(e),
    })?;
    let report = SolveReport::new(&run.problem.label, cfg.rule, &sol, diags);
    ensure_dir(out)?;
    csvio::save_trajectory(&out.join("trajectory.csv"), &sol.trajectory).map_err(Failure::input)?;
    report::save_json(&out.join("solve.json"), &report).map_err(Failure::input)?;
    Ok(report)
}

fn ladder_and_limit(run: &Run, threads: usize) -> Result<(HorizonLadder, LimitPath), Failure> {
    let cfg = &run.config;
    let ladder = parallel::build_ladder(&run.problem, cfg.schedule, &cfg.solver, threads)?;
    let limit = ladder::extract_limit_path(&ladder, cfg.window_fraction, cfg.tolerances.limit_tol)?;
    Ok((ladder, limit))
}

pub fn ladder(run: &Run, out: &Path, threads: usize) -> Result<LadderReport, Failure> {
    let (ladder, limit) = ladder_and_limit(run, threads)?;
    let convergence = ladder::convergence_report(&ladder, run.config.window_fraction)?;
    let report = LadderReport {
        schema_version: SCHEMA_VERSION,
        command: "ladder",
        horizons: ladder.horizons(),
        convergence,
        limit: LimitSummary::from(&limit),
    };
    ensure_dir(out)?;
    csvio::save_trajectory(&out.join("limit.csv"), &limit.as_trajectory()).map_err(Failure::input)?;
    report::save_json(&out.join("convergence.json"), &report).map_err(Failure::input)?;
    Ok(report)
}

/// The full check without touching the filesystem.
pub fn check_report(run: &Run, threads: usize) -> Result<(CheckReport, LimitPath), Failure> {
    let cfg = &run.config;
    let p = &run.problem;
    let diags = diagnostics(p)?;
    let (ladder, limit) = ladder_and_limit(run, threads)?;
    let convergence = ladder::convergence_report(&ladder, cfg.window_fraction)?;
    let condition = criterion::check_theorem_condition(&ladder, &limit, cfg.rule, cfg.tolerances.tol_zero)?;

    let set = challengers::generate(
        p,
        &ladder.largest().grid,
        &cfg.challengers,
        cfg.tolerances.attainability,
    );
    let family = criterion::limit_family(&ladder, &limit);
    let horizons = ladder.horizons();
    let paths: Vec<PathFamily> = set.paths.iter().cloned().map(PathFamily::Single).collect();
    let weak =
        criterion::verify_weak_maximality(&family, &paths, p, &horizons, cfg.rule, cfg.tolerances.tail_fraction)?;
    let mut warning = weak.warning.clone();
    if set.paths.len() < cfg.challengers.count {
        warning = Some(format!(
            "only {} of {} challengers were attainable after {} draws",
            set.paths.len(),
            cfg.challengers.count,
            set.draws
        ));
    }
    let max_reverse_liminf = weak
        .verdicts
        .iter()
        .map(|v| v.reverse_liminf.estimate)
        .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
    let overtaken = !weak.no_challenger_overtakes;
    let challengers = set
        .shapes
        .into_iter()
        .zip(weak.verdicts)
        .enumerate()
        .map(|(index, (shape, verdict))| ChallengerOutcome { index, shape, verdict })
        .collect();
    let summary = ChallengerSummary {
        seed: cfg.challengers.seed,
        requested: cfg.challengers.count,
        generated: set.paths.len(),
        draws: set.draws,
        no_challenger_overtakes: weak.no_challenger_overtakes,
        overtaking: weak.overtaking,
        max_reverse_liminf,
        scope: weak.scope,
        warning,
        challengers,
    };
    let outcome = Outcome::combine(condition.verdict, limit.converged, overtaken);
    let report = CheckReport {
        schema_version: SCHEMA_VERSION,
        command: "check",
        label: p.label.clone(),
        rule: cfg.rule,
        horizons,
        diagnostics: diags,
        convergence,
        limit: LimitSummary::from(&limit),
        condition,
        weak_maximality: summary,
        outcome,
        exit_code: outcome.exit_code(),
    };
    Ok((report, limit))
}

pub fn check(run: &Run, out: &Path, threads: usize) -> Result<CheckReport, Failure> {
    let (report, limit) = check_report(run, threads)?;
    ensure_dir(out)?;
    csvio::save_trajectory(&out.join("limit.csv"), &limit.as_trajectory()).map_err(Failure::input)?;
    report::save_json(&out.join("report.json"), &report).map_err(Failure::input)?;
    Ok(report)
}

/// Does the path in `candidate` overtake the one in `reference`? Samples at
/// the schedule horizons both files cover.
pub fn compare(run: &Run, candidate: &Path, reference: &Path) -> Result<CompareReport, Failure> {
    let cand = csvio::load_trajectory(candidate).map_err(Failure::input)?;
    let refr = csvio::load_trajectory(reference).map_err(Failure::input)?;
    let cover = cand.horizon().min(refr.horizon()) * (1.0 + 1e-12);
    let horizons: Vec<f64> = run
        .config
        .schedule
        .horizons()
        .into_iter()
        .filter(|&t| t <= cover)
        .collect();
    if horizons.len() < 2 {
        return Err(Failure::input(anyhow!(
            "the paths cover fewer than two schedule horizons (shorter path ends at {})",
            cand.horizon().min(refr.horizon())
        )));
    }
    let cfg = &run.config;
    let verdict = criterion::overtakes(
        &PathFamily::Single(cand),
        &PathFamily::Single(refr),
        &run.problem,
        &horizons,
        cfg.rule,
        cfg.tolerances.tail_fraction,
    )
    .map_err(Failure::input)?;
    Ok(CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        candidate: candidate.display().to_string(),
        reference: reference.display().to_string(),
        horizons,
        verdict,
    })
}
