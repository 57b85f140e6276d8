//! Optimality evidence for limit paths.
//!
//! * The ratio condition `R(T) = ∫₀^T (U(c°) − U(c_T)) / ∫₀^T U(c°) → 0`.
//! * Overtaking: a candidate overtakes a reference when
//!   `liminf_T (∫₀^T U(c_ref) − ∫₀^T U(c_cand)) < 0`.
//! * Weak maximality: no attainable challenger overtakes the limit path.
//!
//! A liminf over `T → ∞` cannot be observed from finitely many horizons. All
//! verdicts here are tail estimates over the sampled horizons, labelled as
//! such.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::expr::EvalError;
use crate::ladder::{HorizonLadder, LimitPath, ATTAINABILITY_TOL};
use crate::problem::{self, Grid, Problem, ProblemError, Trajectory};
use crate::quadrature::{self, QuadratureError, QuadratureRule};

mod sequence;

pub use sequence::{
    liminf_estimate, liminf_product_check, LiminfEstimate, ProductReport, SampledSequence, Trend, LIMINF_CAVEAT,
};

/// Margin separating `< 0` from `≤ 0`.
pub const STRICTNESS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriterionError {
    #[error("invalid sequence: {0}")]
    Sequence(&'static str),
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("tail fraction must lie in (0, 1], got {0}")]
    TailFraction(f64),
    #[error("sequences are sampled at different indices")]
    IndexMismatch,
    #[error("T = {0} is not a ladder horizon")]
    NotInLadder(f64),
    #[error("the {family} path family has no trajectory on [0, {horizon}]")]
    MissingHorizon { family: &'static str, horizon: f64 },
    #[error("the {family} path is not attainable on [0, {horizon}] (defect {residual})")]
    NotAttainable {
        family: &'static str,
        horizon: f64,
        residual: f64,
    },
    #[error("zero denominator at index {index}")]
    ZeroDenominator { index: usize },
    #[error("at T = {horizon}: {source}")]
    Quadrature { horizon: f64, source: QuadratureError },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("horizon list is empty")]
    NoHorizons,
}

/// Trajectories indexed by horizon.
#[derive(Debug, Clone, PartialEq)]
pub enum PathFamily {
    /// One long path; shorter horizons use its restriction.
    Single(Trajectory),
    /// One path per horizon (e.g. the finite-horizon optima `c_T`); a horizon
    /// without its own entry restricts the next longer one.
    PerHorizon(Vec<Trajectory>),
}

fn same_horizon(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

impl PathFamily {
    pub fn on_horizon(&self, horizon: f64) -> Option<Trajectory> {
        let from = |t: &Trajectory| {
            if same_horizon(t.horizon(), horizon) {
                Some(t.clone())
            } else if t.horizon() > horizon {
                t.restrict(horizon)
            } else {
                None
            }
        };
        match self {
            PathFamily::Single(t) => from(t),
            PathFamily::PerHorizon(ts) => {
                if let Some(t) = ts.iter().find(|t| same_horizon(t.horizon(), horizon)) {
                    return Some(t.clone());
                }
                ts.iter()
                    .filter(|t| t.horizon() > horizon)
                    .min_by(|a, b| a.horizon().total_cmp(&b.horizon()))
                    .and_then(from)
            }
        }
    }

    pub fn max_horizon(&self) -> f64 {
        match self {
            PathFamily::Single(t) => t.horizon(),
            PathFamily::PerHorizon(ts) => ts.iter().map(|t| t.horizon()).fold(0.0, f64::max),
        }
    }
}

/// `c°` on `[0, T_max]`: the limit samples on the window, the largest ladder
/// trajectory beyond it.
pub fn extend_limit(ladder: &HorizonLadder, limit: &LimitPath) -> Trajectory {
    let mut out = ladder.largest().clone();
    let grid = out.grid.clone();
    for (i, t) in grid.nodes().enumerate() {
        if t > limit.window {
            break;
        }
        if let (Some(c), Some(k), Some(l)) = (
            limit.grid.interpolate(&limit.control, t),
            limit.grid.interpolate(&limit.state, t),
            limit.grid.interpolate(&limit.costate, t),
        ) {
            out.control[i] = c;
            out.state[i] = k;
            out.costate[i] = l;
        }
    }
    out.value = f64::NAN;
    out
}

/// The limit path as a family usable at every ladder horizon.
pub fn limit_family(ladder: &HorizonLadder, limit: &LimitPath) -> PathFamily {
    PathFamily::Single(extend_limit(ladder, limit))
}

/// Puts two trajectories on a common grid (the finer spacing).
fn align(a: Trajectory, b: Trajectory) -> (Trajectory, Trajectory) {
    if a.grid == b.grid {
        return (a, b);
    }
    let step = a.grid.step().min(b.grid.step());
    let grid = Grid::with_max_step(a.horizon(), step).expect("positive horizon");
    let ra = a.resample(&grid).unwrap_or(a);
    let rb = b.resample(&grid).unwrap_or(b);
    (ra, rb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RatioSample {
    pub horizon: f64,
    /// `∫₀^T (U(c°) − U(c_T)) dt`.
    pub numerator: f64,
    /// `∫₀^T U(c°) dt`.
    pub denominator: f64,
    /// `None` when the denominator is zero.
    pub ratio: Option<f64>,
}

/// `R(T)` for an explicit `c°` and `c_T` on the same horizon.
pub fn theorem_ratio(
    p: &Problem,
    limit: &Trajectory,
    solution: &Trajectory,
    rule: QuadratureRule,
) -> Result<RatioSample, CriterionError> {
    let horizon = solution.horizon();
    let at = |source| CriterionError::Quadrature { horizon, source };
    let (mut lim, sol) = align(limit.clone(), solution.clone());
    let numerator = quadrature::value_difference(&lim, &sol, p, rule).map_err(at)?;
    let denominator = quadrature::accumulated_value(&mut lim, p, rule).map_err(at)?;
    let ratio = (denominator != 0.0).then(|| numerator / denominator);
    Ok(RatioSample {
        horizon,
        numerator,
        denominator,
        ratio,
    })
}

/// `R(T)` at ladder horizon `T`, with `c°` extended past the window by the
/// largest ladder trajectory.
pub fn condition_ratio(
    ladder: &HorizonLadder,
    limit: &LimitPath,
    horizon: f64,
    rule: QuadratureRule,
) -> Result<RatioSample, CriterionError> {
    let entry = ladder.entry_at(horizon).ok_or(CriterionError::NotInLadder(horizon))?;
    let extended = extend_limit(ladder, limit);
    let reference = extended.restrict(horizon).ok_or(CriterionError::MissingHorizon {
        family: "limit",
        horizon,
    })?;
    theorem_ratio(ladder.problem(), &reference, &entry.trajectory, rule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConditionReport {
    /// One sample per ladder horizon, including the one that supplies `c°`.
    pub samples: Vec<RatioSample>,
    /// `R(T_j)` over the horizons the verdict uses.
    pub ratios: Option<SampledSequence>,
    pub denominator_positive: bool,
    /// Last `R(T_j)` used by the verdict.
    pub limit_estimate: f64,
    pub verdict: Verdict,
    pub tol_zero: f64,
    pub proof_step_warning: Option<String>,
    pub notes: Vec<String>,
}

pub const DENOMINATOR_WARNING: &str =
    "denominator of R(T) is not positive; the sufficiency argument needs liminf of the limit path's accumulated utility to be positive, so this verdict does not carry the optimality conclusion";

/// Relative rounding allowance when comparing successive ratios.
const TREND_SLACK: f64 = 1e-9;

/// Verdict from the tail of `|R|`. The condition is a limit, so a bare
/// liminf of zero is not enough: `|R|` must also stop growing.
fn classify_ratios(abs: &[f64], tol_zero: f64) -> Verdict {
    let tail = &abs[abs.len().saturating_sub(3)..];
    let last = tail[tail.len() - 1];
    let clamped: Vec<f64> = tail.iter().map(|&r| if r <= tol_zero { 0.0 } else { r }).collect();
    let slack = |a: f64, b: f64| TREND_SLACK * a.abs().max(b.abs());
    if last <= tol_zero && clamped.windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1])) {
        Verdict::Satisfied
    } else if tail.iter().all(|&r| r > tol_zero) && tail.windows(2).all(|w| w[1] >= w[0] - slack(w[0], w[1])) {
        Verdict::Violated
    } else {
        Verdict::Inconclusive
    }
}

/// Evaluates `R(T_j)` on every ladder horizon and classifies the tail. The
/// largest horizon supplies `c°` itself, so its ratio is reported but left
/// out of the verdict.
pub fn check_theorem_condition(
    ladder: &HorizonLadder,
    limit: &LimitPath,
    rule: QuadratureRule,
    tol_zero: f64,
) -> Result<ConditionReport, CriterionError> {
    let n = ladder.entries().len();
    if n < 3 {
        return Err(CriterionError::TooFewSamples { needed: 3, found: n });
    }
    let samples = ladder
        .entries()
        .iter()
        .map(|e| condition_ratio(ladder, limit, e.horizon, rule))
        .collect::<Result<Vec<_>, _>>()?;
    let used = &samples[..n - 1];
    let mut notes = Vec::new();
    notes.push(format!(
        "c° beyond t = {:?} is the T = {:?} solution; that horizon is excluded from the verdict",
        limit.window, limit.source_horizon
    ));
    notes.push(String::from(
        "the condition is a limit: Satisfied needs |R| <= tol_zero and non-increasing over the last three samples",
    ));
    let denominator_positive = used.iter().all(|s| s.denominator > 0.0);
    let proof_step_warning = (!denominator_positive).then(|| String::from(DENOMINATOR_WARNING));

    let defined: Option<Vec<f64>> = used.iter().map(|s| s.ratio).collect();
    let (ratios, limit_estimate, verdict) = match defined {
        Some(r) => {
            let abs: Vec<f64> = r.iter().map(|v| v.abs()).collect();
            let verdict = classify_ratios(&abs, tol_zero);
            let index = used.iter().map(|s| s.horizon).collect();
            let last = r[r.len() - 1];
            (Some(SampledSequence::new(index, r)?), last, verdict)
        }
        None => {
            notes.push(String::from("R(T) undefined at some horizon (zero denominator)"));
            (None, f64::NAN, Verdict::Inconclusive)
        }
    };
    Ok(ConditionReport {
        samples,
        ratios,
        denominator_positive,
        limit_estimate,
        verdict,
        tol_zero,
        proof_step_warning,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OvertakingVerdict {
    /// `D(T_j) = W_ref(T_j) − W_cand(T_j)`.
    pub differences: SampledSequence,
    /// Tail estimate of `liminf D`.
    pub liminf: LiminfEstimate,
    /// Tail estimate of `liminf (W_cand − W_ref)`.
    pub reverse_liminf: LiminfEstimate,
    /// `liminf D < −STRICTNESS`, or `D` falls without bound.
    pub overtakes: bool,
    /// `liminf (W_cand − W_ref) ≤ STRICTNESS`: the candidate does nothing to
    /// contradict optimality of the reference.
    pub weak_maximality_consistent: bool,
}

fn checked(family: &PathFamily, name: &'static str, p: &Problem, horizon: f64) -> Result<Trajectory, CriterionError> {
    let t = family
        .on_horizon(horizon)
        .ok_or(CriterionError::MissingHorizon { family: name, horizon })?;
    let att = problem::is_attainable(&t, p, ATTAINABILITY_TOL)?;
    if !att.attainable {
        return Err(CriterionError::NotAttainable {
            family: name,
            horizon,
            residual: att.max_residual,
        });
    }
    Ok(t)
}

/// Does `candidate` overtake `reference` over `horizons`?
pub fn overtakes(
    candidate: &PathFamily,
    reference: &PathFamily,
    p: &Problem,
    horizons: &[f64],
    rule: QuadratureRule,
    tail_fraction: f64,
) -> Result<OvertakingVerdict, CriterionError> {
    if horizons.is_empty() {
        return Err(CriterionError::NoHorizons);
    }
    let mut d = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let cand = checked(candidate, "candidate", p, horizon)?;
        let refr = checked(reference, "reference", p, horizon)?;
        let (refr, cand) = align(refr, cand);
        let v = quadrature::value_difference(&refr, &cand, p, rule)
            .map_err(|source| CriterionError::Quadrature { horizon, source })?;
        d.push(v);
    }
    let differences = SampledSequence::new(horizons.to_vec(), d)?;
    let liminf = liminf_estimate(&differences, tail_fraction)?;
    let reverse_liminf = liminf_estimate(&differences.negated(), tail_fraction)?;
    Ok(OvertakingVerdict {
        overtakes: liminf.unbounded_below || liminf.estimate < -STRICTNESS,
        weak_maximality_consistent: reverse_liminf.estimate <= STRICTNESS,
        differences,
        liminf,
        reverse_liminf,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct WeakMaximalityReport {
    pub verdicts: Vec<OvertakingVerdict>,
    /// No tested challenger overtakes the limit path.
    pub no_challenger_overtakes: bool,
    pub overtaking: Vec<usize>,
    pub warning: Option<String>,
    pub scope: &'static str,
}

pub const CHALLENGER_SCOPE: &str =
    "evidence over the supplied challenger set and sampled horizons; not a proof over all attainable paths";

/// Runs [`overtakes`] for every challenger against the limit family.
pub fn verify_weak_maximality(
    limit: &PathFamily,
    challengers: &[PathFamily],
    p: &Problem,
    horizons: &[f64],
    rule: QuadratureRule,
    tail_fraction: f64,
) -> Result<WeakMaximalityReport, CriterionError> {
    let verdicts = challengers
        .iter()
        .map(|c| overtakes(c, limit, p, horizons, rule, tail_fraction))
        .collect::<Result<Vec<_>, _>>()?;
    let overtaking: Vec<usize> = verdicts
        .iter()
        .enumerate()
        .filter(|(_, v)| v.overtakes)
        .map(|(i, _)| i)
        .collect();
    let warning = challengers
        .is_empty()
        .then(|| String::from("no challengers supplied; the summary is vacuous"));
    Ok(WeakMaximalityReport {
        no_challenger_overtakes: overtaking.is_empty(),
        overtaking,
        verdicts,
        warning,
        scope: CHALLENGER_SCOPE,
    })
}

/// Largest relative error of `W_c/W_° = (W_c/W_T)·(W_T/W_°)` over the
/// triples `(W_cand, W_ladder, W_limit)`.
pub fn ratio_decomposition_check(triples: &[(f64, f64, f64)]) -> Result<f64, CriterionError> {
    let mut worst = 0.0f64;
    for (index, &(cand, ladder, limit)) in triples.iter().enumerate() {
        if ladder == 0.0 || limit == 0.0 {
            return Err(CriterionError::ZeroDenominator { index });
        }
        let lhs = cand / limit;
        let rhs = (cand / ladder) * (ladder / limit);
        let scale = lhs.abs().max(f64::MIN_POSITIVE);
        worst = worst.max((lhs - rhs).abs() / scale);
    }
    Ok(worst)
}
