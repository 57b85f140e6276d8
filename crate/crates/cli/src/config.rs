//! JSON run configuration. Every field is validated before any computation
//! starts; unknown keys are rejected.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use horizon_core::ladder::Schedule;
use horizon_core::problem::{BuiltinModel, Problem};
use horizon_core::quadrature::QuadratureRule;
use horizon_core::solver::SolverOptions;
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `U = −(1+c²)^½`, `k̇ = c`, `k(0) = a`.
    Geodesic { a: f64 },
    /// `U = c^γ/γ`, `k̇ = r·k − c`, `c ∈ [0, c_max]`.
    Ramsey {
        r: f64,
        k0: f64,
        c_max: f64,
        #[serde(default = "half")]
        exponent: f64,
    },
    /// Inline expressions; a missing bound is infinite.
    Custom {
        utility: String,
        dynamics: String,
        k0: f64,
        #[serde(default)]
        c_min: Option<f64>,
        #[serde(default)]
        c_max: Option<f64>,
        #[serde(default)]
        state_lower_bound: f64,
        #[serde(default)]
        label: Option<String>,
    },
}

fn half() -> f64 {
    0.5
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn problem(&self) -> Result<Problem> {
        Ok(match self {
            ModelSpec::Geodesic { a } => BuiltinModel::geodesic(*a).problem()?,
            ModelSpec::Ramsey { r, k0, c_max, exponent } => BuiltinModel::Ramsey {
                r: *r,
                exponent: *exponent,
                k0: *k0,
                c_max: *c_max,
            }
            .problem()?,
            ModelSpec::Custom {
                utility,
                dynamics,
                k0,
                c_min,
                c_max,
                state_lower_bound,
                label,
            } => {
                let bounds = (c_min.unwrap_or(f64::NEG_INFINITY), c_max.unwrap_or(f64::INFINITY));
                let p = Problem::from_sources(utility, dynamics, *k0, bounds)?
                    .with_state_lower_bound(*state_lower_bound)?;
                let label = label
                    .clone()
                    .unwrap_or_else(|| format!("custom(U={utility}, g={dynamics})"));
                p.with_label(label)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// `|R(T)|` at or below this counts as zero.
    pub tol_zero: f64,
    /// Sup-norm Cauchy tolerance for the limit path.
    pub limit_tol: f64,
    /// Dynamics defect allowance for challengers and loaded paths.
    pub attainability: f64,
    /// Share of trailing samples used by liminf estimates.
    pub tail_fraction: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_zero: 1e-6,
            limit_tol: 1e-6,
            attainability: 1e-6,
            tail_fraction: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChallengerSpec {
    pub count: usize,
    pub seed: u64,
    /// Level range used in place of an infinite control bound.
    pub level_span: f64,
}

impl Default for ChallengerSpec {
    fn default() -> Self {
        Self {
            count: 50,
            seed: 0,
            level_span: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub schedule: Schedule,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub rule: QuadratureRule,
    #[serde(default = "one")]
    pub window_fraction: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub challengers: ChallengerSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// A validated configuration with its problem already built.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub problem: Problem,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut cfg: RunConfig = serde_json::from_str(text).context("malformed config")?;
        cfg.solver.rule = cfg.rule;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(self) -> Result<Run> {
        self.schedule.validate()?;
        self.solver.validate()?;
        ensure!(
            self.window_fraction > 0.0 && self.window_fraction <= 1.0,
            "window_fraction must lie in (0, 1], got {}",
            self.window_fraction
        );
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_zero", t.tol_zero),
            ("limit_tol", t.limit_tol),
            ("attainability", t.attainability),
        ] {
            ensure!(v > 0.0 && v.is_finite(), "tolerances.{name} must be positive, got {v}");
        }
        ensure!(
            t.tail_fraction > 0.0 && t.tail_fraction <= 1.0,
            "tolerances.tail_fraction must lie in (0, 1], got {}",
            t.tail_fraction
        );
        let span = self.challengers.level_span;
        ensure!(
            span > 0.0 && span.is_finite(),
            "challengers.level_span must be positive, got {span}"
        );
        let problem = self.model.problem()?;
        if problem.control_bounds.0 > problem.control_bounds.1 {
            bail!("empty control box");
        }
        Ok(Run { config: self, problem })
    }
}
