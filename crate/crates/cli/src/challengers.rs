//! Seeded random challenger paths: constant or two-piece consumption levels
//! inside the control box, rejection-sampled for attainability.

use horizon_core::problem::{self, Grid, Problem, Trajectory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ChallengerSpec;

/// Draws allowed per requested challenger before giving up.
pub const MAX_DRAWS_PER_CHALLENGER: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChallengerShape {
    Constant { level: f64 },
    TwoPiece { first: f64, second: f64, switch: f64 },
}

#[derive(Debug, Clone)]
pub struct ChallengerSet {
    pub paths: Vec<Trajectory>,
    pub shapes: Vec<ChallengerShape>,
    pub draws: usize,
}

fn level_range(p: &Problem, span: f64) -> (f64, f64) {
    let (lo, hi) = p.control_bounds;
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo, hi),
        (true, false) => (lo, lo + 2.0 * span),
        (false, true) => (hi - 2.0 * span, hi),
        (false, false) => (-span, span),
    }
}

/// Generates `spec.count` attainable challengers on `grid`.
pub fn generate(p: &Problem, grid: &Grid, spec: &ChallengerSpec, tol: f64) -> ChallengerSet {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lo, hi) = level_range(p, spec.level_span);
    let horizon = grid.horizon();
    let mut set = ChallengerSet {
        paths: Vec::with_capacity(spec.count),
        shapes: Vec::with_capacity(spec.count),
        draws: 0,
    };
    let budget = spec.count * MAX_DRAWS_PER_CHALLENGER;
    while set.paths.len() < spec.count && set.draws < budget {
        set.draws += 1;
        let shape = if rng.gen_bool(0.5) {
            ChallengerShape::Constant {
                level: rng.gen_range(lo..=hi),
            }
        } else {
            ChallengerShape::TwoPiece {
                first: rng.gen_range(lo..=hi),
                second: rng.gen_range(lo..=hi),
                switch: rng.gen_range(0.0..horizon),
            }
        };
        let built = match shape {
            ChallengerShape::Constant { level } => problem::piecewise_constant_path(p, (level, level), 0.0, grid),
            ChallengerShape::TwoPiece { first, second, switch } => {
                problem::piecewise_constant_path(p, (first, second), switch, grid)
            }
        };
        let Ok(path) = built else { continue };
        match problem::is_attainable(&path, p, tol) {
            Ok(a) if a.attainable => {
                set.paths.push(path);
                set.shapes.push(shape);
            }
            _ => {}
        }
    }
    set
}
