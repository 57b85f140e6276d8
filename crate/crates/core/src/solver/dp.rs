//! Brute-force dynamic programming on a state × control × time grid.
//!
//! Independent of the shooting and collocation code paths: explicit Euler
//! transitions, exhaustive control enumeration, linear interpolation of the
//! value function in the state, zero terminal value.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::problem::{Grid, Problem, Trajectory};
use crate::quadrature::{self, QuadratureRule};

use super::SolverError;

#[derive(Debug, Clone)]
pub struct DpResult {
    /// `V_0(k₀)`.
    pub value: f64,
    /// Greedy forward rollout; `None` for a zero horizon.
    pub trajectory: Option<Trajectory>,
    /// Interpolation error scale `h_state · max|ΔV_0/Δk|`.
    pub error_bound: f64,
    pub k_max: f64,
    /// Growth bound `L` used for `k_max = k₀·e^{L·T}`.
    pub growth_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DpGrid {
    pub state_nodes: usize,
    pub control_nodes: usize,
    pub time_steps: usize,
}

impl DpGrid {
    pub const fn new(state_nodes: usize, control_nodes: usize, time_steps: usize) -> Self {
        Self {
            state_nodes,
            control_nodes,
            time_steps,
        }
    }
}

fn interp(values: &[f64], lo: f64, h: f64, x: f64) -> f64 {
    let n = values.len() - 1;
    let pos = ((x - lo) / h).clamp(0.0, n as f64);
    let i = (pos as usize).min(n.saturating_sub(1));
    let f = pos - i as f64;
    let (a, b) = (values[i], values[i + 1]);
    if f == 0.0 {
        return a;
    }
    if f == 1.0 {
        return b;
    }
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    a + f * (b - a)
}

pub fn dp_oracle(p: &Problem, horizon: f64, dims: DpGrid) -> Result<DpResult, SolverError> {
    if dims.state_nodes < 2 || dims.control_nodes < 2 || dims.time_steps < 1 {
        return Err(SolverError::DpGrid);
    }
    if !p.has_finite_bounds() {
        return Err(SolverError::UnboundedControls);
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SolverError::Horizon(horizon));
    }
    let (c_lo, c_hi) = p.control_bounds;
    let controls: Vec<f64> = (0..dims.control_nodes)
        .map(|m| {
            if m == dims.control_nodes - 1 {
                c_hi
            } else {
                c_lo + (c_hi - c_lo) * m as f64 / (dims.control_nodes - 1) as f64
            }
        })
        .collect();
    let k0 = p.initial_capital;

    let mut growth = 0.0f64;
    for &c in &controls {
        if let Ok(g) = p.dynamics_dk(c, k0) {
            growth = growth.max(g.value / k0).max(g.deriv);
        }
    }
    if horizon == 0.0 {
        return Ok(DpResult {
            value: 0.0,
            trajectory: None,
            error_bound: 0.0,
            k_max: k0,
            growth_bound: growth,
        });
    }

    let lb = p.state_lower_bound;
    let k_max = k0 * math::exp(growth * horizon);
    let ns = dims.state_nodes;
    let h_state = (k_max - lb) / (ns - 1) as f64;
    let states: Vec<f64> = (0..ns)
        .map(|a| if a == ns - 1 { k_max } else { lb + h_state * a as f64 })
        .collect();
    let steps = dims.time_steps;
    let dt = horizon / steps as f64;
    let utility: Vec<Option<f64>> = controls.iter().map(|&c| p.utility_at(c).ok()).collect();

    let best_control = |v_next: &[f64], k: f64| -> (f64, usize) {
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (m, &c) in controls.iter().enumerate() {
            let Some(u) = utility[m] else { continue };
            let Ok(g) = p.dynamics_at(c, k) else { continue };
            let next = k + dt * g;
            if next < lb {
                continue;
            }
            let v = u * dt + interp(v_next, lb, h_state, next.min(k_max));
            if v > best.0 {
                best = (v, m);
            }
        }
        best
    };

    // values[j] holds V_j on the state grid
    let mut values: Vec<Vec<f64>> = vec![vec![0.0; ns]; steps + 1];
    for j in (0..steps).rev() {
        let (head, tail) = values.split_at_mut(j + 1);
        let next = &tail[0];
        for (a, &k) in states.iter().enumerate() {
            head[j][a] = best_control(next, k).0;
        }
    }
    let value = interp(&values[0], lb, h_state, k0);

    let mut slope = 0.0f64;
    for a in 0..ns - 1 {
        let (x, y) = (values[0][a], values[0][a + 1]);
        if x.is_finite() && y.is_finite() {
            slope = slope.max(((y - x) / h_state).abs());
        }
    }

    let mut control = Vec::with_capacity(steps + 1);
    let mut state = Vec::with_capacity(steps + 1);
    let mut k = k0;
    state.push(k);
    for j in 0..steps {
        let (v, m) = best_control(&values[j + 1], k);
        if m == usize::MAX || !v.is_finite() {
            return Err(SolverError::DpInfeasible { step: j });
        }
        let c = controls[m];
        let g = p.dynamics_at(c, k).map_err(SolverError::Eval)?;
        k += dt * g;
        if k > k_max {
            return Err(SolverError::InsufficientKMax { step: j + 1, k, k_max });
        }
        control.push(c);
        state.push(k);
    }
    control.push(*control.last().expect("at least one step"));
    let grid = Grid::new(horizon, steps).map_err(SolverError::Problem)?;
    let mut traj = Trajectory::new(grid, control, state, vec![0.0; steps + 1]).map_err(SolverError::Problem)?;
    quadrature::accumulated_value(&mut traj, p, QuadratureRule::Simpson).map_err(SolverError::Quadrature)?;

    Ok(DpResult {
        value,
        trajectory: Some(traj),
        error_bound: h_state * slope,
        k_max,
        growth_bound: growth,
    })
}
