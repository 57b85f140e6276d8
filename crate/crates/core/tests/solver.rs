use approx::assert_relative_eq;
use horizon_core::problem::{self, BuiltinModel, Grid, Problem};
use horizon_core::quadrature::QuadratureRule;
use horizon_core::solver::{
    collocation, dp_oracle, hamiltonian_residuals, solve_finite_horizon, DpGrid, SolveMethod, SolverOptions, Terminal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ramsey() -> Problem {
    BuiltinModel::ramsey(0.05, 10.0, 3.0).problem().unwrap()
}

// Closed form with k(T) = 0 binding: c(t) = c0·e^{2rt}.
fn ramsey_exact(t_end: f64) -> (f64, f64) {
    let (r, k0) = (0.05, 10.0);
    let growth = (r * t_end).exp() - 1.0;
    let c0 = k0 * r / growth;
    (c0, 2.0 * c0.sqrt() * growth / r)
}

#[test]
fn geodesic_optimum_is_the_flat_path() {
    let p = BuiltinModel::geodesic(5.0).problem().unwrap();
    let sol = solve_finite_horizon(&p, 4.0, &SolverOptions::default()).unwrap();
    assert_eq!(sol.terminal, Terminal::Free);
    assert!(sol.trajectory.control.iter().all(|c| c.abs() < 1e-10));
    assert_relative_eq!(sol.trajectory.value, -4.0, epsilon = 1e-10);
    assert!(sol.residuals.max() < 1e-8);
}

#[test]
fn ramsey_matches_closed_form_with_binding_terminal_capital() {
    let p = ramsey();
    let sol = solve_finite_horizon(&p, 5.0, &SolverOptions::default()).unwrap();
    let (c0, w) = ramsey_exact(5.0);
    assert_eq!(sol.terminal, Terminal::Binding);
    assert!(sol.residuals.terminal_state_binding);
    assert!(sol.residuals.max() < 1e-6, "{:?}", sol.residuals);
    assert_relative_eq!(sol.trajectory.value, w, max_relative = 1e-3);
    assert_relative_eq!(sol.trajectory.control[0], c0, max_relative = 1e-3);
    let att = problem::is_attainable(&sol.trajectory, &p, 1e-6).unwrap();
    assert!(att.attainable, "{att:?}");
}

#[test]
fn shooting_and_collocation_agree() {
    let p = ramsey();
    let base = SolverOptions {
        intervals: 100,
        ..SolverOptions::default()
    };
    let shoot = solve_finite_horizon(
        &p,
        5.0,
        &SolverOptions {
            method: SolveMethod::PmpShooting,
            ..base.clone()
        },
    )
    .unwrap();
    let coll = solve_finite_horizon(
        &p,
        5.0,
        &SolverOptions {
            method: SolveMethod::Collocation,
            ..base
        },
    )
    .unwrap();
    assert_eq!(coll.method, SolveMethod::Collocation);
    assert_relative_eq!(shoot.trajectory.value, coll.trajectory.value, max_relative = 1e-4);
    let worst = shoot
        .trajectory
        .control
        .iter()
        .zip(&coll.trajectory.control)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-2, "control gap {worst}");
}

#[test]
fn dp_oracle_brackets_the_solver() {
    let p = ramsey();
    let dp = dp_oracle(&p, 5.0, DpGrid::new(201, 121, 200)).unwrap();
    let sol = solve_finite_horizon(&p, 5.0, &SolverOptions::default()).unwrap();
    assert!(
        (dp.value - sol.trajectory.value).abs() <= 0.02 * sol.trajectory.value.abs(),
        "dp {} solver {}",
        dp.value,
        sol.trajectory.value
    );
}

#[test]
fn optimum_dominates_random_attainable_paths() {
    let p = ramsey();
    let opts = SolverOptions::default();
    let sol = solve_finite_horizon(&p, 5.0, &opts).unwrap();
    let grid = sol.trajectory.grid.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tried = 0;
    while tried < 50 {
        let l1 = rng.gen_range(0.0..3.0);
        let l2 = rng.gen_range(0.0..3.0);
        let s = rng.gen_range(0.0..5.0);
        let Ok(path) = problem::piecewise_constant_path(&p, (l1, l2), s, &grid) else {
            continue;
        };
        tried += 1;
        assert!(
            path.value <= sol.trajectory.value + 1e-9,
            "{l1} {l2} {s}: {}",
            path.value
        );
    }
}

#[test]
fn adjoint_gradient_matches_finite_differences() {
    let p = ramsey();
    let grid = Grid::new(2.0, 20).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let control: Vec<f64> = (0..=20).map(|_| rng.gen_range(0.5..2.5)).collect();
    let mut penalty = collocation::Penalty::new(&grid, 5.0);
    penalty.multipliers[20] = 0.3;
    let eval = collocation::objective_and_gradient(&p, &grid, &control, &penalty).unwrap();
    for j in [0, 7, 20] {
        let eps = 1e-6;
        let mut up = control.clone();
        up[j] += eps;
        let mut dn = control.clone();
        dn[j] -= eps;
        let fu = collocation::objective_and_gradient(&p, &grid, &up, &penalty)
            .unwrap()
            .value;
        let fd = collocation::objective_and_gradient(&p, &grid, &dn, &penalty)
            .unwrap()
            .value;
        let fdiff = (fu - fd) / (2.0 * eps);
        assert_relative_eq!(eval.gradient[j], fdiff, epsilon = 1e-6, max_relative = 1e-5);
    }
}

#[test]
fn residuals_flag_a_perturbed_terminal_costate() {
    let p = BuiltinModel::geodesic(5.0).problem().unwrap();
    let mut sol = solve_finite_horizon(&p, 2.0, &SolverOptions::default()).unwrap();
    *sol.trajectory.costate.last_mut().unwrap() += 0.1;
    let r = hamiltonian_residuals(&sol.trajectory, &p).unwrap();
    assert_relative_eq!(r.transversality_residual, 0.1, epsilon = 1e-12);
}

#[test]
fn trapezoid_rule_option_is_respected() {
    let p = ramsey();
    let opts = SolverOptions {
        rule: QuadratureRule::Trapezoid,
        ..SolverOptions::default()
    };
    let sol = solve_finite_horizon(&p, 5.0, &opts).unwrap();
    let (_, w) = ramsey_exact(5.0);
    assert_relative_eq!(sol.trajectory.value, w, max_relative = 1e-3);
}

#[test]
fn invalid_inputs_are_rejected() {
    let p = ramsey();
    assert!(solve_finite_horizon(&p, 0.0, &SolverOptions::default()).is_err());
    assert!(solve_finite_horizon(&p, f64::NAN, &SolverOptions::default()).is_err());
    let bad = SolverOptions {
        newton_tol: -1.0,
        ..SolverOptions::default()
    };
    assert!(solve_finite_horizon(&p, 1.0, &bad).is_err());
    let geo = BuiltinModel::geodesic(5.0).problem().unwrap();
    assert!(dp_oracle(&geo, 1.0, DpGrid::new(10, 10, 10)).is_err());
}
