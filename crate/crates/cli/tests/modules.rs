use horizon_core::criterion::Verdict;
use horizon_core::ladder::{self, Schedule};
use horizon_core::problem::{self, BuiltinModel, Grid};
use horizon_core::solver::SolverOptions;
use horizon_limit::challengers::{self, ChallengerShape};
use horizon_limit::config::{ChallengerSpec, ModelSpec, RunConfig};
use horizon_limit::report::Outcome;
use horizon_limit::{csvio, parallel};

#[test]
fn csv_round_trip_is_exact() {
    let p = BuiltinModel::ramsey(0.05, 10.0, 3.0).problem().unwrap();
    let grid = Grid::new(5.0, 50).unwrap();
    let t = problem::piecewise_constant_path(&p, (0.3, 1.7), 2.0, &grid).unwrap();
    let mut buf = Vec::new();
    csvio::write_trajectory(&mut buf, &t).unwrap();
    let back = csvio::read_trajectory(buf.as_slice()).unwrap();
    assert_eq!(back.grid, t.grid);
    assert_eq!(back.control, t.control);
    assert_eq!(back.state, t.state);
    assert_eq!(back.costate, t.costate);
}

#[test]
fn csv_rejects_bad_input() {
    let bad = [
        "t,c,k\n0,1,1\n1,1,1\n",
        "t,c,k,lambda\n0,1,1,0\n",
        "t,c,k,lambda\n0,1,1,0\n1,x,1,0\n",
        "t,c,k,lambda\n0,1,1,0\n1,1,1,0\n3,1,1,0\n",
    ];
    for text in bad {
        assert!(csvio::read_trajectory(text.as_bytes()).is_err(), "{text}");
    }
}

#[test]
fn config_defaults_and_rule_propagation() {
    let cfg = RunConfig::from_json(
        r#"{"model":{"kind":"ramsey","r":0.05,"k0":10,"c_max":3},"schedule":{"t0":5,"factor":2,"count":4},"rule":"trapezoid"}"#,
    )
    .unwrap();
    assert_eq!(
        cfg.model,
        ModelSpec::Ramsey {
            r: 0.05,
            k0: 10.0,
            c_max: 3.0,
            exponent: 0.5
        }
    );
    assert_eq!(cfg.solver.rule, cfg.rule);
    assert_eq!(cfg.challengers.count, 50);
    assert_eq!(cfg.window_fraction, 1.0);
    let run = cfg.validate().unwrap();
    assert_eq!(run.problem.control_bounds, (0.0, 3.0));
}

#[test]
fn custom_model_bounds_default_to_infinite() {
    let cfg = RunConfig::from_json(
        r#"{"model":{"kind":"custom","utility":"-(c^2)","dynamics":"c","k0":2},"schedule":{"t0":1,"factor":2,"count":3}}"#,
    )
    .unwrap();
    let run = cfg.validate().unwrap();
    assert_eq!(run.problem.control_bounds, (f64::NEG_INFINITY, f64::INFINITY));
    assert_eq!(run.problem.initial_capital, 2.0);
}

#[test]
fn config_rejects_bad_tolerances() {
    let base = |extra: &str| {
        format!(r#"{{"model":{{"kind":"geodesic","a":1}},"schedule":{{"t0":1,"factor":2,"count":3}}{extra}}}"#)
    };
    for extra in [
        r#","tolerances":{"tol_zero":0}"#,
        r#","tolerances":{"tail_fraction":1.5}"#,
        r#","challengers":{"level_span":-1}"#,
        r#","solver":{"intervals":0}"#,
    ] {
        let cfg = RunConfig::from_json(&base(extra)).unwrap();
        assert!(cfg.validate().is_err(), "{extra}");
    }
    assert!(RunConfig::from_json(&base(r#","solver":{"bogus":1}"#)).is_err());
}

#[test]
fn challengers_are_seeded_and_attainable() {
    let p = BuiltinModel::ramsey(0.05, 10.0, 3.0).problem().unwrap();
    let grid = Grid::new(20.0, 400).unwrap();
    let spec = ChallengerSpec {
        count: 20,
        seed: 11,
        level_span: 1.0,
    };
    let a = challengers::generate(&p, &grid, &spec, 1e-6);
    let b = challengers::generate(&p, &grid, &spec, 1e-6);
    assert_eq!(a.paths.len(), 20);
    assert_eq!(a.shapes, b.shapes);
    assert_eq!(a.paths, b.paths);
    for (path, shape) in a.paths.iter().zip(&a.shapes) {
        assert!(problem::is_attainable(path, &p, 1e-6).unwrap().attainable);
        let in_box = |c: f64| (0.0..=3.0).contains(&c);
        match *shape {
            ChallengerShape::Constant { level } => assert!(in_box(level)),
            ChallengerShape::TwoPiece { first, second, switch } => {
                assert!(in_box(first) && in_box(second) && (0.0..20.0).contains(&switch));
            }
        }
    }
    let other = challengers::generate(&p, &grid, &ChallengerSpec { seed: 12, ..spec }, 1e-6);
    assert_ne!(other.shapes, a.shapes);
}

#[test]
fn unbounded_controls_use_level_span() {
    let p = BuiltinModel::geodesic(1.0).problem().unwrap();
    let grid = Grid::new(10.0, 100).unwrap();
    let spec = ChallengerSpec {
        count: 30,
        seed: 0,
        level_span: 0.25,
    };
    let set = challengers::generate(&p, &grid, &spec, 1e-6);
    assert_eq!(set.paths.len(), 30);
    assert!(set.paths.iter().flat_map(|t| &t.control).all(|c| c.abs() <= 0.25));
}

#[test]
fn threaded_ladder_matches_sequential() {
    let p = BuiltinModel::ramsey(0.05, 10.0, 3.0).problem().unwrap();
    let schedule = Schedule::new(5.0, 2.0, 4).unwrap();
    let opts = SolverOptions::default();
    let seq = ladder::build_ladder(&p, schedule, &opts).unwrap();
    for threads in [1, 3, 8] {
        let par = parallel::build_ladder(&p, schedule, &opts, threads).unwrap();
        assert_eq!(par, seq);
    }
}

#[test]
fn outcome_precedence() {
    assert_eq!(Outcome::combine(Verdict::Satisfied, true, false), Outcome::Satisfied);
    assert_eq!(
        Outcome::combine(Verdict::Satisfied, false, false),
        Outcome::Inconclusive
    );
    assert_eq!(Outcome::combine(Verdict::Satisfied, true, true), Outcome::Overtaken);
    assert_eq!(Outcome::combine(Verdict::Violated, true, false), Outcome::Violated);
    assert_eq!(
        Outcome::combine(Verdict::Inconclusive, true, false),
        Outcome::Inconclusive
    );
    let codes: Vec<i32> = [
        Outcome::Satisfied,
        Outcome::Violated,
        Outcome::Overtaken,
        Outcome::Inconclusive,
    ]
    .iter()
    .map(|o| o.exit_code())
    .collect();
    assert_eq!(codes, [0, 3, 3, 4]);
}
