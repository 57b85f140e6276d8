//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use horizon_core::criterion::{self, liminf_product_check, SampledSequence, Verdict};
use horizon_core::expr::{Bindings, Expr, Var};
use horizon_core::ladder::{self, Schedule};
use horizon_core::problem::{BuiltinModel, Grid};
use horizon_core::quadrature::{self, QuadratureRule};
use horizon_core::solver::{self, DpGrid, SolverOptions};
use horizon_limit::config::ModelSpec;
use horizon_limit::run;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn geodesic_ladder() -> Outcome {
    let start = Instant::now();
    let a = 5.0;
    let p = BuiltinModel::geodesic(a).problem().map_err(|e| e.to_string())?;
    let schedule = Schedule::new(5.0, 2.0, 4).map_err(|e| e.to_string())?;
    let lad = ladder::build_ladder(&p, schedule, &SolverOptions::default()).map_err(|e| e.to_string())?;
    for e in lad.entries() {
        let t = &e.trajectory;
        let sup = |v: &[f64], shift: f64| v.iter().map(|x| (x - shift).abs()).fold(0.0, f64::max);
        let (c, k, l) = (sup(&t.control, 0.0), sup(&t.state, a), sup(&t.costate, 0.0));
        ensure(
            c <= 1e-8 && k <= 1e-8 && l <= 1e-8,
            format!(
                "T = {}: max|c| = {c:e}, max|k-A| = {k:e}, max|lambda| = {l:e}",
                e.horizon
            ),
        )?;
    }
    let limit = ladder::extract_limit_path(&lad, 1.0, 1e-6).map_err(|e| e.to_string())?;
    let report =
        criterion::check_theorem_condition(&lad, &limit, QuadratureRule::Simpson, 1e-6).map_err(|e| e.to_string())?;
    ensure(
        report.verdict == Verdict::Satisfied,
        format!("verdict {:?}", report.verdict),
    )?;
    let worst = report
        .samples
        .iter()
        .map(|s| s.ratio.map_or(f64::INFINITY, f64::abs))
        .fold(0.0, f64::max);
    ensure(worst <= 1e-10, format!("max |R| = {worst:e}"))?;
    ensure(report.proof_step_warning.is_some(), "denominator warning missing")?;
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(5), format!("took {elapsed:?}"))?;
    Ok(format!(
        "4 entries exact, Satisfied, max |R| = {worst:e}, warning present, {elapsed:.2?}"
    ))
}

fn geodesic_challengers() -> Outcome {
    let run = run::load_run(&fixture("geodesic.json")).map_err(|f| f.to_string())?;
    let (report, _) = run::check_report(&run, 1).map_err(|f| f.to_string())?;
    let w = &report.weak_maximality;
    ensure(w.generated == 50, format!("{} challengers generated", w.generated))?;
    ensure(w.no_challenger_overtakes, format!("overtaking: {:?}", w.overtaking))?;
    let worst = w
        .challengers
        .iter()
        .map(|c| c.verdict.reverse_liminf.estimate)
        .fold(f64::NEG_INFINITY, f64::max);
    ensure(worst <= 1e-8, format!("largest liminf (W_c - W_lim) = {worst:e}"))?;
    Ok(format!(
        "50 challengers, none overtakes, largest liminf (W_c - W_lim) = {worst:.4e}"
    ))
}

fn ramsey_oracle() -> Outcome {
    let start = Instant::now();
    let text = std::fs::read_to_string(fixture("ramsey_dp.json")).map_err(|e| e.to_string())?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let model: ModelSpec = serde_json::from_value(v["model"].clone()).map_err(|e| e.to_string())?;
    let p = model.problem().map_err(|e| e.to_string())?;
    let horizon = v["horizon"].as_f64().ok_or("horizon")?;
    let frozen = v["value"].as_f64().ok_or("value")?;
    let dims = |key: &str| v[key].as_u64().map(|n| n as usize).ok_or(format!("{key} missing"));
    let grid = DpGrid::new(dims("state_nodes")?, dims("control_nodes")?, dims("time_steps")?);
    let dp = solver::dp_oracle(&p, horizon, grid).map_err(|e| e.to_string())?;
    ensure(
        (dp.value - frozen).abs() <= 1e-9 * frozen.abs(),
        format!("oracle drifted: {} vs frozen {frozen}", dp.value),
    )?;
    let sol = solver::solve_finite_horizon(&p, horizon, &SolverOptions::default()).map_err(|e| e.to_string())?;
    let w = sol.trajectory.value;
    let rel = (w - frozen).abs() / frozen.abs();
    ensure(rel <= 0.02, format!("W = {w}, oracle = {frozen}, relative gap {rel:e}"))?;
    let elapsed = start.elapsed();
    ensure(elapsed <= Duration::from_secs(60), format!("took {elapsed:?}"))?;
    Ok(format!(
        "W = {w:.6}, oracle = {frozen:.6}, relative gap {rel:.2e}, {elapsed:.2?}"
    ))
}

fn decomposition() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let draw = |rng: &mut ChaCha8Rng| {
        let magnitude = 10f64.powf(rng.gen_range(-3.0..3.0));
        if rng.gen_bool(0.5) {
            magnitude
        } else {
            -magnitude
        }
    };
    let triples: Vec<_> = (0..1000)
        .map(|_| (draw(&mut rng), draw(&mut rng), draw(&mut rng)))
        .collect();
    let worst = criterion::ratio_decomposition_check(&triples).map_err(|e| e.to_string())?;
    ensure(worst <= 1e-12, format!("max relative error {worst:e}"))?;
    Ok(format!("1000 triples, max relative error {worst:e}"))
}

fn liminf_product() -> Outcome {
    let seq = |f: &dyn Fn(usize) -> f64, n: usize| SampledSequence::from_values((1..=n).map(f).collect());
    let err = |e: criterion::CriterionError| e.to_string();

    let a = seq(&|j| 2.0 + if j % 2 == 0 { 0.5 } else { -0.5 }, 100).map_err(err)?;
    let b = seq(&|_| 1.0, 100).map_err(err)?;
    let r = liminf_product_check(&a, &b, 0.5, 1e-2).map_err(err)?;
    ensure(r.verified && r.liminf_product == 1.5 && r.rhs == 1.5, r.status.clone())?;

    let m = 10_000;
    let a = seq(&|j| 1.0 + 1.0 / j as f64, m).map_err(err)?;
    let b = seq(&|j| 1.0 - 1.0 / (j as f64 * j as f64), m).map_err(err)?;
    let r = liminf_product_check(&a, &b, 0.1, 1e-2).map_err(err)?;
    ensure(r.verified, r.status.clone())?;

    let a = seq(&|j| if j % 2 == 1 { 2.0 } else { 1.0 }, 100).map_err(err)?;
    let b = seq(&|j| if j % 2 == 1 { 1.0 } else { 2.0 }, 100).map_err(err)?;
    let r = liminf_product_check(&a, &b, 1.0, 1e-2).map_err(err)?;
    ensure(
        !r.verified && r.status.starts_with("unverified: b not convergent"),
        format!("alternating case: {}", r.status),
    )?;
    ensure(
        r.liminf_product == 2.0 && r.rhs == 1.0,
        format!("gap shown as {} vs {}", r.liminf_product, r.rhs),
    )?;
    Ok(format!("two convergent cases verified; alternating case: {}", r.status))
}

fn simpson_order() -> Outcome {
    let exact = std::f64::consts::E - 1.0;
    let error = |n: usize| -> Result<f64, String> {
        let grid = Grid::new(1.0, n).map_err(|e| e.to_string())?;
        let samples: Vec<f64> = grid.nodes().map(f64::exp).collect();
        let w = quadrature::integrate(&samples, &grid, QuadratureRule::Simpson).map_err(|e| e.to_string())?;
        Ok((w - exact).abs())
    };
    let ratio = error(8)? / error(16)?;
    ensure((12.0..=20.0).contains(&ratio), format!("ratio {ratio}"))?;
    Ok(format!("error ratio N = 8 -> 16 is {ratio:.3}"))
}

fn residuals() -> Outcome {
    let opts = SolverOptions::default();
    let mut worst = 0.0f64;
    let mut solves = 0;
    let models = [
        (BuiltinModel::geodesic(5.0), Schedule::new(5.0, 2.0, 4)),
        (BuiltinModel::ramsey(0.05, 10.0, 3.0), Schedule::new(5.0, 2.0, 4)),
    ];
    for (model, schedule) in models {
        let p = model.problem().map_err(|e| e.to_string())?;
        let schedule = schedule.map_err(|e| e.to_string())?;
        let lad = ladder::build_ladder(&p, schedule, &opts).map_err(|e| e.to_string())?;
        for e in lad.entries() {
            let r = e.residuals.ok_or("ladder entry without residuals")?;
            ensure(r.max() <= 1e-6, format!("{} at T = {}: {r:?}", p.label, e.horizon))?;
            worst = worst.max(r.max());
            solves += 1;
        }
    }
    Ok(format!("{solves} solves, largest residual {worst:e}"))
}

fn smooth_source(rng: &mut ChaCha8Rng, depth: usize) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return match rng.gen_range(0..3) {
            0 => format!("{:.3}", rng.gen_range(0.5..3.0)),
            1 => "c".into(),
            _ => "k".into(),
        };
    }
    let mut sub = || smooth_source(rng, depth - 1);
    let (a, b) = (sub(), sub());
    match rng.gen_range(0..9) {
        0 => format!("({a} + {b})"),
        1 => format!("({a} - {b})"),
        2 => format!("({a} * {b})"),
        3 => format!("{a} / (2 + sin({b}))"),
        4 => format!("sqrt(1 + ({a})^2)"),
        5 => format!("log(2 + cos({a}))"),
        6 => format!("exp(sin({a}))"),
        7 => format!("-{a}"),
        _ => format!("pow(2 + sin({a}), cos({b}))"),
    }
}

fn derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let src = smooth_source(&mut rng, 4);
        let e = Expr::parse(&src).map_err(|e| format!("{src}: {e}"))?;
        let (c, k) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
        let wrt_c = rng.gen_bool(0.5);
        let var = if wrt_c { Var::C } else { Var::K };
        let at = |dc: f64, dk: f64| Bindings::ck(c + dc, k + dk);
        let d = e.eval_dual(&at(0.0, 0.0), &var).map_err(|e| e.to_string())?.deriv;
        let h = 1e-6;
        let (up, dn) = if wrt_c {
            (at(h, 0.0), at(-h, 0.0))
        } else {
            (at(0.0, h), at(0.0, -h))
        };
        let fd = (e.eval(&up).map_err(|e| e.to_string())? - e.eval(&dn).map_err(|e| e.to_string())?) / (2.0 * h);
        let rel = (d - fd).abs() / (1.0 + d.abs());
        ensure(rel <= 1e-6, format!("{src}: dual {d} vs fd {fd}"))?;
        worst = worst.max(rel);
    }
    Ok(format!("100 expressions, largest relative gap {worst:e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture("geodesic.json");
    let mut outputs = Vec::new();
    for name in ["first", "second"] {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_horizon-limit"))
            .arg("check")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?
            .status;
        ensure(status.code() == Some(0), format!("check exited with {status}"))?;
        outputs.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    ensure(outputs[0] == outputs[1], "report.json differs between runs")?;
    Ok(format!(
        "report.json identical across runs ({} bytes)",
        outputs[0].len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, geodesic_ladder),
        (2, geodesic_challengers),
        (3, ramsey_oracle),
        (4, decomposition),
        (5, liminf_product),
        (6, simpson_order),
        (7, residuals),
        (8, derivatives),
        (9, determinism),
    ];
    let mut failed = 0;
    for (n, check) in criteria {
        match check() {
            Ok(detail) => println!("criterion {n}: PASS  {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL  {detail}");
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
