//! Two-column TSV series for external plotting tools.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde_json::Value;

use crate::csvio;

fn tsv(header: (&str, &str), rows: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut s = format!("{}\t{}\n", header.0, header.1);
    for (x, y) in rows {
        let _ = writeln!(s, "{x}\t{y}");
    }
    s
}

fn write(dir: &Path, name: &str, body: String, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
    written.push(path);
    Ok(())
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn array<'a>(v: &'a Value, path: &[&str]) -> Result<&'a Vec<Value>> {
    let mut cur = v;
    for key in path {
        cur = cur
            .get(key)
            .with_context(|| format!("report has no field {}", path.join(".")))?;
    }
    cur.as_array()
        .with_context(|| format!("field {} is not an array", path.join(".")))
}

fn series(v: &Value, path: &[&str]) -> Result<Vec<f64>> {
    Ok(array(v, path)?.iter().map(num).collect())
}

fn indexed(values: &[f64]) -> impl Iterator<Item = (f64, f64)> + '_ {
    values.iter().enumerate().map(|(j, &v)| ((j + 1) as f64, v))
}

fn convergence_series(v: &Value, dir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let entries = array(v, &["convergence", "entries"])?;
    let rows = entries.iter().map(|e| (num(&e["horizon"]), num(&e["value"])));
    write(dir, "value.tsv", tsv(("T", "W"), rows), written)?;
    let diffs = series(v, &["convergence", "sup_diffs"])?;
    write(dir, "sup_diff.tsv", tsv(("j", "sup_diff"), indexed(&diffs)), written)
}

fn difference(verdict: &Value) -> Result<String> {
    let t = series(verdict, &["differences", "index"])?;
    let d = series(verdict, &["differences", "values"])?;
    Ok(tsv(("T", "D"), t.into_iter().zip(d)))
}

/// Writes plot series for a trajectory CSV or a JSON report; returns the
/// files written.
pub fn plot(input: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    ensure!(!text.trim().is_empty(), "{} is empty", input.display());
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = Vec::new();
    let is_csv = input.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let traj = csvio::read_trajectory(text.as_bytes()).with_context(|| format!("in {}", input.display()))?;
        let t: Vec<f64> = traj.grid.nodes().collect();
        for (name, col, values) in [
            ("c.tsv", "c", &traj.control),
            ("k.tsv", "k", &traj.state),
            ("lambda.tsv", "lambda", &traj.costate),
        ] {
            let rows = t.iter().copied().zip(values.iter().copied());
            write(out, name, tsv(("t", col), rows), &mut written)?;
        }
        return Ok(written);
    }
    let v: Value =
        serde_json::from_str(&text).with_context(|| format!("{} is neither CSV nor JSON", input.display()))?;
    match v.get("command").and_then(Value::as_str) {
        Some("check") => {
            let samples = array(&v, &["condition", "samples"])?;
            let rows = samples.iter().map(|s| (num(&s["horizon"]), num(&s["ratio"])));
            write(out, "ratio.tsv", tsv(("T", "R"), rows), &mut written)?;
            for (i, c) in array(&v, &["weak_maximality", "challengers"])?.iter().enumerate() {
                write(
                    out,
                    &format!("difference_{i:02}.tsv"),
                    difference(&c["verdict"])?,
                    &mut written,
                )?;
            }
            convergence_series(&v, out, &mut written)?;
        }
        Some("ladder") => convergence_series(&v, out, &mut written)?,
        Some("compare") => write(out, "difference_00.tsv", difference(&v["verdict"])?, &mut written)?,
        Some(other) => bail!("nothing to plot for a {other:?} report"),
        None => bail!("{} is not a report (no \"command\" field)", input.display()),
    }
    Ok(written)
}
