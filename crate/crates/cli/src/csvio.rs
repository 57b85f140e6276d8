//! Trajectory CSV files: header `t,c,k,lambda`, one row per grid node.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use horizon_core::problem::{Grid, Trajectory};

pub const HEADER: [&str; 4] = ["t", "c", "k", "lambda"];

pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(HEADER)?;
    for (i, t) in traj.grid.nodes().enumerate() {
        w.write_record([
            t.to_string(),
            traj.control[i].to_string(),
            traj.state[i].to_string(),
            traj.costate[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    write_trajectory(std::io::BufWriter::new(file), traj)
}

/// Reads a trajectory; the `t` column must be a uniform grid starting at 0.
pub fn read_trajectory<R: Read>(input: R) -> Result<Trajectory> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    ensure!(
        header == HEADER,
        "expected header t,c,k,lambda, found {}",
        header.join(",")
    );
    let (mut ts, mut cs, mut ks, mut ls) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        let field = |j: usize| -> Result<f64> {
            let s = rec.get(j).unwrap_or_default();
            s.parse::<f64>()
                .with_context(|| format!("row {}: column {} is not a number: {s:?}", row + 1, HEADER[j]))
        };
        ts.push(field(0)?);
        cs.push(field(1)?);
        ks.push(field(2)?);
        ls.push(field(3)?);
    }
    ensure!(ts.len() >= 2, "need at least two rows, found {}", ts.len());
    let horizon = ts[ts.len() - 1];
    let grid = Grid::new(horizon, ts.len() - 1)?;
    let scale = horizon.abs().max(1.0);
    for (i, &t) in ts.iter().enumerate() {
        if (t - grid.node(i)).abs() > 1e-9 * scale {
            bail!(
                "row {}: t = {t} is off the uniform grid (expected {})",
                i + 1,
                grid.node(i)
            );
        }
    }
    Ok(Trajectory::new(grid, cs, ks, ls)?)
}

pub fn load_trajectory(path: &Path) -> Result<Trajectory> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_trajectory(file).with_context(|| format!("in {}", path.display()))
}
