use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use horizon_limit::run::{self, Failure, EXIT_INPUT, EXIT_OK};
use horizon_limit::{parallel, plot, report};

#[derive(Debug, Parser)]
#[command(
    name = "horizon-limit",
    version,
    about = "Horizon ladders, limit paths and overtaking checks"
)]
struct Cli {
    /// Output directory (overrides the config's output_dir; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve one finite horizon; writes trajectory.csv and solve.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        horizon: f64,
    },
    /// Solve the ladder and extract the limit path; writes limit.csv and convergence.json.
    Ladder {
        #[arg(long)]
        config: PathBuf,
    },
    /// Full check; writes report.json and limit.csv. Exit 0 satisfied, 3 violated or overtaken, 4 inconclusive.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Does the candidate path overtake the reference path? Prints the verdict as JSON.
    Compare {
        #[arg(long)]
        config: PathBuf,
        candidate: PathBuf,
        reference: PathBuf,
    },
    /// Turn a trajectory CSV or a JSON report into TSV series.
    Plot { input: PathBuf },
}

fn execute(cli: Cli) -> Result<i32, Failure> {
    let out = cli.out.as_deref();
    let threads = parallel::thread_cap();
    match cli.command {
        Command::Solve { config, horizon } => {
            let run = run::load_run(&config)?;
            let dir = run::output_dir(out, Some(&run.config));
            let r = run::solve(&run, horizon, &dir)?;
            println!(
                "solved T = {} with {:?}: W = {}, max residual = {:e}",
                r.horizon,
                r.method,
                r.value,
                r.residuals.max()
            );
            Ok(EXIT_OK)
        }
        Command::Ladder { config } => {
            let run = run::load_run(&config)?;
            let dir = run::output_dir(out, Some(&run.config));
            let r = run::ladder(&run, &dir, threads)?;
            print!("{}", r.convergence);
            println!("limit converged: {}", r.limit.converged);
            Ok(EXIT_OK)
        }
        Command::Check { config } => {
            let run = run::load_run(&config)?;
            let dir = run::output_dir(out, Some(&run.config));
            let r = run::check(&run, &dir, threads)?;
            println!("condition: {:?}", r.condition.verdict);
            if let Some(w) = &r.condition.proof_step_warning {
                println!("warning: {w}");
            }
            println!(
                "challengers: {} tested, {} overtake",
                r.weak_maximality.generated,
                r.weak_maximality.overtaking.len()
            );
            println!("outcome: {:?}", r.outcome);
            Ok(r.exit_code)
        }
        Command::Compare {
            config,
            candidate,
            reference,
        } => {
            let run = run::load_run(&config)?;
            let r = run::compare(&run, &candidate, &reference)?;
            print!("{}", report::to_json(&r).map_err(Failure::input)?);
            Ok(EXIT_OK)
        }
        Command::Plot { input } => {
            let dir = run::output_dir(out, None);
            let files = plot::plot(&input, &dir).map_err(Failure::input)?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match execute(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.code
        }
    };
    ExitCode::from(code as u8)
}
