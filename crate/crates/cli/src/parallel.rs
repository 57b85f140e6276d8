//! Concurrent ladder solves. Entries are independent; results are merged in
//! schedule order so output does not depend on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};

use horizon_core::ladder::{self, HorizonLadder, LadderError, Schedule};
use horizon_core::problem::Problem;
use horizon_core::solver::{Solution, SolverOptions};

pub const THREADS_ENV: &str = "HORIZON_LIMIT_THREADS";

/// Worker cap from `HORIZON_LIMIT_THREADS`, else the available parallelism.
pub fn thread_cap() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn build_ladder(
    p: &Problem,
    schedule: Schedule,
    opts: &SolverOptions,
    threads: usize,
) -> Result<HorizonLadder, LadderError> {
    schedule.validate()?;
    let workers = threads.clamp(1, schedule.count);
    let next = AtomicUsize::new(0);
    let mut results: Vec<(usize, Result<Solution, LadderError>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= schedule.count {
                            break done;
                        }
                        done.push((i, ladder::solve_entry(p, &schedule, i, opts)));
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("ladder worker panicked"))
            .collect()
    });
    results.sort_by_key(|(i, _)| *i);
    let solutions = results.into_iter().map(|(_, r)| r).collect::<Result<Vec<_>, _>>()?;
    HorizonLadder::from_solutions(p.clone(), schedule, solutions)
}
