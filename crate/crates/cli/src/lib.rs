//! Batch runner around `horizon-core`: JSON configs, CSV trajectories, JSON
//! reports and threaded ladder solves.

pub mod challengers;
pub mod config;
pub mod csvio;
pub mod parallel;
pub mod plot;
pub mod report;
pub mod run;
