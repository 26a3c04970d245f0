//! Experiment harness: configuration, coupled runs, epsilon sweeps and reports.

pub mod config;
pub mod io;
pub mod run;
pub mod sweep;

pub use config::{RunConfig, EPS_FLOOR};
pub use run::{run_single, run_single_in, simulate, RunReport, RunResult, RunSummary, StepRow};
pub use sweep::{fit_rate, parse_eps_list, report, sweep_epsilon, ConvergenceRow, SweepReport};
