use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qnlab::harness::{self, parse_eps_list, RunConfig};
use qnlab::{Error, Result};

#[derive(Parser)]
#[command(name = "qnlab", version, about = "Quasineutral-limit laboratory on the 2D torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Sampling seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides QNLAB_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    checkpoint_every: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one coupled simulation.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run one simulation per epsilon and tabulate suprema.
    Sweep {
        config: PathBuf,
        /// Comma-separated epsilon values.
        #[arg(long)]
        eps: String,
        #[command(flatten)]
        common: Common,
    },
    /// Summarize a sweep directory: monotonicity, rates, horizon.
    Report { dir: PathBuf },
    /// Check the initial-data hypotheses only.
    Verify {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn load(path: &Path, c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", path.display())),
        e => e,
    })?;
    if let Ok(root) = std::env::var("QNLAB_OUT") {
        if !root.is_empty() {
            cfg.out = PathBuf::from(root);
        }
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(k) = c.checkpoint_every {
        cfg.checkpoint_every = k;
    }
    if let Some(t) = c.t_end {
        cfg.t_end = t;
    }
    cfg.validate()?;
    if let Some(w) = c.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        // a second initialisation only happens in-process and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    Ok(cfg)
}

/// Prints to stdout, ignoring a closed pipe.
fn emit(s: impl std::fmt::Display) {
    let _ = writeln!(std::io::stdout(), "{s}");
}

fn to_json(v: &impl serde::Serialize) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Format(e.to_string()))
}

fn audit_failure(what: &str) -> Error {
    Error::Audit(format!("{what} failed; see summary"))
}

fn exec(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, common } => {
            let cfg = load(&config, &common)?;
            let rep = harness::run_single(&cfg)?;
            emit(rep.summary_json.display());
            if !rep.summary.audits_pass {
                return Err(audit_failure("inequality audits"));
            }
        }
        Cmd::Sweep { config, eps, common } => {
            let cfg = load(&config, &common)?;
            let list = parse_eps_list(&eps)?;
            let rep = harness::sweep_epsilon(&cfg, &list, &cfg.out)?;
            emit(cfg.out.join("convergence.csv").display());
            for f in &rep.failures {
                eprintln!("{f}");
            }
            if !rep.complete || !rep.audits_pass {
                return Err(audit_failure("sweep"));
            }
        }
        Cmd::Report { dir } => {
            let rep = harness::report(&dir)?;
            emit(to_json(&rep)?);
        }
        Cmd::Verify { config, common } => {
            let cfg = load(&config, &common)?;
            let rep = harness::run::verify(&cfg)?;
            emit(to_json(&rep)?);
            if !rep.all_pass() {
                return Err(audit_failure("hypothesis check"));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match exec(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qnlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
