//! Command-line front end: `stable-convolve <kind> --config FILE`.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{validate, ExperimentConfig, ExperimentKind, ModeSource, Severity, Violation};
pub use run::{run, ExitStatus, Gate, Overrides, RunOutcome};

#[derive(Debug, Parser)]
#[command(
    name = "stable-convolve",
    version,
    about = "Stochastic convolution experiments driven by alpha-stable noise",
    after_help = "Precedence: --seed and --out override the config file's `seed` and `out`; \
--threads overrides STABLE_CONVOLVE_THREADS. Unset values fall back to built-in defaults, \
which are written into manifest.json so that `--config manifest.json` reruns the experiment exactly.\n\
Exit codes: 0 success, 1 failed gate or experiment error, 2 invalid configuration."
)]
pub struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    /// JSON config (a previous run's manifest.json also works).
    #[arg(long)]
    pub config: PathBuf,
    /// Master seed for every random stream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "STABLE_CONVOLVE_THREADS")]
    pub threads: Option<usize>,
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("warning: could not configure {threads} threads: {e}");
        }
    }
    let config = match ExperimentConfig::read(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", cli.config.display());
            return ExitStatus::ConfigError.code();
        }
    };
    let outcome = run(cli.kind, config, &Overrides { seed: cli.seed, out: cli.out });
    for v in &outcome.violations {
        eprintln!("{v}");
    }
    for g in &outcome.gates {
        println!("{} {}: {}", if g.passed { "PASS" } else { "FAIL" }, g.name, g.detail);
    }
    if let Some(f) = &outcome.failure {
        eprintln!("error: {f}");
    }
    if let Some(dir) = &outcome.out_dir {
        println!("outputs in {}", dir.display());
    }
    outcome.status.code()
}
