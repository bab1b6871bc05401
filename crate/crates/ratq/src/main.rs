use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ratq::config::ConfigError;
use ratq::derive::{derive, render, DeriveMode, DeriveRequest};
use ratq::{run_with_workers, write_artifact, ExperimentConfig, WORKERS_ENV};

/// Exit status when an embedded bound check fails.
const EXIT_CHECK_FAILED: u8 = 1;
/// Exit status for unreadable, malformed or infeasible configs.
const EXIT_CONFIG: u8 = 2;
/// Exit status for failures while running or writing output.
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ratq", version, about = "Fixed-length gradient quantizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment a config describes and write its CSV and summary.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; 0 uses one per core.
        #[arg(long, env = WORKERS_ENV, default_value_t = 0)]
        workers: usize,
        /// Replaces the config's master seed.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Parse and check a config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print every derived constant of a parameter regime as TOML.
    DeriveParams {
        /// ratq-high, ratq-low, aratq-high, aratq-low, dme or rd.
        #[arg(long)]
        mode: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long)]
        horizon: Option<u64>,
        /// Total bit budget r.
        #[arg(long)]
        budget: Option<usize>,
        /// Gain bit budget r_g.
        #[arg(long)]
        gain_bits: Option<usize>,
        /// Subgaussian variance factor v (rd).
        #[arg(long)]
        variance: Option<f64>,
        /// Target per-dimension distortion D (rd).
        #[arg(long)]
        distortion: Option<f64>,
    },
}

fn fail(code: u8, err: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| fail(EXIT_CONFIG, e))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            workers,
            seed_override,
        } => {
            let mut cfg = match load(&config) {
                Ok(cfg) => cfg,
                Err(code) => return code,
            };
            if let Some(seed) = seed_override {
                cfg.seed = seed;
                if let Err(e) = cfg.validate() {
                    return fail(EXIT_CONFIG, e);
                }
            }
            let Some(out) = out.or_else(|| cfg.output.clone()) else {
                return fail(EXIT_CONFIG, "no output directory: set `output` in the config or pass --out");
            };
            let artifact = match run_with_workers(&cfg, workers) {
                Ok(a) => a,
                Err(e) if e.downcast_ref::<ConfigError>().is_some() => return fail(EXIT_CONFIG, e),
                Err(e) => return fail(EXIT_RUNTIME, format!("{e:#}")),
            };
            let outcome = match write_artifact(&artifact, &out) {
                Ok(o) => o,
                Err(e) => return fail(EXIT_RUNTIME, format!("{e:#}")),
            };
            for w in &artifact.summary.warnings {
                eprintln!("warning: {w}");
            }
            for c in &artifact.summary.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                println!("{verdict} {}: {} {} {} ({})", c.name, c.measured, c.relation, c.bound, c.detail);
            }
            println!("wrote {} and {}", outcome.csv.display(), outcome.summary.display());
            if outcome.passed || !cfg.check {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
        Command::ValidateConfig { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} experiment, {} trials, seed {}", cfg.kind.name(), cfg.trials, cfg.seed);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::DeriveParams {
            mode,
            dim,
            bound,
            horizon,
            budget,
            gain_bits,
            variance,
            distortion,
        } => {
            let Some(parsed) = DeriveMode::parse(&mode) else {
                return fail(
                    EXIT_CONFIG,
                    format!("unknown mode {mode:?}; expected one of {}", ratq_core::params::MODES.join(", ")),
                );
            };
            let req = DeriveRequest {
                mode: parsed,
                dim,
                bound,
                horizon,
                budget,
                gain_bits,
                variance,
                distortion,
            };
            match derive(&req) {
                Ok(map) => {
                    print!("{}", render(&mode, &map));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(EXIT_CONFIG, e),
            }
        }
    }
}
