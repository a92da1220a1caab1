//! Experiment runner for the qudos simulator.
//!
//! Subcommands:
//!
//! - `curves`: selection probabilities as CSV (`m,c,p`).
//! - `simulate`: Monte Carlo runs from a scenario file, as CSV.
//! - `reproduce`: compare against the bundled reference datasets.
//! - `trust-demo`: one chain-of-trust strategy against one attack.
//! - `pipeline-demo`: quorum-voted inference with corrupted nodes.
//!
//! Exit codes are 0 on success, 1 when a check fails and 2 on usage or
//! parse errors. Floats are printed in shortest round-trip form.

pub mod curves;
pub mod demo;
pub mod reference;
pub mod reproduce;
pub mod scenario;
pub mod simulate;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use num_rational::Ratio;
use thiserror::Error;

use crate::curves::CurveSpec;
use crate::reproduce::ReproduceOptions;
use crate::scenario::{Scenario, ScenarioError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable that overrides a scenario's `master_seed`.
pub const SEED_ENV: &str = "QUDOS_SEED";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

#[derive(Debug, Parser)]
#[command(name = "qudos", version, about = "Quorum security simulator for distributed DNN deployments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability of selecting at least one corrupted node
    Curves {
        /// Preset: 6a (n=100) or 6b (n=100000)
        figure: Option<String>,
        /// Pool size
        #[arg(long)]
        n: Option<u64>,
        /// Corrupted counts, e.g. 1,5,10
        #[arg(long)]
        c: Option<String>,
        /// Chosen counts, e.g. 1..10 (inclusive) or 50,150
        #[arg(long)]
        m: Option<String>,
    },
    /// Run a scenario file and write CSV
    Simulate {
        scenario: PathBuf,
        /// Output file; standard output when absent
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Master seed; overrides QUDOS_SEED and the file
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compare against a reference figure
    Reproduce {
        /// 6a, 6b, 11; or 7, 8, 9, 10, 10a, 10b with --trend
        figure: String,
        /// Compare only the direction of each series
        #[arg(long)]
        trend: bool,
        #[arg(long, default_value_t = qudos_core::attack_sim::DEFAULT_ITERATIONS)]
        iterations: u64,
        #[arg(long, default_value_t = scenario::DEFAULT_SEED)]
        seed: u64,
        /// partition or with-replacement
        #[arg(long, default_value = "partition")]
        model: String,
        /// With-replacement pool size as a multiple of the slot count
        #[arg(long)]
        pool_factor: Option<u64>,
        /// Corrupted share of the pool in figure 9
        #[arg(long, default_value = "1/10")]
        fig9_fraction: String,
    },
    /// Verify a 5-record chain under one attack
    TrustDemo {
        /// sequential, accumulator or ttp
        strategy: String,
        /// none, tamper, drop or inject
        attack: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quorum-voted inference over a sequential network
    PipelineDemo {
        #[arg(long, default_value_t = 3)]
        layers: usize,
        /// Secured layers, counted from the first; all by default
        #[arg(long)]
        quorum_count: Option<usize>,
        #[arg(long, default_value_t = 3)]
        quorum_size: usize,
        #[arg(long, default_value_t = 1)]
        corrupted: usize,
        /// random or coordinated
        #[arg(long, default_value = "random")]
        behavior: String,
        #[arg(long, default_value_t = 100)]
        passes: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parse arguments and run. `env_seed` is the value of `QUDOS_SEED`, if set.
pub fn main_with<I, T>(args: I, env_seed: Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return e.exit_code();
        }
    };
    match run(cli.command, env_seed, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                CliError::Io(_) => EXIT_CHECK_FAILED,
                _ => EXIT_USAGE,
            }
        }
    }
}

pub fn run(command: Command, env_seed: Option<String>, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Curves { figure, n, c, m } => {
            let spec = match (figure.as_deref(), n, c, m) {
                (Some("6a"), None, None, None) => CurveSpec::figure_6a(),
                (Some("6b"), None, None, None) => CurveSpec::figure_6b(),
                (Some(f), None, None, None) => return Err(CliError::Usage(format!("unknown curve preset `{f}`"))),
                (None, Some(n), Some(c), Some(m)) => CurveSpec {
                    pool_size: n,
                    corrupted: curves::parse_list(&c).map_err(CliError::Usage)?,
                    chosen: curves::parse_list(&m).map_err(CliError::Usage)?,
                },
                _ => return Err(CliError::Usage("give a preset (6a, 6b) or all of --n, --c and --m".into())),
            };
            curves::write_csv(out, &spec.rows()?)?;
            Ok(EXIT_OK)
        }
        Command::Simulate { scenario, output, seed } => {
            let text = std::fs::read_to_string(&scenario)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", scenario.display())))?;
            let mut parsed = Scenario::parse(&text)?;
            let env_seed = env_seed
                .map(|s| s.trim().parse::<u64>().map_err(|_| CliError::Usage(format!("{SEED_ENV}=`{s}` is not a u64"))))
                .transpose()?;
            if let Some(s) = seed.or(env_seed) {
                parsed.template.master_seed = s;
            }
            let rows = simulate::run(&parsed)?;
            match output {
                None => simulate::write_csv(out, &rows)?,
                Some(path) => {
                    let mut buf = Vec::new();
                    simulate::write_csv(&mut buf, &rows)?;
                    std::fs::write(&path, buf)
                        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Reproduce { figure, trend, iterations, seed, model, pool_factor, fig9_fraction } => {
            let figures = reproduce::figures_for(&figure)
                .ok_or_else(|| CliError::Usage(format!("unknown figure `{figure}`")))?;
            if iterations == 0 {
                return Err(CliError::Usage("iterations must be positive".into()));
            }
            let opts = ReproduceOptions {
                iterations,
                seed,
                model: scenario::parse_model(&model)
                    .ok_or_else(|| CliError::Usage(format!("unknown model `{model}`")))?,
                fig9_fraction: fig9_fraction
                    .parse::<Ratio<u64>>()
                    .ok()
                    .filter(|r| *r <= Ratio::from_integer(1))
                    .ok_or_else(|| CliError::Usage(format!("`{fig9_fraction}` is not a ratio in [0, 1]")))?,
                pool_factor,
            };
            let mut all_ok = true;
            for f in figures {
                all_ok &= reproduce::reproduce(f, trend, &opts, out)?.ok();
            }
            Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::TrustDemo { strategy, attack, seed } => {
            let s = demo::parse_strategy(&strategy)
                .ok_or_else(|| CliError::Usage(format!("unknown strategy `{strategy}`; use sequential, accumulator or ttp")))?;
            let a = demo::parse_attack(&attack)
                .ok_or_else(|| CliError::Usage(format!("unknown attack `{attack}`; use none, tamper, drop or inject")))?;
            let (_, ok) = demo::trust_demo(s, a, seed, out)?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::PipelineDemo { layers, quorum_count, quorum_size, corrupted, behavior, passes, seed } => {
            let behavior = demo::parse_behavior(&behavior, seed)
                .ok_or_else(|| CliError::Usage(format!("unknown behavior `{behavior}`; use random or coordinated")))?;
            let spec = demo::PipelineDemo {
                layers,
                quorum_count: quorum_count.unwrap_or(layers),
                quorum_size,
                corrupted,
                behavior,
                passes,
                seed,
            };
            demo::pipeline_demo(&spec, out)?;
            Ok(EXIT_OK)
        }
    }
}
