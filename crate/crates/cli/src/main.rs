//! `kuradyn` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration (the
//! message names the field), 3 internal consistency failure.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "kuradyn",
    version,
    about = "Kuramoto oscillators on Markov-switching graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for trials; all cores when absent.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Base seed; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Random-walker model trials.
    RunKrw,
    /// Switching-edge model trials.
    RunDrc,
    /// Averaged deterministic system from sampled initial phases.
    RunAveraged,
    /// Averaging sweep over `sweep.epsilons`.
    SweepEpsilon,
    /// Brute-force fixed-point verification of the candidate set.
    CheckEquilibria,
    /// Escape of switching-edge paths from a twisted state.
    TwistedEscape,
    /// Built-in invariant suite; needs no configuration.
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::RunKrw => "run-krw",
            Command::RunDrc => "run-drc",
            Command::RunAveraged => "run-averaged",
            Command::SweepEpsilon => "sweep-epsilon",
            Command::CheckEquilibria => "check-equilibria",
            Command::TwistedEscape => "twisted-escape",
            Command::Selftest => "selftest",
        }
    }
}

/// A failure mapped to a process exit code.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Config(String),
    Consistency(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Consistency(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Consistency(m) => write!(f, "consistency failure: {m}"),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.jobs {
        Some(0) => Err(Failure::Config("--jobs: must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli)),
            Err(e) => Err(Failure::Io(e.to_string())),
        },
        None => dispatch(&cli),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("kuradyn: {f}");
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Failure> {
    if cli.command == Command::Selftest {
        return Ok(run::selftest());
    }
    let path = cli.config.as_ref().ok_or_else(|| {
        Failure::Config(format!("--config: required by `{}`", cli.command.name()))
    })?;
    let inv = run::Invocation::load(cli.command, path, cli.seed, cli.output.clone(), cli.jobs)?;
    inv.execute()
}
