//! Batch front door: each subcommand wires the library modules into one
//! experiment and drops CSV tables, JSON summaries, and a run manifest into
//! the output directory. Deterministic commands reproduce their artifacts
//! byte-for-byte under the same configuration.

mod artifacts;
mod cmd;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::settings::Settings;

/// Failure taxonomy shared by every subcommand. The exit code tells scripts
/// whether to fix their invocation (1), investigate the numbers (2), or look
/// at the filesystem (3).
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Breach(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Breach(_) => 2,
            Failure::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Breach(m) | Failure::Io(m) => m,
        }
    }
}

impl From<cuspwave::Error> for Failure {
    fn from(e: cuspwave::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "cuspwave",
    version,
    about = "Spectral experiments on the hyperbolic plane: transforms, cusp forms, counting",
    after_help = "Exit codes: 0 ok, 1 usage/config error, 2 tolerance breach, 3 file I/O error."
)]
struct Cli {
    /// Flat key=value config file ('#' comments); command-line flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, created on demand (default out/<command>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for the randomized commands.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Pass/fail tolerance of the subcommand (see each command's --help).
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Commuting-diagram, isometry, and round-trip residuals for a kernel suite.
    Transform(cmd::transform::Opts),
    /// Apply the Hecke-minus-wave operator and emit the cuspidal output.
    Cusp(cmd::cusp::Opts),
    /// Build a point-mass distribution annihilated by given cyclic subgroups.
    Lemma2(cmd::lemma2::Opts),
    /// Monte Carlo small-value measure of an almost-periodic sum.
    Smallvalue(cmd::smallvalue::Opts),
    /// Plancherel ball-mass ratios and the leading counting constant.
    Alpha(cmd::alpha::Opts),
    /// Sharp and smoothed eigenvalue counts against the leading-term prediction.
    Weyl(cmd::weyl::Opts),
    /// Whittaker series: coefficient unfolding and a high-Siegel-region scan.
    Whittaker(cmd::whittaker::Opts),
    /// Finite-speed wave propagation snapshots with energy accounting.
    Wave(cmd::wave::Opts),
}

/// Global flags plus the parsed config file; commands resolve every parameter
/// through this (precedence: built-in default < config file < flag).
pub struct Globals {
    pub settings: Settings,
    out: Option<PathBuf>,
    seed: Option<u64>,
    tol: Option<f64>,
}

impl Globals {
    pub fn tol(&self, default: f64) -> Result<f64, Failure> {
        let tol = self.settings.f64("tol", self.tol, default)?;
        if !(tol > 0.0) {
            return Err(Failure::Usage(format!("tolerance must be positive, got {tol}")));
        }
        Ok(tol)
    }

    pub fn seed(&self, default: u64) -> Result<u64, Failure> {
        self.settings.u64("seed", self.seed, default)
    }

    pub fn out_dir(&self, command: &str) -> PathBuf {
        self.out
            .clone()
            .or_else(|| self.settings.get("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out").join(command))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version land here too; only real parse errors exit 1.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let settings = match Settings::load(cli.config.as_deref()) {
        Ok(s) => s,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.code());
        }
    };
    let globals = Globals { settings, out: cli.out, seed: cli.seed, tol: cli.tol };
    let outcome = match &cli.command {
        Command::Transform(o) => cmd::transform::run(&globals, o),
        Command::Cusp(o) => cmd::cusp::run(&globals, o),
        Command::Lemma2(o) => cmd::lemma2::run(&globals, o),
        Command::Smallvalue(o) => cmd::smallvalue::run(&globals, o),
        Command::Alpha(o) => cmd::alpha::run(&globals, o),
        Command::Weyl(o) => cmd::weyl::run(&globals, o),
        Command::Whittaker(o) => cmd::whittaker::run(&globals, o),
        Command::Wave(o) => cmd::wave::run(&globals, o),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
