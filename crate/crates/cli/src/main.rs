//! `symlab`: command-line front end for the spectral laboratory.
//!
//! Results go to stdout (or `--out`) as JSON with a top-level
//! `schema_version`, or as CSV with a header row. Exit status is 0 on
//! success, 1 when a computation or verification fails and 2 for
//! configuration errors; errors are reported as JSON on stderr.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use output::{emit_error, ErrorKind, Failure};

#[derive(Parser, Debug)]
#[command(name = "symlab", version, about = "Spectral analysis of banded Hessenberg/Toeplitz symbols")]
pub struct Cli {
    #[command(flatten)]
    pub symbol: SymbolArgs,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct SymbolArgs {
    /// Symbol coefficients a_0,a_1,...,a_p.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "cubic")]
    pub coeffs: Option<Vec<f64>>,

    /// Cubic example from its negative critical points x1,x2 (x1 < x2 < 0).
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub cubic: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Fast,
    Full,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Critical points, branch points and cuts.
    Analyze,
    /// Exact coefficients of Q_0, ..., Q_n.
    Polys {
        #[arg(long)]
        n: usize,
    },
    /// Zeros of Q_n.
    Zeros {
        #[arg(long)]
        n: usize,
    },
    /// Density of rho_j, sigma_j, s_k or mu_k on a grid.
    Density {
        /// One of rho_j, sigma_j, s_k, mu_k (for example rho_1).
        #[arg(long)]
        measure: String,
        /// a:b:m for m equispaced points on [a, b].
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Generalized eigenvalues of the k-shifted Toeplitz section.
    Spectrum {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
    },
    /// Decay order of the Hermite–Padé remainder for component j.
    Hp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        j: usize,
        /// Number of log-spaced sample points in [1e3, 1e6].
        #[arg(long, default_value_t = 7)]
        points: usize,
    },
    /// Run a verification suite; exit 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::Fast)]
        suite: SuiteArg,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SYMLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::config(format!("SYMLAB_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            emit_error(&Failure { kind: ErrorKind::Config, message: e.to_string().trim_end().to_string(), failed: vec![] });
            return ExitCode::from(2);
        }
    };
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            emit_error(&f);
            ExitCode::from(f.kind.exit_code())
        }
    }
}
