//! `bigimage` — regularity profiles, exponent-tuple construction, exact
//! Lie-identity checks, deformation walkthroughs, and the end-to-end
//! `certify` pipeline with machine-readable JSON certificates.
//!
//! Exit codes are a stable contract:
//!   0  success / verdict pass
//!   1  verification failure (a checked identity is false)
//!   2  usage error (bad arguments, non-prime p, unreadable model file)
//!   3  wall-clock budget exhausted
//!   4  construction failure (no tuple or lift exists for these inputs)
//!   5  certification pipeline stage failure

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use bigimage_core::deform::DetMode;
use bigimage_core::Budget;
use clap::{Parser, Subcommand, ValueEnum};

use commands::Failure;

/// Fallback wall-clock budget: five minutes.
const DEFAULT_BUDGET_MS: u64 = 300_000;
/// Environment override for the budget; the --budget-ms flag beats it.
const BUDGET_ENV: &str = "BIGIMAGE_BUDGET_MS";

#[derive(Parser)]
#[command(name = "bigimage", version, about = "Big-image certification toolkit over Z/p^m")]
struct Cli {
    /// Wall-clock budget in milliseconds (beats BIGIMAGE_BUDGET_MS; default 300000)
    #[arg(long, global = true, value_name = "MS")]
    budget_ms: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Irregular Bernoulli indices of one prime, or statistics over a range
    Regularity {
        /// The prime to profile (omit when using --range)
        p: Option<u64>,
        /// Scan all primes in [LO, HI)
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "p")]
        range: Option<Vec<u64>>,
        /// JSON cache of irregular indices, read before and written after
        #[arg(long, value_name = "PATH")]
        cache: Option<PathBuf>,
    },
    /// Construct an exponent tuple and report all five conditions
    Exponents {
        /// The prime
        p: u64,
        /// Tuple length
        n: usize,
        /// Spare irregular indices the construction may discard around
        e: u64,
        /// Lexicographic search for any passing tuple instead of the
        /// direct construction
        #[arg(long)]
        search: bool,
    },
    /// Full pipeline: profile, tuple, lift tower, image checks, certificate
    Certify {
        /// The prime
        p: u64,
        /// Representation dimension
        n: usize,
        /// Spare irregular indices for the tuple stage
        e: u64,
        /// Target lift level m (the tower is verified mod p^m)
        #[arg(long, default_value_t = 5)]
        level: u32,
        /// Determinant normalization of the lift tower
        #[arg(long, value_enum, default_value_t = DetModeArg::Paper)]
        det_mode: DetModeArg,
        /// Write the certificate JSON here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Seeded commutator-identity trials plus a bracket-closure report
    LieVerify {
        /// Matrix dimension
        #[arg(long)]
        n: usize,
        /// The prime
        #[arg(long)]
        p: u64,
        /// Number of random (c, d, l, m) draws; 1 prints the worked case
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// RNG seed for the trials
        #[arg(long, default_value_t = 1729)]
        seed: u64,
        /// Closure seed set: standard is {w} ∪ {e_ij : i+j odd}
        #[arg(long, value_enum, default_value_t = SeedsArg::Standard)]
        seeds: SeedsArg,
    },
    /// Walk one deformation from the residual rep to the top-level lift
    DeformDemo {
        /// The prime (beyond 23 needs an explicit budget)
        p: u64,
        /// "free" for the built-in model, or a path to a model JSON file
        #[arg(long, default_value = "free")]
        model: String,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DetModeArg {
    /// det ρ_m = τ with the one-unit part of ψ(γ) trivial
    Paper,
    /// det ρ_m = τ̃ built directly from the exponent tuple
    Plain,
}

impl From<DetModeArg> for DetMode {
    fn from(arg: DetModeArg) -> DetMode {
        match arg {
            DetModeArg::Paper => DetMode::Paper,
            DetModeArg::Plain => DetMode::Plain,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
pub enum SeedsArg {
    /// Distinct-entry diagonal plus every e_ij with i + j odd
    Standard,
    /// No seeds at all; reports an all-zero filtration
    Trivial,
}

/// Flag beats environment beats default. A set-but-malformed environment
/// variable is a usage error, not a silent fallback.
fn resolve_budget(flag: Option<u64>) -> Result<(Budget, bool), Failure> {
    if let Some(ms) = flag {
        return Ok((Budget::from_ms(ms), true));
    }
    match std::env::var(BUDGET_ENV) {
        Ok(raw) => {
            let ms = raw.trim().parse::<u64>().map_err(|_| {
                Failure::usage(format!("{BUDGET_ENV} must be an integer of milliseconds, got {raw:?}"))
            })?;
            Ok((Budget::from_ms(ms), true))
        }
        Err(_) => Ok((Budget::from_ms(DEFAULT_BUDGET_MS), false)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (budget, budget_explicit) = resolve_budget(cli.budget_ms)?;
    match cli.command {
        Command::Regularity { p, range, cache } => {
            let range = match range.as_deref() {
                Some([lo, hi]) => Some((*lo, *hi)),
                Some(_) => unreachable!("clap enforces two values"),
                None => None,
            };
            commands::regularity(p, range, cache.as_deref(), &budget)
        }
        Command::Exponents { p, n, e, search } => commands::exponents(p, n, e, search, &budget),
        Command::Certify { p, n, e, level, det_mode, out } => {
            commands::certify(p, n, e, level, det_mode.into(), out.as_deref(), &budget)
        }
        Command::LieVerify { n, p, trials, seed, seeds } => {
            commands::lie_verify(n, p, trials, seed, seeds, &budget)
        }
        Command::DeformDemo { p, model } => {
            commands::deform_demo(p, &model, &budget, budget_explicit)
        }
    }
}

/// Die quietly on a closed pipe (`bigimage ... | head`) instead of
/// panicking, like any other line-oriented tool.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
