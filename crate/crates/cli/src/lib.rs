//! Command-line driver: configuration, experiment execution and artifacts.
//!
//! Exit codes: 0 success or pass, 1 check failed (or a numerical failure),
//! 2 inconclusive or not applicable, 3 input error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod drivers;
pub mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::path::PathBuf;

/// Environment variable overriding the number of worker threads.
/// Results do not depend on it.
pub const WORKERS_ENV: &str = "BENEDICKS_WORKERS";

/// Errors in the user's input: unreadable or invalid configs, points on holes,
/// parameters a solver rejects. They map to exit code 3.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Success,
    CheckFailed,
    Inconclusive,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::CheckFailed => 1,
            Status::Inconclusive => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Status::Success => "success",
            Status::CheckFailed => "failed",
            Status::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "benedicks", version, about = "Heat kernels and survival asymptotics in Benedicks domains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment config (TOML).
    pub config: PathBuf,
    /// Output directory; overrides the config's `output`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Domain checks.
    Domain {
        #[command(subcommand)]
        action: DomainCmd,
    },
    /// Monte Carlo ensembles.
    Mc {
        #[command(subcommand)]
        action: McCmd,
    },
    /// Grid solvers (planar domains).
    Pde {
        #[command(subcommand)]
        action: PdeCmd,
    },
    /// Cone dimension from the growth of √t·P(T > t).
    Classify(Common),
    /// Rate fit on a kernel or survival series.
    Fit {
        #[command(flatten)]
        common: Common,
        /// CSV with a `t` column and a `value` or `estimate` column.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run one identity or inequality check.
    Verify {
        check: CheckName,
        #[command(flatten)]
        common: Common,
    },
    /// Discretization studies.
    Study {
        #[command(subcommand)]
        action: StudyCmd,
    },
}

#[derive(Subcommand, Debug)]
pub enum DomainCmd {
    Validate(Common),
}

#[derive(Subcommand, Debug)]
pub enum McCmd {
    /// Survival curves from every `x` point.
    Survive(Common),
    /// Kernel estimates for every `(x, y)` pair at the kernel times.
    Kernel(Common),
}

#[derive(Args, Debug, Clone)]
pub struct FieldFlag {
    /// Also write full fields as `x,y,value` CSV.
    #[arg(long)]
    pub fields: bool,
}

#[derive(Subcommand, Debug)]
pub enum PdeCmd {
    Kernel {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fields: FieldFlag,
    },
    Survive {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fields: FieldFlag,
    },
    Harmonic {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fields: FieldFlag,
    },
}

#[derive(Subcommand, Debug)]
pub enum StudyCmd {
    /// Coupled-seed survival curves at h, h/2 and h/4.
    Convergence(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum CheckName {
    Lemma3,
    LemmaA,
    Reflection,
    Duhamel,
    TimeRatio,
    ThmLimits,
}

impl CheckName {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckName::Lemma3 => "lemma3",
            CheckName::LemmaA => "lemma_a",
            CheckName::Reflection => "reflection",
            CheckName::Duhamel => "duhamel",
            CheckName::TimeRatio => "time_ratio",
            CheckName::ThmLimits => "thm_limits",
        }
    }
}

fn configure_workers() {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call fails harmlessly when the pool already exists.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Exit code for an error: 3 when any cause is an input error.
pub fn error_code(e: &anyhow::Error) -> i32 {
    if e.chain().any(|c| c.downcast_ref::<InputError>().is_some()) {
        3
    } else {
        1
    }
}

/// Parses `args` (program name first), runs the command, prints diagnostics
/// and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 3 } else { 0 };
        }
    };
    configure_workers();
    match commands::execute(&cli.command) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    }
}
