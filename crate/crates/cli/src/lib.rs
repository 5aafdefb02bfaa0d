//! Experiment runner for discrete Gibbsian line ensembles.
//!
//! Five subcommands (`polymer`, `bridge`, `ensemble`, `couple`, `stats`)
//! wrap the numerical core. Every run is a pure function of its effective
//! configuration: sample `s` draws from a stream derived from `(seed, s)`,
//! workers only evaluate independent samples, and results are merged in
//! sample order before anything is written.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;
pub mod parallel;

use std::ffi::OsString;

use gibbsline_core::Error as CoreError;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for IO failures and internal consistency errors.
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PRECISION: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Argument parsing failures, and `--help` / `--version` output.
    #[error("{0}")]
    Clap(#[from] clap::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self::Usage(msg.into())
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Self::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Core(CoreError::Domain(_)) => EXIT_USAGE,
            Self::Clap(e) => e.exit_code(),
            Self::Core(CoreError::Precision(_)) => EXIT_PRECISION,
            Self::Core(CoreError::Resource(_)) => EXIT_RESOURCE,
            Self::Core(CoreError::Internal(_)) | Self::Io { .. } | Self::Csv(_) | Self::Json(_) => {
                EXIT_FAILURE
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = args::parse(argv.clone())?;
    commands::dispatch(cli, argv)
}
