//! Command-line definitions and layering of configuration sources.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::read_config_file;
use crate::{CliError, Result};

#[derive(Parser, Debug, Clone)]
#[command(
    name = "gibbsline",
    version,
    about = "Simulate and test discrete Gibbsian line ensembles",
    args_override_self = true
)]
pub struct Cli {
    /// Flat key=value file of flag values; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Log-gamma polymer line ensembles and their scaling statistics.
    Polymer(PolymerArgs),
    /// Random walk bridges between two fixed endpoints.
    Bridge(BridgeArgs),
    /// Gibbs ensembles with fixed boundary data.
    Ensemble(EnsembleArgs),
    /// Grand monotone coupling draws with monotonicity and continuity checks.
    Couple(CoupleArgs),
    /// Recompute polymer statistics from a stored ensemble CSV.
    Stats(StatsArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Flags shared by every subcommand. Unset values fall back to the
/// subcommand's defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Log-gamma parameter theta > 0.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Polymer scale N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of curves.
    #[arg(long)]
    pub k: Option<usize>,
    /// Number of times T (the curves live on 0..T-1).
    #[arg(long)]
    pub t: Option<usize>,
    /// Window half-width in units of N^(2/3).
    #[arg(long)]
    pub r: Option<f64>,
    /// Number of independent samples.
    #[arg(long)]
    pub samples: Option<usize>,
    /// MCMC sweeps per sample.
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Grid resolution (increment density points, or coupling lattice points).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Master seed; sample s uses a stream derived from (seed, s).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; never changes the output.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the sample data file (the summary is always JSON).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct PolymerArgs {
    #[command(flatten)]
    pub common: Common,
    /// Positions n at which the Tracy-Widom statistic is evaluated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<i64>>,
    /// Profile of the top curve at n in -m..=m (0 disables).
    #[arg(long)]
    pub profile_n: Option<usize>,
    /// Monte Carlo draws for the acceptance diagnostic (0 disables).
    #[arg(long)]
    pub n_mc: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BridgeMethod {
    Sequential,
    Mcmc,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Increments {
    LogGamma,
    Gaussian,
}

#[derive(Args, Debug, Clone, Default)]
pub struct BridgeArgs {
    #[command(flatten)]
    pub common: Common,
    /// Value at time 0.
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// Value at time T-1.
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    /// Sampler (default sequential).
    #[arg(long, value_enum)]
    pub method: Option<BridgeMethod>,
    /// Increment law (default log-gamma).
    #[arg(long, value_enum)]
    pub increments: Option<Increments>,
    /// Standard deviation of Gaussian increments.
    #[arg(long)]
    pub sd: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InteractionKind {
    /// H(x) = e^x.
    Exp,
    /// H = 0.
    Zero,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleMethod {
    Rejection,
    Mcmc,
}

/// A curve given as `none` (all `-inf`), one value repeated, or one value per time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveArg(pub Vec<f64>);

impl CurveArg {
    /// Expands to `len` values.
    pub fn expand(&self, len: usize, name: &str) -> Result<Vec<f64>> {
        match self.0.len() {
            0 => Ok(vec![f64::NEG_INFINITY; len]),
            1 => Ok(vec![self.0[0]; len]),
            l if l == len => Ok(self.0.clone()),
            l => Err(CliError::usage(format!(
                "--{name} has {l} values, expected 1 or {len}"
            ))),
        }
    }
}

fn parse_curve(s: &str) -> std::result::Result<CurveArg, String> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(CurveArg(Vec::new()));
    }
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad value {v:?}: {e}"))
        })
        .collect::<std::result::Result<Vec<f64>, String>>()
        .map(CurveArg)
}

#[derive(Args, Debug, Clone, Default)]
pub struct EnsembleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Entrance values, one per curve.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Exit values, one per curve.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    /// Bottom boundary: `none`, a constant, or T comma-separated values.
    #[arg(long, value_parser = parse_curve, allow_hyphen_values = true)]
    pub g: Option<CurveArg>,
    #[arg(long, value_enum)]
    pub interaction: Option<InteractionKind>,
    /// Sampler (default rejection).
    #[arg(long, value_enum)]
    pub method: Option<EnsembleMethod>,
    /// Monte Carlo draws for the acceptance probability.
    #[arg(long)]
    pub n_mc: Option<usize>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CoupleArgs {
    #[command(flatten)]
    pub common: Common,
    /// Lower boundary at time 0, one per curve.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Option<Vec<f64>>,
    /// Lower boundary at time T-1, one per curve.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Option<Vec<f64>>,
    /// Bottom curve: `none`, a constant, or T comma-separated values.
    #[arg(long, value_parser = parse_curve, allow_hyphen_values = true)]
    pub z: Option<CurveArg>,
    /// The monotonicity check compares the boundary with the boundary raised by this amount.
    #[arg(long)]
    pub lift: Option<f64>,
    /// First perturbation of the continuity schedule.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Number of halvings of the continuity schedule.
    #[arg(long)]
    pub halvings: Option<usize>,
    #[arg(long, value_enum)]
    pub interaction: Option<InteractionKind>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct StatsArgs {
    #[command(flatten)]
    pub common: Common,
    /// Ensemble CSV written by `polymer`; its metadata supplies unset flags.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// As for `polymer`; defaults to the input's value.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub positions: Option<Vec<i64>>,
    /// As for `polymer`; defaults to the input's value.
    #[arg(long)]
    pub profile_n: Option<usize>,
    /// As for `polymer`; defaults to the input's value.
    #[arg(long)]
    pub n_mc: Option<usize>,
}

/// Index of the subcommand in `argv` and the `--config` path, if any.
fn scan(argv: &[OsString]) -> (Option<usize>, Option<PathBuf>) {
    let mut sub = None;
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        } else if !a.starts_with('-') && sub.is_none() {
            sub = Some(i);
        }
        i += 1;
    }
    (sub, config)
}

/// Parses `argv` with `layers` of `key=value` defaults inserted after the
/// subcommand, lowest priority first; the config file sits above the layers
/// and the literal command line above everything.
pub fn parse_layered(argv: Vec<OsString>, layers: &[Vec<(String, String)>]) -> Result<Cli> {
    let (sub, config) = scan(&argv);
    let mut injected: Vec<OsString> = Vec::new();
    for layer in layers {
        injected.extend(
            layer
                .iter()
                .map(|(k, v)| OsString::from(format!("--{k}={v}"))),
        );
    }
    if let Some(path) = &config {
        injected.extend(
            read_config_file(path)?
                .into_iter()
                .map(|(k, v)| OsString::from(format!("--{k}={v}"))),
        );
    }
    let full = match sub {
        Some(i) if !injected.is_empty() => {
            let mut v = argv[..=i].to_vec();
            v.extend(injected);
            v.extend_from_slice(&argv[i + 1..]);
            v
        }
        _ => argv,
    };
    Ok(Cli::try_parse_from(full)?)
}

pub fn parse(argv: Vec<OsString>) -> Result<Cli> {
    parse_layered(argv, &[])
}
