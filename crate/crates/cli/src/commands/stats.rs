//! `stats`: recompute the polymer summary from a stored ensemble CSV.

use std::ffi::OsString;

use crate::args::{parse_layered, Command, StatsArgs};
use crate::config::{metadata, RunConfig};
use crate::output::read_ensemble_csv;
use crate::{CliError, Result};

use super::polymer::{summarize, PolymerSettings, DEFAULTS};
use super::{prepare_out, write_summary};

/// Metadata keys of the input file that act as defaults.
const INHERITED: [&str; 8] = [
    "theta",
    "n",
    "k",
    "r",
    "seed",
    "positions",
    "profile-n",
    "n-mc",
];

pub(crate) fn run(a: &StatsArgs, argv: Vec<OsString>) -> Result<()> {
    let input = a
        .input
        .clone()
        .ok_or_else(|| CliError::usage("stats needs --input <FILE>"))?;
    let (meta_in, ensembles) = read_ensemble_csv(&input)?;
    let layer: Vec<(String, String)> = meta_in
        .into_iter()
        .filter(|(k, _)| INHERITED.contains(&k.as_str()))
        .collect();
    let a = match parse_layered(argv, &[layer])?.command {
        Command::Stats(a) => a,
        _ => {
            return Err(CliError::usage(
                "stats: unexpected subcommand after re-parse",
            ))
        }
    };
    let mut defaults = DEFAULTS;
    defaults.n = ensembles[0].t1().max(0) as usize;
    defaults.k = ensembles[0].num_curves();
    defaults.samples = ensembles.len();
    let mut cfg = RunConfig::resolve("stats", &a.common, defaults)?;
    cfg.k = ensembles[0].num_curves();
    cfg.samples = ensembles.len();
    let set = PolymerSettings::resolve(&cfg, a.positions.as_deref(), a.profile_n, a.n_mc)?;
    let mut meta = metadata(&cfg, &set)?;
    meta.push(("input".to_string(), input.display().to_string()));
    log::info!(
        "stats: {} samples from {}",
        ensembles.len(),
        input.display()
    );
    let results = summarize(&cfg, &set, &ensembles)?;
    prepare_out(&cfg)?;
    write_summary(&cfg, &meta, &results)
}
