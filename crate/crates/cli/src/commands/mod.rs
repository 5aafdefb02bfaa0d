//! Subcommand drivers.

mod bridge;
mod couple;
mod ensemble;
pub mod polymer;
mod stats;

use std::collections::BTreeMap;
use std::ffi::OsString;

use gibbsline_core::special::Theta;
use serde::Serialize;

use crate::args::{Cli, Command, InteractionKind};
use crate::config::RunConfig;
use crate::output::{ensure_dir, write_json};
use crate::Result;
use gibbsline_core::gibbs::Hamiltonian;

pub use polymer::{PolymerResults, PolymerSettings};

/// Runs the parsed command. `argv` is kept so `stats` can re-parse with the
/// metadata of its input file as a further layer of defaults.
pub fn dispatch(cli: Cli, argv: Vec<OsString>) -> Result<()> {
    match cli.command {
        Command::Polymer(a) => polymer::run(&a),
        Command::Bridge(a) => bridge::run(&a),
        Command::Ensemble(a) => ensemble::run(&a),
        Command::Couple(a) => couple::run(&a),
        Command::Stats(a) => stats::run(&a, argv),
    }
}

pub(crate) fn theta(cfg: &RunConfig) -> Result<Theta> {
    Ok(Theta::new(cfg.theta)?)
}

pub(crate) fn hamiltonian(kind: InteractionKind) -> Hamiltonian {
    match kind {
        InteractionKind::Exp => Hamiltonian::Exp,
        InteractionKind::Zero => Hamiltonian::Zero,
    }
}

/// `summary.json`: the metadata block and the results.
pub(crate) fn write_summary<T: Serialize>(
    cfg: &RunConfig,
    metadata: &[(String, String)],
    results: &T,
) -> Result<()> {
    let meta: BTreeMap<&str, &str> = metadata
        .iter()
        .map(|(k, v)| (k.as_str(), v.as_str()))
        .collect();
    let path = cfg.out.join("summary.json");
    write_json(
        &path,
        &serde_json::json!({ "metadata": meta, "results": results }),
    )?;
    log::info!("wrote {}", path.display());
    Ok(())
}

pub(crate) fn prepare_out(cfg: &RunConfig) -> Result<()> {
    ensure_dir(&cfg.out)
}

/// Mean and standard error of `xs`.
pub(crate) fn mean_se(xs: &[f64]) -> (f64, f64) {
    gibbsline_core::math::mean_and_std_error(xs)
}
