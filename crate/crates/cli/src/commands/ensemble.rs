//! `ensemble`: Gibbs ensembles on `0..T-1` with entrance/exit data and a
//! bottom boundary, by rejection or MCMC.

use gibbsline_core::bridge::{BridgeSampler, HrwSpec};
use gibbsline_core::gibbs::{EnsembleSpec, GibbsSampler, InteractionSpec};
use gibbsline_core::grid::GridParams;
use gibbsline_core::{derive_seed, rng_for};
use serde::Serialize;

use super::{hamiltonian, mean_se, prepare_out, theta, write_summary};
use crate::args::{CurveArg, EnsembleArgs, EnsembleMethod, InteractionKind};
use crate::config::{metadata, Defaults, RunConfig};
use crate::output::write_ensembles;
use crate::parallel::map_samples;
use crate::{CliError, Result};

const DEFAULTS: Defaults = Defaults {
    theta: 1.0,
    n: 0,
    k: 2,
    t: 8,
    r: 1.0,
    samples: 200,
    sweeps: 100,
    grid: 4096,
};

/// Stream index of the acceptance estimate.
const ACCEPTANCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, Serialize)]
struct EnsembleSettings {
    x: Vec<f64>,
    y: Vec<f64>,
    g: CurveArg,
    interaction: InteractionKind,
    method: EnsembleMethod,
    n_mc: usize,
}

#[derive(Debug, Clone, Serialize)]
struct EnsembleResults {
    samples: usize,
    /// Monte Carlo estimate of the acceptance probability `Z`.
    acceptance: f64,
    acceptance_std_error: f64,
    /// Mean number of free proposals per accepted draw (rejection only).
    mean_attempts: Option<f64>,
    /// `mean[i - 1][t]` is the mean of `L_i(t)`.
    mean: Vec<Vec<f64>>,
    std_error: Vec<Vec<f64>>,
}

/// `0, -2, -4, ...`: ordered entrance/exit values.
fn staircase(k: usize) -> Vec<f64> {
    (0..k).map(|i| -2.0 * i as f64).collect()
}

pub(crate) fn run(a: &EnsembleArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve("ensemble", &a.common, DEFAULTS)?;
    if let (None, Some(x)) = (a.common.k, a.x.as_ref()) {
        cfg.k = x.len();
    }
    let k = cfg.k;
    if k == 0 || cfg.t < 2 {
        return Err(CliError::usage("ensemble needs --k >= 1 and --t >= 2"));
    }
    let set = EnsembleSettings {
        x: a.x.clone().unwrap_or_else(|| staircase(k)),
        y: a.y.clone().unwrap_or_else(|| staircase(k)),
        g: a.g.clone().unwrap_or(CurveArg(Vec::new())),
        interaction: a.interaction.unwrap_or(InteractionKind::Exp),
        method: a.method.unwrap_or(EnsembleMethod::Rejection),
        n_mc: a.n_mc.unwrap_or(1000),
    };
    if set.x.len() != k || set.y.len() != k {
        return Err(CliError::usage(format!("--x and --y need {k} values each")));
    }
    let t1 = cfg.t as i64 - 1;
    let hrw = HrwSpec::log_gamma(theta(&cfg)?);
    let spec = EnsembleSpec::new(
        1,
        k,
        0,
        t1,
        set.x.clone(),
        set.y.clone(),
        vec![f64::INFINITY; cfg.t],
        set.g.expand(cfg.t, "g")?,
        hrw.clone(),
        InteractionSpec::uniform(hamiltonian(set.interaction), 0, t1)?,
    )?;
    let bridges = BridgeSampler::with_grid(&hrw, cfg.t - 1, cfg.grid, GridParams::default())?;
    let sampler = GibbsSampler::with_bridges(spec, bridges)?;
    let meta = metadata(&cfg, &set)?;

    let (acceptance, acceptance_std_error) = if set.n_mc > 0 {
        sampler.acceptance_probability(
            set.n_mc,
            &mut rng_for(derive_seed(cfg.seed, ACCEPTANCE_STREAM), 0),
        )?
    } else {
        (f64::NAN, f64::NAN)
    };
    log::info!("ensemble: acceptance {acceptance:.4e} +- {acceptance_std_error:.1e}");

    let draws = map_samples(cfg.workers, cfg.samples, |s| {
        let mut rng = rng_for(cfg.seed, s as u64);
        Ok(match set.method {
            EnsembleMethod::Rejection => {
                let d = sampler.sample_rejection(&mut rng)?;
                (d.ensemble, Some(d.attempts))
            }
            EnsembleMethod::Mcmc => (sampler.sample_mcmc(cfg.sweeps, &mut rng)?, None),
        })
    })?;
    let mean_attempts = match set.method {
        EnsembleMethod::Rejection => {
            Some(draws.iter().map(|d| d.1.unwrap_or(0) as f64).sum::<f64>() / draws.len() as f64)
        }
        EnsembleMethod::Mcmc => None,
    };
    let ensembles: Vec<_> = draws.into_iter().map(|d| d.0).collect();
    let (mean, std_error): (Vec<Vec<f64>>, Vec<Vec<f64>>) = (1..=k)
        .map(|i| {
            (0..=t1)
                .map(|j| mean_se(&ensembles.iter().map(|e| e.at(i, j)).collect::<Vec<_>>()))
                .unzip()
        })
        .unzip();
    let results = EnsembleResults {
        samples: cfg.samples,
        acceptance,
        acceptance_std_error,
        mean_attempts,
        mean,
        std_error,
    };

    prepare_out(&cfg)?;
    write_ensembles(&cfg.out, "ensemble", cfg.format, &meta, &ensembles)?;
    write_summary(&cfg, &meta, &results)
}
