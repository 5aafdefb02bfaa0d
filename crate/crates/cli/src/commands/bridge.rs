//! `bridge`: random walk bridges and their mean path.

use gibbsline_core::bridge::{BridgeSampler, BridgeSpec, HrwSpec};
use gibbsline_core::grid::GridParams;
use gibbsline_core::rng_for;
use serde::Serialize;

use super::{mean_se, prepare_out, theta, write_summary};
use crate::args::{BridgeArgs, BridgeMethod, Format, Increments};
use crate::config::{metadata, Defaults, RunConfig};
use crate::output::{fmt_f64, write_csv, write_json};
use crate::parallel::map_samples;
use crate::{CliError, Result};

const DEFAULTS: Defaults = Defaults {
    theta: 1.0,
    n: 0,
    k: 1,
    t: 10,
    r: 1.0,
    samples: 1000,
    sweeps: 100,
    grid: 4096,
};

#[derive(Debug, Clone, Serialize)]
struct BridgeSettings {
    x: f64,
    y: f64,
    method: BridgeMethod,
    increments: Increments,
    sd: f64,
}

#[derive(Debug, Clone, Serialize)]
struct BridgeResults {
    samples: usize,
    times: Vec<usize>,
    mean: Vec<f64>,
    std_error: Vec<f64>,
    /// `x + (y - x) t / (T - 1)`.
    linear_mean: Vec<f64>,
    /// Largest `|mean - linear_mean| / std_error` over interior times.
    max_z_score: f64,
}

pub(crate) fn run(a: &BridgeArgs) -> Result<()> {
    let cfg = RunConfig::resolve("bridge", &a.common, DEFAULTS)?;
    let set = BridgeSettings {
        x: a.x.unwrap_or(0.0),
        y: a.y.unwrap_or(0.0),
        method: a.method.unwrap_or(BridgeMethod::Sequential),
        increments: a.increments.unwrap_or(Increments::LogGamma),
        sd: a.sd.unwrap_or(1.0),
    };
    if cfg.t < 2 {
        return Err(CliError::usage("bridge needs --t >= 2"));
    }
    let hrw = match set.increments {
        Increments::LogGamma => HrwSpec::log_gamma(theta(&cfg)?),
        Increments::Gaussian => HrwSpec::gaussian(0.0, set.sd)?,
    };
    let spec = BridgeSpec::new(0, cfg.t as i64 - 1, set.x, set.y, hrw.clone())?;
    let steps = spec.len();
    let sampler = match set.method {
        BridgeMethod::Sequential => {
            BridgeSampler::with_grid(&hrw, steps, cfg.grid, GridParams::default())?
        }
        BridgeMethod::Mcmc => BridgeSampler::with_grid(&hrw, 1, cfg.grid, GridParams::default())?,
    };
    let meta = metadata(&cfg, &set)?;
    log::info!("bridge: {} samples, T = {}", cfg.samples, cfg.t);
    let paths = map_samples(cfg.workers, cfg.samples, |s| {
        let mut rng = rng_for(cfg.seed, s as u64);
        Ok(match set.method {
            BridgeMethod::Sequential => sampler.sample(&spec, &mut rng)?,
            BridgeMethod::Mcmc => sampler.sample_mcmc(&spec, cfg.sweeps, &mut rng)?,
        })
    })?;

    let times: Vec<usize> = (0..cfg.t).collect();
    let (mean, std_error): (Vec<f64>, Vec<f64>) = times
        .iter()
        .map(|&j| mean_se(&paths.iter().map(|p| p[j]).collect::<Vec<_>>()))
        .unzip();
    let linear_mean: Vec<f64> = times
        .iter()
        .map(|&j| set.x + (set.y - set.x) * j as f64 / steps as f64)
        .collect();
    let max_z_score = (1..steps)
        .filter(|&j| std_error[j] > 0.0)
        .map(|j| (mean[j] - linear_mean[j]).abs() / std_error[j])
        .fold(0.0_f64, f64::max);
    let results = BridgeResults {
        samples: cfg.samples,
        times,
        mean,
        std_error,
        linear_mean,
        max_z_score,
    };

    prepare_out(&cfg)?;
    match cfg.format {
        Format::Csv => {
            let rows = paths.iter().enumerate().flat_map(|(s, p)| {
                p.iter()
                    .enumerate()
                    .map(move |(j, v)| vec![s.to_string(), j.to_string(), fmt_f64(*v)])
            });
            write_csv(
                &cfg.out.join("bridge.csv"),
                &meta,
                &["sample", "t", "value"],
                rows,
            )?;
        }
        Format::Json => {
            let meta_map: std::collections::BTreeMap<&str, &str> =
                meta.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            write_json(
                &cfg.out.join("bridge.json"),
                &serde_json::json!({ "metadata": meta_map, "paths": paths }),
            )?;
        }
    }
    write_summary(&cfg, &meta, &results)
}
