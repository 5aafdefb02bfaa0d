//! `couple`: draws of the grand monotone coupling, a pathwise monotonicity
//! check against the lifted boundary and a continuity schedule.

use gibbsline_core::bridge::HrwSpec;
use gibbsline_core::coupling::{
    continuity_schedule, BoundaryTriple, CouplingModel, CouplingParams, CouplingUniforms,
};
use gibbsline_core::gibbs::InteractionSpec;
use gibbsline_core::rng_for;
use serde::Serialize;

use super::{hamiltonian, prepare_out, theta, write_summary};
use crate::args::{CoupleArgs, CurveArg, InteractionKind};
use crate::config::{metadata, Defaults, RunConfig};
use crate::output::write_ensembles;
use crate::parallel::map_samples;
use crate::{CliError, Result};

const DEFAULTS: Defaults = Defaults {
    theta: 1.0,
    n: 0,
    k: 2,
    t: 5,
    r: 1.0,
    samples: 100,
    sweeps: 0,
    grid: 256,
};

#[derive(Debug, Clone, Serialize)]
struct CoupleSettings {
    x: Vec<f64>,
    y: Vec<f64>,
    z: CurveArg,
    lift: f64,
    delta: f64,
    halvings: usize,
    interaction: InteractionKind,
}

#[derive(Debug, Clone, Serialize)]
struct Monotonicity {
    draws: usize,
    lift: f64,
    epsilon_grid: f64,
    max_violation: f64,
    violations_beyond_epsilon: usize,
}

#[derive(Debug, Clone, Serialize)]
struct Continuity {
    deltas: Vec<f64>,
    changes: Vec<f64>,
    epsilon_grid: f64,
    shrinks: bool,
}

#[derive(Debug, Clone, Serialize)]
struct CoupleResults {
    samples: usize,
    spacing: f64,
    monotonicity: Monotonicity,
    /// Uses the uniforms of sample 0.
    continuity: Continuity,
}

pub(crate) fn run(a: &CoupleArgs) -> Result<()> {
    let mut cfg = RunConfig::resolve("couple", &a.common, DEFAULTS)?;
    if let (None, Some(x)) = (a.common.k, a.x.as_ref()) {
        cfg.k = x.len();
    }
    let k = cfg.k;
    let stair = |k: usize| (0..k).map(|i| -2.0 * i as f64).collect::<Vec<f64>>();
    let set = CoupleSettings {
        x: a.x.clone().unwrap_or_else(|| stair(k)),
        y: a.y.clone().unwrap_or_else(|| stair(k)),
        z: a.z.clone().unwrap_or(CurveArg(Vec::new())),
        lift: a.lift.unwrap_or(0.5),
        delta: a.delta.unwrap_or(0.5),
        halvings: a.halvings.unwrap_or(6),
        interaction: a.interaction.unwrap_or(InteractionKind::Exp),
    };
    if set.x.len() != k || set.y.len() != k {
        return Err(CliError::usage(format!("--x and --y need {k} values each")));
    }
    if !(set.lift >= 0.0 && set.lift.is_finite()) {
        return Err(CliError::usage("--lift must be finite and nonnegative"));
    }
    if !(set.delta > 0.0 && set.delta.is_finite()) {
        return Err(CliError::usage("--delta must be finite and positive"));
    }
    let hrw = HrwSpec::log_gamma(theta(&cfg)?);
    let inter =
        InteractionSpec::uniform(hamiltonian(set.interaction), 0, (cfg.t as i64 - 1).max(1))?;
    let params = CouplingParams {
        grid_points: cfg.grid,
        ..CouplingParams::default()
    };
    let model = CouplingModel::new(hrw, inter, k, cfg.t, params)?;
    let low = BoundaryTriple::new(set.x.clone(), set.y.clone(), set.z.expand(cfg.t, "z")?)?;
    let high = low.shifted(set.lift);
    let plan_low = model.plan(&low)?;
    let plan_high = model.plan(&high)?;
    let eps = model.epsilon_grid(&low)?.max(model.epsilon_grid(&high)?);
    let len = k * cfg.t.saturating_sub(2);
    let meta = metadata(&cfg, &set)?;
    log::info!(
        "couple: {} draws, k = {k}, T = {}, spacing {:.3e}",
        cfg.samples,
        cfg.t,
        model.spacing()
    );

    let draws = map_samples(cfg.workers, cfg.samples, |s| {
        let omega = CouplingUniforms::sample(len, &mut rng_for(cfg.seed, s as u64));
        let l = plan_low.sample(&omega)?;
        let h = plan_high.sample(&omega)?;
        let v = l
            .values()
            .iter()
            .zip(h.values())
            .map(|(a, b)| a - b)
            .fold(0.0_f64, f64::max);
        Ok((l, v))
    })?;
    let max_violation = draws.iter().map(|d| d.1).fold(0.0_f64, f64::max);
    let violations_beyond_epsilon = draws.iter().filter(|d| d.1 > eps).count();
    let omega0 = CouplingUniforms::sample(len, &mut rng_for(cfg.seed, 0));
    let cont = continuity_schedule(&model, &low, set.delta, set.halvings, &omega0)?;
    let results = CoupleResults {
        samples: cfg.samples,
        spacing: model.spacing(),
        monotonicity: Monotonicity {
            draws: cfg.samples,
            lift: set.lift,
            epsilon_grid: eps,
            max_violation,
            violations_beyond_epsilon,
        },
        continuity: Continuity {
            shrinks: cont.shrinks(),
            deltas: cont.deltas,
            changes: cont.changes,
            epsilon_grid: cont.epsilon_grid,
        },
    };
    let ensembles: Vec<_> = draws.into_iter().map(|d| d.0).collect();

    prepare_out(&cfg)?;
    write_ensembles(&cfg.out, "couple", cfg.format, &meta, &ensembles)?;
    write_summary(&cfg, &meta, &results)
}
