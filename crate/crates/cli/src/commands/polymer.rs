//! `polymer`: log-gamma line ensembles, Tracy-Widom samples, window
//! extrema, the top-curve profile and the gap/acceptance diagnostics.

use gibbsline_core::bridge::HrwSpec;
use gibbsline_core::gibbs::Hamiltonian;
use gibbsline_core::polymer::polymer_line_ensemble;
use gibbsline_core::stats::{
    gap_and_acceptance_diagnostics, log_gamma_constants, parabola_fit, top_curve_profile,
    tw_statistic, window_extrema, ParabolaFit,
};
use gibbsline_core::{derive_seed, math, rng_for, DiscreteLineEnsemble, ScalingConstants};
use serde::{Deserialize, Serialize};

use super::{mean_se, prepare_out, theta, write_summary};
use crate::args::PolymerArgs;
use crate::config::{metadata, Defaults, RunConfig};
use crate::output::write_ensembles;
use crate::parallel::map_samples;
use crate::{CliError, Result};

/// Stream index reserved for the acceptance diagnostic; sample `s` uses
/// `rng_for(derive_seed(seed, DIAG_STREAM), s)`.
const DIAG_STREAM: u64 = u64::MAX;

pub(crate) const DEFAULTS: Defaults = Defaults {
    theta: 1.0,
    n: 16,
    k: 1,
    t: 0,
    r: 1.0,
    samples: 100,
    sweeps: 0,
    grid: 0,
};

/// Statistics requested on top of the common flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolymerSettings {
    pub positions: Vec<i64>,
    pub profile_n: usize,
    pub n_mc: usize,
}

impl PolymerSettings {
    /// Fills unset values and checks that every statistic fits in `|j| <= N`.
    pub fn resolve(
        cfg: &RunConfig,
        positions: Option<&[i64]>,
        profile_n: Option<usize>,
        n_mc: Option<usize>,
    ) -> Result<Self> {
        let nf = cfg.n as f64;
        let na = math::powf(nf, 2.0 / 3.0);
        let fits = |m: f64| m * na <= nf * (1.0 + 1e-12);
        if !fits(cfg.r) {
            return Err(CliError::usage(format!(
                "N = {} is too small for r = {}: the window r N^(2/3) = {:.3} exceeds N",
                cfg.n,
                cfg.r,
                cfg.r * na
            )));
        }
        let positions = positions.map(<[i64]>::to_vec).unwrap_or_else(|| vec![0]);
        if let Some(&p) = positions.iter().find(|&&p| !fits(p.unsigned_abs() as f64)) {
            return Err(CliError::usage(format!(
                "position {p} is outside the ensemble for N = {}",
                cfg.n
            )));
        }
        let profile_n = match profile_n {
            Some(m) if !fits(m as f64) => {
                return Err(CliError::usage(format!(
                    "profile range {m} is outside the ensemble for N = {}",
                    cfg.n
                )))
            }
            Some(m) => m,
            None => (0..=2).rev().find(|&m| fits(m as f64)).unwrap_or(0),
        };
        let n_mc = n_mc.unwrap_or(100);
        if (1..100).contains(&n_mc) {
            return Err(CliError::usage(format!(
                "--n-mc must be 0 (off) or at least 100, got {n_mc}"
            )));
        }
        Ok(Self {
            positions,
            profile_n,
            n_mc,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwSummary {
    pub n: i64,
    pub mean: f64,
    pub std_error: f64,
    pub samples: Vec<f64>,
}

/// Means of `sup` and `inf` of `L_i(x) - p x` over the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremaSummary {
    pub curve: usize,
    pub sup_mean: f64,
    pub sup_std_error: f64,
    pub inf_mean: f64,
    pub inf_std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub n: Vec<f64>,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    /// Present with at least 5 profile points.
    pub fit: Option<ParabolaFit>,
    pub lambda: f64,
}

/// Gap and acceptance of curves `1..=k-1` over the window, per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSummary {
    pub curves: usize,
    pub n_mc: usize,
    pub s_minus: i64,
    pub s_plus: i64,
    pub min_gap: Vec<f64>,
    pub acceptance: Vec<f64>,
    pub acceptance_std_error: Vec<f64>,
    pub min_gap_mean: f64,
    pub acceptance_mean: f64,
    pub acceptance_mean_std_error: f64,
    pub acceptance_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolymerResults {
    pub samples: usize,
    pub constants: ScalingConstants,
    pub tw: Vec<TwSummary>,
    pub extrema: Vec<ExtremaSummary>,
    pub profile: Option<ProfileSummary>,
    pub diagnostics: Option<DiagnosticSummary>,
}

struct SampleStats {
    tw: Vec<f64>,
    extrema: Vec<(f64, f64)>,
    profile: Vec<f64>,
    diag: Option<(f64, f64, f64, i64, i64)>,
}

fn sample_stats(
    cfg: &RunConfig,
    set: &PolymerSettings,
    c: &ScalingConstants,
    hrw: &HrwSpec,
    s: usize,
    ens: &DiscreteLineEnsemble,
) -> Result<SampleStats> {
    let k = ens.num_curves();
    let tw = set
        .positions
        .iter()
        .map(|&p| tw_statistic(ens, c, cfg.n, p))
        .collect::<gibbsline_core::Result<Vec<_>>>()?;
    let extrema = (1..=k)
        .map(|i| window_extrema(ens, c, cfg.n, cfg.r, i))
        .collect::<gibbsline_core::Result<Vec<_>>>()?;
    let m = set.profile_n as i64;
    let profile = (-m..=m)
        .map(|n| top_curve_profile(ens, c, cfg.n, n as f64))
        .collect::<gibbsline_core::Result<Vec<_>>>()?;
    let diag = if k >= 2 && set.n_mc > 0 {
        let mut rng = rng_for(derive_seed(cfg.seed, DIAG_STREAM), s as u64);
        let rep = gap_and_acceptance_diagnostics(
            ens,
            c,
            cfg.n,
            cfg.r,
            k - 1,
            hrw,
            &Hamiltonian::Exp,
            set.n_mc,
            &mut rng,
        )?;
        let get = |name: &str| {
            rep.get(name)
                .map(|e| (e.estimate, e.std_error))
                .unwrap_or((f64::NAN, 0.0))
        };
        let (gap, _) = get("min_gap");
        let (z, z_se) = get("acceptance");
        Some((
            gap,
            z,
            z_se,
            get("s_minus").0 as i64,
            get("s_plus").0 as i64,
        ))
    } else {
        None
    };
    Ok(SampleStats {
        tw,
        extrema,
        profile,
        diag,
    })
}

fn check_shape(cfg: &RunConfig, ens: &DiscreteLineEnsemble) -> Result<()> {
    let n = cfg.n as i64;
    if ens.first_curve() != 1 || ens.t0() != -n || ens.t1() != n {
        return Err(CliError::usage(format!(
            "ensemble must hold curves 1.. on times -N..=N (N = {}), got curves from {} on {}..={}",
            cfg.n,
            ens.first_curve(),
            ens.t0(),
            ens.t1()
        )));
    }
    Ok(())
}

/// Statistics of a list of polymer ensembles; shared by `polymer` and `stats`.
pub fn summarize(
    cfg: &RunConfig,
    set: &PolymerSettings,
    ensembles: &[DiscreteLineEnsemble],
) -> Result<PolymerResults> {
    let c = log_gamma_constants(theta(cfg)?)?;
    let hrw = HrwSpec::log_gamma(theta(cfg)?);
    for e in ensembles {
        check_shape(cfg, e)?;
    }
    let per = map_samples(cfg.workers, ensembles.len(), |s| {
        sample_stats(cfg, set, &c, &hrw, s, &ensembles[s])
    })?;
    let column = |f: &dyn Fn(&SampleStats) -> f64| per.iter().map(f).collect::<Vec<f64>>();

    let tw = set
        .positions
        .iter()
        .enumerate()
        .map(|(q, &n)| {
            let samples = column(&|p| p.tw[q]);
            let (mean, std_error) = mean_se(&samples);
            TwSummary {
                n,
                mean,
                std_error,
                samples,
            }
        })
        .collect();

    let k = ensembles
        .first()
        .map_or(0, DiscreteLineEnsemble::num_curves);
    let extrema = (0..k)
        .map(|i| {
            let (sup_mean, sup_std_error) = mean_se(&column(&|p| p.extrema[i].0));
            let (inf_mean, inf_std_error) = mean_se(&column(&|p| p.extrema[i].1));
            ExtremaSummary {
                curve: i + 1,
                sup_mean,
                sup_std_error,
                inf_mean,
                inf_std_error,
            }
        })
        .collect();

    let profile = (set.profile_n > 0).then(|| -> Result<ProfileSummary> {
        let m = set.profile_n as i64;
        let n: Vec<f64> = (-m..=m).map(|v| v as f64).collect();
        let (mean, std_error): (Vec<f64>, Vec<f64>) = (0..n.len())
            .map(|q| mean_se(&column(&|p| p.profile[q])))
            .unzip();
        let fit = if n.len() >= 5 && per.len() >= 2 {
            Some(parabola_fit(&n, &mean, &std_error)?)
        } else {
            None
        };
        Ok(ProfileSummary {
            n,
            mean,
            std_error,
            fit,
            lambda: c.lambda,
        })
    });
    let profile = profile.transpose()?;

    let diagnostics = match per.first().and_then(|p| p.diag) {
        Some((_, _, _, s_minus, s_plus)) => {
            let d = |f: &dyn Fn((f64, f64, f64, i64, i64)) -> f64| {
                column(&|p| p.diag.map_or(f64::NAN, f))
            };
            let min_gap = d(&|v| v.0);
            let acceptance = d(&|v| v.1);
            let acceptance_std_error = d(&|v| v.2);
            let (min_gap_mean, _) = mean_se(&min_gap);
            let (acceptance_mean, acceptance_mean_std_error) = mean_se(&acceptance);
            let acceptance_min = acceptance.iter().copied().fold(f64::INFINITY, f64::min);
            Some(DiagnosticSummary {
                curves: k - 1,
                n_mc: set.n_mc,
                s_minus,
                s_plus,
                min_gap,
                acceptance,
                acceptance_std_error,
                min_gap_mean,
                acceptance_mean,
                acceptance_mean_std_error,
                acceptance_min,
            })
        }
        None => None,
    };

    Ok(PolymerResults {
        samples: ensembles.len(),
        constants: c,
        tw,
        extrema,
        profile,
        diagnostics,
    })
}

pub(crate) fn run(a: &PolymerArgs) -> Result<()> {
    let cfg = RunConfig::resolve("polymer", &a.common, DEFAULTS)?;
    let set = PolymerSettings::resolve(&cfg, a.positions.as_deref(), a.profile_n, a.n_mc)?;
    if cfg.k == 0 || cfg.k > cfg.n {
        return Err(CliError::usage(format!(
            "need 1 <= k <= N, got k = {}, N = {}",
            cfg.k, cfg.n
        )));
    }
    let th = theta(&cfg)?;
    let meta = metadata(&cfg, &set)?;
    log::info!(
        "polymer: {} samples, N = {}, k = {}",
        cfg.samples,
        cfg.n,
        cfg.k
    );
    let ensembles = map_samples(cfg.workers, cfg.samples, |s| {
        Ok(polymer_line_ensemble(
            th,
            cfg.n,
            cfg.k,
            derive_seed(cfg.seed, s as u64),
        )?)
    })?;
    let results = summarize(&cfg, &set, &ensembles)?;
    prepare_out(&cfg)?;
    let path = write_ensembles(&cfg.out, "polymer", cfg.format, &meta, &ensembles)?;
    log::info!("wrote {}", path.display());
    write_summary(&cfg, &meta, &results)
}
