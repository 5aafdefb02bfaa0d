//! `H^RW` random walks and random walk bridges.
//!
//! A walk has i.i.d. increments with density `G = exp(-H^RW)`. The bridge
//! from `(T0, x)` to `(T1, y)` is the walk conditioned on `S_{T1-T0} = y`.
//! Two samplers target it: a sequential one that draws each step from
//! `G(u - prev) G_r(y - u)` with the `r`-step density `G_r` tabulated by FFT
//! convolution, and a single-site Gibbs sampler.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, resource, Result};
use crate::grid::{sample_log_density, GridDensity, GridParams};
use crate::math;
use crate::special::{self, Theta};

/// Grid points used to tabulate a single-step density.
pub const DEFAULT_GRID_POINTS: usize = 4096;

/// Largest grid an `n`-step density may occupy.
pub const MAX_GRID_POINTS: usize = 1 << 22;

/// Probability mass allowed outside the support window of an increment.
const TAIL_MASS: f64 = 1e-12;

/// The increment law `G(x) = exp(-H^RW(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HrwSpec {
    /// `H^RW(x) = theta x + e^-x + log Gamma(theta)`: the increment is
    /// `-log` of a Gamma(theta, 1) variable.
    LogGamma { theta: Theta },
    /// Gaussian increments, used to test the machinery against closed forms.
    Gaussian { mean: f64, sd: f64 },
    /// An arbitrary tabulated density, normalized at construction.
    Tabulated { density: GridDensity },
}

impl HrwSpec {
    pub fn log_gamma(theta: Theta) -> Self {
        Self::LogGamma { theta }
    }

    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
            return Err(domain!("gaussian increments need finite mean and sd > 0"));
        }
        Ok(Self::Gaussian { mean, sd })
    }

    /// Normalizes `density`; fails when it has no mass.
    pub fn tabulated(density: GridDensity) -> Result<Self> {
        let mass = density.mass();
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(domain!(
                "tabulated increment density is not normalizable (mass {mass})"
            ));
        }
        Ok(Self::Tabulated {
            density: density.normalized()?,
        })
    }

    /// `log G(x)`; `-inf` where `G` vanishes.
    #[inline]
    pub fn log_density(&self, x: f64) -> f64 {
        match self {
            Self::LogGamma { theta } => {
                let t = theta.get();
                -t * x - math::exp(-x) - libm::lgamma(t)
            }
            Self::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - math::ln(sd * math::sqrt(2.0 * math::PI))
            }
            Self::Tabulated { density } => density.log_eval(x),
        }
    }

    /// A closure for `log G` with per-law constants hoisted.
    pub fn log_density_fn(&self) -> impl Fn(f64) -> f64 + '_ {
        let (t, c) = match self {
            Self::LogGamma { theta } => (theta.get(), libm::lgamma(theta.get())),
            Self::Gaussian { sd, .. } => (0.0, math::ln(sd * math::sqrt(2.0 * math::PI))),
            Self::Tabulated { .. } => (0.0, 0.0),
        };
        move |x| match self {
            Self::LogGamma { .. } => -t * x - math::exp(-x) - c,
            Self::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - c
            }
            Self::Tabulated { density } => density.log_eval(x),
        }
    }

    /// Mean increment.
    pub fn mean(&self) -> f64 {
        match self {
            Self::LogGamma { theta } => -special::psi(theta.get()),
            Self::Gaussian { mean, .. } => *mean,
            Self::Tabulated { density } => density.mean(),
        }
    }

    /// Increment variance.
    pub fn variance(&self) -> f64 {
        match self {
            Self::LogGamma { theta } => special::hurwitz(2, theta.get()),
            Self::Gaussian { sd, .. } => sd * sd,
            Self::Tabulated { density } => density.variance(),
        }
    }

    /// An interval outside of which `G` has mass at most `1e-12`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Self::LogGamma { theta } => log_gamma_window(theta.get()),
            Self::Gaussian { mean, sd } => (mean - 7.5 * sd, mean + 7.5 * sd),
            Self::Tabulated { density } => (density.lo(), density.hi()),
        }
    }
}

/// Support window of `-log U`, `U ~ Gamma(theta, 1)`, from explicit tail bounds.
fn log_gamma_window(theta: f64) -> (f64, f64) {
    let half = 0.5 * TAIL_MASS;
    let lg = libm::lgamma(theta);
    // right tail: G(x) <= e^{-theta x} / Gamma(theta)
    let hi = -(math::ln(half) + lg + math::ln(theta)) / theta;
    // left tail: P(U > t) <= t^{theta-1} e^{-t} / (Gamma(theta) (1 - (theta-1)/t)) for t > theta - 1
    let excess = (theta - 1.0).max(0.0);
    let mut t = theta + 1.0;
    loop {
        let bound = (theta - 1.0) * math::ln(t) - t - lg - math::ln(1.0 - excess / t);
        if bound < math::ln(half) {
            break;
        }
        t += 0.25;
    }
    (-math::ln(t), hi)
}

/// Tabulates `G` on its support window with `m` points, normalized.
pub fn hrw_density_with(hrw: &HrwSpec, m: usize) -> Result<GridDensity> {
    if let HrwSpec::Tabulated { density } = hrw {
        return Ok(density.clone());
    }
    let (lo, hi) = hrw.support();
    let f = hrw.log_density_fn();
    let g = GridDensity::from_log_fn(lo, hi, m, f)?;
    let mass = g.mass();
    if (mass - 1.0).abs() > 1e-6 {
        return Err(domain!(
            "increment density integrates to {mass} on its window, expected 1"
        ));
    }
    g.normalized()
}

/// [`hrw_density_with`] on the default grid of 4096 points.
pub fn hrw_density(hrw: &HrwSpec) -> Result<GridDensity> {
    hrw_density_with(hrw, DEFAULT_GRID_POINTS)
}

/// `n`-fold self-convolution of `g` by repeated FFT convolution. The result
/// keeps the spacing of `g`; its support is trimmed where the tabulated
/// values fall below `1e-13` of the peak.
pub fn n_step_density(g: &GridDensity, n: usize) -> Result<GridDensity> {
    Ok(n_step_densities(g, n)?.pop().expect("n >= 1"))
}

/// `[G_1, ..., G_n]`.
pub fn n_step_densities(g: &GridDensity, n: usize) -> Result<Vec<GridDensity>> {
    if n == 0 {
        return Err(domain!("n-step density needs n >= 1"));
    }
    let mut out = Vec::with_capacity(n);
    out.push(g.clone());
    for _ in 1..n {
        let last = out.last().expect("nonempty");
        if last.m() + g.m() > MAX_GRID_POINTS {
            return Err(resource!(
                "n-step density would exceed {MAX_GRID_POINTS} grid points"
            ));
        }
        let next = last.convolve(g)?.trimmed();
        out.push(next);
    }
    Ok(out)
}

/// Log-values of a density on a uniform grid with linear interpolation of logs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogTable {
    lo: f64,
    hi: f64,
    h: f64,
    logs: Vec<f64>,
}

impl LogTable {
    pub fn from_density(g: &GridDensity) -> Self {
        let s = g.log_scale();
        let logs = g
            .values()
            .iter()
            .map(|&v| {
                if v > 0.0 {
                    math::ln(v) + s
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        Self {
            lo: g.lo(),
            hi: g.hi(),
            h: g.spacing(),
            logs,
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        let t = (x - self.lo) / self.h;
        let i = (t as usize).min(self.logs.len() - 2);
        let f = t - i as f64;
        let (a, b) = (self.logs[i], self.logs[i + 1]);
        if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
            return if f == 0.0 { a } else { f64::NEG_INFINITY };
        }
        a + f * (b - a)
    }
}

/// A bridge from `(t0, x)` to `(t1, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeSpec {
    pub t0: i64,
    pub t1: i64,
    pub x: f64,
    pub y: f64,
    pub hrw: HrwSpec,
}

impl BridgeSpec {
    pub fn new(t0: i64, t1: i64, x: f64, y: f64, hrw: HrwSpec) -> Result<Self> {
        if t0 >= t1 {
            return Err(domain!("bridge needs T0 < T1, got {t0} >= {t1}"));
        }
        if !(x.is_finite() && y.is_finite()) {
            return Err(domain!("bridge endpoints must be finite"));
        }
        Ok(Self { t0, t1, x, y, hrw })
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.t1 - self.t0) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Reusable bridge sampler for one increment law and bridges of up to
/// `max_len` steps.
#[derive(Debug, Clone)]
pub struct BridgeSampler {
    hrw: HrwSpec,
    support: (f64, f64),
    /// `tables[r - 1]` holds `log G_r`.
    tables: Vec<LogTable>,
    params: GridParams,
}

impl BridgeSampler {
    pub fn new(hrw: &HrwSpec, max_len: usize) -> Result<Self> {
        Self::with_grid(hrw, max_len, DEFAULT_GRID_POINTS, GridParams::default())
    }

    pub fn with_grid(hrw: &HrwSpec, max_len: usize, m: usize, params: GridParams) -> Result<Self> {
        let g = hrw_density_with(hrw, m)?;
        let tables = n_step_densities(&g, max_len.max(1))?
            .iter()
            .map(LogTable::from_density)
            .collect();
        Ok(Self {
            hrw: hrw.clone(),
            support: hrw.support(),
            tables,
            params,
        })
    }

    pub fn hrw(&self) -> &HrwSpec {
        &self.hrw
    }

    pub fn max_len(&self) -> usize {
        self.tables.len()
    }

    pub fn params(&self) -> &GridParams {
        &self.params
    }

    /// `log G_r(x)` (analytic for `r = 1`).
    pub fn log_walk_density(&self, r: usize, x: f64) -> f64 {
        if r == 1 {
            self.hrw.log_density(x)
        } else {
            self.tables[r - 1].eval(x)
        }
    }

    /// Support window of `G_r`.
    pub fn walk_support(&self, r: usize) -> (f64, f64) {
        if r == 1 {
            self.support
        } else {
            (self.tables[r - 1].lo(), self.tables[r - 1].hi())
        }
    }

    /// Sequential draw of the bridge; returns values at `t0..=t1`.
    pub fn sample<R: Rng + ?Sized>(&self, spec: &BridgeSpec, rng: &mut R) -> Result<Vec<f64>> {
        let len = spec.len();
        if len > self.max_len() {
            return Err(domain!(
                "bridge of {len} steps exceeds sampler capacity {}",
                self.max_len()
            ));
        }
        let mut path = Vec::with_capacity(len + 1);
        path.push(spec.x);
        let g = self.hrw.log_density_fn();
        let (glo, ghi) = self.support;
        for step in 1..len {
            let prev = path[step - 1];
            let r = len - step;
            let (rlo, rhi) = self.walk_support(r);
            let lo = (prev + glo).max(spec.y - rhi);
            let hi = (prev + ghi).min(spec.y - rlo);
            let u: f64 = rng.random();
            let v = if r == 1 {
                sample_log_density(|s| g(s - prev) + g(spec.y - s), lo, hi, u, &self.params)?
            } else {
                let table = &self.tables[r - 1];
                sample_log_density(
                    |s| g(s - prev) + table.eval(spec.y - s),
                    lo,
                    hi,
                    u,
                    &self.params,
                )?
            };
            path.push(v);
        }
        path.push(spec.y);
        Ok(path)
    }

    /// One systematic-scan sweep of single-site updates over the interior.
    pub fn mcmc_sweep<R: Rng + ?Sized>(&self, path: &mut [f64], rng: &mut R) -> Result<()> {
        let g = self.hrw.log_density_fn();
        let (glo, ghi) = self.support;
        for m in 1..path.len().saturating_sub(1) {
            let (left, right) = (path[m - 1], path[m + 1]);
            let lo = (left + glo).max(right - ghi);
            let hi = (left + ghi).min(right - glo);
            let u: f64 = rng.random();
            path[m] = sample_log_density(|s| g(s - left) + g(right - s), lo, hi, u, &self.params)?;
        }
        Ok(())
    }

    /// Single-site Gibbs chain started from the linear interpolation.
    pub fn sample_mcmc<R: Rng + ?Sized>(
        &self,
        spec: &BridgeSpec,
        sweeps: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if sweeps == 0 {
            return Err(domain!("MCMC needs at least one sweep"));
        }
        let len = spec.len();
        let mut path: Vec<f64> = (0..=len)
            .map(|m| spec.x + (spec.y - spec.x) * m as f64 / len as f64)
            .collect();
        path[len] = spec.y;
        for _ in 0..sweeps {
            self.mcmc_sweep(&mut path, rng)?;
        }
        Ok(path)
    }
}

/// Sequential bridge draw (builds the `n`-step tables on each call; use
/// [`BridgeSampler`] for repeated draws).
pub fn sample_bridge_sequential<R: Rng + ?Sized>(
    spec: &BridgeSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    BridgeSampler::new(&spec.hrw, spec.len())?.sample(spec, rng)
}

/// Single-site Gibbs bridge draw.
pub fn sample_bridge_mcmc<R: Rng + ?Sized>(
    spec: &BridgeSpec,
    sweeps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    BridgeSampler::new(&spec.hrw, 1)?.sample_mcmc(spec, sweeps, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use alloc::vec;

    fn lg(t: f64) -> HrwSpec {
        HrwSpec::log_gamma(Theta::new(t).unwrap())
    }

    #[test]
    fn log_gamma_density_is_normalized_with_right_moments() {
        for &t in &[0.25, 1.0, 5.0] {
            let g = hrw_density(&lg(t)).unwrap();
            assert!((g.mass() - 1.0).abs() < 1e-9);
            assert!((g.mean() - lg(t).mean()).abs() < 1e-6, "theta {t}");
            assert!((g.variance() - lg(t).variance()).abs() < 1e-5 * lg(t).variance());
        }
    }

    #[test]
    fn window_tails_are_small() {
        for &t in &[0.25, 1.0, 3.0, 20.0] {
            let h = lg(t);
            let (lo, hi) = h.support();
            // Gamma(t) mass beyond e^{-lo} and below e^{-hi}, by quadrature on a wide grid
            let f = h.log_density_fn();
            let wide = GridDensity::from_log_fn(lo - 5.0, hi + 60.0 / t, 200_001, &f).unwrap();
            let total = wide.mass();
            let inside = GridDensity::from_log_fn(lo, hi, 100_001, &f)
                .unwrap()
                .mass();
            assert!(
                total - inside < 1.5e-12 + 1e-9 * total,
                "theta {t}: {}",
                total - inside
            );
        }
    }

    #[test]
    fn n_step_moments_scale() {
        let h = lg(1.0);
        let g = hrw_density(&h).unwrap();
        let g5 = n_step_density(&g, 5).unwrap();
        assert!((g5.mass() - 1.0).abs() < 1e-6);
        assert!((g5.mean() - 5.0 * h.mean()).abs() < 1e-5);
        assert!((g5.variance() - 5.0 * h.variance()).abs() < 1e-4);
        assert_eq!(n_step_density(&g, 1).unwrap(), g);
        assert!(n_step_density(&g, 0).is_err());
    }

    #[test]
    fn unit_bridge_is_deterministic() {
        let spec = BridgeSpec::new(3, 4, 1.25, -0.5, lg(1.0)).unwrap();
        let mut rng = rng_for(1, 0);
        assert_eq!(
            sample_bridge_sequential(&spec, &mut rng).unwrap(),
            vec![1.25, -0.5]
        );
        assert_eq!(
            sample_bridge_mcmc(&spec, 3, &mut rng).unwrap(),
            vec![1.25, -0.5]
        );
    }

    #[test]
    fn endpoints_are_pinned() {
        let spec = BridgeSpec::new(0, 6, 0.3, 2.7, lg(2.0)).unwrap();
        let s = BridgeSampler::new(&spec.hrw, 6).unwrap();
        let mut rng = rng_for(2, 0);
        for _ in 0..20 {
            let p = s.sample(&spec, &mut rng).unwrap();
            assert_eq!(p.len(), 7);
            assert_eq!(p[0].to_bits(), 0.3_f64.to_bits());
            assert_eq!(p[6].to_bits(), 2.7_f64.to_bits());
            let q = s.sample_mcmc(&spec, 2, &mut rng).unwrap();
            assert_eq!(q[0].to_bits(), 0.3_f64.to_bits());
            assert_eq!(q[6].to_bits(), 2.7_f64.to_bits());
        }
    }

    #[test]
    fn gaussian_bridge_midpoint_moments() {
        // Brownian-type bridge: midpoint of a T=4 Gaussian bridge has variance 4*3... = T/4 sd^2 at m = T/2
        let h = HrwSpec::gaussian(0.0, 1.0).unwrap();
        let spec = BridgeSpec::new(0, 4, 0.0, 2.0, h).unwrap();
        let s = BridgeSampler::new(&spec.hrw, 4).unwrap();
        let mut rng = rng_for(3, 0);
        let mids: Vec<f64> = (0..4000)
            .map(|_| s.sample(&spec, &mut rng).unwrap()[2])
            .collect();
        let (mean, se) = math::mean_and_std_error(&mids);
        assert!((mean - 1.0).abs() < 4.0 * se);
        let var = mids.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3999.0;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn tabulated_kind_normalizes() {
        let g = GridDensity::new(-1.0, 1.0, alloc::vec![2.0, 2.0, 2.0], 0.0).unwrap();
        let h = HrwSpec::tabulated(g).unwrap();
        assert!((h.log_density(0.3) - math::ln(0.5)).abs() < 1e-12);
        let z = GridDensity::new(-1.0, 1.0, alloc::vec![0.0, 0.0], 0.0).unwrap();
        assert!(HrwSpec::tabulated(z).is_err());
    }

    #[test]
    fn log_table_interpolates_logs() {
        let g = GridDensity::new(0.0, 2.0, alloc::vec![1.0, math::exp(-2.0), 0.0], 0.0).unwrap();
        let t = LogTable::from_density(&g);
        assert!((t.eval(0.5) + 1.0).abs() < 1e-12);
        assert_eq!(t.eval(1.5), f64::NEG_INFINITY);
        assert_eq!(t.eval(-0.1), f64::NEG_INFINITY);
    }
}
