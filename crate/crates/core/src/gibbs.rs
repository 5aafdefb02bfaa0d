//! `(H, H^RW)`-Gibbs measures on curves `k1..=k2` over times `a..=b`.
//!
//! The measure reweights independent `H^RW` bridges by the Boltzmann factor
//! `exp(-sum H_m(L_{i+1}(m+1) - L_i(m)))`, where the sum runs over adjacent
//! pairs including the boundary curves `L_{k1-1} = f` and `L_{k2+1} = g`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridge::{BridgeSampler, BridgeSpec, HrwSpec};
use crate::error::{domain, resource, Result};
use crate::grid::sample_log_density;
use crate::lines::DiscreteLineEnsemble;
use crate::math;
use crate::stats::{ks_critical_value, ks_distance, EmpiricalCdf, StatReport};

/// Attempts the rejection sampler makes before giving up.
pub const DEFAULT_ATTEMPT_BUDGET: u64 = 1_000_000;

/// Acceptance rates below this trigger a warning.
pub const LOW_ACCEPTANCE: f64 = 1e-5;

/// Piecewise-linear convex increasing penalty: `0` left of the first knot,
/// linear interpolation between knots, linear extrapolation on the right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexTable {
    lo: f64,
    h: f64,
    values: Vec<f64>,
}

impl ConvexTable {
    /// Knots at `lo + i h`; `values[0]` must be `0`, and the values
    /// nondecreasing with nonnegative second differences.
    pub fn new(lo: f64, h: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(h > 0.0) || !lo.is_finite() {
            return Err(domain!(
                "convex table needs two or more knots and a positive spacing"
            ));
        }
        if values[0] != 0.0 {
            return Err(domain!("convex table must start at 0 so that H(-inf) = 0"));
        }
        let tol = 1e-12 * values.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        for w in values.windows(2) {
            if !(w[1] >= w[0]) || !w[1].is_finite() {
                return Err(domain!("convex table must be finite and nondecreasing"));
            }
        }
        for w in values.windows(3) {
            if w[2] - 2.0 * w[1] + w[0] < -tol {
                return Err(domain!("convex table is not convex"));
            }
        }
        Ok(Self { lo, h, values })
    }

    #[inline]
    fn eval(&self, x: f64) -> f64 {
        let t = (x - self.lo) / self.h;
        if !(t > 0.0) {
            return 0.0;
        }
        let n = self.values.len();
        let i = (t as usize).min(n - 2);
        let f = t - i as f64;
        self.values[i] + f * (self.values[i + 1] - self.values[i])
    }
}

/// An interaction Hamiltonian `H` with `H(-inf) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Hamiltonian {
    /// `H(x) = e^x`.
    Exp,
    /// `H = 0`.
    Zero,
    Tabulated {
        table: ConvexTable,
    },
}

impl Hamiltonian {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        if x == f64::NEG_INFINITY {
            return 0.0;
        }
        match self {
            Self::Exp => math::exp(x),
            Self::Zero => 0.0,
            Self::Tabulated { table } => table.eval(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

/// Per-bond Hamiltonians `H_m`, `m = a..b-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSpec {
    a: i64,
    bonds: Vec<Hamiltonian>,
}

impl InteractionSpec {
    /// The same `H` on every bond of `[a, b]`.
    pub fn uniform(h: Hamiltonian, a: i64, b: i64) -> Result<Self> {
        if a >= b {
            return Err(domain!("interaction needs a < b"));
        }
        Ok(Self {
            a,
            bonds: vec![h; (b - a) as usize],
        })
    }

    /// Explicit `H_a, ..., H_{b-1}`.
    pub fn per_bond(a: i64, bonds: Vec<Hamiltonian>) -> Result<Self> {
        if bonds.is_empty() {
            return Err(domain!("interaction needs at least one bond"));
        }
        Ok(Self { a, bonds })
    }

    /// `H_m`.
    #[inline]
    pub fn bond(&self, m: i64) -> &Hamiltonian {
        &self.bonds[(m - self.a) as usize]
    }

    /// `H_m`, or `None` outside the covered bonds.
    pub fn try_bond(&self, m: i64) -> Option<&Hamiltonian> {
        usize::try_from(m - self.a)
            .ok()
            .and_then(|i| self.bonds.get(i))
    }

    pub fn is_zero(&self) -> bool {
        self.bonds.iter().all(Hamiltonian::is_zero)
    }

    fn covers(&self, a: i64, b: i64) -> bool {
        self.a <= a && b - 1 < self.a + self.bonds.len() as i64
    }
}

/// Boundary data and laws of a Gibbs measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub k1: usize,
    pub k2: usize,
    pub a: i64,
    pub b: i64,
    /// Entrance values `L_i(a)`, `i = k1..=k2`.
    pub x: Vec<f64>,
    /// Exit values `L_i(b)`.
    pub y: Vec<f64>,
    /// Top boundary on `a..=b`; `+inf` allowed.
    pub f: Vec<f64>,
    /// Bottom boundary on `a..=b`; `-inf` allowed.
    pub g: Vec<f64>,
    pub hrw: HrwSpec,
    pub interaction: InteractionSpec,
}

impl EnsembleSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        k1: usize,
        k2: usize,
        a: i64,
        b: i64,
        x: Vec<f64>,
        y: Vec<f64>,
        f: Vec<f64>,
        g: Vec<f64>,
        hrw: HrwSpec,
        interaction: InteractionSpec,
    ) -> Result<Self> {
        let spec = Self {
            k1,
            k2,
            a,
            b,
            x,
            y,
            f,
            g,
            hrw,
            interaction,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `f = +inf`, `g = -inf`.
    pub fn unbounded(
        k1: usize,
        a: i64,
        b: i64,
        x: Vec<f64>,
        y: Vec<f64>,
        hrw: HrwSpec,
        interaction: InteractionSpec,
    ) -> Result<Self> {
        let len = (b - a + 1).max(0) as usize;
        let k2 = (k1 + x.len()).saturating_sub(1);
        Self::new(
            k1,
            k2,
            a,
            b,
            x,
            y,
            vec![f64::INFINITY; len],
            vec![f64::NEG_INFINITY; len],
            hrw,
            interaction,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.a >= self.b {
            return Err(domain!("need a < b, got {} >= {}", self.a, self.b));
        }
        if self.k1 == 0 || self.k2 < self.k1 {
            return Err(domain!("need 1 <= k1 <= k2"));
        }
        let k = self.k2 - self.k1 + 1;
        let len = (self.b - self.a + 1) as usize;
        if self.x.len() != k || self.y.len() != k {
            return Err(domain!("entrance/exit vectors must have {k} entries"));
        }
        if self.f.len() != len || self.g.len() != len {
            return Err(domain!("boundary curves must have {len} entries"));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(domain!("entrance and exit values must be finite"));
        }
        if self.f.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(domain!("top boundary takes values in (-inf, +inf]"));
        }
        if self.g.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(domain!("bottom boundary takes values in [-inf, +inf)"));
        }
        if !self.interaction.covers(self.a, self.b) {
            return Err(domain!(
                "interaction does not cover bonds {}..{}",
                self.a,
                self.b
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn num_curves(&self) -> usize {
        self.k2 - self.k1 + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        (self.b - self.a) as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// `L_i(m)` with `L_{k1-1} = f`, `L_{k2+1} = g`.
    #[inline]
    fn value(&self, ens: &DiscreteLineEnsemble, i: usize, m: i64) -> f64 {
        if i + 1 == self.k1 {
            self.f[(m - self.a) as usize]
        } else if i == self.k2 + 1 {
            self.g[(m - self.a) as usize]
        } else {
            ens.at(i, m)
        }
    }

    fn check_ensemble(&self, ens: &DiscreteLineEnsemble) -> Result<()> {
        if ens.first_curve() != self.k1
            || ens.num_curves() != self.num_curves()
            || ens.t0() != self.a
            || ens.t1() != self.b
        {
            return Err(domain!("ensemble shape does not match the spec"));
        }
        Ok(())
    }
}

/// `sum H_m(L_{i+1}(m+1) - L_i(m))` over `i = k1-1..=k2`, `m = a..b-1`.
pub fn interaction_energy(spec: &EnsembleSpec, ens: &DiscreteLineEnsemble) -> Result<f64> {
    spec.check_ensemble(ens)?;
    let mut total = 0.0;
    for i in spec.k1 - 1..=spec.k2 {
        for m in spec.a..spec.b {
            let arg = spec.value(ens, i + 1, m + 1) - spec.value(ens, i, m);
            total += spec.interaction.bond(m).eval(arg);
        }
    }
    Ok(total)
}

/// Boltzmann weight `exp(-energy)` in `[0, 1]`.
pub fn boltzmann_weight(spec: &EnsembleSpec, ens: &DiscreteLineEnsemble) -> Result<f64> {
    Ok(math::exp(-interaction_energy(spec, ens)?))
}

/// Cached samplers for one spec.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    spec: EnsembleSpec,
    bridges: BridgeSampler,
    budget: u64,
}

/// A rejection-sampler draw and the number of proposals it took.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionDraw {
    pub ensemble: DiscreteLineEnsemble,
    pub attempts: u64,
}

impl GibbsSampler {
    pub fn new(spec: EnsembleSpec) -> Result<Self> {
        spec.validate()?;
        let bridges = BridgeSampler::new(&spec.hrw, spec.len())?;
        Ok(Self {
            spec,
            bridges,
            budget: DEFAULT_ATTEMPT_BUDGET,
        })
    }

    /// Reuses an existing bridge sampler (its capacity must cover the spec).
    pub fn with_bridges(spec: EnsembleSpec, bridges: BridgeSampler) -> Result<Self> {
        spec.validate()?;
        if bridges.max_len() < spec.len() || *bridges.hrw() != spec.hrw {
            return Err(domain!("bridge sampler does not match the spec"));
        }
        Ok(Self {
            spec,
            bridges,
            budget: DEFAULT_ATTEMPT_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget.max(1);
        self
    }

    pub fn spec(&self) -> &EnsembleSpec {
        &self.spec
    }

    pub fn bridges(&self) -> &BridgeSampler {
        &self.bridges
    }

    /// Independent bridges for every curve (no interaction).
    pub fn free_ensemble<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DiscreteLineEnsemble> {
        let s = &self.spec;
        let mut rows = Vec::with_capacity(s.num_curves());
        for c in 0..s.num_curves() {
            let b = BridgeSpec {
                t0: s.a,
                t1: s.b,
                x: s.x[c],
                y: s.y[c],
                hrw: s.hrw.clone(),
            };
            rows.push(self.bridges.sample(&b, rng)?);
        }
        DiscreteLineEnsemble::from_rows(s.k1, s.a, &rows)
    }

    /// Monte Carlo estimate of the acceptance probability and its standard error.
    pub fn acceptance_probability<R: Rng + ?Sized>(
        &self,
        n_mc: usize,
        rng: &mut R,
    ) -> Result<(f64, f64)> {
        if n_mc < 100 {
            return Err(domain!("acceptance estimate needs n_mc >= 100"));
        }
        if self.spec.interaction.is_zero() {
            return Ok((1.0, 0.0));
        }
        let mut w = Vec::with_capacity(n_mc);
        for _ in 0..n_mc {
            let e = self.free_ensemble(rng)?;
            w.push(boltzmann_weight(&self.spec, &e)?);
        }
        Ok(math::mean_and_std_error(&w))
    }

    /// Exact draw: propose free bridges, accept with the Boltzmann weight.
    pub fn sample_rejection<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<RejectionDraw> {
        for attempts in 1..=self.budget {
            let e = self.free_ensemble(rng)?;
            let w = boltzmann_weight(&self.spec, &e)?;
            let u: f64 = rng.random();
            if u < w || w == 1.0 {
                if attempts as f64 > 1.0 / LOW_ACCEPTANCE {
                    log::warn!("rejection sampler needed {attempts} attempts; acceptance probability is below {LOW_ACCEPTANCE}");
                }
                return Ok(RejectionDraw {
                    ensemble: e,
                    attempts,
                });
            }
        }
        log::warn!(
            "acceptance probability appears to be below {}",
            1.0 / self.budget as f64
        );
        Err(resource!(
            "rejection sampler exhausted its budget of {} attempts",
            self.budget
        ))
    }

    /// Log of the full conditional of `L_i(m)` at `u`, up to a constant.
    #[inline]
    fn site_log_density(
        &self,
        ens: &DiscreteLineEnsemble,
        i: usize,
        m: i64,
        u: f64,
        g: &impl Fn(f64) -> f64,
    ) -> f64 {
        let s = &self.spec;
        let left = ens.at(i, m - 1);
        let right = ens.at(i, m + 1);
        let above = s.value(ens, i - 1, m - 1);
        let below = s.value(ens, i + 1, m + 1);
        g(u - left) + g(right - u)
            - s.interaction.bond(m - 1).eval(u - above)
            - s.interaction.bond(m).eval(below - u)
    }

    /// One systematic scan over interior sites, curve by curve.
    pub fn mcmc_sweep<R: Rng + ?Sized>(
        &self,
        ens: &mut DiscreteLineEnsemble,
        rng: &mut R,
    ) -> Result<()> {
        self.spec.check_ensemble(ens)?;
        let s = &self.spec;
        let g = s.hrw.log_density_fn();
        let (glo, ghi) = s.hrw.support();
        let params = *self.bridges.params();
        for i in s.k1..=s.k2 {
            for m in s.a + 1..s.b {
                let left = ens.at(i, m - 1);
                let right = ens.at(i, m + 1);
                let lo = (left + glo).max(right - ghi);
                let hi = (left + ghi).min(right - glo);
                let u: f64 = rng.random();
                let v = sample_log_density(
                    |x| self.site_log_density(ens, i, m, x, &g),
                    lo,
                    hi,
                    u,
                    &params,
                )?;
                *ens.at_mut(i, m) = v;
            }
        }
        Ok(())
    }

    /// Single-site Gibbs chain started from linear interpolation of the endpoints.
    pub fn sample_mcmc<R: Rng + ?Sized>(
        &self,
        sweeps: usize,
        rng: &mut R,
    ) -> Result<DiscreteLineEnsemble> {
        if sweeps == 0 {
            return Err(domain!("MCMC needs at least one sweep"));
        }
        let s = &self.spec;
        let len = s.len() as f64;
        let rows: Vec<Vec<f64>> = (0..s.num_curves())
            .map(|c| {
                let mut r: Vec<f64> = (0..=s.len())
                    .map(|m| s.x[c] + (s.y[c] - s.x[c]) * m as f64 / len)
                    .collect();
                r[s.len()] = s.y[c];
                r
            })
            .collect();
        let mut ens = DiscreteLineEnsemble::from_rows(s.k1, s.a, &rows)?;
        for _ in 0..sweeps {
            self.mcmc_sweep(&mut ens, rng)?;
        }
        Ok(ens)
    }
}

/// Monte Carlo acceptance probability (see [`GibbsSampler::acceptance_probability`]).
pub fn acceptance_probability<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    n_mc: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    GibbsSampler::new(spec.clone())?.acceptance_probability(n_mc, rng)
}

/// Exact rejection draw (see [`GibbsSampler::sample_rejection`]).
pub fn sample_ensemble_rejection<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    rng: &mut R,
) -> Result<RejectionDraw> {
    GibbsSampler::new(spec.clone())?.sample_rejection(rng)
}

/// Single-site Gibbs draw (see [`GibbsSampler::sample_mcmc`]).
pub fn sample_ensemble_mcmc<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    sweeps: usize,
    rng: &mut R,
) -> Result<DiscreteLineEnsemble> {
    GibbsSampler::new(spec.clone())?.sample_mcmc(sweeps, rng)
}

/// Which Gibbs property a resampling check exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GibbsMode {
    /// Sub-boxes avoid the bottom curve `k2`, which plays the role of `g`.
    Partial,
    /// Any sub-box of curves `k1..=k2`.
    Full,
}

/// Curves `i1..=i2` over times `s..=t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubBox {
    pub i1: usize,
    pub i2: usize,
    pub s: i64,
    pub t: i64,
}

impl SubBox {
    /// Interior probe times: quartiles of `(s, t)`, deduplicated.
    pub fn probe_times(&self) -> Vec<i64> {
        let span = self.t - self.s;
        let mut v: Vec<i64> = [1, 2, 3]
            .iter()
            .map(|q| self.s + (q * span / 4).clamp(1, span - 1))
            .collect();
        v.dedup();
        v
    }
}

/// Gibbs spec of the sub-box given the rest of `ens`.
fn sub_spec(spec: &EnsembleSpec, ens: &DiscreteLineEnsemble, bx: &SubBox) -> Result<EnsembleSpec> {
    let x = (bx.i1..=bx.i2).map(|i| ens.at(i, bx.s)).collect();
    let y = (bx.i1..=bx.i2).map(|i| ens.at(i, bx.t)).collect();
    let f = (bx.s..=bx.t)
        .map(|m| spec.value(ens, bx.i1 - 1, m))
        .collect();
    let g = (bx.s..=bx.t)
        .map(|m| spec.value(ens, bx.i2 + 1, m))
        .collect();
    let bonds = (bx.s..bx.t)
        .map(|m| spec.interaction.bond(m).clone())
        .collect();
    EnsembleSpec::new(
        bx.i1,
        bx.i2,
        bx.s,
        bx.t,
        x,
        y,
        f,
        g,
        spec.hrw.clone(),
        InteractionSpec::per_bond(bx.s, bonds)?,
    )
}

/// Samples the ensemble exactly, resamples the sub-box from its conditional
/// law given everything outside it, and compares the probe marginals
/// (curve `i1` at interior times of the box) before and after. Each probe
/// yields a two-sample KS distance and the 1% critical value.
pub fn gibbs_invariance_check<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    bx: SubBox,
    mode: GibbsMode,
    n_samples: usize,
    rng: &mut R,
) -> Result<StatReport> {
    spec.validate()?;
    let last_row = match mode {
        GibbsMode::Partial => spec.k2.checked_sub(1).filter(|&r| r >= spec.k1),
        GibbsMode::Full => Some(spec.k2),
    };
    let last_row =
        last_row.ok_or_else(|| domain!("no curves available for a partial Gibbs sub-box"))?;
    if bx.i1 < spec.k1 || bx.i2 < bx.i1 || bx.i2 > last_row {
        return Err(domain!(
            "sub-box curves {}..={} must lie in {}..={} for the {:?} property",
            bx.i1,
            bx.i2,
            spec.k1,
            last_row,
            mode
        ));
    }
    if bx.s < spec.a || bx.t > spec.b || bx.t - bx.s < 2 {
        return Err(domain!(
            "sub-box times {}..={} must lie in {}..={} with an interior point",
            bx.s,
            bx.t,
            spec.a,
            spec.b
        ));
    }
    if n_samples < 2 {
        return Err(domain!("invariance check needs at least two samples"));
    }
    let outer = GibbsSampler::new(spec.clone())?;
    let probes = bx.probe_times();
    let mut pre: Vec<Vec<f64>> = vec![Vec::with_capacity(n_samples); probes.len()];
    let mut post = pre.clone();
    let mut attempts = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let draw = outer.sample_rejection(rng)?;
        let mut ens = draw.ensemble;
        for (p, &t) in probes.iter().enumerate() {
            pre[p].push(ens.at(bx.i1, t));
        }
        let inner =
            GibbsSampler::with_bridges(sub_spec(spec, &ens, &bx)?, outer.bridges().clone())?;
        let redraw = inner.sample_rejection(rng)?;
        attempts.push(redraw.attempts as f64);
        for i in bx.i1..=bx.i2 {
            for m in bx.s..=bx.t {
                *ens.at_mut(i, m) = redraw.ensemble.at(i, m);
            }
        }
        for (p, &t) in probes.iter().enumerate() {
            post[p].push(ens.at(bx.i1, t));
        }
    }
    let mut report = StatReport::new("gibbs_invariance");
    let crit = ks_critical_value(n_samples, n_samples, 0.01);
    report.push("ks_critical_1pct", crit, 0.0);
    let mut worst = 0.0_f64;
    for (p, &t) in probes.iter().enumerate() {
        let d = ks_distance(
            &EmpiricalCdf::new(pre[p].clone())?,
            &EmpiricalCdf::new(post[p].clone())?,
        );
        worst = worst.max(d);
        report.push(&alloc::format!("ks_curve{}_t{}", bx.i1, t), d, 0.0);
    }
    report.push("ks_max", worst, 0.0);
    let (m, se) = math::mean_and_std_error(&attempts);
    report.push("resample_attempts", m, se);
    report.push(
        "rejected_at_1pct",
        if worst > crit { 1.0 } else { 0.0 },
        0.0,
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;
    use crate::special::Theta;

    fn lg() -> HrwSpec {
        HrwSpec::log_gamma(Theta::new(1.0).unwrap())
    }

    #[test]
    fn exp_and_zero_hamiltonians() {
        assert_eq!(Hamiltonian::Exp.eval(f64::NEG_INFINITY), 0.0);
        assert_eq!(Hamiltonian::Exp.eval(0.0), 1.0);
        assert_eq!(Hamiltonian::Zero.eval(5.0), 0.0);
    }

    #[test]
    fn convex_table_validation_and_eval() {
        let t = ConvexTable::new(0.0, 1.0, vec![0.0, 1.0, 3.0]).unwrap();
        let h = Hamiltonian::Tabulated { table: t };
        assert_eq!(h.eval(-4.0), 0.0);
        assert_eq!(h.eval(0.5), 0.5);
        assert_eq!(h.eval(1.5), 2.0);
        assert_eq!(h.eval(3.0), 5.0);
        assert!(ConvexTable::new(0.0, 1.0, vec![0.0, 2.0, 3.0]).is_err());
        assert!(ConvexTable::new(0.0, 1.0, vec![1.0, 2.0]).is_err());
        assert!(ConvexTable::new(0.0, 1.0, vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn single_bond_weight_fixture() {
        // k = 1, a = 0, b = 1, f = +inf: only the bond to g contributes
        let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, 1).unwrap();
        let spec = EnsembleSpec::new(
            1,
            1,
            0,
            1,
            vec![0.5],
            vec![1.0],
            vec![f64::INFINITY; 2],
            vec![-0.2, 0.3],
            lg(),
            inter,
        )
        .unwrap();
        let e = DiscreteLineEnsemble::from_rows(1, 0, &[vec![0.5, 1.0]]).unwrap();
        let w = boltzmann_weight(&spec, &e).unwrap();
        assert!((w - math::exp(-math::exp(0.3 - 0.5))).abs() < 1e-15);
    }

    #[test]
    fn unbounded_weight_counts_interior_pairs_only() {
        let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, 2).unwrap();
        let spec =
            EnsembleSpec::unbounded(1, 0, 2, vec![1.0, 0.0], vec![1.0, 0.0], lg(), inter).unwrap();
        let e = DiscreteLineEnsemble::from_rows(1, 0, &[vec![1.0, 2.0, 1.0], vec![0.0, -1.0, 0.0]])
            .unwrap();
        let expect = 2.0 * math::exp(-2.0);
        assert!((interaction_energy(&spec, &e).unwrap() - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_interaction_accepts_first_draw() {
        let inter = InteractionSpec::uniform(Hamiltonian::Zero, 0, 5).unwrap();
        let spec = EnsembleSpec::unbounded(1, 0, 5, vec![0.0, -1.0], vec![1.0, -2.0], lg(), inter)
            .unwrap();
        let s = GibbsSampler::new(spec).unwrap();
        let mut rng = rng_for(5, 0);
        assert_eq!(s.acceptance_probability(100, &mut rng).unwrap(), (1.0, 0.0));
        for _ in 0..10 {
            assert_eq!(s.sample_rejection(&mut rng).unwrap().attempts, 1);
        }
    }

    #[test]
    fn shape_errors() {
        let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, 3).unwrap();
        assert!(
            EnsembleSpec::unbounded(1, 0, 3, vec![0.0], vec![0.0, 1.0], lg(), inter.clone())
                .is_err()
        );
        assert!(
            EnsembleSpec::unbounded(1, 0, 4, vec![0.0], vec![0.0], lg(), inter.clone()).is_err()
        );
        let spec = EnsembleSpec::unbounded(1, 0, 3, vec![0.0], vec![0.0], lg(), inter).unwrap();
        let e = DiscreteLineEnsemble::zeros(2, 0, 3).unwrap();
        assert!(boltzmann_weight(&spec, &e).is_err());
    }

    #[test]
    fn partial_box_must_avoid_bottom_curve() {
        let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, 4).unwrap();
        let spec = EnsembleSpec::unbounded(1, 0, 4, vec![0.0, -2.0], vec![0.0, -2.0], lg(), inter)
            .unwrap();
        let mut rng = rng_for(6, 0);
        let bx = SubBox {
            i1: 2,
            i2: 2,
            s: 0,
            t: 4,
        };
        assert!(gibbs_invariance_check(&spec, bx, GibbsMode::Partial, 10, &mut rng).is_err());
        assert!(gibbs_invariance_check(&spec, bx, GibbsMode::Full, 10, &mut rng).is_ok());
    }

    #[test]
    fn probe_times_are_interior() {
        assert_eq!(
            SubBox {
                i1: 1,
                i2: 1,
                s: 0,
                t: 2
            }
            .probe_times(),
            vec![1]
        );
        assert_eq!(
            SubBox {
                i1: 1,
                i2: 1,
                s: 2,
                t: 10
            }
            .probe_times(),
            vec![4, 6, 8]
        );
    }
}
