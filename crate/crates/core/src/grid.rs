//! Tabulated densities on uniform grids, trapezoid CDFs and grid inverse-CDF
//! sampling.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, internal, precision, Result};
use crate::fft;
use crate::math;

/// A nonnegative function tabulated at `m` equally spaced points of `[lo, hi]`.
/// The represented value at point `i` is `values[i] * exp(log_scale)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
    log_scale: f64,
}

impl GridDensity {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>, log_scale: f64) -> Result<Self> {
        if values.len() < 2 {
            return Err(domain!("a grid density needs at least two points"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(domain!("bad grid interval [{lo}, {hi}]"));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(domain!("grid values must be finite and nonnegative"));
        }
        if !log_scale.is_finite() {
            return Err(domain!("log scale must be finite"));
        }
        Ok(Self {
            lo,
            hi,
            values,
            log_scale,
        })
    }

    /// Tabulates `exp(log_f)` at `m` points, factoring out the maximum.
    pub fn from_log_fn(lo: f64, hi: f64, m: usize, log_f: impl Fn(f64) -> f64) -> Result<Self> {
        if m < 2 {
            return Err(domain!("a grid density needs at least two points"));
        }
        let logs: Vec<f64> = math::linspace(lo, hi, m).map(&log_f).collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(precision!(
                "density is zero or infinite everywhere on [{lo}, {hi}]"
            ));
        }
        let values = logs.iter().map(|&l| math::exp(l - max)).collect();
        Self::new(lo, hi, values, max)
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
    pub fn m(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.m() - 1) as f64
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.m() {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    /// Trapezoid integral of the stored values (without the scale factor).
    fn raw_mass(&self) -> f64 {
        let v = &self.values;
        let mut s = math::NeumaierSum::default();
        s.add(0.5 * (v[0] + v[v.len() - 1]));
        v[1..v.len() - 1].iter().for_each(|&x| s.add(x));
        s.total() * self.spacing()
    }

    /// `ln` of the trapezoid integral.
    pub fn log_mass(&self) -> f64 {
        math::ln(self.raw_mass()) + self.log_scale
    }

    /// Trapezoid integral.
    pub fn mass(&self) -> f64 {
        math::exp(self.log_mass())
    }

    /// Rescaled copy with unit trapezoid mass.
    pub fn normalized(&self) -> Result<Self> {
        let raw = self.raw_mass();
        if !(raw > 0.0) {
            return Err(precision!("cannot normalize a density with zero mass"));
        }
        let values = self.values.iter().map(|v| v / raw).collect();
        Ok(Self {
            lo: self.lo,
            hi: self.hi,
            values,
            log_scale: 0.0,
        })
    }

    /// Linear interpolation of the represented function; zero outside `[lo, hi]`.
    pub fn eval(&self, x: f64) -> f64 {
        let l = self.log_eval(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            math::exp(l)
        }
    }

    /// `ln` of [`eval`](Self::eval); `-inf` outside the grid or where the table is zero.
    pub fn log_eval(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        let t = (x - self.lo) / self.spacing();
        let i = (math::floor(t) as usize).min(self.m() - 2);
        let f = t - i as f64;
        let v = self.values[i] + f * (self.values[i + 1] - self.values[i]);
        if v > 0.0 {
            math::ln(v) + self.log_scale
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Mean under the normalized density.
    pub fn mean(&self) -> f64 {
        let raw = self.raw_mass();
        let h = self.spacing();
        let m = self.m();
        let mut s = math::NeumaierSum::default();
        for i in 0..m {
            let w = if i == 0 || i + 1 == m { 0.5 } else { 1.0 };
            s.add(w * self.values[i] * self.point(i));
        }
        s.total() * h / raw
    }

    /// Variance under the normalized density.
    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let raw = self.raw_mass();
        let h = self.spacing();
        let m = self.m();
        let mut s = math::NeumaierSum::default();
        for i in 0..m {
            let w = if i == 0 || i + 1 == m { 0.5 } else { 1.0 };
            let d = self.point(i) - mu;
            s.add(w * self.values[i] * d * d);
        }
        s.total() * h / raw
    }

    /// Linear convolution with a density on the same spacing (FFT based).
    pub fn convolve(&self, other: &Self) -> Result<Self> {
        let (h1, h2) = (self.spacing(), other.spacing());
        if (h1 - h2).abs() > 1e-9 * h1 {
            return Err(domain!(
                "convolution needs equal spacings, got {h1} and {h2}"
            ));
        }
        let mut c = fft::convolve(&self.values, &other.values);
        // roundoff of the transform leaves noise near 1e-16 of the peak
        let max = c.iter().copied().fold(0.0_f64, f64::max);
        let floor = CONVOLUTION_FLOOR * max;
        c.iter_mut().for_each(|v| {
            if *v < floor {
                *v = 0.0
            }
        });
        let m = c.len();
        let lo = self.lo + other.lo;
        let hi = lo + (m - 1) as f64 * h1;
        Self::new(lo, hi, c, self.log_scale + other.log_scale + math::ln(h1)).map(|g| g.rescaled())
    }

    /// Drops leading and trailing points whose value is zero.
    pub fn trimmed(&self) -> Self {
        let first = self.values.iter().position(|&v| v > 0.0).unwrap_or(0);
        let last = self
            .values
            .iter()
            .rposition(|&v| v > 0.0)
            .unwrap_or(self.m() - 1);
        let (first, last) = if last <= first {
            (first.saturating_sub(1), first + 1)
        } else {
            (first, last)
        };
        let last = last.min(self.m() - 1);
        let h = self.spacing();
        Self {
            lo: self.lo + first as f64 * h,
            hi: self.lo + last as f64 * h,
            values: self.values[first..=last].to_vec(),
            log_scale: self.log_scale,
        }
    }

    /// Moves the peak value into `log_scale` so `max(values) = 1`.
    fn rescaled(mut self) -> Self {
        let max = self.values.iter().copied().fold(0.0_f64, f64::max);
        if max > 0.0 {
            self.values.iter_mut().for_each(|v| *v /= max);
            self.log_scale += math::ln(max);
        }
        self
    }

    /// Normalized trapezoid CDF of this density.
    pub fn cdf(&self) -> Result<GridCdf> {
        GridCdf::from_values(self.lo, self.spacing(), &self.values)
    }
}

/// Relative level below which FFT convolution output is treated as zero.
pub const CONVOLUTION_FLOOR: f64 = 1e-13;

/// Cumulative trapezoid CDF on a uniform grid, normalized to end at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCdf {
    lo: f64,
    h: f64,
    cum: Vec<f64>,
}

impl GridCdf {
    pub fn from_values(lo: f64, h: f64, values: &[f64]) -> Result<Self> {
        if values.iter().any(|&v| v < 0.0 || v.is_nan()) {
            return Err(internal!(
                "negative density entries make the CDF non-monotone"
            ));
        }
        let mut cum = vec![0.0; values.len()];
        let mut acc = math::NeumaierSum::default();
        for i in 1..values.len() {
            acc.add(0.5 * (values[i - 1] + values[i]));
            cum[i] = acc.total();
        }
        let total = cum[cum.len() - 1];
        if !(total > 0.0 && total.is_finite()) {
            return Err(precision!("density has no mass on the grid"));
        }
        cum.iter_mut().for_each(|c| *c /= total);
        let n = cum.len();
        cum[n - 1] = 1.0;
        Ok(Self { lo, h, cum })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.lo + (self.cum.len() - 1) as f64 * self.h
    }

    pub fn table(&self) -> &[f64] {
        &self.cum
    }

    /// `F(s)`, linear between grid points, 0 / 1 outside.
    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.lo {
            return 0.0;
        }
        let t = (s - self.lo) / self.h;
        let n = self.cum.len();
        if t >= (n - 1) as f64 {
            return 1.0;
        }
        let i = math::floor(t) as usize;
        let f = t - i as f64;
        self.cum[i] + f * (self.cum[i + 1] - self.cum[i])
    }

    /// Smallest `s` with `F(s) = u` under linear interpolation.
    pub fn inverse(&self, u: f64) -> f64 {
        inverse_linear(&self.cum, self.lo, self.h, u)
    }
}

/// Inverts a nondecreasing table `cum` (from 0 to 1) sampled at `lo + i h`.
pub(crate) fn inverse_linear(cum: &[f64], lo: f64, h: f64, u: f64) -> f64 {
    let n = cum.len();
    // first index with cum[i] >= u
    let i = cum.partition_point(|&c| c < u);
    if i == 0 {
        return lo;
    }
    if i >= n {
        return lo + (n - 1) as f64 * h;
    }
    let (a, b) = (cum[i - 1], cum[i]);
    let f = if b > a { (u - a) / (b - a) } else { 0.0 };
    lo + ((i - 1) as f64 + f) * h
}

/// Resolution of the adaptive grid inverse-CDF sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Points of the scan that locates the bulk of the density.
    pub coarse: usize,
    /// Points of the grid on which the CDF is built and inverted.
    pub fine: usize,
    /// Log-density drop below the peak that is treated as zero mass.
    pub log_cut: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self {
            coarse: 128,
            fine: 256,
            log_cut: 36.0,
        }
    }
}

/// Draws from the density `exp(log_f)` restricted to `[lo, hi]` by inverting
/// its trapezoid CDF at `u`. The CDF is built on a fine grid covering only the
/// part of `[lo, hi]` where `log_f` is within `log_cut` of its maximum.
pub fn sample_log_density(
    log_f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    u: f64,
    p: &GridParams,
) -> Result<f64> {
    if !(lo < hi) {
        return Err(precision!(
            "empty support [{lo}, {hi}] for a conditional density"
        ));
    }
    let nc = p.coarse.max(3);
    let hc = (hi - lo) / (nc - 1) as f64;
    let mut coarse = Vec::with_capacity(nc);
    let mut max = f64::NEG_INFINITY;
    for i in 0..nc {
        let l = log_f(lo + i as f64 * hc);
        max = max.max(l);
        coarse.push(l);
    }
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(precision!("conditional density vanishes on [{lo}, {hi}]"));
    }
    let thr = max - p.log_cut;
    let first = coarse.iter().position(|&l| l > thr).unwrap_or(0);
    let last = coarse.iter().rposition(|&l| l > thr).unwrap_or(nc - 1);
    let a = lo + first.saturating_sub(1) as f64 * hc;
    let b = (lo + (last + 1).min(nc - 1) as f64 * hc).min(hi);
    let nf = p.fine.max(3);
    let hf = (b - a) / (nf - 1) as f64;
    let mut logs = Vec::with_capacity(nf);
    let mut fmax = f64::NEG_INFINITY;
    for i in 0..nf {
        let l = log_f(a + i as f64 * hf);
        fmax = fmax.max(l);
        logs.push(l);
    }
    let mut cum = Vec::with_capacity(nf);
    cum.push(0.0);
    let mut acc = 0.0;
    let mut prev = math::exp(logs[0] - fmax);
    for &l in &logs[1..] {
        let w = math::exp(l - fmax);
        acc += 0.5 * (prev + w);
        cum.push(acc);
        prev = w;
    }
    if !(acc > 0.0 && acc.is_finite()) {
        return Err(precision!(
            "conditional density has no mass on the sampling grid"
        ));
    }
    cum.iter_mut().for_each(|c| *c /= acc);
    Ok(inverse_linear(&cum, a, hf, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(lo: f64, hi: f64, m: usize, mu: f64, sd: f64) -> GridDensity {
        GridDensity::from_log_fn(lo, hi, m, |x| {
            let z = (x - mu) / sd;
            -0.5 * z * z - math::ln(sd * math::sqrt(2.0 * math::PI))
        })
        .unwrap()
    }

    #[test]
    fn gaussian_moments_and_mass() {
        let g = gaussian(-12.0, 12.0, 4097, 0.5, 1.5);
        assert!((g.mass() - 1.0).abs() < 1e-9);
        assert!((g.mean() - 0.5).abs() < 1e-9);
        assert!((g.variance() - 2.25).abs() < 1e-6);
        assert!((g.eval(0.5) - 1.0 / (1.5 * math::sqrt(2.0 * math::PI))).abs() < 1e-5);
        assert_eq!(g.eval(20.0), 0.0);
    }

    #[test]
    fn convolution_adds_means_and_variances() {
        let a = gaussian(-10.0, 10.0, 2001, 1.0, 1.0);
        let b = gaussian(-15.0, 15.0, 3001, -2.0, 2.0);
        let c = a.convolve(&b).unwrap();
        assert!((c.mass() - 1.0).abs() < 1e-6);
        assert!((c.mean() + 1.0).abs() < 1e-6);
        assert!((c.variance() - 5.0).abs() < 1e-4);
    }

    #[test]
    fn cdf_and_inverse() {
        let g = gaussian(-8.0, 8.0, 1025, 0.0, 1.0);
        let f = g.cdf().unwrap();
        assert!((f.eval(0.0) - 0.5).abs() < 1e-6);
        assert!(f.eval(-8.0) <= 1e-10);
        assert!(f.eval(8.0) >= 1.0 - 1e-10);
        for &u in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((f.eval(f.inverse(u)) - u).abs() < 1e-12);
        }
        let median = f.inverse(0.5);
        assert!((f.eval(median) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_entries_rejected() {
        assert!(GridCdf::from_values(0.0, 1.0, &[0.0, -1.0, 1.0]).is_err());
        assert!(GridCdf::from_values(0.0, 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn adaptive_sampler_quantiles() {
        // exponential density restricted to [0, 50]
        let p = GridParams::default();
        for &u in &[0.1, 0.5, 0.9] {
            let x = sample_log_density(|x| -x, 0.0, 50.0, u, &p).unwrap();
            let exact = -math::ln(1.0 - u);
            assert!((x - exact).abs() < 2e-3, "u = {u}: {x} vs {exact}");
        }
        assert!(sample_log_density(|_| f64::NEG_INFINITY, 0.0, 1.0, 0.5, &p).is_err());
        assert!(sample_log_density(|x| x, 1.0, 1.0, 0.5, &p).is_err());
    }

    #[test]
    fn adaptive_sampler_is_monotone_in_u() {
        let p = GridParams::default();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let x = sample_log_density(|x| -x * x, -30.0, 30.0, i as f64 / 100.0, &p).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn trimming_keeps_support() {
        let g = GridDensity::new(0.0, 4.0, vec![0.0, 0.0, 1.0, 2.0, 0.0], 0.0).unwrap();
        let t = g.trimmed();
        assert_eq!(t.m(), 2);
        assert_eq!(t.lo(), 2.0);
        assert_eq!(t.hi(), 3.0);
    }
}
