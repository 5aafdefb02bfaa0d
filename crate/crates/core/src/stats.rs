//! KPZ rescaling and empirical diagnostics: the Tracy-Widom statistic,
//! moduli of continuity, window extrema, gap/acceptance diagnostics, a GUE
//! largest-eigenvalue oracle, KS distances and parabola fits.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bridge::HrwSpec;
use crate::error::{domain, internal, Result};
use crate::gibbs::{EnsembleSpec, GibbsSampler, Hamiltonian, InteractionSpec};
use crate::lines::DiscreteLineEnsemble;
use crate::math;
use crate::special::{ScalingConstants, Theta};

/// Sorted samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain!("an empirical CDF needs at least one sample"));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(domain!("samples contain NaN"));
        }
        samples.sort_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Fraction of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    /// Compensated mean and its standard error.
    pub fn mean(&self) -> (f64, f64) {
        math::mean_and_std_error(&self.sorted)
    }
}

/// `sup_x |F_a(x) - F_b(x)|`, exact over the merged samples.
pub fn ks_distance(a: &EmpiricalCdf, b: &EmpiricalCdf) -> f64 {
    let (xa, xb) = (&a.sorted, &b.sorted);
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0_f64;
    while i < xa.len() && j < xb.len() {
        let x = if xa[i] <= xb[j] { xa[i] } else { xb[j] };
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while j < xb.len() && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // once one side is exhausted the gap can only shrink
    d
}

/// Asymptotic two-sample KS critical value `sqrt(-ln(alpha/2) / 2) sqrt((n+m)/(nm))`.
pub fn ks_critical_value(n: usize, m: usize, alpha: f64) -> f64 {
    let c = math::sqrt(-0.5 * math::ln(0.5 * alpha));
    c * math::sqrt((n + m) as f64 / (n as f64 * m as f64))
}

/// A named statistic with its standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatEntry {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
}

/// Named statistics with Monte Carlo error bars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub entries: Vec<StatEntry>,
}

impl StatReport {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, name: &str, estimate: f64, std_error: f64) {
        self.entries.push(StatEntry {
            name: name.to_string(),
            estimate,
            std_error: std_error.abs(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&StatEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.get(name).map(|e| e.estimate)
    }
}

/// `f_i(s) = sigma_p^-1 N^{-alpha/2} (L_i(s N^alpha) - p s N^alpha)` on
/// `[-psi(N), psi(N)]`, extended by constants outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledEnsemble {
    pub n: usize,
    pub constants: ScalingConstants,
    /// Scaled times: lattice times inside the window plus the two window ends.
    pub times: Vec<f64>,
    /// `values[i][t]` for curve `first_curve + i`.
    pub values: Vec<Vec<f64>>,
    pub first_curve: usize,
}

impl ScaledEnsemble {
    pub fn window(&self) -> f64 {
        self.constants.window(self.n)
    }

    /// `f_i(s)` with linear interpolation and constant extension.
    pub fn eval(&self, i: usize, s: f64) -> Result<f64> {
        let row = i
            .checked_sub(self.first_curve)
            .and_then(|r| self.values.get(r))
            .ok_or_else(|| domain!("curve {i} not in the scaled ensemble"))?;
        let t = &self.times;
        let s = s.clamp(t[0], t[t.len() - 1]);
        let k = t.partition_point(|&x| x <= s).clamp(1, t.len() - 1);
        let (t0, t1) = (t[k - 1], t[k]);
        let f = if t1 > t0 { (s - t0) / (t1 - t0) } else { 0.0 };
        Ok(row[k - 1] + f * (row[k] - row[k - 1]))
    }

    /// `L_i(x) = sigma_p N^{alpha/2} f_i(x / N^alpha) + p x` at a lattice time `x`.
    pub fn unscale(&self, i: usize, x: i64) -> Result<f64> {
        let c = &self.constants;
        let na = math::powf(self.n as f64, c.alpha);
        let f = self.eval(i, x as f64 / na)?;
        Ok(c.sigma_p * math::powf(self.n as f64, 0.5 * c.alpha) * f + c.p * x as f64)
    }
}

/// KPZ rescaling of an ensemble covering `[-N, N]`.
pub fn kpz_scale(
    ens: &DiscreteLineEnsemble,
    c: &ScalingConstants,
    n: usize,
) -> Result<ScaledEnsemble> {
    if n == 0 || ens.t0() > -(n as i64) || ens.t1() < n as i64 {
        return Err(domain!("ensemble must cover [-N, N] for N = {n}"));
    }
    let nf = n as f64;
    let na = math::powf(nf, c.alpha);
    let psi = c.window(n);
    let xmax = psi * na;
    let mut xs = vec![-xmax];
    let j0 = math::ceil(-xmax) as i64;
    let j1 = math::floor(xmax) as i64;
    for j in j0..=j1 {
        let x = j as f64;
        if x > -xmax && x < xmax {
            xs.push(x);
        }
    }
    xs.push(xmax);
    let scale = 1.0 / (c.sigma_p * math::powf(nf, 0.5 * c.alpha));
    let mut values = Vec::with_capacity(ens.num_curves());
    for i in ens.first_curve()..ens.first_curve() + ens.num_curves() {
        let row = xs
            .iter()
            .map(|&x| {
                let x = x.clamp(ens.t0() as f64, ens.t1() as f64);
                Ok(scale * (ens.eval(i, x)? - c.p * x))
            })
            .collect::<Result<Vec<f64>>>()?;
        values.push(row);
    }
    Ok(ScaledEnsemble {
        n,
        constants: *c,
        times: xs.iter().map(|x| x / na).collect(),
        values,
        first_curve: ens.first_curve(),
    })
}

/// `(L_1(floor(n N^{2/3})) + h'(1) n N^{2/3} + lambda n^2 N^{1/3}) / ((2N)^{1/3} d_theta(1))`.
pub fn tw_statistic(
    ens: &DiscreteLineEnsemble,
    c: &ScalingConstants,
    n_big: usize,
    n: i64,
) -> Result<f64> {
    let nf = n_big as f64;
    let x = n as f64 * math::powf(nf, 2.0 / 3.0);
    let j = math::floor(x + 1e-9 * (1.0 + x.abs())) as i64;
    if j < ens.t0() || j > ens.t1() {
        return Err(domain!(
            "time floor({n} N^(2/3)) = {j} is outside the ensemble"
        ));
    }
    let top = ens.at(ens.first_curve(), j);
    let h_prime = -c.p;
    Ok(
        (top + h_prime * x + c.lambda * (n * n) as f64 * math::cbrt(nf))
            / (math::cbrt(2.0 * nf) * c.d_theta_1),
    )
}

/// `N^{-alpha/2} (L_1(n N^alpha) - p n N^alpha)`, interpolating between lattice times.
pub fn top_curve_profile(
    ens: &DiscreteLineEnsemble,
    c: &ScalingConstants,
    n_big: usize,
    n: f64,
) -> Result<f64> {
    let nf = n_big as f64;
    let x = n * math::powf(nf, c.alpha);
    Ok((ens.eval(ens.first_curve(), x)? - c.p * x) / math::powf(nf, 0.5 * c.alpha))
}

/// `sup |f(x) - f(y)|` over grid pairs with `|x - y| <= delta`.
pub fn modulus_of_continuity(times: &[f64], values: &[f64], delta: f64) -> Result<f64> {
    if times.len() != values.len() || times.is_empty() {
        return Err(domain!(
            "times and values must be nonempty and of equal length"
        ));
    }
    let span = times[times.len() - 1] - times[0];
    if !(delta > 0.0) || delta > span * (1.0 + 1e-12) {
        return Err(domain!("delta must lie in (0, {span}]"));
    }
    let tol = 1e-12 * span.max(1.0);
    let mut w = 0.0_f64;
    for i in 0..times.len() {
        for j in i + 1..times.len() {
            if times[j] - times[i] > delta + tol {
                break;
            }
            w = w.max((values[j] - values[i]).abs());
        }
    }
    Ok(w)
}

/// `(sup, inf)` of `L_k(x) - p x` over `[-r N^alpha, r N^alpha]`; the
/// interpolated curve is piecewise linear so extrema sit at lattice times or
/// the window ends.
pub fn window_extrema(
    ens: &DiscreteLineEnsemble,
    c: &ScalingConstants,
    n: usize,
    r: f64,
    k: usize,
) -> Result<(f64, f64)> {
    let half = r * math::powf(n as f64, c.alpha);
    if !(r > 0.0) || -half < ens.t0() as f64 || half > ens.t1() as f64 {
        return Err(domain!(
            "window [-{half}, {half}] exceeds the ensemble times [{}, {}]",
            ens.t0(),
            ens.t1()
        ));
    }
    let mut pts = vec![-half, half];
    let mut j = math::ceil(-half) as i64;
    while (j as f64) <= half {
        pts.push(j as f64);
        j += 1;
    }
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for x in pts {
        let v = ens.eval(k, x)? - c.p * x;
        sup = sup.max(v);
        inf = inf.min(v);
    }
    Ok((sup, inf))
}

/// Separation of curves `1..=k` at `s^± = floor(±r N^alpha)` and the Monte
/// Carlo acceptance probability of curves `1..=k` on `[s^-, s^+]` with
/// `f = +inf` and `g = L_{k+1}`.
#[allow(clippy::too_many_arguments)]
pub fn gap_and_acceptance_diagnostics<R: Rng + ?Sized>(
    ens: &DiscreteLineEnsemble,
    c: &ScalingConstants,
    n: usize,
    r: f64,
    k: usize,
    hrw: &HrwSpec,
    interaction: &Hamiltonian,
    n_mc: usize,
    rng: &mut R,
) -> Result<StatReport> {
    if ens.first_curve() != 1 || ens.num_curves() < k + 1 || k == 0 {
        return Err(domain!(
            "need curves 1..={} in the ensemble, have {}",
            k + 1,
            ens.num_curves()
        ));
    }
    let na = math::powf(n as f64, c.alpha);
    let s_minus = math::floor(-r * na) as i64;
    let s_plus = math::floor(r * na) as i64;
    if s_minus < ens.t0() || s_plus > ens.t1() || s_minus >= s_plus {
        return Err(domain!(
            "times {s_minus}..={s_plus} are not inside the ensemble"
        ));
    }
    let mut gap = f64::INFINITY;
    for &s in &[s_minus, s_plus] {
        for i in 1..k {
            gap = gap.min(ens.at(i, s) - ens.at(i + 1, s));
        }
    }
    let x = (1..=k).map(|i| ens.at(i, s_minus)).collect();
    let y = (1..=k).map(|i| ens.at(i, s_plus)).collect();
    let len = (s_plus - s_minus + 1) as usize;
    let g = (s_minus..=s_plus).map(|m| ens.at(k + 1, m)).collect();
    let spec = EnsembleSpec::new(
        1,
        k,
        s_minus,
        s_plus,
        x,
        y,
        vec![f64::INFINITY; len],
        g,
        hrw.clone(),
        InteractionSpec::uniform(interaction.clone(), s_minus, s_plus)?,
    )?;
    let (z, se) = GibbsSampler::new(spec)?.acceptance_probability(n_mc, rng)?;
    let mut report = StatReport::new("gap_and_acceptance");
    report.push("s_minus", s_minus as f64, 0.0);
    report.push("s_plus", s_plus as f64, 0.0);
    report.push("min_gap", gap, 0.0);
    report.push("acceptance", z, se);
    Ok(report)
}

/// How GUE largest eigenvalues are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GueMethod {
    /// Dense Hermitian matrix, Householder reduction, Sturm bisection.
    #[default]
    Dense,
    /// The tridiagonal matrix with the same spectrum law (chi-distributed
    /// off-diagonals), Sturm bisection.
    Tridiagonal,
}

/// Largest eigenvalue of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (`e.len() = d.len() - 1`), by Sturm-count bisection.
pub fn tridiagonal_max_eigenvalue(d: &[f64], e: &[f64]) -> Result<f64> {
    let n = d.len();
    if n == 0 || e.len() + 1 != n {
        return Err(domain!("tridiagonal shape mismatch"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(internal!("non-finite matrix entries"));
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    // number of eigenvalues strictly below x
    let below = |x: f64| {
        let mut count = 0;
        let mut q = d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let qq = if q == 0.0 { f64::EPSILON * scale } else { q };
            q = d[i] - x - e[i - 1] * e[i - 1] / qq;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if below(mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Householder reduction of a dense Hermitian matrix (row-major real and
/// imaginary parts, overwritten) to real tridiagonal form.
fn hermitian_to_tridiagonal(n: usize, re: &mut [f64], im: &mut [f64]) -> (Vec<f64>, Vec<f64>) {
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut vr = vec![0.0; n];
    let mut vi = vec![0.0; n];
    let mut pr = vec![0.0; n];
    let mut pi = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        // x = A[k+1.., k]
        let mut norm2 = 0.0;
        for r in k + 1..n {
            norm2 += re[r * n + k] * re[r * n + k] + im[r * n + k] * im[r * n + k];
        }
        let norm = math::sqrt(norm2);
        e[k] = norm;
        let (x0r, x0i) = (re[(k + 1) * n + k], im[(k + 1) * n + k]);
        let a0 = math::hypot(x0r, x0i);
        if norm == 0.0 || norm2 - a0 * a0 <= 1e-300 * norm2 {
            // already tridiagonal in this column; the phase is irrelevant to the spectrum
            continue;
        }
        let (ur, ui) = if a0 > 0.0 {
            (x0r / a0, x0i / a0)
        } else {
            (1.0, 0.0)
        };
        // v = x + e^{i phi} |x| e1, normalized; H x = -e^{i phi} |x| e1
        for r in k + 1..n {
            vr[r] = re[r * n + k];
            vi[r] = im[r * n + k];
        }
        vr[k + 1] += ur * norm;
        vi[k + 1] += ui * norm;
        let vn = math::sqrt(
            (k + 1..n)
                .map(|r| vr[r] * vr[r] + vi[r] * vi[r])
                .sum::<f64>(),
        );
        for r in k + 1..n {
            vr[r] /= vn;
            vi[r] /= vn;
        }
        // p = A v on the trailing block
        for r in k + 1..n {
            let (mut sr, mut si) = (0.0, 0.0);
            for c in k + 1..n {
                let (ar, ai) = (re[r * n + c], im[r * n + c]);
                sr += ar * vr[c] - ai * vi[c];
                si += ar * vi[c] + ai * vr[c];
            }
            pr[r] = sr;
            pi[r] = si;
        }
        // c = v* p (real), w = p - c v
        let mut cc = 0.0;
        for r in k + 1..n {
            cc += vr[r] * pr[r] + vi[r] * pi[r];
        }
        for r in k + 1..n {
            pr[r] -= cc * vr[r];
            pi[r] -= cc * vi[r];
        }
        // A <- A - 2 (v w* + w v*)
        for r in k + 1..n {
            for c in k + 1..n {
                let a_r = vr[r] * pr[c] + vi[r] * pi[c] + pr[r] * vr[c] + pi[r] * vi[c];
                let a_i = vi[r] * pr[c] - vr[r] * pi[c] + pi[r] * vr[c] - pr[r] * vi[c];
                re[r * n + c] -= 2.0 * a_r;
                im[r * n + c] -= 2.0 * a_i;
            }
        }
    }
    let d = (0..n).map(|i| re[i * n + i]).collect();
    (d, e)
}

/// `lambda_max` of one GUE matrix of size `m` (entries of unit variance).
pub fn gue_max_eigenvalue<R: Rng + ?Sized>(
    m: usize,
    method: GueMethod,
    rng: &mut R,
) -> Result<f64> {
    match method {
        GueMethod::Dense => {
            let mut re = vec![0.0; m * m];
            let mut im = vec![0.0; m * m];
            let s = math::sqrt(0.5);
            for r in 0..m {
                re[r * m + r] = StandardNormal.sample(rng);
                for c in r + 1..m {
                    let a: f64 = StandardNormal.sample(rng);
                    let b: f64 = StandardNormal.sample(rng);
                    re[r * m + c] = s * a;
                    im[r * m + c] = s * b;
                    re[c * m + r] = s * a;
                    im[c * m + r] = -s * b;
                }
            }
            let (d, e) = hermitian_to_tridiagonal(m, &mut re, &mut im);
            tridiagonal_max_eigenvalue(&d, &e)
        }
        GueMethod::Tridiagonal => {
            let d: Vec<f64> = (0..m).map(|_| StandardNormal.sample(rng)).collect();
            let e = (1..m)
                .map(|j| {
                    let g =
                        Gamma::new((m - j) as f64, 1.0).map_err(|e| internal!("gamma law: {e}"))?;
                    Ok(math::sqrt(g.sample(rng)))
                })
                .collect::<Result<Vec<f64>>>()?;
            tridiagonal_max_eigenvalue(&d, &e)
        }
    }
}

/// ECDF of `M^{1/6} (lambda_max - 2 sqrt(M))` over `n_samples` GUE matrices.
pub fn gue_tw_oracle<R: Rng + ?Sized>(
    m: usize,
    n_samples: usize,
    method: GueMethod,
    rng: &mut R,
) -> Result<EmpiricalCdf> {
    if m < 50 {
        return Err(domain!("GUE oracle needs M >= 50, got {m}"));
    }
    let mf = m as f64;
    let scale = math::powf(mf, 1.0 / 6.0);
    let mut v = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        v.push(scale * (gue_max_eigenvalue(m, method, rng)? - 2.0 * math::sqrt(mf)));
    }
    EmpiricalCdf::new(v)
}

/// Result of fitting `-lambda n^2 + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParabolaFit {
    pub lambda: f64,
    pub lambda_std_error: f64,
    pub intercept: f64,
    /// Weighted residual sum of squares.
    pub residual: f64,
}

/// Weighted least squares fit of `y_n ~ -lambda n^2 + c` with weights
/// `1 / se_n^2` (unit weights when `se` is empty or has a zero entry).
pub fn parabola_fit(n: &[f64], y: &[f64], se: &[f64]) -> Result<ParabolaFit> {
    if n.len() != y.len() || (!se.is_empty() && se.len() != n.len()) {
        return Err(domain!("profile arrays have different lengths"));
    }
    if n.len() < 5 {
        return Err(domain!("parabola fit needs at least 5 profile points"));
    }
    let unit = se.is_empty() || se.iter().any(|&s| !(s > 0.0));
    let w: Vec<f64> = (0..n.len())
        .map(|i| if unit { 1.0 } else { 1.0 / (se[i] * se[i]) })
        .collect();
    // regress y on (u = -n^2, 1)
    let (mut sw, mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n.len() {
        let u = -n[i] * n[i];
        sw += w[i];
        su += w[i] * u;
        suu += w[i] * u * u;
        sy += w[i] * y[i];
        suy += w[i] * u * y[i];
    }
    let det = sw * suu - su * su;
    if !(det.abs() > 1e-12 * sw * suu.max(1.0)) {
        return Err(domain!(
            "degenerate design: profile points need at least two distinct |n|"
        ));
    }
    let lambda = (sw * suy - su * sy) / det;
    let intercept = (suu * sy - su * suy) / det;
    let mut rss = 0.0;
    for i in 0..n.len() {
        let r = y[i] - (-lambda * n[i] * n[i] + intercept);
        rss += w[i] * r * r;
    }
    let var_scale = if unit {
        rss / (n.len() - 2) as f64
    } else {
        1.0
    };
    let lambda_std_error = math::sqrt(var_scale * sw / det);
    Ok(ParabolaFit {
        lambda,
        lambda_std_error,
        intercept,
        residual: rss,
    })
}

/// Default log-gamma constants bundle for `theta`.
pub fn log_gamma_constants(theta: Theta) -> Result<ScalingConstants> {
    crate::special::scaling_constants(theta)
}
