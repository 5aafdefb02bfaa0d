//! The log-gamma polymer: inverse-gamma environments, multi-path partition
//! functions `tau_{k,l}(n)`, the telescoping array `z_{k,l}(n)` and the line
//! ensemble built from it.
//!
//! Coordinates follow the polymer convention: `i` is the column (time,
//! `1..=n_max`) and `j` the row (`1..=n_rows`). Paths are up-right.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{domain, internal, precision, resource, Error, Result};
use crate::lines::DiscreteLineEnsemble;
use crate::math::{self, DoubleDouble};
use crate::rng::SimRng;
use crate::special::{self, Theta};

/// The i.i.d. inverse-gamma environment `d_{i,j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightField {
    theta: Theta,
    seed: u64,
    n_max: usize,
    n_rows: usize,
    /// Column-major: entry `(i, j)` at `(i - 1) * n_rows + (j - 1)`.
    entries: Vec<f64>,
}

impl WeightField {
    /// Wraps explicit weights; `entries[i-1][j-1] = d_{i,j}`.
    pub fn from_entries(theta: Theta, entries: &[Vec<f64>]) -> Result<Self> {
        let n_max = entries.len();
        let n_rows = entries.first().map_or(0, Vec::len);
        if n_max == 0 || n_rows == 0 {
            return Err(domain!("a weight field needs at least one entry"));
        }
        if entries.iter().any(|c| c.len() != n_rows) {
            return Err(domain!("weight field columns have different lengths"));
        }
        let flat: Vec<f64> = entries.iter().flatten().copied().collect();
        if flat.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(domain!("weights must be finite and strictly positive"));
        }
        Ok(Self {
            theta,
            seed: 0,
            n_max,
            n_rows,
            entries: flat,
        })
    }

    #[inline]
    pub fn theta(&self) -> Theta {
        self.theta
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// `d_{i,j}`; panics outside the field.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        assert!(
            (1..=self.n_max).contains(&i) && (1..=self.n_rows).contains(&j),
            "weight ({i}, {j}) out of range"
        );
        self.entries[(i - 1) * self.n_rows + (j - 1)]
    }

    /// Replaces `d_{i,j}`.
    pub fn set_entry(&mut self, i: usize, j: usize, d: f64) -> Result<()> {
        if !((1..=self.n_max).contains(&i) && (1..=self.n_rows).contains(&j)) {
            return Err(domain!("weight ({i}, {j}) out of range"));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(domain!("weights must be finite and strictly positive"));
        }
        self.entries[(i - 1) * self.n_rows + (j - 1)] = d;
        Ok(())
    }

    fn check(&self, k: usize, n: usize) -> Result<()> {
        if k == 0 || k > self.n_rows || n > self.n_max {
            return Err(domain!(
                "(n, k) = ({n}, {k}) outside the {} x {} weight field",
                self.n_max,
                self.n_rows
            ));
        }
        Ok(())
    }
}

/// Draws an `n_max x n_rows` field of inverse-gamma(`theta`) weights as
/// reciprocals of Gamma(`theta`, 1) variables.
pub fn sample_weight_field(
    theta: Theta,
    n_max: usize,
    n_rows: usize,
    seed: u64,
) -> Result<WeightField> {
    if n_max == 0 || n_rows == 0 {
        return Err(domain!("weight field dimensions must be positive"));
    }
    let gamma =
        Gamma::new(theta.get(), 1.0).map_err(|e| domain!("gamma({}) law: {e}", theta.get()))?;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(n_max * n_rows);
    for _ in 0..n_max * n_rows {
        let d = 1.0 / gamma.sample(&mut rng);
        if !d.is_finite() {
            return Err(precision!(
                "inverse-gamma draw overflowed for theta = {}",
                theta.get()
            ));
        }
        entries.push(d);
    }
    Ok(WeightField {
        theta,
        seed,
        n_max,
        n_rows,
        entries,
    })
}

/// Log of single-path partition functions `Z(i, j)` over `1..=n` x `1..=k`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPartition {
    n: usize,
    k: usize,
    log_z: Vec<f64>,
}

impl LogPartition {
    /// `log Z(i, j)`; `-inf` where no path reaches `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if !((1..=self.n).contains(&i) && (1..=self.k).contains(&j)) {
            return Err(domain!(
                "({i}, {j}) outside 1..={} x 1..={}",
                self.n,
                self.k
            ));
        }
        Ok(self.log_z[(i - 1) * self.k + (j - 1)])
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.log_z[(i - 1) * self.k + (j - 1)]
    }
}

/// `log Z` for paths from `(1, start)`; rows below `start` are `-inf`.
fn log_dp_from(d: &WeightField, start: usize, n: usize, k: usize) -> LogPartition {
    let mut log_z = vec![f64::NEG_INFINITY; n * k];
    for i in 1..=n {
        for j in start..=k {
            let left = if i > 1 {
                log_z[(i - 2) * k + (j - 1)]
            } else {
                f64::NEG_INFINITY
            };
            let down = if j > start {
                log_z[(i - 1) * k + (j - 2)]
            } else {
                f64::NEG_INFINITY
            };
            let into = if i == 1 && j == start {
                0.0
            } else {
                math::ln_add_exp(left, down)
            };
            log_z[(i - 1) * k + (j - 1)] = math::ln(d.entry(i, j)) + into;
        }
    }
    LogPartition { n, k, log_z }
}

/// Point-to-point partition functions `Z(i, j)` for paths from `(1, 1)`:
/// `Z(i, j) = d_{i,j} (Z(i-1, j) + Z(i, j-1))`, in log space.
pub fn single_path_partition(d: &WeightField, n: usize, k: usize) -> Result<LogPartition> {
    if n == 0 {
        return Err(domain!("n must be at least 1"));
    }
    d.check(k, n)?;
    Ok(log_dp_from(d, 1, n, k))
}

/// Maximum number of path tuples [`tau_bruteforce`] will visit.
pub const ENUMERATION_GUARD: u64 = 10_000_000;

struct Enumerator<'a> {
    d: &'a WeightField,
    n: usize,
    k: usize,
    l: usize,
    occupied: Vec<bool>,
    tuples: u64,
    total: math::NeumaierSum,
}

impl Enumerator<'_> {
    #[inline]
    fn cell(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.k + (j - 1)
    }

    /// Places path `r` (1-based) starting at `(i, j)` carrying weight `w`.
    fn walk(&mut self, r: usize, i: usize, j: usize, w: f64) -> Result<()> {
        let c = self.cell(i, j);
        if self.occupied[c] {
            return Ok(());
        }
        self.occupied[c] = true;
        let w = w * self.d.entry(i, j);
        let end_row = self.k + r - self.l;
        let result = if i == self.n && j == end_row {
            self.next_path(r + 1, w)
        } else {
            let mut res = Ok(());
            if i < self.n {
                res = self.walk(r, i + 1, j, w);
            }
            if res.is_ok() && j < end_row {
                res = self.walk(r, i, j + 1, w);
            }
            res
        };
        self.occupied[c] = false;
        result
    }

    fn next_path(&mut self, r: usize, w: f64) -> Result<()> {
        if r > self.l {
            self.tuples += 1;
            if self.tuples > ENUMERATION_GUARD {
                return Err(resource!(
                    "enumeration exceeded {ENUMERATION_GUARD} path tuples"
                ));
            }
            self.total.add(w);
            return Ok(());
        }
        self.walk(r, 1, r, w)
    }
}

fn check_tau_args(d: &WeightField, k: usize, l: usize, n: usize) -> Result<()> {
    if l == 0 || l > k {
        return Err(domain!("need 1 <= l <= k, got l = {l}, k = {k}"));
    }
    d.check(k, n.max(1))
}

/// `log tau_{k,l}(n)` by enumerating every non-intersecting `l`-tuple of
/// up-right paths, path `r` running from `(1, r)` to `(n, k + r - l)`.
/// Returns `-inf` for `n < l`.
pub fn tau_bruteforce(d: &WeightField, k: usize, l: usize, n: usize) -> Result<f64> {
    check_tau_args(d, k, l, n)?;
    if n < l {
        return Ok(f64::NEG_INFINITY);
    }
    let mut e = Enumerator {
        d,
        n,
        k,
        l,
        occupied: vec![false; n * k],
        tuples: 0,
        total: math::NeumaierSum::default(),
    };
    e.next_path(1, 1.0)?;
    let total = e.total.total();
    if !(total > 0.0 && total.is_finite()) {
        return Err(precision!(
            "enumerated partition function {total} is not a positive finite number"
        ));
    }
    Ok(math::ln(total))
}

/// Arithmetic used for the partition tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PrecisionMode {
    /// Log-space dynamic programming, double-double elimination.
    #[default]
    Double,
    /// Double-double dynamic programming with exact power-of-two rescaling.
    DoubleDouble,
}

/// `m * 2^e`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    m: DoubleDouble,
    e: i64,
}

impl Scaled {
    const ZERO: Self = Self {
        m: DoubleDouble::ZERO,
        e: i64::MIN,
    };

    fn from_log(l: f64) -> Self {
        if l == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let e = math::floor(l / core::f64::consts::LN_2) as i64;
        Self {
            m: DoubleDouble::from_f64(math::exp(l - e as f64 * core::f64::consts::LN_2)),
            e,
        }
    }
}

/// Single-path partitions from `(1, start)` in double-double, one binary
/// exponent per column. Returns `[i][j]` as scaled values.
fn dd_dp_from(d: &WeightField, start: usize, n: usize, k: usize) -> Result<Vec<Vec<Scaled>>> {
    let mut out = Vec::with_capacity(n);
    let mut prev: Vec<DoubleDouble> = vec![DoubleDouble::ZERO; k + 1];
    let mut exp: i64 = 0;
    for i in 1..=n {
        let mut col = vec![DoubleDouble::ZERO; k + 1];
        for j in start..=k {
            let into = if i == 1 && j == start {
                DoubleDouble::ONE
            } else {
                let down = if j > start {
                    col[j - 1]
                } else {
                    DoubleDouble::ZERO
                };
                prev[j] + down
            };
            col[j] = into * d.entry(i, j);
        }
        let max = col.iter().fold(0.0_f64, |m, v| m.max(v.hi().abs()));
        if !max.is_finite() {
            return Err(precision!(
                "double-double partition function overflowed in column {i}"
            ));
        }
        if max > 0.0 {
            let (_, ex) = libm::frexp(max);
            col.iter_mut().for_each(|v| *v = v.scale_pow2(-ex));
            exp += ex as i64;
        }
        out.push(
            (1..=k)
                .map(|j| {
                    if col[j].is_zero() {
                        Scaled::ZERO
                    } else {
                        Scaled { m: col[j], e: exp }
                    }
                })
                .collect(),
        );
        prev = col;
    }
    Ok(out)
}

/// Largest tolerated `entry error x cancellation` of a double-mode determinant.
const LGV_TOLERANCE: f64 = 1e-11;

/// `ln det` of an `l x l` matrix of scaled entries and the log of its
/// cancellation factor `prod_r sum_j |a_rj| / |det|`: each row is brought to a
/// common exponent, then Gaussian elimination with partial pivoting runs in
/// double-double.
fn log_det(rows: &[Vec<Scaled>]) -> Result<(f64, f64)> {
    let l = rows.len();
    let mut a: Vec<Vec<DoubleDouble>> = Vec::with_capacity(l);
    let mut log_scale = 0.0;
    let mut log_rows = 0.0;
    for row in rows {
        let top = row.iter().map(|s| s.e).max().unwrap_or(i64::MIN);
        if top == i64::MIN {
            return Err(precision!("an LGV row vanishes identically"));
        }
        log_scale += top as f64 * core::f64::consts::LN_2;
        a.push(
            row.iter()
                .map(|s| {
                    if s.e == i64::MIN {
                        DoubleDouble::ZERO
                    } else {
                        s.m.scale_pow2((s.e - top).max(-2000) as i32)
                    }
                })
                .collect::<Vec<_>>(),
        );
        log_rows += math::ln(a[a.len() - 1].iter().map(|v| v.hi().abs()).sum::<f64>());
    }
    let mut det = DoubleDouble::ONE;
    for c in 0..l {
        let p = (c..l).max_by(|&x, &y| {
            a[x][c]
                .abs()
                .partial_cmp(&a[y][c].abs())
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let p = p.ok_or_else(|| internal!("empty pivot range"))?;
        if a[p][c].is_zero() {
            return Err(precision!("LGV matrix is numerically singular"));
        }
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        let piv = a[c][c];
        det = det * piv;
        for r in c + 1..l {
            let f = a[r][c] / piv;
            if f.is_zero() {
                continue;
            }
            let (top, rest) = a.split_at_mut(r);
            for (x, &y) in rest[0][c..l].iter_mut().zip(&top[c][c..l]) {
                *x = *x - y * f;
            }
        }
    }
    if !(det.hi() > 0.0) {
        return Err(precision!(
            "LGV determinant {} is not positive after elimination",
            det.to_f64()
        ));
    }
    Ok((det.ln() + log_scale, log_rows - det.ln()))
}

/// Single-path tables from each start `(1, r)`, `r = 1..=l_max`.
fn start_tables(
    d: &WeightField,
    l_max: usize,
    n: usize,
    k: usize,
    mode: PrecisionMode,
) -> Result<Vec<Vec<Vec<Scaled>>>> {
    (1..=l_max)
        .map(|r| match mode {
            PrecisionMode::Double => {
                let z = log_dp_from(d, r, n, k);
                Ok((1..=n)
                    .map(|i| (1..=k).map(|j| Scaled::from_log(z.at(i, j))).collect())
                    .collect())
            }
            PrecisionMode::DoubleDouble => dd_dp_from(d, r, n, k),
        })
        .collect()
}

fn lgv_from_tables(
    tables: &[Vec<Vec<Scaled>>],
    k: usize,
    l: usize,
    n: usize,
    mode: PrecisionMode,
) -> Result<f64> {
    if n < l {
        return Ok(f64::NEG_INFINITY);
    }
    let rows: Vec<Vec<Scaled>> = (0..l)
        .map(|r| (1..=l).map(|rp| tables[r][n - 1][k + rp - l - 1]).collect())
        .collect();
    let (value, log_cancel) = log_det(&rows)?;
    if mode == PrecisionMode::Double && l > 1 {
        // log-space entries carry a relative error of about eps (|log a| + path length)
        let big = rows
            .iter()
            .flatten()
            .filter(|s| s.e != i64::MIN)
            .map(|s| (s.e as f64).abs())
            .fold(0.0, f64::max);
        let entry_error = f64::EPSILON * (big * core::f64::consts::LN_2 + 4.0 * (n + k) as f64);
        if math::ln(entry_error) + log_cancel > math::ln(LGV_TOLERANCE) {
            return Err(precision!(
                "LGV determinant for l = {l}, n = {n} cancels by a factor e^{log_cancel:.1}; double entries are too coarse"
            ));
        }
    }
    Ok(value)
}

/// `log tau_{k,l}(n)` as the `l x l` Lindstrom-Gessel-Viennot determinant of
/// single-path partition functions; double mode first, double-double when the
/// determinant cancels too much.
pub fn tau_lgv(d: &WeightField, k: usize, l: usize, n: usize) -> Result<f64> {
    match tau_lgv_with(d, k, l, n, PrecisionMode::Double) {
        Err(Error::Precision(msg)) => {
            log::debug!("escalating to double-double: {msg}");
            tau_lgv_with(d, k, l, n, PrecisionMode::DoubleDouble)
        }
        other => other,
    }
}

/// [`tau_lgv`] with an explicit precision mode. Double mode reports a
/// precision error when cancellation in the determinant could cost more
/// than about 1e-11 relative accuracy.
pub fn tau_lgv_with(
    d: &WeightField,
    k: usize,
    l: usize,
    n: usize,
    mode: PrecisionMode,
) -> Result<f64> {
    check_tau_args(d, k, l, n)?;
    if n < l {
        return Ok(f64::NEG_INFINITY);
    }
    let tables = start_tables(d, l, n, k, mode)?;
    lgv_from_tables(&tables, k, l, n, mode)
}

/// `log tau_{k,l}(n)` for fixed `k`, `1 <= l <= l_max` and `n` in a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTable {
    k: usize,
    l_max: usize,
    n_lo: usize,
    n_hi: usize,
    mode: PrecisionMode,
    log_tau: Vec<f64>,
}

impl PartitionTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn n_range(&self) -> (usize, usize) {
        (self.n_lo, self.n_hi)
    }

    pub fn precision_mode(&self) -> PrecisionMode {
        self.mode
    }

    /// `log tau_{k,l}(n)`; `l = 0` gives `0` (the empty product).
    pub fn log_tau(&self, l: usize, n: usize) -> Result<f64> {
        if l == 0 {
            return Ok(0.0);
        }
        if l > self.l_max || n < self.n_lo || n > self.n_hi {
            return Err(domain!(
                "tau table holds l <= {} and n in {}..={}, asked for (l, n) = ({l}, {n})",
                self.l_max,
                self.n_lo,
                self.n_hi
            ));
        }
        Ok(self.log_tau[(n - self.n_lo) * self.l_max + (l - 1)])
    }
}

/// Builds `log tau_{k,l}(n)` for `l <= l_max`, `n_lo <= n <= n_hi` by LGV.
pub fn partition_table(
    d: &WeightField,
    k: usize,
    l_max: usize,
    n_lo: usize,
    n_hi: usize,
    mode: PrecisionMode,
) -> Result<PartitionTable> {
    if n_lo == 0 || n_lo > n_hi {
        return Err(domain!("bad n range {n_lo}..={n_hi}"));
    }
    check_tau_args(d, k, l_max, n_hi)?;
    let tables = start_tables(d, l_max, n_hi, k, mode)?;
    let mut log_tau = Vec::with_capacity((n_hi - n_lo + 1) * l_max);
    for n in n_lo..=n_hi {
        for l in 1..=l_max {
            log_tau.push(if l == 1 {
                // 1 x 1 determinant: read the entry directly
                match mode {
                    PrecisionMode::Double => log_dp_value(&tables[0][n - 1][k - 1]),
                    PrecisionMode::DoubleDouble => lgv_from_tables(&tables, k, 1, n, mode)?,
                }
            } else {
                lgv_from_tables(&tables, k, l, n, mode)?
            });
        }
    }
    Ok(PartitionTable {
        k,
        l_max,
        n_lo,
        n_hi,
        mode,
        log_tau,
    })
}

fn log_dp_value(s: &Scaled) -> f64 {
    if s.e == i64::MIN {
        f64::NEG_INFINITY
    } else {
        s.m.ln() + s.e as f64 * core::f64::consts::LN_2
    }
}

/// [`partition_table`] in double mode, retried in double-double on a precision error.
pub fn partition_table_escalating(
    d: &WeightField,
    k: usize,
    l_max: usize,
    n_lo: usize,
    n_hi: usize,
) -> Result<PartitionTable> {
    match partition_table(d, k, l_max, n_lo, n_hi, PrecisionMode::Double) {
        Err(Error::Precision(msg)) => {
            log::debug!("escalating to double-double: {msg}");
            partition_table(d, k, l_max, n_lo, n_hi, PrecisionMode::DoubleDouble)
        }
        other => other,
    }
}

/// `log z_{k,l}(n) = log tau_{k,l}(n) - log tau_{k,l-1}(n)`, kept as exact
/// double-double differences so that partial sums telescope without rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct ZArray {
    k: usize,
    l_max: usize,
    n_lo: usize,
    n_hi: usize,
    log_z: Vec<Option<DoubleDouble>>,
}

impl ZArray {
    fn slot(&self, l: usize, n: usize) -> Result<DoubleDouble> {
        if l == 0 || l > self.l_max || n < self.n_lo || n > self.n_hi {
            return Err(domain!(
                "z_{{{},{l}}}({n}) is outside the computed array",
                self.k
            ));
        }
        self.log_z[(n - self.n_lo) * self.l_max + (l - 1)].ok_or_else(|| {
            domain!(
                "z_{{{},{l}}}({n}) is undefined: need l <= min(k, n)",
                self.k
            )
        })
    }

    /// `log z_{k,l}(n)`.
    pub fn log_z(&self, l: usize, n: usize) -> Result<f64> {
        self.slot(l, n).map(DoubleDouble::to_f64)
    }

    /// `sum_{l' <= l} log z_{k,l'}(n)`, which reproduces `log tau_{k,l}(n)`.
    pub fn telescoped(&self, l: usize, n: usize) -> Result<f64> {
        let mut acc = DoubleDouble::ZERO;
        for lp in 1..=l {
            acc = acc + self.slot(lp, n)?;
        }
        Ok(acc.to_f64())
    }
}

/// Telescoping ratios of a partition table.
pub fn z_array(tau: &PartitionTable) -> Result<ZArray> {
    let mut log_z = Vec::with_capacity(tau.log_tau.len());
    for n in tau.n_lo..=tau.n_hi {
        for l in 1..=tau.l_max {
            if l > tau.k.min(n) {
                log_z.push(None);
                continue;
            }
            let cur = tau.log_tau(l, n)?;
            let prev = tau.log_tau(l - 1, n)?;
            if !(cur.is_finite() && prev.is_finite()) {
                return Err(precision!("log tau_{{{},{l}}}({n}) is not finite", tau.k));
            }
            log_z.push(Some(DoubleDouble::exact_sum(cur, -prev)));
        }
    }
    Ok(ZArray {
        k: tau.k,
        l_max: tau.l_max,
        n_lo: tau.n_lo,
        n_hi: tau.n_hi,
        log_z,
    })
}

/// The log-gamma line ensemble
/// `L_i(j) = log z_{2N,i}(2N + j) + 2N h_theta(1)` for `i <= k_top`, `|j| <= N`,
/// from a fresh `3N x 2N` weight field drawn with `seed`.
pub fn polymer_line_ensemble(
    theta: Theta,
    n: usize,
    k_top: usize,
    seed: u64,
) -> Result<DiscreteLineEnsemble> {
    if n == 0 || k_top == 0 || k_top > n {
        return Err(domain!(
            "need 1 <= k_top <= N, got k_top = {k_top}, N = {n}"
        ));
    }
    let d = sample_weight_field(theta, 3 * n, 2 * n, seed)?;
    let shift = 2.0 * n as f64 * special::h_theta(theta, 1.0)?;
    let mut ens = DiscreteLineEnsemble::zeros(k_top, -(n as i64), n as i64)?;
    if k_top == 1 {
        let z = single_path_partition(&d, 3 * n, 2 * n)?;
        for j in -(n as i64)..=(n as i64) {
            *ens.at_mut(1, j) = z.at((2 * n as i64 + j) as usize, 2 * n) + shift;
        }
        return Ok(ens);
    }
    let tau = partition_table_escalating(&d, 2 * n, k_top, n, 3 * n)?;
    let z = z_array(&tau)?;
    for i in 1..=k_top {
        for j in -(n as i64)..=(n as i64) {
            *ens.at_mut(i, j) = z.log_z(i, (2 * n as i64 + j) as usize)? + shift;
        }
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize, k: usize) -> WeightField {
        WeightField::from_entries(Theta::default(), &vec![vec![1.0; k]; n]).unwrap()
    }

    fn binom(n: u64, r: u64) -> f64 {
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    #[test]
    fn unit_weights_count_paths() {
        let d = ones(2, 2);
        let z = single_path_partition(&d, 2, 2).unwrap();
        assert!((z.get(2, 2).unwrap() - math::ln(2.0)).abs() < 1e-15);
        let d = ones(5, 4);
        let z = single_path_partition(&d, 5, 4).unwrap();
        assert!((z.get(5, 4).unwrap() - math::ln(binom(7, 3))).abs() < 1e-14);
        assert!(z.get(6, 1).is_err());
    }

    #[test]
    fn single_column_is_a_product() {
        let d = WeightField::from_entries(Theta::default(), &[vec![2.0, 3.0, 0.5]]).unwrap();
        let z = single_path_partition(&d, 1, 3).unwrap();
        assert!((z.get(1, 3).unwrap() - math::ln(3.0)).abs() < 1e-15);
    }

    #[test]
    fn lgv_counts_nonintersecting_pairs() {
        // unit weights: number of vertex-disjoint pairs equals the 2x2 binomial determinant
        let d = ones(4, 3);
        let n = 4;
        let k = 3;
        // start (1,r), end (n, k+r-2); single-path counts C((n-1)+(rows-1), rows-1)
        let c = |r0: usize, r1: usize| {
            if r1 < r0 {
                0.0
            } else {
                binom((n - 1 + r1 - r0) as u64, (r1 - r0) as u64)
            }
        };
        let det = c(1, 2) * c(2, 3) - c(1, 3) * c(2, 2);
        let bf = tau_bruteforce(&d, k, 2, n).unwrap();
        let lgv = tau_lgv(&d, k, 2, n).unwrap();
        assert!((bf - math::ln(det)).abs() < 1e-13);
        assert!((lgv - math::ln(det)).abs() < 1e-13);
    }

    #[test]
    fn forced_tuple_when_l_equals_k() {
        let d =
            WeightField::from_entries(Theta::default(), &[vec![1.5, 2.0], vec![0.3, 7.0]]).unwrap();
        let expect = math::ln(1.5 * 2.0 * 0.3 * 7.0);
        assert!((tau_bruteforce(&d, 2, 2, 2).unwrap() - expect).abs() < 1e-14);
        assert!((tau_lgv(&d, 2, 2, 2).unwrap() - expect).abs() < 1e-14);
        assert!(
            (tau_lgv_with(&d, 2, 2, 2, PrecisionMode::DoubleDouble).unwrap() - expect).abs()
                < 1e-14
        );
    }

    #[test]
    fn short_polymers_have_zero_tau() {
        let d = ones(3, 4);
        assert_eq!(tau_bruteforce(&d, 4, 3, 2).unwrap(), f64::NEG_INFINITY);
        assert_eq!(tau_lgv(&d, 4, 3, 2).unwrap(), f64::NEG_INFINITY);
        assert!(tau_bruteforce(&d, 4, 5, 3).is_err());
        assert!(tau_lgv(&d, 5, 1, 3).is_err());
    }

    #[test]
    fn modes_agree_on_random_fields() {
        for seed in 0..20 {
            let d = sample_weight_field(Theta::new(1.0).unwrap(), 5, 4, seed).unwrap();
            for l in 1..=4 {
                for n in l..=5 {
                    let bf = tau_bruteforce(&d, 4, l, n).unwrap();
                    let a = tau_lgv(&d, 4, l, n).unwrap();
                    let b = tau_lgv_with(&d, 4, l, n, PrecisionMode::DoubleDouble).unwrap();
                    assert!(
                        (a - bf).abs() <= 1e-9 * bf.abs().max(1.0),
                        "seed {seed} l {l} n {n}"
                    );
                    assert!((b - bf).abs() <= 1e-9 * bf.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn table_and_z_array_telescope() {
        let d = sample_weight_field(Theta::new(0.5).unwrap(), 12, 8, 3).unwrap();
        // l = 2 at n = 2 cancels by ~1e10, too much for double entries
        assert!(matches!(
            partition_table(&d, 8, 3, 1, 12, PrecisionMode::Double),
            Err(Error::Precision(_))
        ));
        let t = partition_table_escalating(&d, 8, 3, 1, 12).unwrap();
        assert_eq!(t.precision_mode(), PrecisionMode::DoubleDouble);
        let z = z_array(&t).unwrap();
        for n in 1..=12 {
            for l in 1..=3.min(n) {
                assert_eq!(z.telescoped(l, n).unwrap(), t.log_tau(l, n).unwrap());
            }
        }
        assert!(z.log_z(3, 2).is_err());
        assert_eq!(z.log_z(1, 5).unwrap(), t.log_tau(1, 5).unwrap());
    }

    #[test]
    fn guard_trips() {
        let d = ones(12, 12);
        assert!(matches!(
            tau_bruteforce(&d, 12, 3, 12),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn ensemble_top_curve_is_centered_partition() {
        let theta = Theta::new(1.0).unwrap();
        let e = polymer_line_ensemble(theta, 3, 1, 9).unwrap();
        let d = sample_weight_field(theta, 9, 6, 9).unwrap();
        let z = single_path_partition(&d, 9, 6).unwrap();
        let shift = 6.0 * special::h_theta(theta, 1.0).unwrap();
        for j in -3..=3_i64 {
            assert_eq!(
                e.get(1, j).unwrap(),
                z.get((6 + j) as usize, 6).unwrap() + shift
            );
        }
        let e2 = polymer_line_ensemble(theta, 3, 2, 9).unwrap();
        for j in -3..=3_i64 {
            assert!((e2.get(1, j).unwrap() - e.get(1, j).unwrap()).abs() < 1e-12);
        }
        assert_eq!(e2, polymer_line_ensemble(theta, 3, 2, 9).unwrap());
    }
}
