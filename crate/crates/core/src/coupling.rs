//! The grand monotone coupling: every `(H, H^RW)`-Gibbs ensemble on curves
//! `1..=k` over `0..T-1` (top boundary `+inf`, bottom boundary `z`) realized
//! as a function of one vector of uniforms.
//!
//! Interior points are sampled in decreasing lexicographic order, each by
//! inverting the CDF of its conditional law given the points after it. The
//! conditional densities are computed on a lattice `hZ` whose spacing depends
//! only on the increment law and `T`, by forward and backward transfer sweeps
//! over the free curves. On the lattice the joint weight is log-supermodular,
//! so the discrete conditional laws are stochastically ordered in the
//! boundary data and the coupling is monotone up to rounding.

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bridge::HrwSpec;
use crate::error::{domain, internal, precision, resource, Result};
use crate::fft;
use crate::gibbs::InteractionSpec;
use crate::grid::GridDensity;
use crate::lines::DiscreteLineEnsemble;
use crate::math;
use crate::stats::StatReport;

/// An interior lattice point `(curve, time)`, `curve` in `1..=k`, `time` in `1..=T-2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Point {
    pub curve: usize,
    pub time: usize,
}

/// Interior points in increasing lexicographic order (curve first, then time).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointOrder {
    k: usize,
    t: usize,
    points: Vec<Point>,
}

impl PointOrder {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    /// `P_m` for `m` in `1..=k(T-2)`.
    pub fn point(&self, m: usize) -> Point {
        self.points[m - 1]
    }

    /// 1-based position of `p`.
    pub fn index_of(&self, p: Point) -> Option<usize> {
        self.points.binary_search(&p).ok().map(|i| i + 1)
    }

    /// `A_{P_m}`: the points after `P_m`.
    pub fn successors(&self, m: usize) -> &[Point] {
        &self.points[m..]
    }

    /// `B_{P_m}`: the points before `P_m`.
    pub fn predecessors(&self, m: usize) -> &[Point] {
        &self.points[..m - 1]
    }
}

pub fn order_points(k: usize, t: usize) -> Result<PointOrder> {
    if k == 0 || t < 2 {
        return Err(domain!("need k >= 1 and T >= 2, got k = {k}, T = {t}"));
    }
    let points = (1..=k)
        .flat_map(|curve| (1..t - 1).map(move |time| Point { curve, time }))
        .collect();
    Ok(PointOrder { k, t, points })
}

/// A point of `(0, 1)^{k(T-2)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingUniforms {
    omega: Vec<f64>,
}

impl CouplingUniforms {
    pub fn new(omega: Vec<f64>) -> Result<Self> {
        if omega.iter().any(|&u| !(u > 0.0 && u < 1.0)) {
            return Err(domain!("coupling uniforms must lie strictly inside (0, 1)"));
        }
        Ok(Self { omega })
    }

    pub fn sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let omega = (0..len)
            .map(|_| loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    break u;
                }
            })
            .collect();
        Self { omega }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }
}

/// Entrance values `x`, exit values `y` (length `k`) and bottom curve `z` on `0..T-1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryTriple {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl BoundaryTriple {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(domain!("x and y must be nonempty and of equal length"));
        }
        if z.len() < 2 {
            return Err(domain!("z must cover at least two times"));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(domain!("x and y must be finite"));
        }
        if z.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(domain!("z takes values in [-inf, +inf)"));
        }
        Ok(Self { x, y, z })
    }

    /// `z = -inf` everywhere.
    pub fn free(x: Vec<f64>, y: Vec<f64>, t: usize) -> Result<Self> {
        Self::new(x, y, vec![f64::NEG_INFINITY; t])
    }

    pub fn k(&self) -> usize {
        self.x.len()
    }

    pub fn t(&self) -> usize {
        self.z.len()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.x.len() == other.x.len()
            && self.z.len() == other.z.len()
            && self.x.iter().zip(&other.x).all(|(a, b)| a <= b)
            && self.y.iter().zip(&other.y).all(|(a, b)| a <= b)
            && self.z.iter().zip(&other.z).all(|(a, b)| a <= b)
    }

    /// Adds `c` to every entry (`-inf` stays `-inf`).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            x: self.x.iter().map(|v| v + c).collect(),
            y: self.y.iter().map(|v| v + c).collect(),
            z: self.z.iter().map(|v| v + c).collect(),
        }
    }

    /// Bounds of the finite data used to place the lattice window.
    fn span(&self) -> (f64, f64) {
        let lo = self
            .x
            .iter()
            .chain(&self.y)
            .copied()
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .x
            .iter()
            .chain(&self.y)
            .chain(self.z.iter().filter(|v| v.is_finite()))
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Resolution of the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    /// Lattice points across the reference window; the spacing is
    /// `2 W / grid_points` where `W` is `window_sds` bridge standard deviations.
    pub grid_points: usize,
    pub window_sds: f64,
    /// Largest number of lattice points a window may have.
    pub max_points: usize,
    /// Largest message (in entries) a transfer sweep may allocate.
    pub max_entries: usize,
    /// Allows `k = 3`.
    pub allow_k3: bool,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            grid_points: 256,
            window_sds: 12.0,
            max_points: 4096,
            max_entries: 1 << 26,
            allow_k3: false,
        }
    }
}

/// Increment law, interaction and size of the coupled ensembles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingModel {
    hrw: HrwSpec,
    interaction: InteractionSpec,
    k: usize,
    t: usize,
    params: CouplingParams,
    half_width: f64,
    spacing: f64,
}

impl CouplingModel {
    /// `interaction` must cover bonds `0..T-2` when `T >= 3`.
    pub fn new(
        hrw: HrwSpec,
        interaction: InteractionSpec,
        k: usize,
        t: usize,
        params: CouplingParams,
    ) -> Result<Self> {
        if k == 0 || t < 2 {
            return Err(domain!("need k >= 1 and T >= 2"));
        }
        if k > 3 || (k == 3 && !params.allow_k3) {
            return Err(resource!(
                "the coupling supports k <= 2 (k = 3 when explicitly allowed), got k = {k}"
            ));
        }
        if params.grid_points < 256 {
            return Err(domain!("grid resolution must be at least 256 points"));
        }
        if !(params.window_sds > 0.0) {
            return Err(domain!("window width must be positive"));
        }
        if t >= 3 {
            // probe the end bonds so that a short interaction fails here
            if interaction.try_bond(0).is_none() || interaction.try_bond(t as i64 - 2).is_none() {
                return Err(domain!("interaction must cover bonds 0..={}", t - 2));
            }
        }
        let var = hrw.variance();
        if !(var > 0.0 && var.is_finite()) {
            return Err(domain!("increment law must have finite positive variance"));
        }
        let half_width = 0.5 * params.window_sds * math::sqrt(var * (t - 1).max(1) as f64);
        let spacing = 2.0 * half_width / params.grid_points as f64;
        Ok(Self {
            hrw,
            interaction,
            k,
            t,
            params,
            half_width,
            spacing,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    /// Lattice spacing `h`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// The same model with `factor` times as many lattice points per unit length.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let params = CouplingParams {
            grid_points: self.params.grid_points * factor,
            max_points: self.params.max_points * factor,
            max_entries: self
                .params
                .max_entries
                .max((self.params.max_points * factor).pow(self.k as u32)),
            ..self.params
        };
        Self::new(
            self.hrw.clone(),
            self.interaction.clone(),
            self.k,
            self.t,
            params,
        )
    }

    fn check(&self, b: &BoundaryTriple) -> Result<()> {
        if b.k() != self.k || b.t() != self.t {
            return Err(domain!(
                "boundary has k = {}, T = {}; model has k = {}, T = {}",
                b.k(),
                b.t(),
                self.k,
                self.t
            ));
        }
        Ok(())
    }

    /// Lattice window `[lo_idx, lo_idx + n)` for `b`, monotone in the data.
    fn lattice(&self, b: &BoundaryTriple) -> Result<Lattice> {
        let (lo, hi) = b.span();
        let h = self.spacing;
        let lo_idx = math::floor((lo - self.half_width) / h) as i64;
        let hi_idx = math::ceil((hi + self.half_width) / h) as i64;
        let n = (hi_idx - lo_idx + 1) as usize;
        if n > self.params.max_points {
            return Err(resource!(
                "lattice window needs {n} points (limit {})",
                self.params.max_points
            ));
        }
        let entries = n.checked_pow(self.k as u32).unwrap_or(usize::MAX);
        if entries > self.params.max_entries {
            return Err(resource!(
                "transfer messages need {entries} entries (limit {})",
                self.params.max_entries
            ));
        }
        Ok(Lattice { lo_idx, n, h })
    }

    /// Grid violation tolerance `1e-8` times the lattice width for `b`.
    pub fn epsilon_grid(&self, b: &BoundaryTriple) -> Result<f64> {
        let l = self.lattice(b)?;
        Ok(1e-8 * l.h * (l.n - 1) as f64)
    }

    /// Everything about `b` that does not depend on the uniforms.
    pub fn plan(&self, b: &BoundaryTriple) -> Result<CouplingPlan<'_>> {
        self.check(b)?;
        if self.t == 2 {
            return Ok(CouplingPlan {
                model: self,
                boundary: b.clone(),
                tables: None,
                top_forward: Vec::new(),
            });
        }
        let lattice = self.lattice(b)?;
        let tables = Tables::new(self, lattice);
        let top_forward = tables.forward_messages(self.k, &b.x, &b.z)?;
        Ok(CouplingPlan {
            model: self,
            boundary: b.clone(),
            tables: Some(tables),
            top_forward,
        })
    }

    /// Density of `L(P_m)` given the values at the points after `P_m`,
    /// tabulated on the lattice. `fixed` holds curves `1..=k` on `0..T-1`;
    /// only its entries at `A_{P_m}` are read.
    pub fn conditional_density(
        &self,
        b: &BoundaryTriple,
        fixed: &DiscreteLineEnsemble,
        m: usize,
    ) -> Result<GridDensity> {
        self.check(b)?;
        if self.t == 2 {
            return Err(domain!("T = 2 has no interior points"));
        }
        // one-off query: the top-curve sweep is done only if P_m needs it
        let tables = Tables::new(self, self.lattice(b)?);
        let plan = CouplingPlan {
            model: self,
            boundary: b.clone(),
            tables: Some(tables),
            top_forward: Vec::new(),
        };
        plan.conditional_density(fixed, m)
    }

    /// `ell(omega)` for boundary `b`.
    pub fn sample(
        &self,
        b: &BoundaryTriple,
        omega: &CouplingUniforms,
    ) -> Result<DiscreteLineEnsemble> {
        self.plan(b)?.sample(omega)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Lattice {
    lo_idx: i64,
    n: usize,
    h: f64,
}

impl Lattice {
    #[inline]
    fn point(&self, i: usize) -> f64 {
        (self.lo_idx + i as i64) as f64 * self.h
    }
}

/// Increment and bond weights at lattice differences `d h`, `|d| < n`,
/// stored at `d + n - 1`.
#[derive(Debug, Clone)]
struct Tables {
    lattice: Lattice,
    hrw: HrwSpec,
    interaction: InteractionSpec,
    g: Vec<f64>,
    g_rev: Vec<f64>,
    bonds: Vec<Vec<f64>>,
}

/// Lattice size from which transfer sums switch to FFT convolution.
const FFT_THRESHOLD: usize = 1024;

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.split_at(a.len() & !3);
    let (cb, rb) = b.split_at(ca.len());
    for (x, y) in ca.chunks_exact(4).zip(cb.chunks_exact(4)) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// A nonnegative function of the lattice values of curves `1..=d`, row-major
/// with curve 1 slowest, scaled by `exp(log_scale)`.
#[derive(Debug, Clone)]
struct Message {
    d: usize,
    data: Vec<f64>,
    log_scale: f64,
}

impl Message {
    fn unit() -> Self {
        Self {
            d: 0,
            data: vec![1.0],
            log_scale: 0.0,
        }
    }

    fn normalize(&mut self) -> Result<()> {
        let max = self.data.iter().copied().fold(0.0_f64, f64::max);
        if !(max > 1e-300 && max.is_finite()) {
            return Err(precision!("transfer message lost all mass (max {max:e})"));
        }
        self.data.iter_mut().for_each(|v| *v /= max);
        self.log_scale += math::ln(max);
        Ok(())
    }
}

impl Tables {
    fn new(model: &CouplingModel, lattice: Lattice) -> Self {
        let n = lattice.n as i64;
        let h = lattice.h;
        let log_g = model.hrw.log_density_fn();
        let g: Vec<f64> = (-(n - 1)..n)
            .map(|d| math::exp(log_g(d as f64 * h)))
            .collect();
        let g_rev = g.iter().rev().copied().collect();
        let bonds = (0..model.t as i64 - 1)
            .map(|j| {
                let hm = model.interaction.bond(j);
                (-(n - 1)..n)
                    .map(|d| math::exp(-hm.eval(d as f64 * h)))
                    .collect()
            })
            .collect();
        Self {
            lattice,
            hrw: model.hrw.clone(),
            interaction: model.interaction.clone(),
            g,
            g_rev,
            bonds,
        }
    }

    #[inline]
    fn off(&self) -> usize {
        self.lattice.n - 1
    }

    /// `G(c - u)` (`upper = true`) or `G(u - c)` on the lattice.
    fn g_against(&self, c: f64, upper: bool) -> Vec<f64> {
        let log_g = self.hrw.log_density_fn();
        (0..self.lattice.n)
            .map(|i| {
                let u = self.lattice.point(i);
                math::exp(log_g(if upper { c - u } else { u - c }))
            })
            .collect()
    }

    /// `exp(-H_j(c - u))` (`u` above `c`) or `exp(-H_j(u - c))` on the lattice.
    fn bond_against(&self, j: usize, c: f64, u_above: bool) -> Vec<f64> {
        let hm = self.interaction.bond(j as i64);
        (0..self.lattice.n)
            .map(|i| {
                let u = self.lattice.point(i);
                math::exp(-hm.eval(if u_above { c - u } else { u - c }))
            })
            .collect()
    }

    /// Replaces dimension `q` of `src` by summing against the increment
    /// kernel. Forward: `out[a] = sum_b w(b) G(a - b)`; backward:
    /// `out[a] = sum_b w(b) G(b - a)`. The weight is `bond[partner - b]`
    /// (forward) or `bond[b - partner]` (backward) when `partner` names a
    /// dimension, else `fixed[b]`.
    fn apply_dim(
        &self,
        src: &[f64],
        d: usize,
        q: usize,
        forward: bool,
        partner: Option<(usize, &[f64])>,
        fixed: Option<&[f64]>,
    ) -> Vec<f64> {
        let n = self.lattice.n;
        let off = self.off();
        let stride = n.pow((d - 1 - q) as u32);
        let outer = n.pow(q as u32);
        let mut out = vec![0.0; src.len()];
        let mut v = vec![0.0; n];
        for o in 0..outer {
            let base = o * n * stride;
            for r in 0..stride {
                let p = partner.map(|(dim, tab)| {
                    let idx = if dim > q {
                        (r / n.pow((d - 1 - dim) as u32)) % n
                    } else {
                        (o / n.pow((q - 1 - dim) as u32)) % n
                    };
                    (idx, tab)
                });
                let mut any = false;
                for b in 0..n {
                    let w = match (p, fixed) {
                        (Some((pi, tab)), _) => {
                            if forward {
                                tab[pi + off - b]
                            } else {
                                tab[b + off - pi]
                            }
                        }
                        (None, Some(f)) => f[b],
                        (None, None) => 1.0,
                    };
                    v[b] = src[base + b * stride + r] * w;
                    any |= v[b] != 0.0;
                }
                if !any {
                    continue;
                }
                if n >= FFT_THRESHOLD {
                    let kernel = if forward { &self.g } else { &self.g_rev };
                    let c = fft::convolve(&v, kernel);
                    for a in 0..n {
                        out[base + a * stride + r] = c[a + off].max(0.0);
                    }
                } else {
                    // G(a - b) = g_rev[off - a + b], G(b - a) = g[off - a + b]
                    let kernel = if forward { &self.g_rev } else { &self.g };
                    for a in 0..n {
                        out[base + a * stride + r] = dot(&v, &kernel[off - a..off - a + n]);
                    }
                }
            }
        }
        out
    }

    /// Multiplies dimension `q` of `data` by `w`.
    fn scale_dim(&self, data: &mut [f64], d: usize, q: usize, w: &[f64]) {
        let n = self.lattice.n;
        let stride = n.pow((d - 1 - q) as u32);
        for (i, v) in data.iter_mut().enumerate() {
            *v *= w[(i / stride) % n];
        }
    }

    /// Outer product of per-dimension factors.
    fn product(&self, factors: &[Vec<f64>]) -> Vec<f64> {
        let mut data = vec![1.0];
        for f in factors {
            let mut next = Vec::with_capacity(data.len() * f.len());
            for &a in &data {
                next.extend(f.iter().map(|&b| a * b));
            }
            data = next;
        }
        data
    }

    /// Forward messages over curves `1..=d` at columns `1..=T-2` (index `j - 1`):
    /// all columns `1..=j` integrated except column `j`, which is kept.
    /// `below` is curve `d + 1` on `0..T-1`.
    fn forward_messages(&self, d: usize, x: &[f64], below: &[f64]) -> Result<Vec<Message>> {
        let t = below.len();
        let mut out: Vec<Message> = Vec::with_capacity(t - 2);
        // column 1 from the fixed column 0
        let factors: Vec<Vec<f64>> = (0..d)
            .map(|q| {
                let mut f = self.g_against(x[q], false);
                if q > 0 {
                    let bond = self.bond_against(0, x[q - 1], false);
                    f.iter_mut().zip(bond).for_each(|(a, b)| *a *= b);
                }
                f
            })
            .collect();
        let mut msg = Message {
            d,
            data: self.product(&factors),
            log_scale: 0.0,
        };
        msg.normalize()?;
        out.push(msg);
        for j in 2..t - 1 {
            let prev = &out[j - 2];
            let bond = &self.bonds[j - 1];
            let wc = self.bond_against(j - 1, below[j], true);
            let mut data = self.apply_dim(&prev.data, d, d - 1, true, None, Some(&wc));
            for q in (0..d - 1).rev() {
                data = self.apply_dim(&data, d, q, true, Some((q + 1, bond)), None);
            }
            let mut m = Message {
                d,
                data,
                log_scale: prev.log_scale,
            };
            m.normalize()?;
            out.push(m);
        }
        Ok(out)
    }

    /// Backward message over curves `1..=d` at column `T-2`, from the fixed
    /// column `T-1`; `c` is curve `d + 1` at `T-1`.
    fn backward_init(&self, d: usize, y: &[f64], c: f64) -> Result<Message> {
        if d == 0 {
            return Ok(Message::unit());
        }
        let j = self.bonds.len() - 1;
        let factors: Vec<Vec<f64>> = (0..d)
            .map(|q| {
                let mut f = self.g_against(y[q], true);
                let next = if q + 1 < d { y[q + 1] } else { c };
                let bond = self.bond_against(j, next, true);
                f.iter_mut().zip(bond).for_each(|(a, b)| *a *= b);
                f
            })
            .collect();
        let mut m = Message {
            d,
            data: self.product(&factors),
            log_scale: 0.0,
        };
        m.normalize()?;
        Ok(m)
    }

    /// Moves a backward message from column `j + 1` to column `j`; `c` is
    /// curve `d + 1` at column `j + 1`.
    fn backward_step(&self, msg: &Message, j: usize, c: f64) -> Result<Message> {
        let d = msg.d;
        if d == 0 {
            return Ok(Message::unit());
        }
        let bond = &self.bonds[j];
        let mut data = self.apply_dim(&msg.data, d, 0, false, None, None);
        for q in 1..d {
            data = self.apply_dim(&data, d, q, false, Some((q - 1, bond)), None);
        }
        let wc = self.bond_against(j, c, true);
        self.scale_dim(&mut data, d, d - 1, &wc);
        let mut m = Message {
            d,
            data,
            log_scale: msg.log_scale,
        };
        m.normalize()?;
        Ok(m)
    }

    /// `h(x) = R(x) sum_u F(u, x) B(u)` at point `(p1, p2)`; `right` is
    /// curve `p1` at `p2 + 1` and `below_right` curve `p1 + 1` at `p2 + 1`.
    fn combine(
        &self,
        fwd: &Message,
        bwd: &Message,
        p2: usize,
        right: f64,
        below_right: f64,
    ) -> Result<GridDensity> {
        let n = self.lattice.n;
        let mut values = vec![0.0; n];
        let prefix = fwd.data.len() / n;
        for (u, &bu) in bwd.data.iter().enumerate().take(prefix) {
            if bu == 0.0 {
                continue;
            }
            let row = &fwd.data[u * n..(u + 1) * n];
            values.iter_mut().zip(row).for_each(|(v, f)| *v += bu * f);
        }
        let g = self.g_against(right, true);
        let w = self.bond_against(p2, below_right, true);
        for i in 0..n {
            values[i] *= g[i] * w[i];
        }
        let max = values.iter().copied().fold(0.0_f64, f64::max);
        if !(max > 1e-300 && max.is_finite()) {
            return Err(precision!(
                "conditional density lost all mass (max {max:e})"
            ));
        }
        values.iter_mut().for_each(|v| *v /= max);
        let l = &self.lattice;
        GridDensity::new(
            l.point(0),
            l.point(n - 1),
            values,
            fwd.log_scale + bwd.log_scale + math::ln(max),
        )
    }
}

/// The uniform-independent part of the coupling for one boundary.
#[derive(Debug, Clone)]
pub struct CouplingPlan<'a> {
    model: &'a CouplingModel,
    boundary: BoundaryTriple,
    tables: Option<Tables>,
    top_forward: Vec<Message>,
}

impl CouplingPlan<'_> {
    pub fn boundary(&self) -> &BoundaryTriple {
        &self.boundary
    }

    /// Rows with endpoints set and interior `NaN`.
    fn empty_rows(&self) -> Vec<Vec<f64>> {
        let t = self.model.t;
        (0..self.model.k)
            .map(|i| {
                let mut r = vec![f64::NAN; t];
                r[0] = self.boundary.x[i];
                r[t - 1] = self.boundary.y[i];
                r
            })
            .collect()
    }

    fn forward_for(
        &self,
        tables: &Tables,
        p1: usize,
        rows: &[Vec<f64>],
    ) -> Result<Cow<'_, [Message]>> {
        if p1 == self.model.k && !self.top_forward.is_empty() {
            Ok(Cow::Borrowed(&self.top_forward))
        } else if p1 == self.model.k {
            Ok(Cow::Owned(tables.forward_messages(
                p1,
                &self.boundary.x,
                &self.boundary.z,
            )?))
        } else {
            Ok(Cow::Owned(tables.forward_messages(
                p1,
                &self.boundary.x,
                &rows[p1],
            )?))
        }
    }

    fn below<'r>(&'r self, p1: usize, rows: &'r [Vec<f64>]) -> &'r [f64] {
        if p1 == self.model.k {
            &self.boundary.z
        } else {
            &rows[p1]
        }
    }

    /// See [`CouplingModel::conditional_density`].
    pub fn conditional_density(
        &self,
        fixed: &DiscreteLineEnsemble,
        m: usize,
    ) -> Result<GridDensity> {
        let (k, t) = (self.model.k, self.model.t);
        let tables = self
            .tables
            .as_ref()
            .ok_or_else(|| domain!("T = 2 has no interior points"))?;
        if m == 0 || m > k * (t - 2) {
            return Err(domain!("point index {m} outside 1..={}", k * (t - 2)));
        }
        if fixed.first_curve() != 1
            || fixed.num_curves() != k
            || fixed.t0() != 0
            || fixed.t1() != t as i64 - 1
        {
            return Err(domain!(
                "fixed values must cover curves 1..={k} on 0..={}",
                t - 1
            ));
        }
        let order = order_points(k, t)?;
        let p = order.point(m);
        let mut rows = self.empty_rows();
        for a in order.successors(m) {
            let v = fixed.at(a.curve, a.time as i64);
            if !v.is_finite() {
                return Err(domain!(
                    "fixed value at ({}, {}) is not finite",
                    a.curve,
                    a.time
                ));
            }
            rows[a.curve - 1][a.time] = v;
        }
        let fwd = self.forward_for(tables, p.curve, &rows)?;
        let d = p.curve - 1;
        let mut bwd = tables.backward_init(d, &self.boundary.y, self.boundary.y[d])?;
        for j in (p.time..t - 2).rev() {
            bwd = tables.backward_step(&bwd, j, rows[d][j + 1])?;
        }
        let below = self.below(p.curve, &rows);
        tables.combine(
            &fwd[p.time - 1],
            &bwd,
            p.time,
            rows[d][p.time + 1],
            below[p.time + 1],
        )
    }

    /// `ell(omega)`: points `P_m` for `m = k(T-2)` down to 1, each
    /// `F^{-1}(omega_m)` of its conditional law.
    pub fn sample(&self, omega: &CouplingUniforms) -> Result<DiscreteLineEnsemble> {
        let (k, t) = (self.model.k, self.model.t);
        let need = k * (t - 2);
        if omega.len() != need {
            return Err(domain!("need {need} uniforms, got {}", omega.len()));
        }
        let mut rows = self.empty_rows();
        if let Some(tables) = &self.tables {
            for p1 in (1..=k).rev() {
                let fwd = self.forward_for(tables, p1, &rows)?;
                let d = p1 - 1;
                let mut bwd = tables.backward_init(d, &self.boundary.y, self.boundary.y[d])?;
                for p2 in (1..t - 1).rev() {
                    if p2 < t - 2 {
                        bwd = tables.backward_step(&bwd, p2, rows[d][p2 + 1])?;
                    }
                    let below_right = self.below(p1, &rows)[p2 + 1];
                    let dens =
                        tables.combine(&fwd[p2 - 1], &bwd, p2, rows[d][p2 + 1], below_right)?;
                    let m = d * (t - 2) + p2;
                    rows[d][p2] = CellCdf::new(&dens)?.inverse(omega.as_slice()[m - 1]);
                }
            }
        }
        DiscreteLineEnsemble::from_rows(1, 0, &rows)
    }
}

/// CDF of a lattice density whose mass at each point is spread uniformly
/// over the cell of width `h` around it.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCdf {
    first_edge: f64,
    h: f64,
    cum: Vec<f64>,
}

impl CellCdf {
    pub fn new(density: &GridDensity) -> Result<Self> {
        let h = density.spacing();
        let v = density.values();
        if v.iter().any(|&x| !(x >= 0.0)) {
            return Err(internal!(
                "negative density entries make the CDF non-monotone"
            ));
        }
        let mut cum = Vec::with_capacity(v.len() + 1);
        cum.push(0.0);
        let mut acc = math::NeumaierSum::default();
        for &x in v {
            acc.add(x);
            cum.push(acc.total());
        }
        let total = acc.total();
        if !(total > 0.0 && total.is_finite()) {
            return Err(precision!("density has no mass"));
        }
        cum.iter_mut().for_each(|c| *c /= total);
        let n = cum.len();
        cum[n - 1] = 1.0;
        Ok(Self {
            first_edge: density.lo() - 0.5 * h,
            h,
            cum,
        })
    }

    pub fn eval(&self, s: f64) -> f64 {
        let t = (s - self.first_edge) / self.h;
        if !(t > 0.0) {
            return 0.0;
        }
        let n = self.cum.len();
        if t >= (n - 1) as f64 {
            return 1.0;
        }
        let i = t as usize;
        let f = t - i as f64;
        self.cum[i] + f * (self.cum[i + 1] - self.cum[i])
    }

    /// Smallest `s` with `F(s) = u`.
    pub fn inverse(&self, u: f64) -> f64 {
        crate::grid::inverse_linear(&self.cum, self.first_edge, self.h, u)
    }
}

/// `F(s) = int_{-inf}^s h / int h` for a lattice density.
pub fn conditional_cdf(density: &GridDensity, s: f64) -> Result<f64> {
    Ok(CellCdf::new(density)?.eval(s))
}

/// Outcome of a pathwise monotonicity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub draws: usize,
    pub epsilon_grid: f64,
    /// `max (ell_low - ell_high)^+` over draws and lattice points.
    pub max_violation: f64,
    pub violations_beyond_epsilon: usize,
}

impl MonotonicityReport {
    pub fn holds(&self) -> bool {
        self.violations_beyond_epsilon == 0
    }

    pub fn to_stat_report(&self) -> StatReport {
        let mut r = StatReport::new("monotonicity");
        r.push("draws", self.draws as f64, 0.0);
        r.push("epsilon_grid", self.epsilon_grid, 0.0);
        r.push("max_violation", self.max_violation, 0.0);
        r.push(
            "violations_beyond_epsilon",
            self.violations_beyond_epsilon as f64,
            0.0,
        );
        r
    }
}

fn max_excess(low: &DiscreteLineEnsemble, high: &DiscreteLineEnsemble) -> f64 {
    low.values()
        .iter()
        .zip(high.values())
        .map(|(a, b)| a - b)
        .fold(0.0_f64, f64::max)
}

/// Samples both boundaries under `n_draws` common uniforms and records how
/// far `ell_low` rises above `ell_high`.
pub fn monotonicity_check<R: Rng + ?Sized>(
    model: &CouplingModel,
    low: &BoundaryTriple,
    high: &BoundaryTriple,
    n_draws: usize,
    rng: &mut R,
) -> Result<MonotonicityReport> {
    if !low.le(high) {
        return Err(domain!("boundaries are not ordered componentwise"));
    }
    let pl = model.plan(low)?;
    let ph = model.plan(high)?;
    let eps = model.epsilon_grid(low)?.max(model.epsilon_grid(high)?);
    let len = model.k * (model.t - 2);
    let mut worst = 0.0_f64;
    let mut bad = 0;
    for _ in 0..n_draws {
        let omega = CouplingUniforms::sample(len, rng);
        let v = max_excess(&pl.sample(&omega)?, &ph.sample(&omega)?);
        worst = worst.max(v);
        if v > eps {
            bad += 1;
        }
    }
    Ok(MonotonicityReport {
        draws: n_draws,
        epsilon_grid: eps,
        max_violation: worst,
        violations_beyond_epsilon: bad,
    })
}

/// `b` moved by at most `delta` in sup norm: `x + delta`, `y - delta`, `z + delta`.
pub fn perturbed(b: &BoundaryTriple, delta: f64) -> BoundaryTriple {
    BoundaryTriple {
        x: b.x.iter().map(|v| v + delta).collect(),
        y: b.y.iter().map(|v| v - delta).collect(),
        z: b.z.iter().map(|v| v + delta).collect(),
    }
}

/// Sup-norm change of `ell(omega)` when `b` is perturbed by `delta`.
pub fn continuity_check(
    model: &CouplingModel,
    b: &BoundaryTriple,
    delta: f64,
    omega: &CouplingUniforms,
) -> Result<f64> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(domain!("delta must be a finite nonnegative number"));
    }
    let base = model.sample(b, omega)?;
    let moved = model.sample(&perturbed(b, delta), omega)?;
    Ok(base
        .values()
        .iter()
        .zip(moved.values())
        .map(|(a, c)| (a - c).abs())
        .fold(0.0_f64, f64::max))
}

/// Continuity along `delta0, delta0/2, ...` (`halvings + 1` values).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub deltas: Vec<f64>,
    pub changes: Vec<f64>,
    pub epsilon_grid: f64,
}

impl ContinuityReport {
    /// Each change is at most the previous one plus `epsilon_grid`.
    pub fn shrinks(&self) -> bool {
        self.changes
            .windows(2)
            .all(|w| w[1] <= w[0] + self.epsilon_grid)
    }
}

pub fn continuity_schedule(
    model: &CouplingModel,
    b: &BoundaryTriple,
    delta0: f64,
    halvings: usize,
    omega: &CouplingUniforms,
) -> Result<ContinuityReport> {
    if !(delta0 > 0.0) {
        return Err(domain!("delta must be positive"));
    }
    let base = model.sample(b, omega)?;
    let mut deltas = Vec::with_capacity(halvings + 1);
    let mut changes = Vec::with_capacity(halvings + 1);
    let mut delta = delta0;
    for _ in 0..=halvings {
        let moved = model.sample(&perturbed(b, delta), omega)?;
        changes.push(
            base.values()
                .iter()
                .zip(moved.values())
                .map(|(a, c)| (a - c).abs())
                .fold(0.0_f64, f64::max),
        );
        deltas.push(delta);
        delta *= 0.5;
    }
    Ok(ContinuityReport {
        deltas,
        changes,
        epsilon_grid: model.epsilon_grid(b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::Hamiltonian;
    use crate::rng::rng_for;
    use crate::special::Theta;

    fn model(k: usize, t: usize, h: Hamiltonian) -> CouplingModel {
        let hrw = HrwSpec::log_gamma(Theta::new(1.0).unwrap());
        let inter = InteractionSpec::uniform(h, 0, t as i64 - 1).unwrap();
        CouplingModel::new(hrw, inter, k, t, CouplingParams::default()).unwrap()
    }

    #[test]
    fn point_order_fixtures() {
        let o = order_points(1, 4).unwrap();
        assert_eq!(
            o.points(),
            &[Point { curve: 1, time: 1 }, Point { curve: 1, time: 2 }]
        );
        let o = order_points(2, 3).unwrap();
        assert_eq!(
            o.points(),
            &[Point { curve: 1, time: 1 }, Point { curve: 2, time: 1 }]
        );
        let o = order_points(2, 6).unwrap();
        for m in 1..=o.len() {
            assert_eq!(o.successors(m).len() + o.predecessors(m).len() + 1, o.len());
            assert!(o.successors(m).iter().all(|&a| a > o.point(m)));
            assert_eq!(o.index_of(o.point(m)), Some(m));
        }
        assert!(order_points(0, 3).is_err());
    }

    #[test]
    fn uniforms_validate() {
        assert!(CouplingUniforms::new(vec![0.5, 0.0]).is_err());
        assert!(CouplingUniforms::new(vec![0.5, 1.0]).is_err());
        assert!(CouplingUniforms::new(vec![0.2]).is_ok());
    }

    #[test]
    fn two_times_returns_endpoints() {
        let m = model(2, 2, Hamiltonian::Exp);
        let b = BoundaryTriple::new(vec![1.0, -1.0], vec![2.0, 0.5], vec![-3.0, -2.0]).unwrap();
        let e = m
            .sample(&b, &CouplingUniforms::new(vec![]).unwrap())
            .unwrap();
        assert_eq!(e.values(), &[1.0, 2.0, -1.0, 0.5]);
    }

    #[test]
    fn single_point_density_is_product_of_increments() {
        // k = 1, T = 3, no interaction: h(u) = G(u - x) G(y - u)
        let m = model(1, 3, Hamiltonian::Zero);
        let b = BoundaryTriple::free(vec![0.3], vec![-0.4], 3).unwrap();
        let fixed = DiscreteLineEnsemble::zeros(1, 0, 2).unwrap();
        let dens = m.conditional_density(&b, &fixed, 1).unwrap();
        let g = HrwSpec::log_gamma(Theta::new(1.0).unwrap());
        let lmax =
            dens.values().iter().enumerate().fold(
                (0, 0.0),
                |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
            );
        let ref_log =
            g.log_density(dens.point(lmax.0) - 0.3) + g.log_density(-0.4 - dens.point(lmax.0));
        for i in (0..dens.m()).step_by(7) {
            let u = dens.point(i);
            let want = math::exp(g.log_density(u - 0.3) + g.log_density(-0.4 - u) - ref_log);
            assert!(
                (dens.values()[i] - want).abs() < 1e-12 * (1.0 + want),
                "at {u}"
            );
        }
    }

    #[test]
    fn cdf_contract() {
        let m = model(1, 3, Hamiltonian::Zero);
        let b = BoundaryTriple::free(vec![0.0], vec![0.0], 3).unwrap();
        let fixed = DiscreteLineEnsemble::zeros(1, 0, 2).unwrap();
        let dens = m.conditional_density(&b, &fixed, 1).unwrap();
        assert!(conditional_cdf(&dens, dens.lo()).unwrap() <= 1e-10);
        assert!(conditional_cdf(&dens, dens.hi()).unwrap() >= 1.0 - 1e-10);
        let cdf = CellCdf::new(&dens).unwrap();
        let med = cdf.inverse(0.5);
        assert!((cdf.eval(med) - 0.5).abs() < 1e-12);
        // symmetric Gaussian density about 1.25
        let g =
            GridDensity::from_log_fn(-3.75, 6.25, 401, |x| -0.5 * (x - 1.25) * (x - 1.25)).unwrap();
        assert!((conditional_cdf(&g, 1.25).unwrap() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn monotone_in_boundary_under_common_uniforms() {
        let m = model(2, 5, Hamiltonian::Exp);
        let lo = BoundaryTriple::new(
            vec![0.0, -1.0],
            vec![0.5, -2.0],
            vec![-4.0, -3.0, -5.0, -4.0, -4.5],
        )
        .unwrap();
        let hi = BoundaryTriple::new(
            vec![0.4, -0.5],
            vec![0.5, -1.0],
            vec![-3.0, -3.0, -2.0, -4.0, -4.0],
        )
        .unwrap();
        let rep = monotonicity_check(&m, &lo, &hi, 20, &mut rng_for(3, 0)).unwrap();
        assert!(rep.holds(), "{rep:?}");
        let same = monotonicity_check(&m, &lo, &lo, 5, &mut rng_for(3, 1)).unwrap();
        assert_eq!(same.max_violation, 0.0);
    }

    #[test]
    fn shift_covariance_on_lattice_multiples() {
        let m = model(2, 4, Hamiltonian::Exp);
        let b = BoundaryTriple::new(
            vec![0.0, -1.0],
            vec![0.5, -1.5],
            vec![-3.0, -3.5, -3.0, -4.0],
        )
        .unwrap();
        let c = 7.0 * m.spacing();
        let omega = CouplingUniforms::sample(4, &mut rng_for(5, 0));
        let e0 = m.sample(&b, &omega).unwrap();
        let e1 = m.sample(&b.shifted(c), &omega).unwrap();
        for (a, b) in e0.values().iter().zip(e1.values()) {
            assert!((b - a - c).abs() < 1e-9, "{a} {b}");
        }
    }

    #[test]
    fn continuity_at_zero_and_shrinking() {
        let m = model(1, 5, Hamiltonian::Exp);
        let b = BoundaryTriple::new(vec![0.0], vec![1.0], vec![-2.0; 5]).unwrap();
        let omega = CouplingUniforms::sample(3, &mut rng_for(9, 0));
        assert_eq!(continuity_check(&m, &b, 0.0, &omega).unwrap(), 0.0);
        let rep = continuity_schedule(&m, &b, 0.5, 5, &omega).unwrap();
        assert!(rep.shrinks(), "{rep:?}");
    }

    #[test]
    fn k_limits() {
        let hrw = HrwSpec::log_gamma(Theta::new(1.0).unwrap());
        let inter = InteractionSpec::uniform(Hamiltonian::Exp, 0, 4).unwrap();
        assert!(
            CouplingModel::new(hrw.clone(), inter.clone(), 3, 5, CouplingParams::default())
                .is_err()
        );
        let p = CouplingParams {
            allow_k3: true,
            ..CouplingParams::default()
        };
        assert!(CouplingModel::new(hrw.clone(), inter.clone(), 3, 5, p).is_ok());
        let short = InteractionSpec::uniform(Hamiltonian::Exp, 0, 2).unwrap();
        assert!(CouplingModel::new(hrw, short, 2, 5, CouplingParams::default()).is_err());
    }
}
