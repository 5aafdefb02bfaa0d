//! Digamma-family special functions and the KPZ scaling constants of the
//! log-gamma polymer.
//!
//! The polygamma functions are evaluated as their defining series: a short
//! head is summed term by term and the tail `sum_{n >= N} f(n)` is replaced by
//! its Euler-Maclaurin integral expansion, which is exact to double precision
//! once `z + N >= 12`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, internal, Result};
use crate::math;

/// Shape parameter of the inverse-gamma weights, `theta > 0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Theta(f64);

impl Theta {
    pub fn new(theta: f64) -> Result<Self> {
        if theta.is_finite() && theta > 0.0 {
            Ok(Self(theta))
        } else {
            Err(domain!(
                "theta must be a positive finite number, got {theta}"
            ))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl Default for Theta {
    fn default() -> Self {
        Self(1.0)
    }
}

impl TryFrom<f64> for Theta {
    type Error = crate::Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Theta> for f64 {
    fn from(t: Theta) -> f64 {
        t.0
    }
}

/// `B_2, B_4, ..., B_16`.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Argument beyond which the tail expansion is used directly.
const TAIL_START: f64 = 12.0;

fn check_positive(name: &str, z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(domain!(
            "{name} requires a positive finite argument, got {z}"
        ))
    }
}

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    check_positive("log_gamma", x)?;
    Ok(libm::lgamma(x))
}

pub(crate) fn psi(mut z: f64) -> f64 {
    let mut head = math::NeumaierSum::default();
    while z < TAIL_START {
        head.add(-1.0 / z);
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    let mut pow = inv2;
    let mut tail = math::ln(z) - 0.5 / z;
    for (k, b) in BERNOULLI.iter().enumerate() {
        tail -= b / (2.0 * (k + 1) as f64) * pow;
        pow *= inv2;
    }
    tail + head.total()
}

/// `zeta(s, z) = sum_{n >= 0} (n + z)^-s` for integer `s >= 2`.
pub(crate) fn hurwitz(s: u32, mut z: f64) -> f64 {
    let sf = s as f64;
    let mut head = math::NeumaierSum::default();
    while z < TAIL_START {
        head.add(math::powf(z, -sf));
        z += 1.0;
    }
    let zs = math::powf(z, -sf);
    let mut tail = z * zs / (sf - 1.0) + 0.5 * zs;
    // B_{2k}/(2k)! * s(s+1)...(s+2k-2) * z^{-s-2k+1}
    let mut rising = sf;
    let mut factorial = 2.0;
    let mut zpow = zs / z;
    for (k, b) in BERNOULLI.iter().enumerate() {
        tail += b / factorial * rising * zpow;
        let j = 2.0 * (k + 1) as f64;
        rising *= (sf + j - 1.0) * (sf + j);
        factorial *= (j + 1.0) * (j + 2.0);
        zpow /= z * z;
    }
    tail + head.total()
}

/// Digamma `Psi(z) = -gamma_E + sum_{n >= 0} [1/(n+1) - 1/(n+z)]`.
pub fn digamma(z: f64) -> Result<f64> {
    check_positive("digamma", z)?;
    Ok(psi(z))
}

/// Trigamma `Psi'(z) = sum_{n >= 0} 1/(n+z)^2`.
pub fn trigamma(z: f64) -> Result<f64> {
    check_positive("trigamma", z)?;
    Ok(hurwitz(2, z))
}

/// Hurwitz zeta `sum_{n >= 0} (n+z)^-s` for integer `s >= 2`.
pub fn hurwitz_zeta(s: u32, z: f64) -> Result<f64> {
    if s < 2 {
        return Err(domain!("hurwitz_zeta diverges for s = {s}"));
    }
    check_positive("hurwitz_zeta", z)?;
    Ok(hurwitz(s, z))
}

fn g_unchecked(theta: f64, z: f64) -> f64 {
    hurwitz(2, theta - z) / hurwitz(2, z)
}

/// `g_theta(z) = Psi'(theta - z) / Psi'(z)`, a strictly increasing bijection
/// from `(0, theta)` onto `(0, inf)`.
pub fn g_theta(theta: Theta, z: f64) -> Result<f64> {
    let t = theta.get();
    if !(z > 0.0 && z < t) {
        return Err(domain!("g_theta needs z in (0, {t}), got {z}"));
    }
    Ok(g_unchecked(t, z))
}

/// Inverse of [`g_theta`], found by bisection on `(0, theta)`.
pub fn g_theta_inv(theta: Theta, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(domain!("g_theta_inv needs x > 0, got {x}"));
    }
    let t = theta.get();
    if x == 1.0 {
        return Ok(0.5 * t);
    }
    let (mut lo, mut hi) = (0.0, t);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_unchecked(t, mid) < x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    if z <= 0.0 || z >= t {
        // x is beyond what double precision can resolve near an endpoint
        return Err(domain!(
            "g_theta_inv({x}) is not representable for theta = {t}"
        ));
    }
    Ok(z)
}

/// `h_theta(x) = x Psi(g^-1(x)) + Psi(theta - g^-1(x))`.
pub fn h_theta(theta: Theta, x: f64) -> Result<f64> {
    let z = g_theta_inv(theta, x)?;
    Ok(x * psi(z) + psi(theta.get() - z))
}

/// `h'_theta(x) = Psi(g^-1(x))`.
pub fn h_theta_prime(theta: Theta, x: f64) -> Result<f64> {
    Ok(psi(g_theta_inv(theta, x)?))
}

/// Fluctuation scale
/// `d_theta(x) = [sum x/(n + g^-1(x))^3 + sum 1/(n + theta - g^-1(x))^3]^(1/3)`.
pub fn d_theta(theta: Theta, x: f64) -> Result<f64> {
    let z = g_theta_inv(theta, x)?;
    Ok(math::cbrt(x * hurwitz(3, z) + hurwitz(3, theta.get() - z)))
}

/// Step of the central second difference used for `h''_theta(1)`.
pub const CURVATURE_STEP: f64 = 1e-4;

/// Constants of the KPZ 1/3 : 2/3 rescaling of the log-gamma line ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConstants {
    /// Transversal exponent (2/3).
    pub alpha: f64,
    /// Global slope `-h'_theta(1)`.
    pub p: f64,
    /// Parabola curvature `h''_theta(1) / 4`.
    pub lambda: f64,
    /// Diffusion constant `sqrt(Psi'(theta/2))`.
    pub sigma_p: f64,
    /// `d_theta(1)`.
    pub d_theta_1: f64,
    /// `h_theta(1) = 2 Psi(theta/2)`.
    pub h_theta_1: f64,
    /// Window coefficient `c` in `psi(N) = c N^(1/3)`.
    pub psi_coeff: f64,
}

impl ScalingConstants {
    /// Half-width `psi(N)` of the scaled window.
    pub fn window(&self, n: usize) -> f64 {
        self.psi_coeff * math::cbrt(n as f64)
    }
}

/// All scaling constants for a given `theta`.
pub fn scaling_constants(theta: Theta) -> Result<ScalingConstants> {
    let half = 0.5 * theta.get();
    let h1 = h_theta(theta, 1.0)?;
    let e = CURVATURE_STEP;
    let second = (h_theta(theta, 1.0 + e)? - 2.0 * h1 + h_theta(theta, 1.0 - e)?) / (e * e);
    let lambda = 0.25 * second;
    if !(lambda > 0.0) {
        return Err(internal!(
            "curvature lambda = {lambda} is not positive for theta = {}",
            theta.get()
        ));
    }
    Ok(ScalingConstants {
        alpha: 2.0 / 3.0,
        p: -psi(half),
        lambda,
        sigma_p: math::sqrt(hurwitz(2, half)),
        d_theta_1: math::cbrt(2.0 * hurwitz(3, half)),
        h_theta_1: 2.0 * psi(half),
        psi_coeff: 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{EULER_GAMMA, PI};

    fn th(v: f64) -> Theta {
        Theta::new(v).unwrap()
    }

    /// Brute-force partial sums with integral bounds on the remainder:
    /// `sum_{n >= N} (n+z)^-s` lies between the integrals from `N+z` and `N-1+z`;
    /// the midpoint estimate is used.
    fn brute_zeta(s: i32, z: f64) -> f64 {
        let n_terms = 1_000_000;
        let mut acc = math::NeumaierSum::default();
        for n in (0..n_terms).rev() {
            acc.add(libm::pow(n as f64 + z, -s as f64));
        }
        let a = n_terms as f64 + z;
        let upper = libm::pow(a - 1.0, 1.0 - s as f64) / (s as f64 - 1.0);
        let lower = libm::pow(a, 1.0 - s as f64) / (s as f64 - 1.0);
        acc.total() + 0.5 * (upper + lower)
    }

    fn brute_digamma(z: f64) -> f64 {
        // -gamma + sum_{n < N} [1/(n+1) - 1/(n+z)] + midpoint integral of the remainder
        let n_terms = 1_000_000;
        let mut acc = math::NeumaierSum::default();
        for n in (0..n_terms).rev() {
            let n = n as f64;
            acc.add(1.0 / (n + 1.0) - 1.0 / (n + z));
        }
        let a = n_terms as f64 - 0.5;
        -EULER_GAMMA + acc.total() + libm::log((a + z) / (a + 1.0))
    }

    #[test]
    fn log_gamma_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert_eq!(log_gamma(2.0).unwrap(), 0.0);
        // Gamma(1/2) = int t^{-1/2} e^{-t} dt = 2 int e^{-u^2} du, by Simpson on [0, 12]
        let n = 20_000;
        let h = 12.0 / n as f64;
        let mut s = 0.0;
        for i in 0..=n {
            let u = i as f64 * h;
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            s += w * libm::exp(-u * u);
        }
        let quad = libm::log(2.0 * s * h / 3.0);
        let v = log_gamma(0.5).unwrap();
        assert!((v - quad).abs() < 1e-12 * quad.abs());
        assert!((v - 0.5 * libm::log(PI)).abs() < 1e-14);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.0).is_err());
    }

    #[test]
    fn log_gamma_relative_accuracy_against_recurrence() {
        // ln Gamma(x+1) - ln Gamma(x) = ln x
        for &x in &[1e-3, 0.1, 0.7, 3.3, 17.0, 250.0, 999.0] {
            let d = log_gamma(x + 1.0).unwrap() - log_gamma(x).unwrap();
            assert!(
                (d - libm::log(x)).abs() <= 1e-12 * log_gamma(x).unwrap().abs().max(1.0),
                "x = {x}"
            );
        }
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-14);
        let half = -EULER_GAMMA - 2.0 * libm::log(2.0);
        assert!((digamma(0.5).unwrap() - half).abs() < 1e-13);
        for &z in &[0.5, 0.03, 3.7] {
            assert!(
                (digamma(z).unwrap() - brute_digamma(z)).abs() < 1e-10,
                "z = {z}"
            );
        }
        assert!(digamma(0.0).is_err());
        assert!(digamma(-2.5).is_err());
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0).unwrap() - brute_zeta(2, 1.0)).abs() < 1e-10);
        assert!((trigamma(1.0).unwrap() - PI * PI / 6.0).abs() < 1e-14);
        assert!((trigamma(2.0).unwrap() - (PI * PI / 6.0 - 1.0)).abs() < 1e-14);
        for &z in &[0.01, 0.25, 1.5, 9.0] {
            assert!(
                (trigamma(z).unwrap() - brute_zeta(2, z)).abs() < 1e-10,
                "z = {z}"
            );
        }
        assert!(trigamma(-1.0).is_err());
    }

    #[test]
    fn third_order_zeta_matches_brute_force() {
        for &z in &[0.125, 0.5, 2.0, 7.5] {
            assert!(
                (hurwitz_zeta(3, z).unwrap() - brute_zeta(3, z)).abs() < 1e-10,
                "z = {z}"
            );
        }
        // zeta(3, 1/2) = 7 zeta(3)
        assert!((hurwitz_zeta(3, 0.5).unwrap() - 7.0 * 1.202_056_903_159_594_2).abs() < 1e-13);
        assert!(hurwitz_zeta(1, 1.0).is_err());
    }

    #[test]
    fn digamma_recurrence() {
        for i in 1..=100 {
            let z = 0.1 * i as f64;
            assert!((psi(z + 1.0) - psi(z) - 1.0 / z).abs() < 1e-10, "z = {z}");
        }
    }

    #[test]
    fn g_symmetry_and_fixture() {
        for &t in &[0.25, 1.0, 3.0] {
            assert!((g_theta(th(t), 0.5 * t).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(g_theta_inv(th(t), 1.0).unwrap(), 0.5 * t);
        }
        // theta = 1, z = 1/4: brute-force series ratio
        let expect = brute_zeta(2, 0.75) / brute_zeta(2, 0.25);
        assert!((g_theta(th(1.0), 0.25).unwrap() - expect).abs() < 1e-10);
        assert!((g_theta(th(1.0), 0.25).unwrap() - 0.147_806_652_116_408_76).abs() < 1e-12);
        assert!(g_theta(th(1.0), 0.0).is_err());
        assert!(g_theta(th(1.0), 1.0).is_err());
    }

    #[test]
    fn g_inverse_fixture() {
        // theta = 2, x = 3: bisection against the independently summed series
        let (mut lo, mut hi) = (0.0_f64, 2.0_f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if brute_zeta(2, 2.0 - mid) / brute_zeta(2, mid) < 3.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let z = g_theta_inv(th(2.0), 3.0).unwrap();
        assert!((z - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((g_theta(th(2.0), z).unwrap() - 3.0).abs() < 1e-10 * 3.0);
        assert!(g_theta_inv(th(2.0), 0.0).is_err());
        assert!(g_theta_inv(th(2.0), -1.0).is_err());
    }

    #[test]
    fn g_round_trips() {
        let t = th(1.0);
        for &x in &[0.1, 1.0, 10.0] {
            let z = g_theta_inv(t, x).unwrap();
            assert!((g_theta(t, z).unwrap() - x).abs() <= 1e-10 * x.max(1.0));
        }
    }

    #[test]
    fn h_values() {
        for &t in &[0.5, 1.0, 4.0] {
            let v = h_theta(th(t), 1.0).unwrap();
            assert!((v - 2.0 * psi(0.5 * t)).abs() < 1e-13);
        }
        // theta = 1, x = 2: composition of the checked pieces
        let z = g_theta_inv(th(1.0), 2.0).unwrap();
        let expect = 2.0 * brute_digamma(z) + brute_digamma(1.0 - z);
        assert!((h_theta(th(1.0), 2.0).unwrap() - expect).abs() < 1e-9);
        assert!(h_theta(th(1.0), 0.0).is_err());
    }

    #[test]
    fn h_prime_matches_central_difference() {
        for &t in &[0.25, 1.0, 5.0] {
            let e = 1e-5;
            let fd =
                (h_theta(th(t), 1.0 + e).unwrap() - h_theta(th(t), 1.0 - e).unwrap()) / (2.0 * e);
            assert!((fd - psi(0.5 * t)).abs() < 1e-6, "theta = {t}");
            assert!((h_theta_prime(th(t), 1.0).unwrap() - psi(0.5 * t)).abs() < 1e-14);
        }
    }

    #[test]
    fn h_second_difference_converges_quadratically() {
        let t = th(1.0);
        let d2 = |e: f64| {
            (h_theta(t, 1.0 + e).unwrap() - 2.0 * h_theta(t, 1.0).unwrap()
                + h_theta(t, 1.0 - e).unwrap())
                / (e * e)
        };
        let (a, b, c) = (d2(0.2), d2(0.1), d2(0.05));
        let ratio = (a - b) / (b - c);
        assert!((ratio - 4.0).abs() < 0.8, "Richardson ratio {ratio}");
    }

    #[test]
    fn scaling_constants_theta_one() {
        let c = scaling_constants(th(1.0)).unwrap();
        let z2 = brute_zeta(2, 0.5);
        let z3 = brute_zeta(3, 0.5);
        assert_eq!(c.alpha, 2.0 / 3.0);
        assert!((c.p - (EULER_GAMMA + 2.0 * libm::log(2.0))).abs() < 1e-12);
        assert!((c.h_theta_1 + 2.0 * (EULER_GAMMA + 2.0 * libm::log(2.0))).abs() < 1e-12);
        assert!((c.sigma_p - libm::sqrt(z2)).abs() < 1e-10);
        assert!((c.d_theta_1 - libm::cbrt(2.0 * z3)).abs() < 1e-10);
        // h''(1) = Psi'(theta/2)^2 / (4 zeta(3, theta/2)) by differentiating h' = Psi(g^-1)
        let lambda = z2 * z2 / (16.0 * z3);
        assert!(
            (c.lambda - lambda).abs() < 1e-5 * lambda,
            "{} vs {}",
            c.lambda,
            lambda
        );
        assert_eq!(c.psi_coeff, 0.5);
        assert!((c.window(8) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_positive_for_range_of_theta() {
        for &t in &[0.25, 0.5, 1.0, 2.0, 5.0] {
            let c = scaling_constants(th(t)).unwrap();
            assert!(c.lambda > 0.0);
            let z2 = hurwitz(2, 0.5 * t);
            let exact = z2 * z2 / (16.0 * hurwitz(3, 0.5 * t));
            assert!((c.lambda - exact).abs() < 1e-5 * exact, "theta = {t}");
        }
    }

    #[test]
    fn theta_rejects_bad_values() {
        assert!(Theta::new(0.0).is_err());
        assert!(Theta::new(f64::NAN).is_err());
        assert!(Theta::new(f64::INFINITY).is_err());
        assert_eq!(Theta::default().get(), 1.0);
    }
}
