//! Radix-2 FFT and linear convolution of real sequences.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Complex {
    re: f64,
    im: f64,
}

impl Complex {
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self {
            re: self.re * o.re - self.im * o.im,
            im: self.re * o.im + self.im * o.re,
        }
    }
}

/// In-place iterative FFT; `data.len()` must be a power of two.
/// `inverse` computes the unscaled inverse transform.
fn transform(data: &mut [Complex], inverse: bool) {
    let n = data.len();
    debug_assert!(n.is_power_of_two());
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * math::PI / len as f64;
        let half = len / 2;
        // twiddles computed directly rather than by recurrence to keep rounding flat
        let tw: Vec<Complex> = (0..half)
            .map(|t| Complex {
                re: math::cos(ang * t as f64),
                im: math::sin(ang * t as f64),
            })
            .collect();
        for start in (0..n).step_by(len) {
            for t in 0..half {
                let a = data[start + t];
                let b = data[start + t + half].mul(tw[t]);
                data[start + t] = Complex {
                    re: a.re + b.re,
                    im: a.im + b.im,
                };
                data[start + t + half] = Complex {
                    re: a.re - b.re,
                    im: a.im - b.im,
                };
            }
        }
        len <<= 1;
    }
}

/// Full linear convolution `c[n] = sum_i a[i] b[n-i]`, length `a.len() + b.len() - 1`.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return convolve_direct(a, b);
    }
    let n = out_len.next_power_of_two();
    // pack a into the real part and b into the imaginary part: one forward transform
    let mut buf = vec![Complex::default(); n];
    for (i, &x) in a.iter().enumerate() {
        buf[i].re = x;
    }
    for (i, &x) in b.iter().enumerate() {
        buf[i].im = x;
    }
    transform(&mut buf, false);
    let mut prod = vec![Complex::default(); n];
    for k in 0..n {
        let z = buf[k];
        let zc = buf[(n - k) % n];
        // A = (Z + conj Z_{-k}) / 2, B = (Z - conj Z_{-k}) / 2i
        let ar = 0.5 * (z.re + zc.re);
        let ai = 0.5 * (z.im - zc.im);
        let br = 0.5 * (z.im + zc.im);
        let bi = -0.5 * (z.re - zc.re);
        prod[k] = Complex {
            re: ar * br - ai * bi,
            im: ar * bi + ai * br,
        };
    }
    transform(&mut prod, true);
    let scale = 1.0 / n as f64;
    prod[..out_len].iter().map(|c| c.re * scale).collect()
}

/// Direct `O(|a| |b|)` convolution; exact up to summation rounding.
pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let a: Vec<f64> = (0..300).map(|i| math::sin(i as f64 * 0.37) + 1.5).collect();
        let b: Vec<f64> = (0..77).map(|i| math::cos(i as f64 * 1.1).abs()).collect();
        let f = convolve(&a, &b);
        let d = convolve_direct(&a, &b);
        assert_eq!(f.len(), d.len());
        let scale = d.iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        for (x, y) in f.iter().zip(&d) {
            assert!((x - y).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn small_inputs_and_delta() {
        assert_eq!(convolve(&[1.0, 2.0], &[3.0]), vec![3.0, 6.0]);
        assert!(convolve(&[], &[1.0]).is_empty());
        let mut delta = vec![0.0; 64];
        delta[0] = 1.0;
        let b: Vec<f64> = (0..64).map(|i| i as f64).collect();
        let c = convolve(&delta, &b);
        for (i, v) in c.iter().enumerate().take(64) {
            assert!((v - i as f64).abs() < 1e-12 * 64.0);
        }
    }
}
