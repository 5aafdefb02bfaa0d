//! Discrete line ensembles: curves indexed by `(i, j)` with `i` in
//! `first..first+K` and integer times `j` in `T0..=T1`, linearly interpolated
//! between integer times.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::math;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLineEnsemble {
    k: usize,
    first: usize,
    t0: i64,
    t1: i64,
    values: Vec<f64>,
}

impl DiscreteLineEnsemble {
    /// Zero-filled ensemble of curves `1..=k` on `t0..=t1`.
    pub fn zeros(k: usize, t0: i64, t1: i64) -> Result<Self> {
        Self::zeros_from(1, k, t0, t1)
    }

    /// Zero-filled ensemble of curves `first..first+k` on `t0..=t1`.
    pub fn zeros_from(first: usize, k: usize, t0: i64, t1: i64) -> Result<Self> {
        if k == 0 {
            return Err(domain!("a line ensemble needs at least one curve"));
        }
        if t0 >= t1 {
            return Err(domain!("need T0 < T1, got {t0} >= {t1}"));
        }
        let len = (t1 - t0 + 1) as usize;
        Ok(Self {
            k,
            first,
            t0,
            t1,
            values: vec![0.0; k * len],
        })
    }

    /// Builds an ensemble from one row per curve (curve `first` first).
    pub fn from_rows(first: usize, t0: i64, rows: &[Vec<f64>]) -> Result<Self> {
        let len = rows.first().map_or(0, Vec::len);
        if len < 2 {
            return Err(domain!("each curve needs at least two time points"));
        }
        if rows.iter().any(|r| r.len() != len) {
            return Err(domain!("curves have different lengths"));
        }
        let mut out = Self::zeros_from(first, rows.len(), t0, t0 + len as i64 - 1)?;
        for (r, row) in rows.iter().enumerate() {
            out.values[r * len..(r + 1) * len].copy_from_slice(row);
        }
        Ok(out)
    }

    #[inline]
    pub fn num_curves(&self) -> usize {
        self.k
    }

    /// Label of the top curve.
    #[inline]
    pub fn first_curve(&self) -> usize {
        self.first
    }

    #[inline]
    pub fn t0(&self) -> i64 {
        self.t0
    }

    #[inline]
    pub fn t1(&self) -> i64 {
        self.t1
    }

    /// Number of integer times `T1 - T0 + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        (self.t1 - self.t0 + 1) as usize
    }

    /// Always false; present for API symmetry with `len`.
    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn offset(&self, i: usize, j: i64) -> usize {
        (i - self.first) * self.len() + (j - self.t0) as usize
    }

    fn check(&self, i: usize, j: i64) -> Result<()> {
        if i < self.first || i >= self.first + self.k || j < self.t0 || j > self.t1 {
            return Err(domain!(
                "index ({i}, {j}) outside curves {}..={} and times {}..={}",
                self.first,
                self.first + self.k - 1,
                self.t0,
                self.t1
            ));
        }
        Ok(())
    }

    pub fn get(&self, i: usize, j: i64) -> Result<f64> {
        self.check(i, j)?;
        Ok(self.values[self.offset(i, j)])
    }

    pub fn set(&mut self, i: usize, j: i64, v: f64) -> Result<()> {
        self.check(i, j)?;
        let o = self.offset(i, j);
        self.values[o] = v;
        Ok(())
    }

    /// Unchecked accessor for hot loops; panics on bad indices.
    #[inline]
    pub fn at(&self, i: usize, j: i64) -> f64 {
        self.values[self.offset(i, j)]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: i64) -> &mut f64 {
        let o = self.offset(i, j);
        &mut self.values[o]
    }

    /// Values of curve `i` on `T0..=T1`.
    pub fn curve(&self, i: usize) -> Result<&[f64]> {
        self.check(i, self.t0)?;
        let len = self.len();
        let s = (i - self.first) * len;
        Ok(&self.values[s..s + len])
    }

    pub fn curve_mut(&mut self, i: usize) -> Result<&mut [f64]> {
        self.check(i, self.t0)?;
        let len = self.len();
        let s = (i - self.first) * len;
        Ok(&mut self.values[s..s + len])
    }

    /// Curve `i` at real time `s`, linearly interpolated.
    pub fn eval(&self, i: usize, s: f64) -> Result<f64> {
        if !(s >= self.t0 as f64 && s <= self.t1 as f64) {
            return Err(domain!("time {s} outside [{}, {}]", self.t0, self.t1));
        }
        let row = self.curve(i)?;
        let lo = math::floor(s);
        let j = (lo as i64 - self.t0) as usize;
        let frac = s - lo;
        if frac == 0.0 {
            return Ok(row[j]);
        }
        Ok(row[j] + frac * (row[j + 1] - row[j]))
    }

    /// All values, curve-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation() {
        let e =
            DiscreteLineEnsemble::from_rows(1, -1, &[vec![0.0, 2.0, -1.0], vec![5.0, 5.0, 5.0]])
                .unwrap();
        assert_eq!(e.eval(1, 0.0).unwrap(), 2.0);
        assert_eq!(e.eval(1, -0.5).unwrap(), 1.0);
        assert_eq!(e.eval(1, 0.5).unwrap(), 0.5);
        assert_eq!(e.eval(2, 0.25).unwrap(), 5.0);
        assert!(e.eval(1, 1.5).is_err());
        assert!(e.get(3, 0).is_err());
        assert_eq!(e.len(), 3);
    }

    #[test]
    fn offset_labels() {
        let mut e = DiscreteLineEnsemble::zeros_from(3, 2, 0, 4).unwrap();
        e.set(4, 2, 1.5).unwrap();
        assert_eq!(e.get(4, 2).unwrap(), 1.5);
        assert!(e.get(1, 2).is_err());
        assert_eq!(e.curve(4).unwrap()[2], 1.5);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DiscreteLineEnsemble::zeros(0, 0, 3).is_err());
        assert!(DiscreteLineEnsemble::zeros(1, 3, 3).is_err());
        assert!(DiscreteLineEnsemble::from_rows(1, 0, &[vec![1.0, 2.0], vec![1.0]]).is_err());
    }
}
