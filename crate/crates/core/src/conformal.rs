//! Split conformalized quantile regression.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::{Error, Result};

/// Orders a quantile pair so the lower end comes first.
pub fn order_pair(lo: f64, hi: f64) -> (f64, f64) {
    if lo > hi {
        (hi, lo)
    } else {
        (lo, hi)
    }
}

/// `s_i = max(lo_i - y_i, y_i - hi_i)`.
pub fn cqr_scores(lo: &[f64], hi: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if lo.len() != y.len() || hi.len() != y.len() {
        return Err(Error::SizeMismatch { expected: y.len(), got: lo.len().min(hi.len()) });
    }
    Ok(lo.iter().zip(hi).zip(y).map(|((l, h), v)| (l - v).max(v - h)).collect())
}

/// One-based rank `ceil((1 - alpha)(n + 1))` of the calibration order statistic.
pub fn calibration_rank(n_cal: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidLevel(alpha));
    }
    // the slack keeps exact products such as 0.9 * 10 from rounding up
    let k = ((1.0 - alpha) * (n_cal as f64 + 1.0) - 1e-9).ceil() as usize;
    if k > n_cal || k == 0 {
        return Err(Error::InsufficientCalibration { index: k, n_cal });
    }
    Ok(k)
}

/// The `ceil((1 - alpha)(n + 1))`-th smallest score.
pub fn cqr_calibrate(scores: &[f64], alpha: f64) -> Result<f64> {
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("conformal scores"));
    }
    let k = calibration_rank(scores.len(), alpha)?;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

/// Calibration offset applied symmetrically to a quantile pair.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConformalBand {
    pub alpha: f64,
    pub q_cal: f64,
}

impl ConformalBand {
    /// Calibrates on held-out quantile pairs; pairs are reordered first.
    pub fn calibrate(lo: &[f64], hi: &[f64], y: &[f64], alpha: f64) -> Result<Self> {
        let (lo, hi): (Vec<f64>, Vec<f64>) = lo.iter().zip(hi).map(|(&l, &h)| order_pair(l, h)).unzip();
        let scores = cqr_scores(&lo, &hi, y)?;
        Ok(ConformalBand { alpha, q_cal: cqr_calibrate(&scores, alpha)? })
    }

    /// `[lo - q_cal, hi + q_cal]` after reordering the pair.
    pub fn interval(&self, lo: f64, hi: f64) -> (f64, f64) {
        let (lo, hi) = order_pair(lo, hi);
        (lo - self.q_cal, hi + self.q_cal)
    }
}

pub fn cqr_interval(band: &ConformalBand, lo: f64, hi: f64) -> (f64, f64) {
    band.interval(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn score_examples() {
        let s = cqr_scores(&[0.0, 0.0, 0.0], &[1.0, 1.0, 1.0], &[0.5, 0.0, -2.0]).unwrap();
        assert!(s[0] < 0.0);
        assert_eq!(s[1], 0.0);
        assert_eq!(s[2], 2.0);
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibration_rank(9, 0.1).unwrap(), 9);
        let scores: Vec<f64> = (1..=9).rev().map(f64::from).collect();
        assert_eq!(cqr_calibrate(&scores, 0.1).unwrap(), 9.0);
        assert_eq!(cqr_calibrate(&[0.0; 20], 0.1).unwrap(), 0.0);
        let scores: Vec<f64> = (1..=19).map(f64::from).collect();
        assert_eq!(calibration_rank(19, 0.1).unwrap(), 18);
        assert_eq!(cqr_calibrate(&scores, 0.1).unwrap(), 18.0);
        assert_eq!(calibration_rank(250, 0.1).unwrap(), 226);
        assert!(matches!(cqr_calibrate(&[1.0; 5], 0.1), Err(Error::InsufficientCalibration { index: 6, n_cal: 5 })));
    }

    #[test]
    fn interval_examples() {
        let b = ConformalBand { alpha: 0.1, q_cal: 0.0 };
        assert_eq!(cqr_interval(&b, 1.0, 2.0), (1.0, 2.0));
        let b = ConformalBand { alpha: 0.1, q_cal: -0.1 };
        let (l, h) = cqr_interval(&b, 1.0, 2.0);
        assert!((l - 1.1).abs() < 1e-15 && (h - 1.9).abs() < 1e-15);
        let b = ConformalBand { alpha: 0.1, q_cal: 0.37 };
        for i in 0..100 {
            let lo = i as f64 * 0.1 - 3.0;
            let hi = lo + 0.01 * i as f64;
            let (l, h) = b.interval(lo, hi);
            assert!(((h - l) - (hi - lo + 2.0 * 0.37)).abs() < 1e-12);
        }
    }

    #[test]
    fn crossed_pairs_are_swapped() {
        let b = ConformalBand::calibrate(&[2.0, 1.0], &[0.0, 3.0], &[1.0, 2.0], 0.5).unwrap();
        // pairs become [0, 2] and [1, 3]; both scores are -1
        assert_eq!(b.q_cal, -1.0);
        assert_eq!(b.interval(5.0, 4.0), (5.0, 4.0));
    }

    #[test]
    fn permutation_invariance() {
        let lo = vec![0.1, -0.4, 0.3, 0.0, -1.0, 0.2, 0.5, -0.2, 0.1, 0.0];
        let hi: Vec<f64> = lo.iter().map(|v| v + 1.0).collect();
        let y = vec![0.5, 1.2, -0.3, 0.7, 0.0, 2.0, 0.9, 0.1, -0.5, 0.4];
        let a = ConformalBand::calibrate(&lo, &hi, &y, 0.2).unwrap();
        let perm = [3, 7, 1, 0, 9, 4, 2, 8, 6, 5];
        let pick = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let b = ConformalBand::calibrate(&pick(&lo), &pick(&hi), &pick(&y), 0.2).unwrap();
        assert_eq!(a, b);
    }
}
