//! Dense symmetric positive-definite solves for the GP back-end.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;


use crate::{Error, Result};

/// Lower Cholesky factor of an `n x n` row-major SPD matrix.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        debug_assert_eq!(a.len(), n * n);
        for i in 0..n {
            let (done, rest) = a.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + j + 1];
                let dot: f64 = row_i[..j].iter().zip(&row_j[..j]).map(|(x, y)| x * y).sum();
                row_i[j] = (row_i[j] - dot) / row_j[j];
            }
            let d = row_i[i] - row_i[..i].iter().map(|v| v * v).sum::<f64>();
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::Singular);
            }
            row_i[i] = d.sqrt();
            for v in &mut row_i[i + 1..] {
                *v = 0.0;
            }
        }
        Ok(Cholesky { n, l: a })
    }

    /// Solves `L z = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&b[..i]).map(|(l, z)| l * z).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
    }

    /// Solves `L^T z = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for (k, &bk) in b.iter().enumerate().skip(i + 1) {
                s -= self.l[k * n + i] * bk;
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        self.forward(&mut z);
        self.backward(&mut z);
        z
    }

    /// `b^T A^{-1} b`.
    pub fn quad_form(&self, b: &[f64]) -> f64 {
        let mut z = b.to_vec();
        self.forward(&mut z);
        z.iter().map(|v| v * v).sum()
    }
}

/// `A^T A` for a row-major `rows x cols` matrix.
pub(crate) fn gram_columns(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut g = vec![0.0; cols * cols];
    for r in 0..rows {
        let row = &a[r * cols..(r + 1) * cols];
        for i in 0..cols {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let gi = &mut g[i * cols..i * cols + i + 1];
            for (gij, &rj) in gi.iter_mut().zip(&row[..=i]) {
                *gij += ri * rj;
            }
        }
    }
    symmetrize_lower(&mut g, cols);
    g
}

/// `A A^T` for a row-major `rows x cols` matrix.
pub(crate) fn gram_rows(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut g = vec![0.0; rows * rows];
    for i in 0..rows {
        let ri = &a[i * cols..(i + 1) * cols];
        for j in 0..=i {
            let rj = &a[j * cols..(j + 1) * cols];
            g[i * rows + j] = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
        }
    }
    symmetrize_lower(&mut g, rows);
    g
}

fn symmetrize_lower(g: &mut [f64], n: usize) {
    for i in 0..n {
        for j in 0..i {
            g[j * n + i] = g[i * n + j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_spd_system() {
        let a = vec![4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let c = Cholesky::factor(a.clone(), 3).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = c.solve(&b);
        for i in 0..3 {
            let ax: f64 = (0..3).map(|j| a[i * 3 + j] * x[j]).sum();
            assert!((ax - b[i]).abs() < 1e-12);
        }
        let q = c.quad_form(&b);
        let direct: f64 = b.iter().zip(&x).map(|(u, v)| u * v).sum();
        assert!((q - direct).abs() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        assert_eq!(Cholesky::factor(vec![1.0, 2.0, 2.0, 1.0], 2), Err(Error::Singular));
    }

    #[test]
    fn grams_agree_with_definition() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(gram_columns(&a, 3, 2), vec![35.0, 44.0, 44.0, 56.0]);
        assert_eq!(gram_rows(&a, 3, 2), vec![5.0, 11.0, 17.0, 11.0, 25.0, 39.0, 17.0, 39.0, 61.0]);
    }
}
