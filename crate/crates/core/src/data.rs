//! Row-major covariate matrices, single-fidelity datasets and pool splits.

use alloc::vec::Vec;
use rand::seq::SliceRandom;

use crate::rng::{RandomSource, Stream};
use crate::{Error, Result};

/// Dense row-major matrix of real covariates.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::SizeMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Single-column matrix.
    pub fn column(values: Vec<f64>) -> Self {
        Matrix { rows: values.len(), cols: 1, data: values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::SizeMismatch { expected: cols, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    pub fn column_values(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix { rows: idx.len(), cols: self.cols, data }
    }

    /// Appends one column, producing a `rows x (cols + 1)` matrix.
    pub fn with_extra_column(&self, extra: &[f64]) -> Result<Matrix> {
        if extra.len() != self.rows {
            return Err(Error::SizeMismatch { expected: self.rows, got: extra.len() });
        }
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for (r, &e) in self.iter_rows().zip(extra) {
            data.extend_from_slice(r);
            data.push(e);
        }
        Ok(Matrix { rows: self.rows, cols: self.cols + 1, data })
    }
}

/// Accuracy tier of a data source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Fidelity {
    Low,
    High,
}

/// Covariates and responses observed at one fidelity level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    fidelity: Fidelity,
}

impl Dataset {
    /// Validates shape and finiteness: `n >= 1`, `p >= 1`, `x.rows() == y.len()`.
    pub fn new(x: Matrix, y: Vec<f64>, fidelity: Fidelity) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::SizeMismatch { expected: x.rows(), got: y.len() });
        }
        if y.is_empty() {
            return Err(Error::TooFewSamples { needed: 1, got: 0 });
        }
        if x.cols() == 0 {
            return Err(Error::InvalidParameter("dataset needs at least one covariate"));
        }
        if !x.as_slice().iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("covariates"));
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("responses"));
        }
        Ok(Dataset { x, y, fidelity })
    }

    /// Convenience constructor for scalar covariates.
    pub fn from_scalar(x: Vec<f64>, y: Vec<f64>, fidelity: Fidelity) -> Result<Self> {
        Dataset::new(Matrix::column(x), y, fidelity)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn fidelity(&self) -> Fidelity {
        self.fidelity
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::new(self.x.select_rows(idx), y, self.fidelity)
    }

    /// Same covariates, replaced responses.
    pub fn with_responses(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(self.x.clone(), y, self.fidelity)
    }

    /// Same responses, replaced covariates.
    pub fn with_covariates(&self, x: Matrix) -> Result<Dataset> {
        Dataset::new(x, self.y.clone(), self.fidelity)
    }
}

/// Sizes of the four disjoint subsets carved out of one covariate pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSpec {
    pub n_lf: usize,
    pub n_hf: usize,
    pub n_cal: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn total(&self) -> usize {
        self.n_lf + self.n_hf + self.n_cal + self.n_test
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_lf == 0 || self.n_hf == 0 || self.n_cal == 0 || self.n_test == 0 {
            return Err(Error::InvalidParameter("every split count must be positive"));
        }
        Ok(())
    }
}

/// Index sets produced by [`split_pool`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub lf: Vec<usize>,
    pub hf: Vec<usize>,
    pub cal: Vec<usize>,
    pub test: Vec<usize>,
}

/// Randomly partitions `0..pool_size` into LF, HF, calibration and test index
/// sets of the sizes in `spec`. Each set is returned in ascending order.
pub fn split_pool(pool_size: usize, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    if spec.total() != pool_size {
        return Err(Error::SizeMismatch { expected: spec.total(), got: pool_size });
    }
    let mut perm: Vec<usize> = (0..pool_size).collect();
    let mut rng = RandomSource::new(spec.seed).stream(Stream::Split);
    perm.shuffle(&mut rng);

    let mut rest = perm.as_slice();
    let mut take = |k: usize| {
        let (head, tail) = rest.split_at(k);
        rest = tail;
        let mut v = head.to_vec();
        v.sort_unstable();
        v
    };
    let lf = take(spec.n_lf);
    let hf = take(spec.n_hf);
    let cal = take(spec.n_cal);
    let test = take(spec.n_test);
    Ok(SplitIndices { lf, hf, cal, test })
}
