//! Dense row-major matrices and labelled datasets.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch {
                expected: nrows * ncols,
                found: data.len(),
            });
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    /// Builds a matrix from equal-length rows. An empty slice yields a 0×0 matrix.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            nrows: rows.len(),
            ncols,
            data,
        })
    }

    /// Single-column matrix.
    pub fn column_vector(values: &[f64]) -> Self {
        Self {
            nrows: values.len(),
            ncols: 1,
            data: values.to_vec(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_empty(&self) -> bool {
        self.nrows == 0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact on a zero-width matrix would panic
        (0..self.nrows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// Rows at `indices`, in that order (duplicates allowed).
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.ncols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            nrows: indices.len(),
            ncols: self.ncols,
            data,
        }
    }

    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.ncols) {
            return Err(Error::arg(format!(
                "column {bad} out of range for a matrix with {} columns",
                self.ncols
            )));
        }
        let mut data = Vec::with_capacity(self.nrows * columns.len());
        for row in self.rows() {
            data.extend(columns.iter().map(|&c| row[c]));
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: columns.len(),
            data,
        })
    }

    /// Appends `other` below `self`.
    pub fn vstack(&self, other: &Matrix) -> Result<Self> {
        if self.nrows > 0 && other.nrows > 0 && self.ncols != other.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: other.ncols,
            });
        }
        let ncols = if self.nrows > 0 { self.ncols } else { other.ncols };
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            nrows: self.nrows + other.nrows,
            ncols,
            data,
        })
    }

    /// Appends `column` as a new last column.
    pub fn with_column(&self, column: &[f64]) -> Result<Self> {
        if column.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: column.len(),
            });
        }
        let mut data = Vec::with_capacity(self.nrows * (self.ncols + 1));
        for (row, &v) in self.rows().zip(column) {
            data.extend_from_slice(row);
            data.push(v);
        }
        Ok(Self {
            nrows: self.nrows,
            ncols: self.ncols + 1,
            data,
        })
    }
}

/// Covariates with an optional scalar response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Option<Vec<f64>>) -> Result<Self> {
        if let Some(y) = &y {
            if y.len() != x.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: x.nrows(),
                    found: y.len(),
                });
            }
        }
        Ok(Self { x, y })
    }

    pub fn unlabeled(x: Matrix) -> Self {
        Self { x, y: None }
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn response(&self) -> Result<&[f64]> {
        self.y
            .as_deref()
            .ok_or_else(|| Error::arg("dataset has no response column"))
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: self
                .y
                .as_ref()
                .map(|y| indices.iter().map(|&i| y[i]).collect()),
        }
    }
}

/// Random split of `0..n` into a first part of `round(n * ratio)` indices and the rest.
pub fn random_split<R: Rng + ?Sized>(
    n: usize,
    ratio: f64,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::arg(format!("split ratio {ratio} must lie in (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let first = ((n as f64) * ratio).round() as usize;
    let second = idx.split_off(first.min(n));
    Ok((idx, second))
}

/// Per-column mean and standard deviation, fitted on one split and applied to others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Population standard deviation; constant columns get scale 1.
    pub fn fit(x: &Matrix) -> Self {
        let n = x.nrows().max(1) as f64;
        let d = x.ncols();
        let mut means = vec![0.0; d];
        for row in x.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for row in x.rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let scales = vars
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, scales }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            means: vec![0.0; dim],
            scales: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(row).zip(&self.means).zip(&self.scales) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.nrows(), x.ncols());
        for i in 0..x.nrows() {
            self.transform_row(x.row(i), out.row_mut(i));
        }
        out
    }
}
