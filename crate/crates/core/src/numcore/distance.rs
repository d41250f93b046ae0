use rayon::prelude::*;

use super::matrix::{squared_distance, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    #[default]
    Euclidean,
}

/// Symmetric, nonnegative, zero-diagonal matrix of pairwise distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Validates symmetry (exact), zero diagonal and nonnegativity.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::Shape(format!(
                "distance matrix of order {n} needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({i}, {j}) = {v} is not a finite nonnegative number"
                    )));
                }
                if v != data[j * n + i] {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap: (v - data[j * n + i]).abs(),
                    });
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_matrix(m: &DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Shape("distance matrix must be square".into()));
        }
        Self::new(m.rows(), m.as_slice().to_vec())
    }

    pub(crate) fn from_raw(n: usize, data: Vec<f64>) -> Self {
        Self { n, data }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_raw(self.n, self.n, self.data.clone())
    }

    pub fn max(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v))
    }
}

/// Pairwise distances between the rows of `x`.
pub fn pairwise_distances(x: &DenseMatrix, metric: Metric) -> Result<DistanceMatrix> {
    x.check_finite()?;
    let Metric::Euclidean = metric;
    let n = x.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.row(i);
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        squared_distance(xi, x.row(j)).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    let mut data = rows.concat();
    // Mirror the upper triangle so symmetry is exact.
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    Ok(DistanceMatrix::from_raw(n, data))
}
