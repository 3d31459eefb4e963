//! Weighted point sets and their scaled-matrix form.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg::{thin_svd, ThinSvd};

/// A finite multiset of points in `ℝᵈ` with nonnegative weights, at least
/// one of them strictly positive.
///
/// Points are stored as the rows of an `n×d` matrix.  Weights scale costs,
/// not coordinates: the cost of a point against a subspace is
/// `w · dist(p, subspace)^z`.  A zero-weight row contributes nothing to any
/// cost and has sensitivity zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    points: DMatrix<f64>,
    weights: Vec<f64>,
}

impl WeightedPointSet {
    /// Builds a point set from a row matrix and per-row weights.
    ///
    /// Requires at least one row, matching lengths, finite data, and
    /// nonnegative weights with at least one strictly positive (an all-zero
    /// weighting has no cost to apportion).
    pub fn new(points: DMatrix<f64>, weights: Vec<f64>) -> Result<Self> {
        let (n, d) = points.shape();
        if n == 0 || d == 0 {
            return Err(Error::DegenerateInput(format!(
                "point set must be nonempty, got {n} points in dimension {d}"
            )));
        }
        if weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} points but {} weights",
                weights.len()
            )));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::at_row(
                    i,
                    Error::InvalidParam(format!("weight must be finite and nonnegative, got {w}")),
                ));
            }
        }
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::DegenerateInput(
                "all weights are zero; at least one must be positive".into(),
            ));
        }
        for (i, row) in points.row_iter().enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::at_row(
                    i,
                    Error::DegenerateInput("coordinate is not finite".into()),
                ));
            }
        }
        Ok(Self { points, weights })
    }

    /// Uniform unit weights.
    pub fn unweighted(points: DMatrix<f64>) -> Result<Self> {
        let n = points.nrows();
        Self::new(points, vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires n ≥ 1
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> RowDVector<f64> {
        self.points.row(i).into_owned()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// The subset at the given indices, in order; duplicates are allowed
    /// (the same point may be drawn several times by a sampler).
    pub fn subset(&self, indices: &[usize], weights: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidParam(format!(
                "subset index {bad} out of range for {} points",
                self.len()
            )));
        }
        let mut m = DMatrix::zeros(indices.len(), self.dim());
        for (row, &i) in indices.iter().enumerate() {
            m.row_mut(row).copy_from(&self.points.row(i));
        }
        Self::new(m, weights)
    }

    /// Rescales all coordinates so the largest point norm is 1; returns the
    /// applied factor `1/max‖p‖` (costs scale by its square).  The affine
    /// sensitivity path requires this normalization; sensitivities themselves
    /// are scale-invariant, so the caller's results are unaffected.
    pub fn normalize_max_norm(&self) -> Result<(Self, f64)> {
        let max_norm = self
            .points
            .row_iter()
            .map(|r| r.norm())
            .fold(0.0_f64, f64::max);
        if max_norm == 0.0 {
            return Err(Error::RankZero);
        }
        let factor = 1.0 / max_norm;
        Ok((
            Self {
                points: &self.points * factor,
                weights: self.weights.clone(),
            },
            factor,
        ))
    }

    /// The weighted mean `Σ wᵢ pᵢ / Σ wᵢ`.
    pub fn weighted_mean(&self) -> RowDVector<f64> {
        let mut mean = RowDVector::zeros(self.dim());
        for (i, row) in self.points.row_iter().enumerate() {
            mean += row * self.weights[i];
        }
        mean / self.total_weight()
    }

    /// Rows scaled by root weight: row `i` is `√wᵢ · pᵢᵀ`.  Its Gram matrix
    /// is the weighted second-moment matrix `Σ wᵢ pᵢ pᵢᵀ`.
    pub fn scaled_rows(&self) -> DMatrix<f64> {
        let mut m = self.points.clone();
        for (i, mut row) in m.row_iter_mut().enumerate() {
            row *= self.weights[i].sqrt();
        }
        m
    }
}

/// The root-weight-scaled matrix together with its thin SVD.
///
/// Sensitivities only depend on points through this matrix, and the SVD
/// turns every downstream computation into one on `rank`-dimensional
/// reduced coordinates, which removes the ambient dimension from iteration
/// costs and makes rank degeneracy explicit.
#[derive(Debug, Clone)]
pub struct ScaledMatrix {
    svd: ThinSvd,
}

impl ScaledMatrix {
    pub fn build(pset: &WeightedPointSet) -> Result<Self> {
        let svd = thin_svd(&pset.scaled_rows())?;
        Ok(Self { svd })
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    /// Points in row-space coordinates: row `i` is `√wᵢ pᵢ` expressed in the
    /// right-singular basis, an `n×rank` matrix.  Squared norms and inner
    /// products of the scaled rows are preserved exactly.
    pub fn reduced_rows(&self) -> DMatrix<f64> {
        self.svd.reduced_rows()
    }

    /// Squared singular values, i.e. eigenvalues of the weighted second
    /// moment matrix, descending.
    pub fn squared_singular_values(&self) -> DVector<f64> {
        self.svd.singular_values.map(|s| s * s)
    }

    /// Right-singular basis (`d×rank`), mapping reduced coordinates back to
    /// the ambient space.
    pub fn row_space_basis(&self) -> &DMatrix<f64> {
        &self.svd.v
    }

    /// Row `i` of the left factor `U`; its squared norm is the leverage of
    /// scaled row `i`.
    pub fn leverage(&self, i: usize) -> f64 {
        // mathematically ≤ 1; the clamp removes floating-point spill
        self.svd.u.row(i).norm_squared().min(1.0)
    }
}
