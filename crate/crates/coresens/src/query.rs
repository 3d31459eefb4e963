//! Candidate subspaces and their projection costs.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;

/// How the stored orthonormal basis describes the subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisRole {
    /// Columns span the subspace itself; distance is the residual after
    /// projecting onto them.
    Span,
    /// Columns span the orthogonal complement; distance is the projection
    /// onto them.  A rank-`k` subspace in `ℝᵈ` has a `d−k`-column
    /// complement, which is the compact encoding when `k` is close to `d`.
    Complement,
}

/// A linear or affine subspace given by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct SubspaceQuery {
    basis: DMatrix<f64>,
    offset: Option<DVector<f64>>,
    role: BasisRole,
}

impl SubspaceQuery {
    /// Wraps a `d×m` matrix with orthonormal columns.  `offset` translates
    /// the subspace (affine case); `None` means it passes through the origin.
    pub fn new(basis: DMatrix<f64>, offset: Option<DVector<f64>>, role: BasisRole) -> Result<Self> {
        let (d, m) = basis.shape();
        if d == 0 || m > d {
            return Err(Error::DimensionMismatch(format!(
                "basis must be d×m with m ≤ d, got {d}x{m}"
            )));
        }
        let gram = basis.tr_mul(&basis);
        let id = DMatrix::identity(m, m);
        if (gram - id).amax() > 1e-10 {
            return Err(Error::InvalidParam(
                "basis columns must be orthonormal (tolerance 1e-10)".into(),
            ));
        }
        if let Some(ref o) = offset {
            if o.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "offset length {} does not match dimension {d}",
                    o.len()
                )));
            }
        }
        Ok(Self {
            basis,
            offset,
            role,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Rank of the subspace being queried (not of the stored basis).
    pub fn subspace_rank(&self) -> usize {
        match self.role {
            BasisRole::Span => self.basis.ncols(),
            BasisRole::Complement => self.basis.nrows() - self.basis.ncols(),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn offset(&self) -> Option<&DVector<f64>> {
        self.offset.as_ref()
    }

    pub fn role(&self) -> BasisRole {
        self.role
    }

    /// Squared Euclidean distance from a point to the subspace.
    pub fn dist_sq(&self, p: &RowDVector<f64>) -> f64 {
        let x: DVector<f64> = match self.offset {
            Some(ref o) => p.transpose() - o,
            None => p.transpose(),
        };
        match self.role {
            // ‖x‖² − ‖Bᵀx‖² computed with a clamp: rounding may push the
            // difference a hair negative when x lies in the span.
            BasisRole::Span => {
                let proj = self.basis.tr_mul(&x);
                (x.norm_squared() - proj.norm_squared()).max(0.0)
            }
            BasisRole::Complement => self.basis.tr_mul(&x).norm_squared(),
        }
    }
}

/// Weighted cost of a point set against a query for exponent `z ≥ 1`:
/// returns the per-point costs `wᵢ · dist(pᵢ, Q)^z` and their total
/// (distances enter squared, so `z = 2` is the squared-distance cost used
/// throughout the subspace approximation paths).
pub fn subspace_cost(
    pset: &WeightedPointSet,
    query: &SubspaceQuery,
    z: f64,
) -> Result<(Vec<f64>, f64)> {
    if pset.dim() != query.dim() {
        return Err(Error::DimensionMismatch(format!(
            "points in dimension {} but query in dimension {}",
            pset.dim(),
            query.dim()
        )));
    }
    if !(z >= 1.0) {
        return Err(Error::InvalidParam(format!("cost exponent must be ≥ 1, got {z}")));
    }
    let mut per_point = Vec::with_capacity(pset.len());
    let mut total = 0.0;
    for (i, row) in pset.points().row_iter().enumerate() {
        let dsq = query.dist_sq(&row.into_owned());
        let cost = pset.weight(i) * dsq.powf(z / 2.0);
        per_point.push(cost);
        total += cost;
    }
    Ok((per_point, total))
}
