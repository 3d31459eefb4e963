//! Affine sensitivities via a lift into one extra dimension.
//!
//! Appending a large constant coordinate `r` to every point turns affine
//! k-subspace queries into non-affine (k+1)-subspace queries: a flat with
//! offset corresponds to a linear subspace in the lifted space, and choosing
//! `r` large enough makes the correspondence distort each point's cost share
//! by at most a constant multiple of `eps`.
//!
//! Numerically the lift is hostile: squared lifted norms reach `r²`, which
//! at the tightest supported accuracy is ~1.6e25, far beyond where a dense
//! eigensolver keeps O(1) eigenvalues meaningful.  The module therefore
//! never materializes lifted vectors for its own computations.  Instead it
//! centers the (normalized) input, reduces to the span of the centered rows,
//! and uses the fact that in that basis every positive-weight lifted point
//! shares the same trailing coordinate
//!
//! ```text
//!     r̃ = √(r² + ‖μ⊥‖²),   μ⊥ = component of the mean outside the span,
//! ```
//!
//! so the whole problem becomes full-rank in `rank+1` dimensions with
//! two-scale structure `[[A, r̃·m], [r̃·mᵀ, r̃²·W]]` that `graded_eigen`
//! decomposes at full precision.  The ambient-lift operation itself stays
//! available for callers and for cross-checks at moderate `r`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{graded_eigen, thin_svd};
use crate::points::WeightedPointSet;
use crate::sensitivity::trace_ratio::{maximize, TraceRatioProblem};

/// Largest `eps` the affine sensitivity guarantee supports.
pub const AFFINE_EPS_MAX: f64 = 1.0 / 12.0;

/// Below this `eps` the lift coordinate exceeds ~4e12 and double precision
/// starts to erode the guarantee; computations still run, but callers should
/// surface a conditioning warning.
pub const AFFINE_EPS_COMFORT: f64 = 1e-3;

/// Parameters of the lift `p ↦ (p | r)`.
#[derive(Debug, Clone, Copy)]
pub struct LiftConfig {
    /// Cost exponent (2 on the affine sensitivity path).
    pub z: u32,
    /// Accuracy parameter the lift was built for.
    pub eps: f64,
    /// `ψ = (eps/z)^z`.
    pub psi: f64,
    /// Lift coordinate `r = 1 + max_p dist^z(p, 0)/(ψ·eps²)`.
    pub r: f64,
}

/// Largest `eps` for which the lift inequalities hold at cost exponent `z`.
pub(crate) fn lift_eps_max(z: u32) -> f64 {
    1.0 / (2f64.powi(z as i32 + 1) + 2.0)
}

/// Lifts every point to `(p | r)` with the affine-path exponent `z = 2`.
/// Weights are preserved.  Requires `eps ∈ (0, 1/12]`.
pub fn lift_points(pset: &WeightedPointSet, eps: f64) -> Result<(WeightedPointSet, LiftConfig)> {
    if !(eps > 0.0 && eps <= AFFINE_EPS_MAX) {
        return Err(Error::InvalidParam(format!(
            "affine lift requires eps in (0, 1/12], got {eps}"
        )));
    }
    lift_points_unchecked(pset, eps, 2)
}

/// Lift at cost exponent `z ∈ {1, 2}`, used by the lift-inequality checker.
/// Admits the widest range the distance envelopes support,
/// `eps ∈ (0, 1/(2^{z+1}+2)]`.
pub fn lift_points_with_power(
    pset: &WeightedPointSet,
    eps: f64,
    z: u32,
) -> Result<(WeightedPointSet, LiftConfig)> {
    if !(1..=2).contains(&z) {
        return Err(Error::InvalidParam(format!(
            "lift exponent must be 1 or 2, got {z}"
        )));
    }
    let eps_max = lift_eps_max(z);
    if !(eps > 0.0 && eps <= eps_max) {
        return Err(Error::InvalidParam(format!(
            "lift at z={z} requires eps in (0, {eps_max}], got {eps}"
        )));
    }
    lift_points_unchecked(pset, eps, z)
}

fn lift_points_unchecked(
    pset: &WeightedPointSet,
    eps: f64,
    z: u32,
) -> Result<(WeightedPointSet, LiftConfig)> {
    let psi = (eps / z as f64).powi(z as i32);
    let max_dz = pset
        .points()
        .row_iter()
        .map(|row| row.norm().powi(z as i32))
        .fold(0.0_f64, f64::max);
    let r = 1.0 + max_dz / (psi * eps * eps);

    let (n, d) = pset.points().shape();
    let mut lifted = DMatrix::zeros(n, d + 1);
    lifted.view_mut((0, 0), (n, d)).copy_from(pset.points());
    for i in 0..n {
        lifted[(i, d)] = r;
    }
    let lifted = WeightedPointSet::new(lifted, pset.weights().to_vec())?;
    Ok((lifted, LiftConfig { z, eps, psi, r }))
}

/// Shared precomputation for the affine sensitivities of one point set.
///
/// Holds the normalized input in the centered row-space basis (`x̃ᵢ = Еᵀpᵢ`
/// for the centered basis `E`), the common trailing coordinate `r̃`, the
/// weighted moments `A = Σ wᵢ x̃ᵢx̃ᵢᵀ` and `m = Σ wᵢ x̃ᵢ`, and the lifted
/// Gram spectrum from the graded eigensolver.
pub(crate) struct AffineContext {
    reduced: DMatrix<f64>,
    weights: Vec<f64>,
    w_total: f64,
    centered_leverage: Vec<f64>,
    r_c: usize,
    r_tilde: f64,
    a_mat: DMatrix<f64>,
    m_vec: DVector<f64>,
    /// Lifted Gram eigenvalues, descending, all strictly positive.
    gram_eigs: Vec<f64>,
    /// Matching eigenvectors split as (leading block, trailing coordinate
    /// scaled by r̃); see `LiftedFrame`.
    gram_vecs: Vec<(DVector<f64>, f64)>,
    k: usize,
    eps: f64,
}

impl AffineContext {
    pub(crate) fn build(pset: &WeightedPointSet, k: usize, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= AFFINE_EPS_MAX) {
            return Err(Error::InvalidParam(format!(
                "affine sensitivity requires eps in (0, 1/12], got {eps}"
            )));
        }
        if k >= pset.dim() {
            return Err(Error::InvalidParam(format!(
                "k must be in 0..d = 0..{}, got {k}",
                pset.dim()
            )));
        }
        // Sensitivities are scale-invariant; normalizing to max‖p‖ = 1 pins
        // the lift coordinate near its minimum for the requested eps.  An
        // all-zero set has nothing to scale.
        let normed = match pset.normalize_max_norm() {
            Ok((p, _)) => p,
            Err(Error::RankZero) => pset.clone(),
            Err(e) => return Err(e),
        };
        let n = normed.len();
        let d = normed.dim();
        let weights = normed.weights().to_vec();
        let w_total = normed.total_weight();
        let mu = normed.weighted_mean();

        let mut cmat = DMatrix::zeros(n, d);
        for i in 0..n {
            let sw = weights[i].sqrt();
            for j in 0..d {
                cmat[(i, j)] = sw * (normed.points()[(i, j)] - mu[j]);
            }
        }
        // Rank 0 here means all positive-weight points coincide.
        let centered = match thin_svd(&cmat) {
            Ok(svd) => Some(svd),
            Err(Error::RankZero) => None,
            Err(e) => return Err(e),
        };
        let (r_c, basis, centered_leverage) = match &centered {
            Some(svd) => (
                svd.rank(),
                svd.v.clone(),
                (0..n).map(|i| svd.u.row(i).norm_squared()).collect(),
            ),
            None => (0, DMatrix::zeros(d, 0), vec![0.0; n]),
        };

        let psi = (eps / 2.0).powi(2);
        let max_d2 = normed
            .points()
            .row_iter()
            .map(|row| row.norm_squared())
            .fold(0.0_f64, f64::max);
        let r_lift = 1.0 + max_d2 / (psi * eps * eps);

        let mu_col = mu.transpose();
        let mu_perp_sq = if r_c == 0 {
            mu_col.norm_squared()
        } else {
            (&mu_col - &basis * basis.tr_mul(&mu_col)).norm_squared()
        };
        let r_tilde = (r_lift * r_lift + mu_perp_sq).sqrt();

        let reduced = normed.points() * &basis;
        let mut scaled_reduced = reduced.clone();
        for (i, mut row) in scaled_reduced.row_iter_mut().enumerate() {
            row *= weights[i].sqrt();
        }
        let a_mat = scaled_reduced.tr_mul(&scaled_reduced);
        let mut m_vec = DVector::zeros(r_c);
        for i in 0..n {
            m_vec += reduced.row(i).transpose() * weights[i];
        }

        let pairs = graded_eigen(&a_mat, &m_vec, w_total, r_tilde)?;
        let gram_eigs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let gram_vecs: Vec<(DVector<f64>, f64)> = pairs
            .iter()
            .map(|(_, v)| (v.rows(0, r_c).into_owned(), r_tilde * v[r_c]))
            .collect();

        Ok(AffineContext {
            reduced,
            weights,
            w_total,
            centered_leverage,
            r_c,
            r_tilde,
            a_mat,
            m_vec,
            gram_eigs,
            gram_vecs,
            k,
            eps,
        })
    }

    /// The affine sensitivity bound `s̃` for one row.
    pub(crate) fn sensitivity(&self, index: usize) -> Result<f64> {
        let w_p = self.weights[index];
        if w_p == 0.0 {
            return Ok(0.0);
        }
        // The lifted problem lives in r_c+1 dimensions with query dimension
        // k+1.  When the complement has a single direction (or the query
        // dimension exceeds it, where the supremum coincides by a mediant
        // argument), the value is the exact lifted leverage, which splits as
        // mean share + centered leverage because the all-√w column is
        // orthogonal to the centered rows.
        let s_prime = if self.k + 1 >= self.r_c {
            w_p / self.w_total + self.centered_leverage[index]
        } else {
            let problem = LiftedTraceRatio::new(self, index);
            let (raw, _) = maximize(&problem, self.eps)?;
            (raw + self.eps).min(1.0)
        };
        Ok((s_prime + 80.0 * self.eps).min(1.0))
    }

    pub(crate) fn len(&self) -> usize {
        self.weights.len()
    }
}

/// Orthonormal frame over the reduced lifted coordinates.  Column `j` of the
/// actual frame is `(x_j | tau_j / r̃)`: trailing coordinates are stored
/// scaled by `r̃` so that all arithmetic stays O(1).
pub(crate) struct LiftedFrame {
    x: DMatrix<f64>,
    tau: Vec<f64>,
}

/// Trace-ratio instance for one lifted row, with all matrices kept in the
/// two-scale factored form.
pub(crate) struct LiftedTraceRatio<'a> {
    ctx: &'a AffineContext,
    w_p: f64,
    x_p: DVector<f64>,
    ell: usize,
    gamma: f64,
}

impl<'a> LiftedTraceRatio<'a> {
    fn new(ctx: &'a AffineContext, index: usize) -> Self {
        let dims = ctx.r_c + 1;
        let ell = dims - (ctx.k + 1);
        let top: f64 = ctx.gram_eigs.iter().take(ell).sum();
        let bottom: f64 = ctx.gram_eigs.iter().skip(dims - ell).sum();
        LiftedTraceRatio {
            ctx,
            w_p: ctx.weights[index],
            x_p: ctx.reduced.row(index).transpose(),
            ell,
            gamma: bottom / top,
        }
    }
}

impl TraceRatioProblem for LiftedTraceRatio<'_> {
    type Frame = LiftedFrame;

    fn dim(&self) -> usize {
        self.ctx.r_c + 1
    }

    fn ell(&self) -> usize {
        self.ell
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn initial_frame(&self) -> Result<LiftedFrame> {
        let dims = self.ctx.r_c + 1;
        let mut x = DMatrix::zeros(self.ctx.r_c, self.ell);
        let mut tau = Vec::with_capacity(self.ell);
        for (j, (head, t)) in self.ctx.gram_vecs[dims - self.ell..].iter().enumerate() {
            x.set_column(j, head);
            tau.push(*t);
        }
        Ok(LiftedFrame { x, tau })
    }

    fn ratio(&self, frame: &LiftedFrame) -> f64 {
        // Lifted row: √w_p (x_p | r̃); frame column j: (x_j | tau_j/r̃).
        // Dot products and quadratic forms collapse so that r̃ only ever
        // multiplies tau_j/r̃, keeping every term O(1).
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..self.ell {
            let col = frame.x.column(j);
            let t = frame.tau[j];
            let dot = self.x_p.dot(&col) + t;
            num += dot * dot;
            let a_col = &self.ctx.a_mat * col;
            den += col.dot(&a_col) + 2.0 * t * self.ctx.m_vec.dot(&col) + t * t * self.ctx.w_total;
        }
        self.w_p * num / den
    }

    fn step(&self, s: f64) -> Result<LiftedFrame> {
        // G = w_p·(x_p|r̃)(x_p|r̃)ᵀ − s·Gram, in graded form.
        let b = self.w_p * &self.x_p * self.x_p.transpose() - &self.ctx.a_mat * s;
        let c = &self.x_p * self.w_p - &self.ctx.m_vec * s;
        let g = self.w_p - s * self.ctx.w_total;
        let pairs = graded_eigen(&b, &c, g, self.ctx.r_tilde)?;
        let mut x = DMatrix::zeros(self.ctx.r_c, self.ell);
        let mut tau = Vec::with_capacity(self.ell);
        for (j, (_, v)) in pairs.iter().take(self.ell).enumerate() {
            x.set_column(j, &v.rows(0, self.ctx.r_c).into_owned());
            tau.push(self.ctx.r_tilde * v[self.ctx.r_c]);
        }
        Ok(LiftedFrame { x, tau })
    }
}
