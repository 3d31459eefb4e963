//! Fixed-point iteration maximizing a trace ratio over orthonormal frames,
//! with a stopping rule that certifies an additive error bound.
//!
//! The problem: maximize `Tr(Xᵀ N X) / Tr(Xᵀ M X)` over `d×ℓ` matrices `X`
//! with orthonormal columns, where `N` is the rank-one numerator matrix of a
//! single weighted row and `M` is the positive semidefinite Gram matrix of
//! the whole set.  Each step evaluates the ratio `s` at the current frame,
//! then moves to the top-`ℓ` eigenframe of `N − s·M`; the ratio values are
//! non-decreasing and converge to the global supremum, linearly at rate
//! `1−γ` where `γ` compares the smallest and largest parts of `M`'s
//! spectrum.  Stopping once an increase falls below `eps·γ/(1−γ)` therefore
//! certifies that the supremum exceeds the final iterate by at most `eps`.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eig_desc;

/// Absolute increment below which the iteration is declared numerically
/// converged even if the certified gap test has not fired (relevant when γ
/// is so small that the certified threshold is below roundoff).
const STALL_TOL: f64 = 1e-14;

/// Why a sensitivity computation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// The certified test fired: the latest increase fell below
    /// `eps·γ/(1−γ)`, which bounds the gap to the supremum by `eps`.
    GapTest,
    /// Increments stalled below an absolute tolerance before the certified
    /// test fired; the iterate is at numerical convergence.
    Stall,
    /// No iteration ran: the supremum is a leverage score, computed exactly.
    ExactLeverage,
    /// No iteration ran: the queried row is identically zero, so its cost
    /// share is zero against every query.
    ZeroRow,
}

/// Diagnostics from one sensitivity computation.
#[derive(Debug, Clone)]
pub struct TraceRatioSummary {
    /// Number of ratio evaluations performed (0 on the exact paths).
    pub iterations: usize,
    /// Convergence constant γ: the sum of the `ℓ` smallest eigenvalues of
    /// the denominator matrix over the sum of the `ℓ` largest.  `None` when
    /// an exact path skipped the iteration.
    pub gamma: Option<f64>,
    /// Complement frame size `ℓ` the problem was solved with.
    pub ell: usize,
    /// Ratio value per iteration, in order; non-decreasing.
    pub iterates: Vec<f64>,
    pub stop: StopReason,
}

impl TraceRatioSummary {
    pub(crate) fn exact(value: f64, ell: usize, stop: StopReason) -> Self {
        TraceRatioSummary {
            iterations: 0,
            gamma: None,
            ell,
            iterates: vec![value],
            stop,
        }
    }
}

/// One trace-ratio maximization instance.  Implementations choose a frame
/// representation suited to their matrix structure; the driver only needs
/// ratio evaluation and the eigen-step.
pub(crate) trait TraceRatioProblem {
    type Frame;

    /// Dimension of the space frames live in (rows of a frame).
    fn dim(&self) -> usize;

    /// Number of orthonormal columns per frame.
    fn ell(&self) -> usize;

    /// Σ of the `ℓ` smallest denominator eigenvalues over Σ of the `ℓ`
    /// largest, in `[0, 1]`.
    fn gamma(&self) -> f64;

    /// Deterministic starting frame: the bottom-`ℓ` eigenvectors of the
    /// denominator matrix.
    fn initial_frame(&self) -> Result<Self::Frame>;

    /// `Tr(Fᵀ N F) / Tr(Fᵀ M F)`; the denominator is guaranteed positive
    /// for every orthonormal frame by construction.
    fn ratio(&self, frame: &Self::Frame) -> f64;

    /// Top-`ℓ` eigenframe of `N − s·M`.
    fn step(&self, s: f64) -> Result<Self::Frame>;
}

/// Runs the iteration to the certified stopping rule.  Returns the final
/// ratio value (the supremum lies within `[value, value + eps]` when the
/// gap test fired) together with diagnostics.  At least one full iteration
/// (ratio, eigen-step, ratio) always executes, so the stopping tests compare
/// two genuine iterates.
pub(crate) fn maximize<P: TraceRatioProblem>(
    problem: &P,
    eps: f64,
) -> Result<(f64, TraceRatioSummary)> {
    debug_assert!(eps > 0.0 && eps < 1.0);
    let ell = problem.ell();
    let gamma = problem.gamma();
    debug_assert!((0.0..=1.0 + 1e-12).contains(&gamma), "gamma = {gamma}");
    // γ = 1 makes the certified threshold infinite, which stops the loop
    // right after the first eigen-step; that step is exactly optimal for an
    // isotropic denominator.  Clamping 1−γ away from zero keeps the same
    // behavior without special cases.
    let threshold = eps * gamma / (1.0 - gamma).max(f64::EPSILON);
    let cap = (10.0 * problem.dim() as f64 * (1.0 / eps).ln().max(1.0).ceil()) as usize;
    let cap = cap.max(2);

    let mut frame = problem.initial_frame()?;
    let mut iterates: Vec<f64> = Vec::new();
    let mut s_old = f64::NEG_INFINITY;
    loop {
        let s_new = problem.ratio(&frame);
        debug_assert!(s_new.is_finite());
        iterates.push(s_new);
        if iterates.len() >= 2 {
            let stop = if s_new - threshold < s_old {
                Some(StopReason::GapTest)
            } else if s_new - s_old < STALL_TOL {
                Some(StopReason::Stall)
            } else {
                None
            };
            if let Some(stop) = stop {
                let summary = TraceRatioSummary {
                    iterations: iterates.len(),
                    gamma: Some(gamma),
                    ell,
                    iterates,
                    stop,
                };
                return Ok((s_new, summary));
            }
        }
        if iterates.len() >= cap {
            return Err(Error::NonConvergence {
                max_iterations: cap,
                last: s_new,
            });
        }
        frame = problem.step(s_new)?;
        s_old = s_new;
    }
}

/// Trace-ratio instance over dense reduced coordinates, where the
/// denominator Gram matrix is diagonal (the squared singular values of the
/// scaled row matrix) and the numerator is the rank-one matrix of one
/// reduced row.
pub(crate) struct DenseTraceRatio {
    /// Squared singular values, descending, all strictly positive.
    gram: DVector<f64>,
    /// The queried row in reduced coordinates (already weight-scaled).
    row: RowDVector<f64>,
    ell: usize,
    gamma: f64,
}

impl DenseTraceRatio {
    pub(crate) fn new(gram: DVector<f64>, row: RowDVector<f64>, ell: usize) -> Self {
        let r = gram.len();
        debug_assert_eq!(row.len(), r);
        debug_assert!(ell >= 1 && ell <= r);
        let top: f64 = gram.iter().take(ell).sum();
        let bottom: f64 = gram.iter().skip(r - ell).sum();
        DenseTraceRatio {
            gram,
            row,
            ell,
            gamma: bottom / top,
        }
    }
}

impl TraceRatioProblem for DenseTraceRatio {
    type Frame = DMatrix<f64>;

    fn dim(&self) -> usize {
        self.gram.len()
    }

    fn ell(&self) -> usize {
        self.ell
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn initial_frame(&self) -> Result<DMatrix<f64>> {
        // Bottom-ℓ eigenvectors of a descending diagonal matrix are the last
        // ℓ standard basis vectors.
        let r = self.gram.len();
        let mut f = DMatrix::zeros(r, self.ell);
        for j in 0..self.ell {
            f[(r - self.ell + j, j)] = 1.0;
        }
        Ok(f)
    }

    fn ratio(&self, frame: &DMatrix<f64>) -> f64 {
        let num = (&self.row * frame).norm_squared();
        let mut den = 0.0;
        for col in frame.column_iter() {
            for (i, &x) in col.iter().enumerate() {
                den += self.gram[i] * x * x;
            }
        }
        num / den
    }

    fn step(&self, s: f64) -> Result<DMatrix<f64>> {
        let r = self.gram.len();
        let mut g = self.row.transpose() * &self.row;
        for i in 0..r {
            g[(i, i)] -= s * self.gram[i];
        }
        let (_, vecs) = sym_eig_desc(&g)?;
        Ok(vecs.columns(0, self.ell).into_owned())
    }
}
