//! Per-row sensitivities: exact leverage scores, additive-eps tight values
//! for non-affine k-subspace costs, affine k-subspace values via the lift,
//! and the uniform/projection baselines used in experiments.
//!
//! The non-affine value for row `p` is the supremum of
//! `‖𝐩Y‖²/‖𝐏Y‖²_F` over orthonormal complement frames `Y`, where `𝐏` is
//! the √weight-scaled row matrix.  Since the ratio only depends on `Y`
//! through its component in the row space of `𝐏`, every computation runs in
//! row-space coordinates: `d` becomes the numerical rank `r`, the Gram
//! matrix becomes diagonal, and rank degeneracy is explicit.  Dispatch:
//!
//! * `k = d−1`, or `k = r−1` after reduction: the supremum is the leverage
//!   score of the row, computed exactly from the thin SVD.
//! * `k < r−1`: fixed-point trace-ratio iteration with a certified `+eps`
//!   bracket.
//! * `k` between `r−1` and `d−1`: degenerate query (some complement frames
//!   annihilate the whole set), rejected.
//!
//! Affine values route through the lift (see `lifted`) at query dimension
//! `k+1` and carry a `+80·eps` margin on top of the lifted value.

mod lifted;
mod trace_ratio;

pub use lifted::{lift_points, lift_points_with_power, LiftConfig, AFFINE_EPS_COMFORT, AFFINE_EPS_MAX};
pub use trace_ratio::{StopReason, TraceRatioSummary};

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::{ScaledMatrix, WeightedPointSet};
use crate::query::subspace_cost;
use lifted::AffineContext;
use trace_ratio::{maximize, DenseTraceRatio};

/// How a sensitivity vector was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensMethod {
    Leverage,
    TraceRatio,
    AffineLift,
    Uniform,
    BaselineProjection,
}

impl SensMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SensMethod::Leverage => "leverage",
            SensMethod::TraceRatio => "trace_ratio",
            SensMethod::AffineLift => "affine_lift",
            SensMethod::Uniform => "uniform",
            SensMethod::BaselineProjection => "baseline_projection",
        }
    }
}

impl std::fmt::Display for SensMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-row sensitivities with their provenance.
///
/// Invariants: every value lies in `[0, 1]`; `total` is their sum; a value
/// is 0 exactly for zero-weight rows and (in the non-affine case) zero rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityVector {
    pub values: Vec<f64>,
    pub total: f64,
    pub method: SensMethod,
    /// Additive error used; 0 for exact, uniform, and baseline methods.
    pub eps: f64,
    /// Query subspace dimension the values were computed for.
    pub k: usize,
    pub affine: bool,
}

impl SensitivityVector {
    fn new(values: Vec<f64>, method: SensMethod, eps: f64, k: usize, affine: bool) -> Self {
        debug_assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        let total = values.iter().sum();
        SensitivityVector {
            values,
            total,
            method,
            eps,
            k,
            affine,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or inline on the
/// global pool when no explicit parallelism is requested.
pub(crate) fn run_with_parallelism<T: Send>(
    parallelism: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match parallelism {
        None => Ok(f()),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.max(1))
                .build()
                .map_err(|e| Error::InvalidParam(format!("could not build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Exact leverage scores `‖uᵢ‖²` from the thin SVD of the scaled matrix;
/// the sensitivities for `k = d−1`.  Total equals the numerical rank.
pub fn leverage_sensitivities(pset: &WeightedPointSet) -> Result<SensitivityVector> {
    let sm = ScaledMatrix::build(pset)?;
    let values = (0..pset.len())
        .map(|i| if is_zero_row(pset, i) { 0.0 } else { sm.leverage(i) })
        .collect();
    Ok(SensitivityVector::new(
        values,
        SensMethod::Leverage,
        0.0,
        pset.dim() - 1,
        false,
    ))
}

fn is_zero_row(pset: &WeightedPointSet, i: usize) -> bool {
    pset.weight(i) == 0.0 || pset.points().row(i).iter().all(|&x| x == 0.0)
}

enum NonaffineMode {
    ExactLeverage,
    Iterate { ell: usize },
}

/// Precomputation shared by all rows of one non-affine query: the thin SVD
/// of the scaled matrix, the diagonalized Gram spectrum, and the dispatch
/// decision.
struct NonaffineShared {
    sm: ScaledMatrix,
    gram: DVector<f64>,
    reduced: DMatrix<f64>,
    zero_row: Vec<bool>,
    mode: NonaffineMode,
    eps: f64,
}

impl NonaffineShared {
    fn build(pset: &WeightedPointSet, k: usize, eps: f64) -> Result<Self> {
        let d = pset.dim();
        if k >= d {
            return Err(Error::InvalidParam(format!(
                "k must be in 0..d = 0..{d}, got {k}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParam(format!(
                "eps must be in (0, 1), got {eps}"
            )));
        }
        let sm = ScaledMatrix::build(pset)?;
        let r = sm.rank();
        let mode = if k == d - 1 || k == r - 1 {
            NonaffineMode::ExactLeverage
        } else if k + 1 > r {
            return Err(Error::DegenerateQuery { rank: r, k });
        } else {
            NonaffineMode::Iterate { ell: r - k }
        };
        let zero_row = (0..pset.len()).map(|i| is_zero_row(pset, i)).collect();
        Ok(NonaffineShared {
            gram: sm.squared_singular_values(),
            reduced: sm.reduced_rows(),
            sm,
            zero_row,
            mode,
            eps,
        })
    }

    fn row(&self, i: usize) -> Result<(f64, TraceRatioSummary)> {
        if self.zero_row[i] {
            return Ok((0.0, TraceRatioSummary::exact(0.0, self.ell(), StopReason::ZeroRow)));
        }
        match self.mode {
            NonaffineMode::ExactLeverage => {
                let value = self.sm.leverage(i);
                Ok((value, TraceRatioSummary::exact(value, 1, StopReason::ExactLeverage)))
            }
            NonaffineMode::Iterate { ell } => {
                let problem =
                    DenseTraceRatio::new(self.gram.clone(), self.reduced.row(i).into_owned(), ell);
                let (raw, summary) = maximize(&problem, self.eps)?;
                Ok(((raw + self.eps).min(1.0), summary))
            }
        }
    }

    fn ell(&self) -> usize {
        match self.mode {
            NonaffineMode::ExactLeverage => 1,
            NonaffineMode::Iterate { ell } => ell,
        }
    }

    fn method(&self) -> SensMethod {
        match self.mode {
            NonaffineMode::ExactLeverage => SensMethod::Leverage,
            NonaffineMode::Iterate { .. } => SensMethod::TraceRatio,
        }
    }

    fn reported_eps(&self) -> f64 {
        match self.mode {
            NonaffineMode::ExactLeverage => 0.0,
            NonaffineMode::Iterate { .. } => self.eps,
        }
    }
}

/// Sensitivity of one row against non-affine k-subspace queries, with
/// diagnostics.  Guarantee: `s(p) ≤ s′ ≤ s(p) + eps` (exact on the leverage
/// paths).  A zero row or zero-weight row returns 0 without iterating.
pub fn nonaffine_sensitivity(
    pset: &WeightedPointSet,
    index: usize,
    k: usize,
    eps: f64,
) -> Result<(f64, TraceRatioSummary)> {
    check_index(pset, index)?;
    NonaffineShared::build(pset, k, eps)?.row(index)
}

/// All-rows version of `nonaffine_sensitivity`, sharing the SVD, Gram
/// spectrum, and dispatch across rows; rows run in parallel.
pub fn nonaffine_sensitivities_all(
    pset: &WeightedPointSet,
    k: usize,
    eps: f64,
    parallelism: Option<usize>,
) -> Result<SensitivityVector> {
    let shared = NonaffineShared::build(pset, k, eps)?;
    let n = pset.len();
    let values = run_with_parallelism(parallelism, || {
        (0..n)
            .into_par_iter()
            .map(|i| shared.row(i).map(|(v, _)| v).map_err(|e| Error::at_row(i, e)))
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(SensitivityVector::new(
        values,
        shared.method(),
        shared.reported_eps(),
        k,
        false,
    ))
}

/// Sensitivity of one row against affine k-subspace queries:
/// `s̃ = s′ + 80·eps` for the lifted non-affine value `s′` at dimension
/// `k+1`, clamped to 1.  Guarantee: `s(p) ≤ s̃ ≤ s(p) + 161·eps`.
pub fn affine_sensitivity(
    pset: &WeightedPointSet,
    index: usize,
    k: usize,
    eps: f64,
) -> Result<f64> {
    check_index(pset, index)?;
    AffineContext::build(pset, k, eps)?.sensitivity(index)
}

/// All-rows affine sensitivities sharing the centered reduction, lift
/// constants, and lifted Gram spectrum across rows.
pub fn affine_sensitivities_all(
    pset: &WeightedPointSet,
    k: usize,
    eps: f64,
    parallelism: Option<usize>,
) -> Result<SensitivityVector> {
    let ctx = AffineContext::build(pset, k, eps)?;
    let n = ctx.len();
    let values = run_with_parallelism(parallelism, || {
        (0..n)
            .into_par_iter()
            .map(|i| ctx.sensitivity(i).map_err(|e| Error::at_row(i, e)))
            .collect::<Result<Vec<f64>>>()
    })??;
    Ok(SensitivityVector::new(
        values,
        SensMethod::AffineLift,
        eps,
        k,
        true,
    ))
}

/// Dispatches to the sensitivity computation named by `method`. The tight
/// method follows the `affine` flag to the matching path; `eps` is ignored
/// by the methods that are exact.
pub fn compute_sensitivities(
    pset: &WeightedPointSet,
    method: SensMethod,
    k: usize,
    affine: bool,
    eps: f64,
    parallelism: Option<usize>,
) -> Result<SensitivityVector> {
    match method {
        SensMethod::Uniform => Ok(uniform_sensitivities(pset)),
        SensMethod::Leverage => leverage_sensitivities(pset),
        SensMethod::BaselineProjection => baseline_projection_sensitivities(pset, k, affine),
        SensMethod::TraceRatio | SensMethod::AffineLift => {
            if affine {
                affine_sensitivities_all(pset, k, eps, parallelism)
            } else {
                nonaffine_sensitivities_all(pset, k, eps, parallelism)
            }
        }
    }
}

/// The trivial baseline: `1/n` per row, total 1.
pub fn uniform_sensitivities(pset: &WeightedPointSet) -> SensitivityVector {
    let n = pset.len();
    SensitivityVector::new(
        vec![1.0 / n as f64; n],
        SensMethod::Uniform,
        0.0,
        0,
        false,
    )
}

/// The projection-based sensitivity upper bound: leverage of each row's
/// projection onto the optimal k-subspace, plus the row's share of the
/// residual cost.  Cheap (one SVD) but loose; used as the comparison
/// baseline in experiments.  Total is O(k+1).
pub fn baseline_projection_sensitivities(
    pset: &WeightedPointSet,
    k: usize,
    affine: bool,
) -> Result<SensitivityVector> {
    let n = pset.len();
    let star = crate::eval::solve_optimal(pset, k, affine)?;

    // Scaled rows projected into the optimal subspace's coordinates,
    // centered first in the affine case.
    let projected = if k == 0 {
        None
    } else {
        let mut m = DMatrix::zeros(n, k);
        let basis = star.basis();
        for i in 0..n {
            let sw = pset.weight(i).sqrt();
            let mut p = pset.point(i);
            if let Some(offset) = star.offset() {
                p -= offset.transpose();
            }
            let coords = p * basis;
            for j in 0..k {
                m[(i, j)] = sw * coords[j];
            }
        }
        match crate::linalg::thin_svd(&m) {
            Ok(svd) => Some(svd),
            Err(Error::RankZero) => None,
            Err(e) => return Err(e),
        }
    };

    let (residuals, res_total) = subspace_cost(pset, &star, 2.0)?;
    // All points on the optimal subspace: the residual shares are noise
    // over noise, and the formula's second term is defined as zero.
    let res_scale: f64 = (0..n)
        .map(|i| pset.weight(i) * pset.point(i).norm_squared())
        .sum();
    let residual_live = res_total > 1e-12 * res_scale.max(f64::MIN_POSITIVE);

    let values = (0..n)
        .map(|i| {
            let lev = projected
                .as_ref()
                .map(|svd| svd.u.row(i).norm_squared())
                .unwrap_or(0.0);
            let share = if residual_live {
                residuals[i] / res_total
            } else {
                0.0
            };
            (lev + share).clamp(0.0, 1.0)
        })
        .collect();
    Ok(SensitivityVector::new(
        values,
        SensMethod::BaselineProjection,
        0.0,
        k,
        affine,
    ))
}

fn check_index(pset: &WeightedPointSet, index: usize) -> Result<()> {
    if index >= pset.len() {
        return Err(Error::InvalidParam(format!(
            "row index {index} out of range for {} points",
            pset.len()
        )));
    }
    Ok(())
}
