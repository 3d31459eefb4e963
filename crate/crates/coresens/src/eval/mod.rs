//! Optimal-cost solvers, coreset quality metrics, and the coreset-vs-uniform
//! experiment protocol, plus brute-force oracles for validating sensitivity
//! values (see [`oracle`]).

pub mod oracle;

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coreset::{derive_seed, sample_coreset, Coreset};
use crate::error::{Error, Result};
use crate::points::WeightedPointSet;
use crate::query::{subspace_cost, BasisRole, SubspaceQuery};
use crate::sensitivity::{compute_sensitivities, run_with_parallelism, SensMethod};

/// Extends an orthonormal `d×j` basis to `d×target` columns by appending
/// coordinate vectors with their span projected out; deterministic.
pub(crate) fn complete_basis(basis: &DMatrix<f64>, target: usize) -> DMatrix<f64> {
    let d = basis.nrows();
    debug_assert!(target <= d);
    let mut cols: Vec<nalgebra::DVector<f64>> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut e = 0;
    while cols.len() < target && e < d {
        let mut v = nalgebra::DVector::zeros(d);
        v[e] = 1.0;
        for c in &cols {
            let dot = c.dot(&v);
            v -= c * dot;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            v /= norm;
            cols.push(v);
        }
        e += 1;
    }
    DMatrix::from_columns(&cols[..target])
}

/// Best rank-`k` query for the squared-distance cost: the span of the top-k
/// right singular vectors of the scaled matrix, mean-centered first (and
/// carrying the weighted mean as offset) when `affine` is set. A rank
/// deficit below `k` is padded with arbitrary orthogonal directions, which
/// cannot change the cost.
pub fn solve_optimal(pset: &WeightedPointSet, k: usize, affine: bool) -> Result<SubspaceQuery> {
    let d = pset.dim();
    if k >= d {
        return Err(Error::InvalidParam(format!(
            "query dimension k = {k} must be below the ambient dimension {d}"
        )));
    }
    let offset = affine.then(|| pset.weighted_mean());
    let mut scaled = pset.scaled_rows();
    if let Some(mu) = &offset {
        for i in 0..pset.len() {
            let sw = pset.weight(i).sqrt();
            for j in 0..d {
                scaled[(i, j)] -= sw * mu[j];
            }
        }
    }
    let spanning = match crate::linalg::thin_svd(&scaled) {
        Ok(svd) => {
            let keep = svd.rank().min(k);
            svd.v.columns(0, keep).into_owned()
        }
        // No row space at all: every k-dimensional query is optimal.
        Err(Error::RankZero) => DMatrix::zeros(d, 0),
        Err(e) => return Err(e),
    };
    let basis = if spanning.ncols() < k {
        complete_basis(&spanning, k)
    } else {
        spanning
    };
    SubspaceQuery::new(basis, offset.map(|mu| mu.transpose()), BasisRole::Span)
}

/// Optimal squared-distance cost of the best rank-`k` (affine) query.
pub fn opt_cost(pset: &WeightedPointSet, k: usize, affine: bool) -> Result<f64> {
    let query = solve_optimal(pset, k, affine)?;
    Ok(subspace_cost(pset, &query, 2.0)?.1)
}

/// Gross squared scale `Σ wᵢ‖pᵢ‖²`, the cost of the trivial query; used to
/// decide when an optimal cost counts as an exact fit.
fn gross_cost(pset: &WeightedPointSet) -> f64 {
    pset.scaled_rows().norm_squared()
}

/// Relative regret of a candidate cost against the optimum, with the
/// exact-fit case (`opt` at rounding level relative to `gross`) defined as 0
/// when the candidate also fits exactly and an error otherwise.
fn relative_regret(cost: f64, opt: f64, gross: f64) -> Result<f64> {
    if opt <= 1e-12 * gross {
        return if cost <= 1e-9 * gross {
            Ok(0.0)
        } else {
            Err(Error::Numerical(format!(
                "optimal cost is an exact fit but the candidate query costs {cost:e}"
            )))
        };
    }
    Ok(cost / opt - 1.0)
}

/// Relative regret of the coreset: solve on the weighted coreset rows, then
/// evaluate that query on the full data and compare against the optimum.
/// Nonnegative up to rounding.
pub fn coreset_error(
    pset_full: &WeightedPointSet,
    coreset: &Coreset,
    k: usize,
    affine: bool,
) -> Result<f64> {
    let cpts = coreset.to_point_set(pset_full)?;
    let candidate = solve_optimal(&cpts, k, affine)?;
    let cost = subspace_cost(pset_full, &candidate, 2.0)?.1;
    let opt = opt_cost(pset_full, k, affine)?;
    relative_regret(cost, opt, gross_cost(pset_full))
}

/// Experiment layout: which sensitivity methods to compare, at which coreset
/// sizes, over how many trials. All randomness derives from `root_seed`.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset_id: String,
    pub k: usize,
    pub affine: bool,
    /// Additive sensitivity slack for the tight methods.
    pub eps: f64,
    pub methods: Vec<SensMethod>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub root_seed: u64,
    /// Worker cap for the per-cell jobs; `None` uses the global pool.
    pub parallelism: Option<usize>,
    /// Record wall-clock phases; when off every ms field is 0 so reruns are
    /// byte-identical.
    pub timings: bool,
}

/// One (method, size, trial) cell: its derived seed and either a relative
/// regret or the failure that prevented one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub method: SensMethod,
    pub m: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: Option<f64>,
    pub failure: Option<String>,
    pub sample_ms: u64,
    pub solve_ms: u64,
}

/// Aggregate over the trials of one (method, size) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: SensMethod,
    pub m: usize,
    /// Mean relative regret over successful trials; `None` if all failed.
    pub mean_error: Option<f64>,
    /// Sample standard deviation over successful trials (0 for one trial).
    pub std_error: Option<f64>,
    pub trials: usize,
    pub failed: usize,
    pub seeds: Vec<u64>,
}

/// Full experiment outcome: per-cell results plus per-(method, size)
/// aggregates and per-method sensitivity wall-clock.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset_id: String,
    pub k: usize,
    pub affine: bool,
    pub eps: f64,
    pub methods: Vec<SensMethod>,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub root_seed: u64,
    /// Sensitivity-phase wall-clock per method, parallel to `methods`.
    pub sens_ms: Vec<u64>,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<AggregateRow>,
}

/// Runs the full methods × sizes × trials grid. One sensitivity vector is
/// computed per method; each cell then samples a coreset with its own
/// derived seed, solves on it, and scores the result on the full data.
/// Per-cell failures are recorded in the report, not propagated.
pub fn run_experiment(pset: &WeightedPointSet, config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.methods.is_empty() || config.sizes.is_empty() {
        return Err(Error::InvalidParam(
            "experiment needs at least one method and one size".into(),
        ));
    }
    if config.trials == 0 {
        return Err(Error::InvalidParam("experiment needs at least one trial".into()));
    }
    if let Some(&m) = config.sizes.iter().find(|&&m| m == 0) {
        return Err(Error::InvalidParam(format!("coreset size must be ≥ 1, got {m}")));
    }

    let opt = opt_cost(pset, config.k, config.affine)?;
    let gross = gross_cost(pset);

    let mut sens_ms = Vec::with_capacity(config.methods.len());
    let mut sens_by_method = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let started = Instant::now();
        let sens = compute_sensitivities(
            pset,
            method,
            config.k,
            config.affine,
            config.eps,
            config.parallelism,
        );
        sens_ms.push(if config.timings {
            started.elapsed().as_millis() as u64
        } else {
            0
        });
        sens_by_method.push(sens.map_err(|e| e.to_string()));
    }

    let n_sizes = config.sizes.len();
    let jobs: Vec<(usize, usize, usize)> = (0..config.methods.len())
        .flat_map(|mi| {
            (0..n_sizes).flat_map(move |si| (0..config.trials).map(move |t| (mi, si, t)))
        })
        .collect();

    let run_cell = |&(mi, si, trial): &(usize, usize, usize)| -> CellResult {
        let method = config.methods[mi];
        let m = config.sizes[si];
        let counter = ((mi * n_sizes + si) * config.trials + trial) as u64;
        let seed = derive_seed(config.root_seed, counter);
        let mut cell = CellResult {
            method,
            m,
            trial,
            seed,
            error: None,
            failure: None,
            sample_ms: 0,
            solve_ms: 0,
        };
        let sens = match &sens_by_method[mi] {
            Ok(s) => s,
            Err(msg) => {
                cell.failure = Some(format!("sensitivity phase failed: {msg}"));
                return cell;
            }
        };
        let sampling = Instant::now();
        let outcome = sample_coreset(pset, sens, m, seed).and_then(|coreset| {
            if config.timings {
                cell.sample_ms = sampling.elapsed().as_millis() as u64;
            }
            let solving = Instant::now();
            let cpts = coreset.to_point_set(pset)?;
            let candidate = solve_optimal(&cpts, config.k, config.affine)?;
            let cost = subspace_cost(pset, &candidate, 2.0)?.1;
            if config.timings {
                cell.solve_ms = solving.elapsed().as_millis() as u64;
            }
            relative_regret(cost, opt, gross)
        });
        match outcome {
            Ok(err) => cell.error = Some(err),
            Err(e) => cell.failure = Some(e.to_string()),
        }
        cell
    };

    let cells: Vec<CellResult> =
        run_with_parallelism(config.parallelism, || jobs.par_iter().map(run_cell).collect())?;

    let mut aggregates = Vec::with_capacity(config.methods.len() * n_sizes);
    for mi in 0..config.methods.len() {
        for si in 0..n_sizes {
            let slice: Vec<&CellResult> = cells
                .iter()
                .filter(|c| c.method == config.methods[mi] && c.m == config.sizes[si])
                .collect();
            let errors: Vec<f64> = slice.iter().filter_map(|c| c.error).collect();
            let seeds: Vec<u64> = slice.iter().map(|c| c.seed).collect();
            let mean = (!errors.is_empty())
                .then(|| errors.iter().sum::<f64>() / errors.len() as f64);
            let std = mean.map(|mu| {
                if errors.len() < 2 {
                    0.0
                } else {
                    let var = errors.iter().map(|e| (e - mu) * (e - mu)).sum::<f64>()
                        / (errors.len() - 1) as f64;
                    var.sqrt()
                }
            });
            aggregates.push(AggregateRow {
                method: config.methods[mi],
                m: config.sizes[si],
                mean_error: mean,
                std_error: std,
                trials: errors.len(),
                failed: slice.len() - errors.len(),
                seeds,
            });
        }
    }

    Ok(ExperimentReport {
        dataset_id: config.dataset_id.clone(),
        k: config.k,
        affine: config.affine,
        eps: config.eps,
        methods: config.methods.clone(),
        sizes: config.sizes.clone(),
        trials: config.trials,
        root_seed: config.root_seed,
        sens_ms,
        cells,
        aggregates,
    })
}

impl ExperimentReport {
    /// Plot-ready per-cell CSV: `method,m,trial,seed,error,solve_ms,sample_ms`
    /// in cell order; failed cells print `nan` in the error column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,m,trial,seed,error,solve_ms,sample_ms\n");
        for c in &self.cells {
            let err = match c.error {
                Some(e) => format!("{e}"),
                None => "nan".into(),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.method, c.m, c.trial, c.seed, err, c.solve_ms, c.sample_ms
            );
        }
        out
    }

    /// Aggregate JSON (means/stds per cell) with stable key order.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct PhaseMs<'a> {
            method: &'a SensMethod,
            sens_ms: u64,
        }
        #[derive(Serialize)]
        struct ReportFile<'a> {
            dataset_id: &'a str,
            k: usize,
            affine: bool,
            eps: f64,
            trials: usize,
            root_seed: u64,
            phases: Vec<PhaseMs<'a>>,
            cells: &'a [AggregateRow],
        }
        let file = ReportFile {
            dataset_id: &self.dataset_id,
            k: self.k,
            affine: self.affine,
            eps: self.eps,
            trials: self.trials,
            root_seed: self.root_seed,
            phases: self
                .methods
                .iter()
                .zip(&self.sens_ms)
                .map(|(method, &sens_ms)| PhaseMs { method, sens_ms })
                .collect(),
            cells: &self.aggregates,
        };
        serde_json::to_string_pretty(&file).expect("report serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coreset::Provenance;
    use crate::sensitivity::uniform_sensitivities;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_pset(n: usize, d: usize, seed: u64) -> WeightedPointSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        WeightedPointSet::unweighted(pts).unwrap()
    }

    fn full_coreset(pset: &WeightedPointSet) -> Coreset {
        let n = pset.len();
        Coreset {
            source_indices: (0..n).collect(),
            weights: pset.weights().to_vec(),
            m: n,
            provenance: Provenance {
                method: SensMethod::Uniform,
                k: 1,
                affine: false,
                eps: 0.0,
                seed: 0,
                t: 1.0,
            },
        }
    }

    #[test]
    fn points_on_the_x_axis_fit_exactly_at_k_one() {
        let pts = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, -2.0, 0.0, 0.5, 0.0]);
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let q = solve_optimal(&pset, 1, false).unwrap();
        assert!(q.offset().is_none());
        assert_relative_eq!(q.basis()[(0, 0)].abs(), 1.0, max_relative = 1e-12);
        assert!(opt_cost(&pset, 1, false).unwrap() < 1e-24);
    }

    #[test]
    fn affine_k_zero_returns_mean_and_weighted_variance() {
        let pts = DMatrix::from_row_slice(2, 1, &[0.0, 2.0]);
        let pset = WeightedPointSet::new(pts, vec![1.0, 3.0]).unwrap();
        let q = solve_optimal(&pset, 0, true).unwrap();
        let mu = q.offset().unwrap();
        assert_relative_eq!(mu[0], 1.5, max_relative = 1e-12);
        assert_relative_eq!(opt_cost(&pset, 0, true).unwrap(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn optimal_cost_equals_svd_tail_sum() {
        let pset = random_pset(12, 5, 31);
        for k in [1usize, 2, 4] {
            let svd = crate::linalg::thin_svd(&pset.scaled_rows()).unwrap();
            let tail: f64 = svd
                .singular_values
                .iter()
                .skip(k)
                .map(|s| s * s)
                .sum();
            assert_relative_eq!(opt_cost(&pset, k, false).unwrap(), tail, max_relative = 1e-9);
        }
    }

    #[test]
    fn rank_deficient_basis_is_completed_without_changing_cost() {
        // A line in 3-space solved at k = 2: rank 1 basis padded to 2 columns.
        let pts = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0, -1.0, -1.0, 0.0]);
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let q = solve_optimal(&pset, 2, false).unwrap();
        assert_eq!(q.basis().ncols(), 2);
        // In-span residuals only carry floating-point cancellation noise,
        // which scales with the gross squared mass.
        let gross = pset.scaled_rows().norm_squared();
        assert!(subspace_cost(&pset, &q, 2.0).unwrap().1 < 1e-12 * gross);
    }

    #[test]
    fn queries_at_or_above_ambient_dimension_are_rejected() {
        let pset = random_pset(4, 3, 1);
        assert!(solve_optimal(&pset, 3, false).is_err());
        assert!(solve_optimal(&pset, 5, true).is_err());
    }

    #[test]
    fn full_set_as_coreset_has_exactly_zero_error() {
        let pset = random_pset(10, 4, 7);
        let err = coreset_error(&pset, &full_coreset(&pset), 2, false).unwrap();
        assert_eq!(err, 0.0);
        let err_affine = coreset_error(&pset, &full_coreset(&pset), 2, true).unwrap();
        assert_eq!(err_affine, 0.0);
    }

    #[test]
    fn single_spanning_row_recovers_an_exact_fit() {
        let pts = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 2.0, 0.0, 3.0, 0.0, -1.0, 0.0]);
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let coreset = Coreset {
            source_indices: vec![1],
            weights: vec![4.0],
            m: 1,
            provenance: Provenance {
                method: SensMethod::TraceRatio,
                k: 1,
                affine: false,
                eps: 1e-3,
                seed: 0,
                t: 1.0,
            },
        };
        assert_eq!(coreset_error(&pset, &coreset, 1, false).unwrap(), 0.0);
    }

    #[test]
    fn exact_fit_with_a_bad_candidate_is_a_numerical_error() {
        assert!(relative_regret(1.0, 0.0, 1.0).is_err());
        assert_eq!(relative_regret(0.0, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn experiment_smoke_run_is_deterministic_and_well_formed() {
        let pset = random_pset(30, 3, 99);
        let config = ExperimentConfig {
            dataset_id: "smoke".into(),
            k: 1,
            affine: false,
            eps: 1e-3,
            methods: vec![SensMethod::Uniform, SensMethod::TraceRatio],
            sizes: vec![10, 30],
            trials: 3,
            root_seed: 5,
            parallelism: None,
            timings: false,
        };
        let report = run_experiment(&pset, &config).unwrap();
        assert_eq!(report.cells.len(), 2 * 2 * 3);
        assert_eq!(report.aggregates.len(), 4);
        for cell in &report.cells {
            let err = cell.error.expect("no cell should fail here");
            assert!(err >= -1e-9, "regret {err} below tolerance");
            assert_eq!((cell.solve_ms, cell.sample_ms), (0, 0));
        }
        let rerun = run_experiment(&pset, &config).unwrap();
        assert_eq!(report.to_csv(), rerun.to_csv());
        assert_eq!(report.to_json(), rerun.to_json());
        let csv = report.to_csv();
        assert!(csv.starts_with("method,m,trial,seed,error,solve_ms,sample_ms\n"));
        assert_eq!(csv.lines().count(), 1 + report.cells.len());
    }

    #[test]
    fn experiment_records_per_cell_failures_without_aborting() {
        // Identical rows in 3 dimensions have rank 1 < k + 1, so the tight
        // non-affine method at k = 1 fails while uniform still works.
        let pts = DMatrix::from_row_slice(
            4,
            3,
            &[1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 1.0, 1.0, 0.5],
        );
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let config = ExperimentConfig {
            dataset_id: "degenerate".into(),
            k: 1,
            affine: false,
            eps: 1e-3,
            methods: vec![SensMethod::TraceRatio, SensMethod::Uniform],
            sizes: vec![4],
            trials: 2,
            root_seed: 1,
            parallelism: None,
            timings: false,
        };
        let report = run_experiment(&pset, &config).unwrap();
        let tight: Vec<_> = report
            .cells
            .iter()
            .filter(|c| c.method == SensMethod::TraceRatio)
            .collect();
        assert!(tight.iter().all(|c| c.failure.is_some()));
        let uniform_agg = report
            .aggregates
            .iter()
            .find(|a| a.method == SensMethod::Uniform)
            .unwrap();
        assert_eq!(uniform_agg.trials, 2);
        assert_eq!(uniform_agg.failed, 0);
    }

    #[test]
    fn uniform_full_size_single_trial_has_small_regret() {
        let pset = random_pset(40, 3, 123);
        let sens = uniform_sensitivities(&pset);
        let coreset = sample_coreset(&pset, &sens, 40, 2).unwrap();
        let err = coreset_error(&pset, &coreset, 1, false).unwrap();
        assert!(err >= -1e-9);
        assert!(err < 1.0, "bootstrap resample of the full set should stay close, got {err}");
    }
}
