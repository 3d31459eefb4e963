//! End-to-end acceptance checks. Each test covers one shipping criterion and
//! prints exactly one `criterion …: PASS`/`FAIL` line (visible with
//! `--nocapture`; the harness status line mirrors it either way).

use std::panic::{catch_unwind, resume_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use coresens::coreset::sample_coreset;
use coresens::eval::oracle::{
    check_lift_inequalities, oracle_affine_sensitivity, oracle_nonaffine_sensitivity,
};
use coresens::eval::{coreset_error, run_experiment, ExperimentConfig};
use coresens::points::WeightedPointSet;
use coresens::query::{subspace_cost, BasisRole, SubspaceQuery};
use coresens::sensitivity::{
    affine_sensitivity, compute_sensitivities, nonaffine_sensitivity, SensMethod,
};
use coresens::stream::StreamTree;

fn report(name: &str, body: impl FnOnce()) {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(()) => println!("criterion {name}: PASS"),
        Err(e) => {
            println!("criterion {name}: FAIL");
            resume_unwind(e);
        }
    }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..3.0)).collect()
}

fn random_pset(rng: &mut ChaCha8Rng, n: usize, d: usize) -> WeightedPointSet {
    let pts = gaussian_matrix(rng, n, d);
    let w = random_weights(rng, n);
    WeightedPointSet::new(pts, w).unwrap()
}

/// Instance stream shared by the bracket and monotonicity criteria: small
/// full-rank weighted sets with one queried row each.
fn bracket_instances() -> Vec<(WeightedPointSet, usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut out = Vec::new();
    while out.len() < 200 {
        let d = rng.random_range(2..=4usize);
        let n = rng.random_range(5..=20usize);
        let k = rng.random_range(1..=2usize).min(d - 1);
        let pset = random_pset(&mut rng, n, d);
        let index = rng.random_range(0..n);
        out.push((pset, index, k));
    }
    out
}

#[test]
fn c01_hyperplane_path_matches_independent_svd_leverage() {
    report("01 leverage exactness", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pset = random_pset(&mut rng, 100, 15);
            let sens =
                compute_sensitivities(&pset, SensMethod::TraceRatio, 14, false, 1e-3, None)
                    .unwrap();
            // Reference leverage straight from nalgebra's SVD of the scaled
            // rows; row norms of U are order-independent.
            let svd = nalgebra::SVD::new(pset.scaled_rows(), true, false);
            let u = svd.u.as_ref().unwrap();
            for i in 0..100 {
                let lev = u.row(i).norm_squared();
                assert!(
                    (sens.values[i] - lev).abs() <= 1e-8,
                    "row {i}: {} vs leverage {lev}",
                    sens.values[i]
                );
            }
            assert!((sens.total - 15.0).abs() <= 1e-8, "total {}", sens.total);
        }
        assert!(
            started.elapsed() < Duration::from_secs(1),
            "took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c02_solver_value_brackets_the_grid_oracle() {
    report("02 additive-eps bracket", || {
        let started = Instant::now();
        let eps = 1e-3;
        for (pset, index, k) in bracket_instances() {
            let (s, _) = nonaffine_sensitivity(&pset, index, k, eps).unwrap();
            let (oracle, _) = oracle_nonaffine_sensitivity(&pset, index, k, 200).unwrap();
            assert!(
                oracle - 1e-5 <= s,
                "oracle {oracle} above solver {s} (n={}, d={}, k={k}, row {index})",
                pset.len(),
                pset.dim()
            );
            assert!(
                s <= oracle + eps + 1e-5,
                "solver {s} above oracle {oracle} + eps (n={}, d={}, k={k}, row {index})",
                pset.len(),
                pset.dim()
            );
        }
        assert!(
            started.elapsed() < Duration::from_secs(120),
            "took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c03_diagonal_corner_instance_hits_two_thirds() {
    report("03 analytic corner value", || {
        let eps = 1e-3;
        let pts = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let (s, _) = nonaffine_sensitivity(&pset, 2, 1, eps).unwrap();
        assert!(
            (2.0 / 3.0..=2.0 / 3.0 + eps + 1e-9).contains(&s),
            "s = {s}"
        );
    });
}

#[test]
fn c04_iterates_are_monotone_and_stay_under_the_cap() {
    report("04 monotone convergence", || {
        let eps = 1e-3;
        for (pset, index, k) in bracket_instances() {
            let (_, summary) = nonaffine_sensitivity(&pset, index, k, eps).unwrap();
            for w in summary.iterates.windows(2) {
                assert!(
                    w[1] >= w[0] - 1e-12,
                    "iterates decreased: {} then {}",
                    w[0],
                    w[1]
                );
            }
            // Cap from the runner: 10·r·ceil(ln(1/eps)) iterations, floor 2.
            let r = pset.dim(); // gaussian instances are full rank
            let cap = ((10.0 * r as f64 * (1.0 / eps).ln().ceil()) as usize).max(2);
            assert!(
                summary.iterations < cap,
                "{} iterations reached the cap {cap}",
                summary.iterations
            );
        }
    });
}

#[test]
fn c05_affine_values_bracket_the_center_oracle() {
    report("05 affine bound", || {
        let started = Instant::now();
        let eps = 1e-3;
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..100 {
            let d = rng.random_range(2..=3usize);
            let n = rng.random_range(4..=15usize);
            let (pset, _) = random_pset(&mut rng, n, d).normalize_max_norm().unwrap();
            let index = rng.random_range(0..n);
            let s = affine_sensitivity(&pset, index, 0, eps).unwrap();
            let oracle = oracle_affine_sensitivity(&pset, index, 0, 30).unwrap();
            assert!(
                oracle - 1e-4 <= s,
                "oracle {oracle} above value {s} (n={n}, d={d}, row {index})"
            );
            assert!(
                s <= (oracle + 161.0 * eps + 1e-4).min(1.0),
                "value {s} above oracle {oracle} + 161·eps (n={n}, d={d}, row {index})"
            );
        }
        assert!(
            started.elapsed() < Duration::from_secs(120),
            "took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c06_lift_inequalities_hold_across_regimes() {
    report("06 lift inequality checker", || {
        let mut rng = ChaCha8Rng::seed_from_u64(66);
        let mut pts = gaussian_matrix(&mut rng, 12, 3);
        pts.row_mut(0).fill(0.0); // include the origin among the points
        let pset = WeightedPointSet::unweighted(pts)
            .unwrap()
            .normalize_max_norm()
            .unwrap()
            .0;
        for z in [1u32, 2] {
            let report = check_lift_inequalities(&pset, 0.05, z, 1000, 606).unwrap();
            assert!(report.shift_checks > 0 && report.sandwich_checks > 0);
            assert_eq!(report.shift_violations, 0, "z = {z}");
            assert_eq!(report.sandwich_violations, 0, "z = {z}");
            assert!(report.is_pass());
        }
    });
}

#[test]
fn c07_sampled_cost_is_unbiased_for_a_fixed_query() {
    report("07 sampling unbiasedness", || {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pset = random_pset(&mut rng, 100, 5);
        let sens =
            compute_sensitivities(&pset, SensMethod::TraceRatio, 2, false, 1e-3, None).unwrap();
        // A fixed random 2-dimensional query, independent of the data.
        let raw = gaussian_matrix(&mut rng, 5, 2);
        let basis = raw.qr().q();
        let query = SubspaceQuery::new(basis, None, BasisRole::Span).unwrap();
        let full_cost = subspace_cost(&pset, &query, 2.0).unwrap().1;

        let m = 25;
        let trials = 10_000usize;
        let mut costs = Vec::with_capacity(trials);
        for seed in 0..trials as u64 {
            let coreset = sample_coreset(&pset, &sens, m, seed).unwrap();
            let cpset = coreset.to_point_set(&pset).unwrap();
            costs.push(subspace_cost(&cpset, &query, 2.0).unwrap().1);
        }
        let mean = costs.iter().sum::<f64>() / trials as f64;
        let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - full_cost).abs() <= 3.0 * se,
            "mean {mean} vs full {full_cost}, 3·SE = {}",
            3.0 * se
        );
        assert!(
            (mean - full_cost).abs() <= 0.01 * full_cost,
            "mean {mean} off full {full_cost} by more than 1%"
        );
    });
}

/// One-sided sign test: probability of at least `wins` successes in `n`
/// fair coin flips.
fn sign_test_p(wins: usize, n: usize) -> f64 {
    let binom = |n: usize, k: usize| -> f64 {
        let k = k.min(n - k);
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (n - i) as f64 / (i + 1) as f64;
        }
        c
    };
    (wins..=n).map(|k| binom(n, k)).sum::<f64>() * 0.5f64.powi(n as i32)
}

#[test]
fn c08_tight_coresets_beat_uniform_on_outlier_data() {
    report("08 method ordering", || {
        let started = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        let n = 5000;
        let d = 20;
        let mut pts = gaussian_matrix(&mut rng, n, d);
        // Plant 50 high-norm outlier rows that dominate the k=5 cost.
        for i in 0..50 {
            let dir = DVector::<f64>::from_fn(d, |_, _| rng.sample(StandardNormal)).normalize();
            pts.row_mut(n - 1 - i).copy_from(&(dir.transpose() * 30.0));
        }
        let pset = WeightedPointSet::unweighted(pts).unwrap();
        let config = ExperimentConfig {
            dataset_id: "planted-outliers".into(),
            k: 5,
            affine: false,
            eps: 1e-3,
            methods: vec![SensMethod::Uniform, SensMethod::TraceRatio],
            sizes: vec![200, 400, 800],
            trials: 50,
            root_seed: 4242,
            parallelism: None,
            timings: false,
        };
        let report = run_experiment(&pset, &config).unwrap();

        for &m in &config.sizes {
            let mean_of = |method: SensMethod| {
                report
                    .aggregates
                    .iter()
                    .find(|a| a.method == method && a.m == m)
                    .and_then(|a| a.mean_error)
                    .unwrap()
            };
            let tight = mean_of(SensMethod::TraceRatio);
            let uniform = mean_of(SensMethod::Uniform);
            assert!(
                tight <= uniform,
                "m = {m}: tight mean {tight} above uniform mean {uniform}"
            );
        }

        let cell_error = |method: SensMethod, m: usize, trial: usize| {
            report
                .cells
                .iter()
                .find(|c| c.method == method && c.m == m && c.trial == trial)
                .and_then(|c| c.error)
                .unwrap()
        };
        let mut wins = 0usize;
        let mut pairs = 0usize;
        for &m in &config.sizes {
            for trial in 0..config.trials {
                let t = cell_error(SensMethod::TraceRatio, m, trial);
                let u = cell_error(SensMethod::Uniform, m, trial);
                if t != u {
                    pairs += 1;
                    if t < u {
                        wins += 1;
                    }
                }
            }
        }
        let p = sign_test_p(wins, pairs);
        assert!(p < 0.05, "sign test p = {p} ({wins}/{pairs} wins)");
        assert!(
            started.elapsed() < Duration::from_secs(300),
            "took {:?}",
            started.elapsed()
        );
    });
}

#[test]
fn c09_streamed_coreset_stays_within_twice_batch_error() {
    report("09 streaming consistency", || {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 10_000;
        let d = 10;
        let k = 3;
        // Points near a planted k-dimensional subspace plus noise and a few
        // heavy rows, so the optimal cost is positive and coreset quality
        // matters.
        let basis = gaussian_matrix(&mut rng, d, k).qr().q();
        let mut pts = DMatrix::zeros(n, d);
        for i in 0..n {
            let coeff = DVector::<f64>::from_fn(k, |_, _| rng.sample(StandardNormal)) * 3.0;
            let mut row = (&basis * coeff).transpose();
            for j in 0..d {
                row[j] += rng.sample::<f64, _>(StandardNormal) * 0.3;
            }
            if i % 500 == 0 {
                row *= 10.0;
            }
            pts.row_mut(i).copy_from(&row);
        }
        let pset = WeightedPointSet::unweighted(pts).unwrap();

        let m = 512;
        let sens =
            compute_sensitivities(&pset, SensMethod::TraceRatio, k, false, 1e-3, None).unwrap();
        let mut batch_errors = Vec::new();
        for trial in 0..20u64 {
            let coreset = sample_coreset(&pset, &sens, m, 900 + trial).unwrap();
            batch_errors.push(coreset_error(&pset, &coreset, k, false).unwrap());
        }
        let batch_mean = batch_errors.iter().sum::<f64>() / batch_errors.len() as f64;

        let mut tree =
            StreamTree::new(1024, 512, SensMethod::TraceRatio, k, false, 1e-3, 77).unwrap();
        let chunk = 1000;
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let w: Vec<f64> = idx.iter().map(|&i| pset.weight(i)).collect();
            tree.push(&pset.subset(&idx, w).unwrap()).unwrap();
            start = end;
        }
        let streamed = tree.finalize(m).unwrap();
        let stream_error = coreset_error(&pset, &streamed, k, false).unwrap();

        assert!(
            stream_error <= 2.0 * batch_mean,
            "stream error {stream_error} above 2 × batch mean {batch_mean}"
        );
    });
}

#[test]
fn c10_cli_runs_are_byte_identical_and_formats_round_trip() {
    report("10 determinism and formats", || {
        use std::process::Command;
        let bin = env!("CARGO_BIN_EXE_coresens");
        let dir = tempfile::tempdir().unwrap();
        let path = |name: &str| dir.path().join(name);
        let read = |name: &str| std::fs::read(path(name)).unwrap();
        let run = |args: &[&str]| {
            let out = Command::new(bin).args(args).output().unwrap();
            assert!(
                out.status.success(),
                "coresens {args:?} failed: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        };

        let mut rng = ChaCha8Rng::seed_from_u64(1010);
        let mut csv = String::new();
        for _ in 0..60 {
            let row: Vec<String> = (0..3)
                .map(|_| format!("{:.6}", rng.sample::<f64, _>(StandardNormal)))
                .collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        std::fs::write(path("data.csv"), &csv).unwrap();
        let data = path("data.csv");
        let data = data.to_str().unwrap();

        // Every stage twice; byte-compare all outputs.
        for tag in ["a", "b"] {
            run(&[
                "sens", "--data", data, "--k", "1",
                "--out", path(&format!("sens-{tag}.json")).to_str().unwrap(),
            ]);
            run(&[
                "coreset", "--sens", path(&format!("sens-{tag}.json")).to_str().unwrap(),
                "--data", data, "-m", "20", "--seed", "5",
                "--out", path(&format!("core-{tag}.csv")).to_str().unwrap(),
            ]);
            run(&[
                "experiment", "--data", data, "--k", "1", "--sizes", "10,20",
                "--trials", "3", "--seed", "9",
                "--out", path(&format!("exp-{tag}")).to_str().unwrap(),
            ]);
            run(&[
                "stream", "--data", data, "--chunk", "16", "--leaf", "32",
                "--reduce", "24", "--k", "1", "--m-final", "20", "--seed", "3",
                "--out", path(&format!("stream-{tag}.csv")).to_str().unwrap(),
            ]);
        }
        assert_eq!(read("sens-a.json"), read("sens-b.json"));
        assert_eq!(read("core-a.csv"), read("core-b.csv"));
        assert_eq!(
            read("core-a.provenance.json"),
            read("core-b.provenance.json")
        );
        assert_eq!(read("exp-a.csv"), read("exp-b.csv"));
        assert_eq!(read("exp-a.json"), read("exp-b.json"));
        assert_eq!(read("stream-a.csv"), read("stream-b.csv"));
        assert_eq!(
            read("stream-a.provenance.json"),
            read("stream-b.provenance.json")
        );

        // MatrixMarket ingestion: counts must match the header.
        let mm = "%%MatrixMarket matrix coordinate integer general\n\
                  % planted sparse block\n\
                  6 4 9\n\
                  1 1 2\n1 4 1\n2 2 5\n3 1 1\n3 3 4\n4 4 2\n5 2 3\n6 1 1\n6 3 7\n";
        std::fs::write(path("grid.mtx"), mm).unwrap();
        let spec = coresens::io::DatasetSpec::new(path("grid.mtx"));
        let loaded = coresens::io::load_dataset(&spec).unwrap();
        assert_eq!((loaded.len(), loaded.dim()), (6, 4));
        let nnz = loaded.points().iter().filter(|&&x| x != 0.0).count();
        assert_eq!(nnz, 9);

        run(&[
            "sens", "--data", path("grid.mtx").to_str().unwrap(), "--k", "1",
            "--out", path("mm-sens.json").to_str().unwrap(),
        ]);
        let parsed: serde_json::Value =
            serde_json::from_slice(&read("mm-sens.json")).unwrap();
        assert_eq!(parsed["n"], 6);
        assert_eq!(parsed["d"], 4);
    });
}
