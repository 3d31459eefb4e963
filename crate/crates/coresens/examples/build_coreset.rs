//! From sensitivities to a weighted coreset.
//!
//! Sampling m rows i.i.d. with probability s(p)/t and weighting each draw
//! by t*w(p)/(s(p)*m) makes every query's coreset cost an unbiased estimate
//! of the full cost. sample_size() turns an accuracy target into m.

use coresens::coreset::{sample_coreset, sample_size};
use coresens::eval::coreset_error;
use coresens::points::WeightedPointSet;
use coresens::sensitivity::{compute_sensitivities, SensMethod};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 2000;
    let d = 8;
    let k = 2;
    let mut pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    for i in 0..20 {
        pts.row_mut(i).apply(|x| *x *= 15.0);
    }
    let pset = WeightedPointSet::unweighted(pts).unwrap();

    let sens =
        compute_sensitivities(&pset, SensMethod::TraceRatio, k, false, 1e-3, None).unwrap();
    println!("total sensitivity t = {:.3}", sens.total);

    // the bound is conservative; m can also be set directly
    let d_vc = (k + 1) * (d + 1);
    let m_bound = sample_size(sens.total, d_vc, 0.5, 0.1, 1.0).unwrap();
    println!("sample_size(eps = 0.5, delta = 0.1) = {m_bound}");

    let m = 200;
    let coreset = sample_coreset(&pset, &sens, m, 42).unwrap();
    let err = coreset_error(&pset, &coreset, k, false).unwrap();
    println!("m = {m} coreset relative regret = {err:.4}");

    let csv = coreset.to_csv();
    println!("first rows of the coreset file:");
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    println!("provenance: {}", coreset.provenance_json());
}
