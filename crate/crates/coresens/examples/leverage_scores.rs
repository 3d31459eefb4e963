//! Exact leverage scores: the sensitivities for hyperplane queries.
//!
//! At k = d-1 the per-row supremum has a closed form, the squared row norm
//! of U in the thin SVD of the weight-scaled matrix, and the total equals
//! the numerical rank.

use coresens::points::WeightedPointSet;
use coresens::sensitivity::leverage_sensitivities;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 50;
    let d = 6;
    let mut pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    // one planted heavy row so the scores have something to find
    pts.row_mut(17).copy_from_slice(&[9.0, -9.0, 9.0, -9.0, 9.0, -9.0]);
    let weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    let pset = WeightedPointSet::new(pts, weights).unwrap();

    let sens = leverage_sensitivities(&pset).unwrap();
    println!("n = {n}, d = {d}, total sensitivity = {:.6}", sens.total);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sens.values[b].partial_cmp(&sens.values[a]).unwrap());
    println!("top rows by leverage:");
    for &i in order.iter().take(5) {
        println!("  row {i:>2}  s = {:.6}", sens.values[i]);
    }
    assert!((sens.total - d as f64).abs() < 1e-8, "full-rank total is the rank");
}
