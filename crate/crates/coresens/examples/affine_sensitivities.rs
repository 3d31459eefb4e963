//! Affine (k-PCA) sensitivities through the lift.
//!
//! Affine queries are handled by appending one large coordinate r to every
//! point, which turns a k-flat into a (k+1)-subspace through the origin.
//! The returned value carries an 80*eps additive margin; the guarantee is
//! s(p) <= value <= s(p) + 161*eps.
//!
//! At k = 0 (the 1-mean cost) the true sensitivity has a closed form,
//!     s(p) = w(p)/W + w(p)*|p - mean|^2 / sum_q w(q)*|q - mean|^2,
//! printed alongside for comparison.

use coresens::points::WeightedPointSet;
use coresens::sensitivity::affine_sensitivity;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn one_mean_exact(pset: &WeightedPointSet, i: usize) -> f64 {
    let w_total: f64 = pset.weights().iter().sum();
    let mean = pset.weighted_mean();
    let spread: f64 = (0..pset.len())
        .map(|q| pset.weight(q) * (pset.point(q) - &mean).norm_squared())
        .sum();
    let own = pset.weight(i) * (pset.point(i) - &mean).norm_squared();
    if spread == 0.0 {
        pset.weight(i) / w_total
    } else {
        pset.weight(i) / w_total + own / spread
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 12;
    let pts = DMatrix::from_fn(n, 3, |_, _| rng.sample::<f64, _>(StandardNormal));
    let pset = WeightedPointSet::unweighted(pts).unwrap();
    let eps = 1e-3;

    println!("k = 0 (1-mean), eps = {eps}:");
    println!("row   value     closed form");
    for i in 0..n {
        let s = affine_sensitivity(&pset, i, 0, eps).unwrap();
        let exact = one_mean_exact(&pset, i);
        println!("{i:>3}   {s:.6}  {exact:.6}");
        assert!(s >= exact - 1e-9 && s <= (exact + 161.0 * eps).min(1.0));
    }

    let t1: f64 = (0..n)
        .map(|i| affine_sensitivity(&pset, i, 1, eps).unwrap())
        .sum();
    println!("k = 1 total sensitivity: {t1:.4}");
}
