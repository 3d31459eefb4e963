//! Stress-testing the lift's distance inequalities on random subspaces.
//!
//! The affine reduction is only sound if, for every point p and every
//! affine subspace S, the lifted distances track the original ones inside
//! stated multiplicative envelopes, one regime for subspaces far from the
//! origin and a sandwich for near ones. The checker samples random
//! subspaces in both regimes and counts violations; max_* fields report
//! the largest observed fraction of each envelope actually used.

use coresens::eval::oracle::check_lift_inequalities;
use coresens::points::WeightedPointSet;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 15;
    let d = 4;
    let mut pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    pts.row_mut(0).fill(0.0); // the origin is the adversarial point here
    let pset = WeightedPointSet::unweighted(pts)
        .unwrap()
        .normalize_max_norm()
        .unwrap()
        .0;

    for z in [1u32, 2] {
        let report = check_lift_inequalities(&pset, 0.05, z, 500, 8).unwrap();
        println!(
            "z = {z}: r = {:.1}, {} far checks, {} near checks",
            report.r, report.shift_checks, report.sandwich_checks
        );
        println!(
            "  violations: {} far, {} near; envelope use: {:.3} plain, {:.3} lifted, {:.3} upper",
            report.shift_violations,
            report.sandwich_violations,
            report.max_shift_plain,
            report.max_shift_lifted,
            report.max_sandwich_upper
        );
        assert!(report.is_pass());
    }
    println!("all inequalities held");
}
