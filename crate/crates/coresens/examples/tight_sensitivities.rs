//! Tight per-row sensitivities for k-subspace (k-SVD) costs, with the
//! iteration diagnostics exposed.
//!
//! For k below d-1 there is no closed form; each row runs a trace-ratio
//! iteration whose iterates increase monotonically and stop once the next
//! gain certifies the remaining gap is below eps.

use coresens::points::WeightedPointSet;
use coresens::sensitivity::nonaffine_sensitivity;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 40;
    let d = 5;
    let k = 2;
    let eps = 1e-3;
    let mut pts = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    for i in 0..3 {
        // outliers off the bulk, the rows a k=2 summary must not miss
        pts.row_mut(i).apply(|x| *x *= 8.0);
    }
    let weights = vec![1.0; n];
    let pset = WeightedPointSet::new(pts, weights).unwrap();

    println!("row   s       iterations  stop          iterates");
    let mut total = 0.0;
    for i in 0..n {
        let (s, info) = nonaffine_sensitivity(&pset, i, k, eps).unwrap();
        total += s;
        if i < 5 {
            let path: Vec<String> = info.iterates.iter().map(|v| format!("{v:.4}")).collect();
            println!(
                "{i:>3}   {s:.4}  {:>10}  {:<12}  {}",
                info.iterations,
                format!("{:?}", info.stop),
                path.join(" -> ")
            );
        }
    }
    println!("...");
    println!("total sensitivity t = {total:.4} (bounds the coreset size via t/eps^2)");
}
