//! Merge-and-reduce streaming: coreset construction in one pass over
//! chunked input with logarithmic memory.
//!
//! Rows are buffered into leaves; each full leaf is reduced to a small
//! coreset, and same-level coresets merge pairwise like binary counter
//! carries. Memory never exceeds reduce * (log2(#leaves) + 1) + leaf rows.

use coresens::eval::coreset_error;
use coresens::points::WeightedPointSet;
use coresens::sensitivity::SensMethod;
use coresens::stream::StreamTree;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 6000;
    let d = 6;
    let k = 2;
    let pts = DMatrix::from_fn(n, d, |i, _| {
        let scale = if i % 700 == 0 { 12.0 } else { 1.0 };
        rng.sample::<f64, _>(StandardNormal) * scale
    });
    let pset = WeightedPointSet::unweighted(pts).unwrap();

    let leaf = 512;
    let reduce = 256;
    let mut tree =
        StreamTree::new(leaf, reduce, SensMethod::TraceRatio, k, false, 1e-3, 99).unwrap();

    let chunk = 250;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let w: Vec<f64> = idx.iter().map(|&i| pset.weight(i)).collect();
        tree.push(&pset.subset(&idx, w).unwrap()).unwrap();
        start = end;
        if start % 2000 == 0 {
            println!(
                "after {start:>5} rows: {} retained, levels {:?}",
                tree.retained_rows(),
                tree.level_sizes()
            );
        }
    }

    let leaves = tree.leaves_flushed();
    let cap = reduce * ((leaves as f64).log2().ceil() as usize + 1) + leaf;
    println!("{leaves} leaves flushed, retained <= {cap} rows at all times");

    let coreset = tree.finalize(300).unwrap();
    let err = coreset_error(&pset, &coreset, k, false).unwrap();
    println!(
        "final coreset: {} rows, relative regret {err:.4}",
        coreset.m
    );
}
