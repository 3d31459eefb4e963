//! Merge-and-reduce streaming: rows buffer into fixed-size leaves, each leaf
//! is reduced to a sampled coreset, and equal-level coresets merge pairwise
//! and reduce again, so at most one coreset lives per level. Retained rows
//! never exceed `reduce_size·(⌈log₂(#leaves)⌉+1) + leaf_size`.

use nalgebra::DMatrix;

use crate::coreset::{derive_seed, sample_coreset, Coreset};
use crate::error::{Error, Result};
use crate::points::WeightedPointSet;
use crate::sensitivity::{compute_sensitivities, SensMethod, AFFINE_EPS_MAX};

/// Leaf size used when the caller has no reason to pick one.
pub const DEFAULT_LEAF_SIZE: usize = 4096;

/// A retained node: the sampled rows as live points plus, per row, the index
/// of the original input row it was drawn from.
#[derive(Debug, Clone)]
struct LevelCoreset {
    points: WeightedPointSet,
    source_indices: Vec<usize>,
}

/// Single-writer merge-and-reduce tree over a stream of weighted rows.
///
/// Reductions compute sensitivities with the configured method and sample
/// `reduce_size` rows; all sampling seeds derive from the root seed and a
/// reduction counter, so a replay of the same rows (in any chunking) gives
/// byte-identical results.
#[derive(Debug)]
pub struct StreamTree {
    leaf_size: usize,
    reduce_size: usize,
    method: SensMethod,
    k: usize,
    affine: bool,
    /// Sensitivity slack used for every node reduction.
    eps_leaf: f64,
    seed: u64,
    reduce_counter: u64,
    rows_seen: usize,
    leaves_flushed: usize,
    dim: Option<usize>,
    buffer_rows: Vec<f64>,
    buffer_weights: Vec<f64>,
    buffer_indices: Vec<usize>,
    /// Slot `l` holds the one retained coreset of level `l`, if any.
    level_coresets: Vec<Option<LevelCoreset>>,
}

impl StreamTree {
    pub fn new(
        leaf_size: usize,
        reduce_size: usize,
        method: SensMethod,
        k: usize,
        affine: bool,
        eps_leaf: f64,
        seed: u64,
    ) -> Result<Self> {
        if leaf_size == 0 {
            return Err(Error::InvalidParam("leaf size must be ≥ 1".into()));
        }
        if reduce_size == 0 {
            return Err(Error::InvalidParam("reduce size must be ≥ 1".into()));
        }
        if !(eps_leaf > 0.0 && eps_leaf < 1.0) {
            return Err(Error::InvalidParam(format!(
                "eps must lie in (0, 1), got {eps_leaf}"
            )));
        }
        if affine && eps_leaf > AFFINE_EPS_MAX {
            return Err(Error::InvalidParam(format!(
                "affine reductions require eps ≤ {AFFINE_EPS_MAX}, got {eps_leaf}"
            )));
        }
        Ok(StreamTree {
            leaf_size,
            reduce_size,
            method,
            k,
            affine,
            eps_leaf,
            seed,
            reduce_counter: 0,
            rows_seen: 0,
            leaves_flushed: 0,
            dim: None,
            buffer_rows: Vec::new(),
            buffer_weights: Vec::new(),
            buffer_indices: Vec::new(),
            level_coresets: Vec::new(),
        })
    }

    pub fn rows_seen(&self) -> usize {
        self.rows_seen
    }

    pub fn leaves_flushed(&self) -> usize {
        self.leaves_flushed
    }

    /// Rows currently held in memory: the buffer plus every retained level.
    pub fn retained_rows(&self) -> usize {
        let levels: usize = self
            .level_coresets
            .iter()
            .flatten()
            .map(|c| c.points.len())
            .sum();
        levels + self.buffer_weights.len()
    }

    /// Per-level retained row counts, lowest level first.
    pub fn level_sizes(&self) -> Vec<Option<usize>> {
        self.level_coresets
            .iter()
            .map(|slot| slot.as_ref().map(|c| c.points.len()))
            .collect()
    }

    /// Appends a chunk of weighted rows, flushing full leaves as they form.
    pub fn push(&mut self, chunk: &WeightedPointSet) -> Result<()> {
        match self.dim {
            None => self.dim = Some(chunk.dim()),
            Some(d) if d != chunk.dim() => {
                return Err(Error::DimensionMismatch(format!(
                    "stream carries {d}-dimensional rows, chunk has {}",
                    chunk.dim()
                )))
            }
            Some(_) => {}
        }
        for i in 0..chunk.len() {
            self.buffer_rows.extend(chunk.point(i).iter());
            self.buffer_weights.push(chunk.weight(i));
            self.buffer_indices.push(self.rows_seen);
            self.rows_seen += 1;
            if self.buffer_weights.len() == self.leaf_size {
                self.flush_leaf()?;
            }
        }
        Ok(())
    }

    /// Reduces one node to `reduce_size` sampled rows, keeping original-row
    /// traceability.
    fn reduce(&mut self, points: WeightedPointSet, source: Vec<usize>) -> Result<LevelCoreset> {
        let sens = compute_sensitivities(
            &points,
            self.method,
            self.k,
            self.affine,
            self.eps_leaf,
            None,
        )?;
        let node_seed = derive_seed(self.seed, self.reduce_counter);
        self.reduce_counter += 1;
        let coreset = sample_coreset(&points, &sens, self.reduce_size, node_seed)?;
        let reduced = coreset.to_point_set(&points)?;
        let source_indices = coreset
            .source_indices
            .iter()
            .map(|&local| source[local])
            .collect();
        Ok(LevelCoreset {
            points: reduced,
            source_indices,
        })
    }

    fn take_buffer(&mut self) -> Result<(WeightedPointSet, Vec<usize>)> {
        let n = self.buffer_weights.len();
        let d = self.dim.expect("buffer is nonempty, so dim is set");
        let points = DMatrix::from_row_slice(n, d, &self.buffer_rows);
        let pset = WeightedPointSet::new(points, std::mem::take(&mut self.buffer_weights))?;
        self.buffer_rows.clear();
        Ok((pset, std::mem::take(&mut self.buffer_indices)))
    }

    /// Reduces the full buffer to a level-0 coreset and carries it up,
    /// merging pairs of equal-level coresets binary-counter style.
    fn flush_leaf(&mut self) -> Result<()> {
        let (points, source) = self.take_buffer()?;
        self.leaves_flushed += 1;
        let mut current = self.reduce(points, source)?;
        let mut level = 0;
        loop {
            if level == self.level_coresets.len() {
                self.level_coresets.push(None);
            }
            match self.level_coresets[level].take() {
                None => {
                    self.level_coresets[level] = Some(current);
                    return Ok(());
                }
                Some(older) => {
                    let (merged, source) = merge(older, current);
                    current = self.reduce(merged, source)?;
                    level += 1;
                }
            }
        }
    }

    /// Union of every retained level (highest first) and the buffer, with
    /// original-row indices kept alongside.
    fn gather(&mut self) -> Result<Option<(WeightedPointSet, Vec<usize>)>> {
        let mut parts: Vec<(WeightedPointSet, Vec<usize>)> = Vec::new();
        for slot in self.level_coresets.iter_mut().rev() {
            if let Some(c) = slot.take() {
                parts.push((c.points, c.source_indices));
            }
        }
        if !self.buffer_weights.is_empty() {
            parts.push(self.take_buffer()?);
        }
        let mut iter = parts.into_iter();
        let Some(mut acc) = iter.next() else {
            return Ok(None);
        };
        for part in iter {
            let (merged, source) = merge(
                LevelCoreset {
                    points: acc.0,
                    source_indices: acc.1,
                },
                LevelCoreset {
                    points: part.0,
                    source_indices: part.1,
                },
            );
            acc = (merged, source);
        }
        Ok(Some(acc))
    }

    /// Merges everything still held and reduces once to `m_final` rows. The
    /// returned coreset's indices refer to the original input rows, and its
    /// provenance carries the tree's root seed.
    pub fn finalize(mut self, m_final: usize) -> Result<Coreset> {
        let Some((points, source)) = self.gather()? else {
            return Err(Error::EmptyStream);
        };
        let sens = compute_sensitivities(
            &points,
            self.method,
            self.k,
            self.affine,
            self.eps_leaf,
            None,
        )?;
        let final_seed = derive_seed(self.seed, self.reduce_counter);
        let mut coreset = sample_coreset(&points, &sens, m_final, final_seed)?;
        coreset.source_indices = coreset
            .source_indices
            .iter()
            .map(|&local| source[local])
            .collect();
        coreset.provenance.seed = self.seed;
        Ok(coreset)
    }
}

fn merge(older: LevelCoreset, newer: LevelCoreset) -> (WeightedPointSet, Vec<usize>) {
    let d = older.points.dim();
    let n = older.points.len() + newer.points.len();
    let mut rows = Vec::with_capacity(n * d);
    let mut weights = Vec::with_capacity(n);
    let mut source = Vec::with_capacity(n);
    for part in [&older, &newer] {
        for i in 0..part.points.len() {
            rows.extend(part.points.point(i).iter());
            weights.push(part.points.weight(i));
            source.push(part.source_indices[i]);
        }
    }
    let points = DMatrix::from_row_slice(n, d, &rows);
    let pset = WeightedPointSet::new(points, weights)
        .expect("merging nonempty retained nodes preserves a positive weight");
    (pset, source)
}
