//! Importance sampling of weighted coresets from a sensitivity vector.
//!
//! Rows are drawn i.i.d. with probability proportional to their sensitivity
//! and reweighted by `t·w(p)/(s(p)·m)`, which makes every weighted query cost
//! an unbiased estimator of the full cost. [`sample_size`] converts a total
//! sensitivity and a VC-style dimension into the number of draws needed for
//! an (ε, δ) guarantee.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;
use crate::sensitivity::{SensMethod, SensitivityVector};

/// How a coreset was produced: the sensitivity method and its parameters,
/// the sampling seed, and the total sensitivity `t` behind the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: SensMethod,
    pub k: usize,
    pub affine: bool,
    pub eps: f64,
    pub seed: u64,
    pub t: f64,
}

/// A sampled coreset: `m` draws from the source rows, kept as indices with
/// multiplicity plus one weight per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Coreset {
    /// Source row index of each draw, in draw order; duplicates stay separate.
    pub source_indices: Vec<usize>,
    /// Weight `u(p) = t·w(p)/(s(p)·m)` of each draw.
    pub weights: Vec<f64>,
    /// Number of draws.
    pub m: usize,
    pub provenance: Provenance,
}

/// Serialized form of the provenance sidecar; adds the draw count so the
/// JSON alone describes the sampling run.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProvenanceFile {
    method: SensMethod,
    k: usize,
    affine: bool,
    eps: f64,
    seed: u64,
    t: f64,
    m: usize,
}

/// Deterministically mixes a stream counter into a root seed (SplitMix64
/// finalizer), so independent sampling jobs get decorrelated seeds that are
/// reproducible regardless of scheduling order.
pub(crate) fn derive_seed(root: u64, stream: u64) -> u64 {
    let mut z = root.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Number of i.i.d. sensitivity-weighted draws sufficient for a relative
/// (ε, δ) cost guarantee over a query family of VC-style dimension `d_vc`:
/// `⌈(c·t/ε²)·(d_vc·ln t + ln(1/δ))⌉`, with `ln t` clamped at 0 and the
/// result floored at 1.
pub fn sample_size(t: f64, d_vc: usize, eps: f64, delta: f64, c: f64) -> Result<usize> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParam(format!(
            "total sensitivity must be positive and finite, got {t}"
        )));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParam(format!("eps must be positive, got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParam(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(c >= 1.0) || !c.is_finite() {
        return Err(Error::InvalidParam(format!("leading constant must be ≥ 1, got {c}")));
    }
    if d_vc == 0 {
        return Err(Error::InvalidParam("dimension term d_vc must be ≥ 1".into()));
    }
    let ln_t = t.ln().max(0.0);
    let raw = (c * t / (eps * eps)) * (d_vc as f64 * ln_t + (1.0 / delta).ln());
    if !raw.is_finite() {
        return Err(Error::InvalidParam(
            "sample size overflows; loosen eps or delta".into(),
        ));
    }
    Ok(raw.ceil().max(1.0) as usize)
}

/// Draws an `m`-row coreset from `pset` with probabilities `s(p)/t`.
///
/// Zero-sensitivity rows are never drawn; each draw `p` gets weight
/// `t·w(p)/(s(p)·m)`. Deterministic for a fixed `seed`.
pub fn sample_coreset(
    pset: &WeightedPointSet,
    sens: &SensitivityVector,
    m: usize,
    seed: u64,
) -> Result<Coreset> {
    if sens.len() != pset.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} sensitivities for {} rows",
            sens.len(),
            pset.len()
        )));
    }
    if m == 0 {
        return Err(Error::InvalidParam("coreset size m must be ≥ 1".into()));
    }
    let dist = WeightedIndex::new(sens.values.iter().copied()).map_err(|_| {
        Error::DegenerateInput(
            "sensitivities admit no sampling distribution (all zero or invalid)".into(),
        )
    })?;
    let t = sens.total;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut source_indices = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let i = dist.sample(&mut rng);
        source_indices.push(i);
        weights.push(t * pset.weight(i) / (sens.values[i] * m as f64));
    }
    Ok(Coreset {
        source_indices,
        weights,
        m,
        provenance: Provenance {
            method: sens.method,
            k: sens.k,
            affine: sens.affine,
            eps: sens.eps,
            seed,
            t,
        },
    })
}

impl Coreset {
    /// Materializes the coreset as a weighted point set over `source` rows.
    pub fn to_point_set(&self, source: &WeightedPointSet) -> Result<WeightedPointSet> {
        source.subset(&self.source_indices, self.weights.clone())
    }

    /// CSV form: an `index,weight` header and one row per draw, in draw
    /// order. Weights print in shortest round-trip form, so a write/read
    /// cycle is lossless.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,weight\n");
        for (i, w) in self.source_indices.iter().zip(&self.weights) {
            let _ = writeln!(out, "{i},{w}");
        }
        out
    }

    /// Parses the CSV form back into draws; `provenance` is supplied by the
    /// caller (normally from the JSON sidecar).
    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        Self::parse_csv(text, Path::new("<string>"), provenance)
    }

    fn parse_csv(text: &str, path: &Path, provenance: Provenance) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: path.display().to_string(),
            line,
            msg,
        };
        match lines.next() {
            Some((_, header)) if header.trim() == "index,weight" => {}
            Some((i, header)) => {
                return Err(parse_err(
                    i + 1,
                    format!("expected header `index,weight`, got `{header}`"),
                ))
            }
            None => return Err(parse_err(1, "empty coreset file".into())),
        }
        let mut source_indices = Vec::new();
        let mut weights = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (idx, w) = line
                .split_once(',')
                .ok_or_else(|| parse_err(i + 1, "expected `index,weight`".into()))?;
            source_indices.push(
                idx.trim()
                    .parse::<usize>()
                    .map_err(|e| parse_err(i + 1, format!("bad index `{idx}`: {e}")))?,
            );
            weights.push(
                w.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(i + 1, format!("bad weight `{w}`: {e}")))?,
            );
        }
        let m = source_indices.len();
        Ok(Coreset {
            source_indices,
            weights,
            m,
            provenance,
        })
    }

    /// Provenance sidecar JSON with stable key order.
    pub fn provenance_json(&self) -> String {
        let file = ProvenanceFile {
            method: self.provenance.method,
            k: self.provenance.k,
            affine: self.provenance.affine,
            eps: self.provenance.eps,
            seed: self.provenance.seed,
            t: self.provenance.t,
            m: self.m,
        };
        serde_json::to_string_pretty(&file).expect("provenance serializes")
    }

    /// Writes the CSV to `csv_path` and the provenance JSON next to it
    /// (extension replaced by `provenance.json`). Returns the sidecar path.
    pub fn write_files(&self, csv_path: &Path) -> Result<PathBuf> {
        fs::write(csv_path, self.to_csv())?;
        let sidecar = csv_path.with_extension("provenance.json");
        fs::write(&sidecar, self.provenance_json())?;
        Ok(sidecar)
    }

    /// Reads a coreset back from its CSV and provenance sidecar.
    pub fn read_files(csv_path: &Path) -> Result<Self> {
        let sidecar = csv_path.with_extension("provenance.json");
        let json = fs::read_to_string(&sidecar)?;
        let file: ProvenanceFile = serde_json::from_str(&json).map_err(|e| Error::Parse {
            path: sidecar.display().to_string(),
            line: 0,
            msg: format!("bad provenance JSON: {e}"),
        })?;
        let text = fs::read_to_string(csv_path)?;
        let coreset = Self::parse_csv(
            &text,
            csv_path,
            Provenance {
                method: file.method,
                k: file.k,
                affine: file.affine,
                eps: file.eps,
                seed: file.seed,
                t: file.t,
            },
        )?;
        if coreset.m != file.m {
            return Err(Error::Parse {
                path: csv_path.display().to_string(),
                line: 0,
                msg: format!("CSV holds {} draws but provenance says {}", coreset.m, file.m),
            });
        }
        Ok(coreset)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensitivity::uniform_sensitivities;
    use nalgebra::DMatrix;

    fn unit_square() -> WeightedPointSet {
        let pts = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        WeightedPointSet::unweighted(pts).unwrap()
    }

    fn sens_with(values: Vec<f64>) -> SensitivityVector {
        let total = values.iter().sum();
        SensitivityVector {
            values,
            total,
            method: SensMethod::TraceRatio,
            eps: 1e-3,
            k: 1,
            affine: false,
        }
    }

    #[test]
    fn sample_size_matches_hand_computed_anchors() {
        // t = e, d_vc = 1, eps = 1, delta = 1/e, c = 1: e·(1·1 + 1) ≈ 5.44 → 6.
        let e = std::f64::consts::E;
        assert_eq!(sample_size(e, 1, 1.0, 1.0 / e, 1.0).unwrap(), 6);
        // Doubling c doubles the pre-ceiling value: 2e·2 ≈ 10.87 → 11.
        assert_eq!(sample_size(e, 1, 1.0, 1.0 / e, 2.0).unwrap(), 11);
    }

    #[test]
    fn sample_size_clamps_log_term_for_small_t() {
        // t = 0.5 ≤ 1 drops the d_vc term entirely: (0.5/0.25)·ln 2 ≈ 1.39 → 2.
        assert_eq!(sample_size(0.5, 50, 0.5, 0.5, 1.0).unwrap(), 2);
        // Tiny t still yields at least one draw.
        assert_eq!(sample_size(1e-9, 1, 0.9, 0.99, 1.0).unwrap(), 1);
    }

    #[test]
    fn sample_size_rejects_bad_parameters() {
        assert!(sample_size(0.0, 1, 0.5, 0.1, 1.0).is_err());
        assert!(sample_size(2.0, 0, 0.5, 0.1, 1.0).is_err());
        assert!(sample_size(2.0, 1, 0.0, 0.1, 1.0).is_err());
        assert!(sample_size(2.0, 1, 0.5, 1.0, 1.0).is_err());
        assert!(sample_size(2.0, 1, 0.5, 0.1, 0.5).is_err());
    }

    #[test]
    fn uniform_sensitivities_give_every_draw_weight_n_over_m() {
        let pset = unit_square();
        let sens = uniform_sensitivities(&pset);
        let m = 7;
        let coreset = sample_coreset(&pset, &sens, m, 42).unwrap();
        assert_eq!(coreset.m, m);
        assert_eq!(coreset.source_indices.len(), m);
        for w in &coreset.weights {
            // t = 1, w(p) = 1, s(p) = 1/4: u = 1·1/((1/4)·7) = 4/7.
            assert!((w - 4.0 / 7.0).abs() < 1e-15);
        }
    }

    #[test]
    fn single_support_row_yields_m_copies_with_weight_w_over_m() {
        let pts = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let pset = WeightedPointSet::new(pts, vec![2.0, 1.0, 1.0]).unwrap();
        let sens = sens_with(vec![0.75, 0.0, 0.0]);
        let coreset = sample_coreset(&pset, &sens, 5, 9).unwrap();
        assert!(coreset.source_indices.iter().all(|&i| i == 0));
        for w in &coreset.weights {
            // u = t·w/(s·m) = 0.75·2/(0.75·5) = 2/5 = w(p)/m.
            assert!((w - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_sensitivity_rows_are_never_drawn() {
        let pset = unit_square();
        let sens = sens_with(vec![0.5, 0.0, 0.5, 0.0]);
        let coreset = sample_coreset(&pset, &sens, 200, 3).unwrap();
        assert!(coreset.source_indices.iter().all(|&i| i == 0 || i == 2));
        assert!(coreset.source_indices.iter().any(|&i| i == 0));
        assert!(coreset.source_indices.iter().any(|&i| i == 2));
    }

    #[test]
    fn all_zero_sensitivities_cannot_be_sampled() {
        let pset = unit_square();
        let sens = sens_with(vec![0.0; 4]);
        let err = sample_coreset(&pset, &sens, 3, 0).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn same_seed_reproduces_and_new_seed_differs() {
        let pset = unit_square();
        let sens = sens_with(vec![0.1, 0.2, 0.3, 0.4]);
        let a = sample_coreset(&pset, &sens, 64, 7).unwrap();
        let b = sample_coreset(&pset, &sens, 64, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_coreset(&pset, &sens, 64, 8).unwrap();
        assert_ne!(a.source_indices, c.source_indices);
    }

    #[test]
    fn csv_and_sidecar_round_trip_exactly() {
        let pset = unit_square();
        let sens = sens_with(vec![0.1, 0.2, 0.3, 0.4]);
        let coreset = sample_coreset(&pset, &sens, 16, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("coreset.csv");
        let sidecar = coreset.write_files(&csv_path).unwrap();
        assert_eq!(sidecar, dir.path().join("coreset.provenance.json"));
        let back = Coreset::read_files(&csv_path).unwrap();
        assert_eq!(coreset, back);
    }

    #[test]
    fn csv_parse_reports_line_numbers() {
        let err = Coreset::from_csv(
            "index,weight\n0,1.0\nbroken\n",
            Provenance {
                method: SensMethod::Uniform,
                k: 0,
                affine: false,
                eps: 0.0,
                seed: 0,
                t: 1.0,
            },
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn derived_seeds_are_spread_out() {
        let seeds: Vec<u64> = (0..100).map(|i| derive_seed(12345, i)).collect();
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), seeds.len());
    }

    #[test]
    fn draws_are_unbiased_for_a_weighted_linear_functional() {
        // E[Σ_draws u(p)·f(p)] must equal Σ_rows w(p)·f(p) for any f; check
        // with f(p) = first coordinate over many independent seeds.
        let pts = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 4.0]);
        let pset = WeightedPointSet::new(pts, vec![1.0, 0.5, 0.25]).unwrap();
        let sens = sens_with(vec![0.6, 0.3, 0.1]);
        let exact: f64 = (0..3).map(|i| pset.weight(i) * pset.point(i)[0]).sum();
        let trials = 2000;
        let mut sum = 0.0;
        for seed in 0..trials {
            let coreset = sample_coreset(&pset, &sens, 8, seed).unwrap();
            sum += coreset
                .source_indices
                .iter()
                .zip(&coreset.weights)
                .map(|(&i, &u)| u * pset.point(i)[0])
                .sum::<f64>();
        }
        let mean = sum / trials as f64;
        // Per-draw variance is bounded; 2000 trials of 8 draws keep the
        // standard error well under 2% of the target.
        assert!((mean - exact).abs() < 0.05 * exact, "mean {mean} vs {exact}");
    }
}
