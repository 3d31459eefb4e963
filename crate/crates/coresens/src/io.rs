//! Dataset ingestion: headerless numeric CSV and MatrixMarket coordinate
//! files, with an optional weight column, seeded row subsampling, and
//! max-norm normalization.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::points::WeightedPointSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    Csv,
    MatrixMarket,
}

impl DataFormat {
    /// `.mtx` and `.mm` read as MatrixMarket; anything else as CSV.
    pub fn infer(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("mtx") | Some("mm") => DataFormat::MatrixMarket,
            _ => DataFormat::Csv,
        }
    }
}

/// Where and how to read a dataset.
#[derive(Debug, Clone)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DataFormat,
    /// 0-based CSV column holding row weights; the remaining columns are
    /// coordinates. CSV only.
    pub weight_column: Option<usize>,
    /// Keep only this many rows, drawn without replacement with the seed;
    /// surviving rows keep their original order.
    pub subsample: Option<(usize, u64)>,
    /// Scale all points by a common factor so the largest norm is 1.
    pub normalize: bool,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let format = DataFormat::infer(&path);
        DatasetSpec {
            path,
            format,
            weight_column: None,
            subsample: None,
            normalize: false,
        }
    }
}

/// Loads a dataset according to `spec`. Parse failures carry the 1-based
/// line number of the offending input line.
pub fn load_dataset(spec: &DatasetSpec) -> Result<WeightedPointSet> {
    let text = std::fs::read_to_string(&spec.path)?;
    load_from_str(&text, spec)
}

/// The body of [`load_dataset`], separated so tests can feed strings.
pub(crate) fn load_from_str(text: &str, spec: &DatasetSpec) -> Result<WeightedPointSet> {
    let (mut rows, mut weights) = match spec.format {
        DataFormat::Csv => parse_csv(text, spec)?,
        DataFormat::MatrixMarket => {
            if spec.weight_column.is_some() {
                return Err(Error::InvalidParam(
                    "weight columns apply to CSV input only".into(),
                ));
            }
            parse_matrix_market(text, &spec.path)?
        }
    };
    if rows.is_empty() {
        return Err(Error::Parse {
            path: spec.path.display().to_string(),
            line: 0,
            msg: "no data rows".into(),
        });
    }

    if let Some((m, seed)) = spec.subsample {
        if m == 0 {
            return Err(Error::InvalidParam("subsample size must be ≥ 1".into()));
        }
        if m < rows.len() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen = rand::seq::index::sample(&mut rng, rows.len(), m).into_vec();
            chosen.sort_unstable();
            rows = chosen.iter().map(|&i| std::mem::take(&mut rows[i])).collect();
            weights = chosen.iter().map(|&i| weights[i]).collect();
        }
    }

    let d = rows[0].len();
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let points = DMatrix::from_row_slice(rows.len(), d, &flat);
    let pset = WeightedPointSet::new(points, weights)?;
    if spec.normalize {
        Ok(pset.normalize_max_norm()?.0)
    } else {
        Ok(pset)
    }
}

use rand::SeedableRng;

type RowsAndWeights = (Vec<Vec<f64>>, Vec<f64>);

fn parse_csv(text: &str, spec: &DatasetSpec) -> Result<RowsAndWeights> {
    let path = spec.path.display().to_string();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.clone(),
        line,
        msg,
    };
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = Vec::new();
        for field in line.split(',') {
            let value: f64 = field
                .trim()
                .parse()
                .map_err(|e| parse_err(i + 1, format!("bad number `{}`: {e}", field.trim())))?;
            fields.push(value);
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(parse_err(
                    i + 1,
                    format!("row has {} fields, expected {w}", fields.len()),
                ))
            }
            Some(_) => {}
        }
        let weight = match spec.weight_column {
            Some(col) => {
                if col >= fields.len() {
                    return Err(parse_err(
                        i + 1,
                        format!("weight column {col} out of range for {} fields", fields.len()),
                    ));
                }
                fields.remove(col)
            }
            None => 1.0,
        };
        if spec.weight_column.is_some() && fields.is_empty() {
            return Err(parse_err(i + 1, "no coordinate columns remain".into()));
        }
        rows.push(fields);
        weights.push(weight);
    }
    Ok((rows, weights))
}

/// MatrixMarket coordinate reader: `real`, `integer`, and `pattern` fields
/// with `general` symmetry. Entry count must match the header, and indices
/// must stay inside the declared shape; duplicate entries accumulate.
fn parse_matrix_market(text: &str, path: &Path) -> Result<RowsAndWeights> {
    let path = path.display().to_string();
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: path.clone(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();

    let (banner_no, banner) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    let tokens: Vec<String> = banner.split_whitespace().map(|t| t.to_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(banner_no + 1, format!("not a MatrixMarket banner: `{banner}`")));
    }
    if tokens[1] != "matrix" || tokens[2] != "coordinate" {
        return Err(parse_err(
            banner_no + 1,
            format!("only `matrix coordinate` files are supported, got `{} {}`", tokens[1], tokens[2]),
        ));
    }
    let pattern = match tokens[3].as_str() {
        "real" | "integer" => false,
        "pattern" => true,
        other => {
            return Err(parse_err(
                banner_no + 1,
                format!("unsupported field type `{other}` (real, integer, or pattern)"),
            ))
        }
    };
    if tokens[4] != "general" {
        return Err(parse_err(
            banner_no + 1,
            format!("only `general` symmetry is supported, got `{}`", tokens[4]),
        ));
    }

    let mut size_line = None;
    for (i, line) in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        size_line = Some((i, line));
        break;
    }
    let (size_no, size) = size_line.ok_or_else(|| parse_err(banner_no + 1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(size_no + 1, format!("bad size line `{size}`: {e}")))?;
    let [n, d, nnz] = dims[..] else {
        return Err(parse_err(size_no + 1, format!("size line needs `rows cols nnz`, got `{size}`")));
    };
    if n == 0 || d == 0 {
        return Err(parse_err(size_no + 1, format!("degenerate shape {n}x{d}")));
    }

    let mut rows = vec![vec![0.0_f64; d]; n];
    let mut seen = 0usize;
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(si), Some(sj)) = (parts.next(), parts.next()) else {
            return Err(parse_err(i + 1, format!("entry needs at least `row col`, got `{line}`")));
        };
        let r: usize = si
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad row index `{si}`: {e}")))?;
        let c: usize = sj
            .parse()
            .map_err(|e| parse_err(i + 1, format!("bad column index `{sj}`: {e}")))?;
        if !(1..=n).contains(&r) || !(1..=d).contains(&c) {
            return Err(parse_err(i + 1, format!("entry ({r}, {c}) outside {n}x{d}")));
        }
        let value = match (pattern, parts.next()) {
            (true, None) => 1.0,
            (true, Some(extra)) => {
                return Err(parse_err(i + 1, format!("pattern entry carries a value `{extra}`")))
            }
            (false, Some(sv)) => sv
                .parse::<f64>()
                .map_err(|e| parse_err(i + 1, format!("bad value `{sv}`: {e}")))?,
            (false, None) => return Err(parse_err(i + 1, "entry is missing its value".into())),
        };
        if parts.next().is_some() {
            return Err(parse_err(i + 1, format!("trailing fields on entry `{line}`")));
        }
        seen += 1;
        if seen > nnz {
            return Err(parse_err(i + 1, format!("more than the declared {nnz} entries")));
        }
        rows[r - 1][c - 1] += value;
    }
    if seen != nnz {
        return Err(parse_err(
            0,
            format!("header declares {nnz} entries but the file holds {seen}"),
        ));
    }
    Ok((rows, vec![1.0; n]))
}
