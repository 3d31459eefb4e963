//! Command-line front end: `sens`, `coreset`, `experiment`, `stream`, and
//! `oracle` subcommands over CSV or MatrixMarket datasets.
//!
//! Exit codes: 0 on success, 2 on input errors (parsing, shapes, parameter
//! ranges), 3 on numerical failures (non-convergence, conditioning).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::coreset::{sample_coreset, Coreset};
use crate::error::{Error, Result};
use crate::eval::oracle::{
    check_lift_inequalities, one_mean_sensitivity_exact, oracle_affine_sensitivity,
    oracle_nonaffine_sensitivity,
};
use crate::eval::{run_experiment, ExperimentConfig};
use crate::io::{load_dataset, DataFormat, DatasetSpec};
use crate::points::WeightedPointSet;
use crate::sensitivity::{
    compute_sensitivities, SensMethod, SensitivityVector, AFFINE_EPS_COMFORT, AFFINE_EPS_MAX,
};
use crate::stream::{StreamTree, DEFAULT_LEAF_SIZE};

#[derive(Debug, Parser)]
#[command(
    name = "coresens",
    version,
    about = "Tight per-row sensitivities and sampled coresets for k-subspace costs",
    after_help = "All randomness flows from the --seed flags; per-trial and per-node \
                  seeds are derived from them deterministically, so reruns with the \
                  same inputs are byte-identical."
)]
pub struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Compute per-row sensitivities and write them as JSON
    Sens(SensArgs),
    /// Sample a coreset from a sensitivity file
    Coreset(CoresetArgs),
    /// Compare coreset quality across methods, sizes, and trials
    Experiment(ExperimentArgs),
    /// Build a coreset from a stream via a merge-and-reduce tree
    Stream(StreamArgs),
    /// Brute-force reference values and the lift inequality checker
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    MatrixMarket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// 1/n per row
    Uniform,
    /// Projected-leverage upper bound
    Baseline,
    /// Tight sensitivity (trace-ratio iteration, lifted when affine)
    Tight,
}

impl MethodArg {
    fn to_method(self) -> SensMethod {
        match self {
            MethodArg::Uniform => SensMethod::Uniform,
            MethodArg::Baseline => SensMethod::BaselineProjection,
            MethodArg::Tight => SensMethod::TraceRatio,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input dataset path
    #[arg(long)]
    data: PathBuf,
    /// Input format; inferred from the extension when omitted
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// 0-based CSV column holding row weights
    #[arg(long)]
    weight_column: Option<usize>,
    /// Keep only N rows, drawn without replacement
    #[arg(long, value_name = "N")]
    subsample: Option<usize>,
    /// Seed for --subsample
    #[arg(long, default_value_t = 0)]
    subsample_seed: u64,
    /// Scale points so the largest norm is 1 (default with --affine)
    #[arg(long, overrides_with = "no_normalize")]
    normalize: bool,
    /// Keep the input scale even with --affine
    #[arg(long, overrides_with = "normalize")]
    no_normalize: bool,
}

impl DataArgs {
    fn load(&self, normalize_default: bool) -> Result<WeightedPointSet> {
        let format = match self.format {
            Some(FormatArg::Csv) => DataFormat::Csv,
            Some(FormatArg::MatrixMarket) => DataFormat::MatrixMarket,
            None => DataFormat::infer(&self.data),
        };
        let normalize = if self.no_normalize {
            false
        } else {
            self.normalize || normalize_default
        };
        load_dataset(&DatasetSpec {
            path: self.data.clone(),
            format,
            weight_column: self.weight_column,
            subsample: self.subsample.map(|m| (m, self.subsample_seed)),
            normalize,
        })
    }

    fn dataset_id(&self) -> String {
        self.data
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.data.display().to_string())
    }
}

#[derive(Debug, Args)]
struct SensArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Query subspace dimension
    #[arg(long)]
    k: usize,
    /// Affine (k-PCA) cost instead of linear (k-SVD)
    #[arg(long)]
    affine: bool,
    /// Additive sensitivity slack
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Tight)]
    method: MethodArg,
    /// Cap worker threads for per-row jobs
    #[arg(long)]
    parallelism: Option<usize>,
    /// Output path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CoresetArgs {
    /// Sensitivity JSON produced by `sens`
    #[arg(long)]
    sens: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Number of draws
    #[arg(long, short = 'm')]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; the provenance JSON lands beside it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    affine: bool,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Comma-separated coreset sizes
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    trials: usize,
    /// Comma-separated methods to compare
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Uniform, MethodArg::Baseline, MethodArg::Tight])]
    methods: Vec<MethodArg>,
    /// Root seed; every cell derives its own seed from it
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    parallelism: Option<usize>,
    /// Record wall-clock timings (off keeps reruns byte-identical)
    #[arg(long)]
    timings: bool,
    /// Output prefix: writes <out>.csv and <out>.json
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StreamArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Rows fed to the tree per push
    #[arg(long, default_value_t = 1024)]
    chunk: usize,
    /// Rows buffered before a leaf is reduced
    #[arg(long, default_value_t = DEFAULT_LEAF_SIZE)]
    leaf: usize,
    /// Rows kept per reduced node
    #[arg(long, default_value_t = 1024)]
    reduce: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    affine: bool,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Size of the final coreset
    #[arg(long)]
    m_final: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path; the provenance JSON lands beside it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(subcommand)]
    which: OracleCmd,
}

#[derive(Debug, Subcommand)]
enum OracleCmd {
    /// Grid/refinement lower bound for one row's non-affine sensitivity
    Tight {
        #[command(flatten)]
        data: DataArgs,
        /// Row to evaluate
        #[arg(long)]
        index: usize,
        #[arg(long)]
        k: usize,
        /// Grid density; higher is slower and tighter
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Multi-start ascent lower bound for one row's 1-mean sensitivity
    OneMean {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        index: usize,
        /// Random restarts beyond the data points and the mean
        #[arg(long, default_value_t = 20)]
        restarts: usize,
    },
    /// Stress-test the lift distance inequalities on random subspaces
    LiftCheck {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Cost exponent (1 or 2)
        #[arg(long, default_value_t = 2)]
        z: u32,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Sensitivity file schema shared by `sens` (writer) and `coreset` (reader).
#[derive(Serialize, Deserialize)]
struct SensFile {
    n: usize,
    d: usize,
    k: usize,
    affine: bool,
    eps: f64,
    method: SensMethod,
    total: f64,
    values: Vec<f64>,
}

/// Entry point used by the binary: parse, run, map errors to exit codes.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Cmd::Sens(args) => cmd_sens(args)?,
        Cmd::Coreset(args) => cmd_coreset(args)?,
        Cmd::Experiment(args) => cmd_experiment(args)?,
        Cmd::Stream(args) => cmd_stream(args)?,
        Cmd::Oracle(args) => return cmd_oracle(args),
    }
    Ok(ExitCode::SUCCESS)
}

/// Rejects eps outside the supported range for the chosen cost family and
/// warns when an affine eps is small enough to condition the lift poorly.
fn validate_eps(eps: f64, affine: bool) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParam(format!("eps must lie in (0, 1), got {eps}")));
    }
    if affine {
        if eps > AFFINE_EPS_MAX {
            return Err(Error::InvalidParam(format!(
                "affine sensitivities support eps in (0, {AFFINE_EPS_MAX:.6}]; \
                 got {eps} (pass --eps 0.0833 or smaller)"
            )));
        }
        if eps < AFFINE_EPS_COMFORT {
            eprintln!(
                "warning: eps = {eps} sharpens the bound but conditions the lifted \
                 spectrum poorly; values below {AFFINE_EPS_COMFORT} trade accuracy \
                 for slower, less stable iterations"
            );
        }
    }
    Ok(())
}

fn write_or_print(out: Option<&Path>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
            println!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn cmd_sens(args: SensArgs) -> Result<()> {
    validate_eps(args.eps, args.affine)?;
    let pset = args.data.load(args.affine)?;
    let sens = compute_sensitivities(
        &pset,
        args.method.to_method(),
        args.k,
        args.affine,
        args.eps,
        args.parallelism,
    )?;
    let file = SensFile {
        n: pset.len(),
        d: pset.dim(),
        k: sens.k,
        affine: sens.affine,
        eps: sens.eps,
        method: sens.method,
        total: sens.total,
        values: sens.values,
    };
    let mut json = serde_json::to_string_pretty(&file).expect("sensitivities serialize");
    json.push('\n');
    write_or_print(args.out.as_deref(), &json)
}

fn cmd_coreset(args: CoresetArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.sens)?;
    let file: SensFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: args.sens.display().to_string(),
        line: 0,
        msg: format!("bad sensitivity JSON: {e}"),
    })?;
    let pset = args.data.load(file.affine)?;
    if file.n != pset.len() || file.d != pset.dim() {
        return Err(Error::DimensionMismatch(format!(
            "sensitivity file describes a {}x{} dataset but the input is {}x{}",
            file.n,
            file.d,
            pset.len(),
            pset.dim()
        )));
    }
    let recomputed: f64 = file.values.iter().sum();
    if (recomputed - file.total).abs() > 1e-6 * file.total.max(1.0) {
        return Err(Error::Parse {
            path: args.sens.display().to_string(),
            line: 0,
            msg: format!(
                "stored total {} disagrees with the sum of values {recomputed}",
                file.total
            ),
        });
    }
    let sens = SensitivityVector {
        values: file.values,
        total: recomputed,
        method: file.method,
        eps: file.eps,
        k: file.k,
        affine: file.affine,
    };
    let coreset = sample_coreset(&pset, &sens, args.size, args.seed)?;
    let sidecar = coreset.write_files(&args.out)?;
    println!("wrote {} and {}", args.out.display(), sidecar.display());
    Ok(())
}

fn cmd_experiment(args: ExperimentArgs) -> Result<()> {
    validate_eps(args.eps, args.affine)?;
    let pset = args.data.load(args.affine)?;
    let config = ExperimentConfig {
        dataset_id: args.data.dataset_id(),
        k: args.k,
        affine: args.affine,
        eps: args.eps,
        methods: args.methods.iter().map(|m| m.to_method()).collect(),
        sizes: args.sizes,
        trials: args.trials,
        root_seed: args.seed,
        parallelism: args.parallelism,
        timings: args.timings,
    };
    let report = run_experiment(&pset, &config)?;
    let csv_path = PathBuf::from(format!("{}.csv", args.out.display()));
    let json_path = PathBuf::from(format!("{}.json", args.out.display()));
    std::fs::write(&csv_path, report.to_csv())?;
    std::fs::write(&json_path, report.to_json())?;
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn cmd_stream(args: StreamArgs) -> Result<()> {
    if args.chunk == 0 {
        return Err(Error::InvalidParam("chunk size must be ≥ 1".into()));
    }
    validate_eps(args.eps, args.affine)?;
    let pset = args.data.load(args.affine)?;
    let mut tree = StreamTree::new(
        args.leaf,
        args.reduce,
        SensMethod::TraceRatio,
        args.k,
        args.affine,
        args.eps,
        args.seed,
    )?;
    let n = pset.len();
    let mut start = 0;
    while start < n {
        let end = (start + args.chunk).min(n);
        let indices: Vec<usize> = (start..end).collect();
        let weights: Vec<f64> = indices.iter().map(|&i| pset.weight(i)).collect();
        let chunk = pset.subset(&indices, weights)?;
        tree.push(&chunk)?;
        start = end;
    }
    let leaves = tree.leaves_flushed();
    let coreset: Coreset = tree.finalize(args.m_final)?;
    let sidecar = coreset.write_files(&args.out)?;
    println!(
        "streamed {n} rows through {leaves} leaves; wrote {} and {}",
        args.out.display(),
        sidecar.display()
    );
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<ExitCode> {
    match args.which {
        OracleCmd::Tight {
            data,
            index,
            k,
            resolution,
        } => {
            let pset = data.load(false)?;
            let (value, _) = oracle_nonaffine_sensitivity(&pset, index, k, resolution)?;
            #[derive(Serialize)]
            struct Out {
                index: usize,
                k: usize,
                resolution: usize,
                value: f64,
            }
            let out = Out {
                index,
                k,
                resolution,
                value,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::OneMean {
            data,
            index,
            restarts,
        } => {
            let pset = data.load(true)?;
            let value = oracle_affine_sensitivity(&pset, index, 0, restarts)?;
            let closed_form = one_mean_sensitivity_exact(&pset, index)?;
            #[derive(Serialize)]
            struct Out {
                index: usize,
                restarts: usize,
                value: f64,
                closed_form: f64,
            }
            let out = Out {
                index,
                restarts,
                value,
                closed_form,
            };
            println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
            Ok(ExitCode::SUCCESS)
        }
        OracleCmd::LiftCheck {
            data,
            eps,
            z,
            trials,
            seed,
        } => {
            let pset = data.load(true)?;
            let report = check_lift_inequalities(&pset, eps, z, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("serializes"));
            if report.is_pass() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("error: lift inequality violations detected");
                Ok(ExitCode::from(3))
            }
        }
    }
}
