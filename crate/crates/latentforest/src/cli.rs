//! Command-line interface: `augment`, `evaluate`, `sweep` and `ablate`.
//!
//! Every hyperparameter of the pipelines is reachable through flags; on
//! failure a machine-readable error object goes to stderr and the process
//! exits nonzero.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{load_csv, Dataset, SchemaConfig};
use crate::error::{Error, Result};
use crate::flow::FlowTarget;
use crate::matrix::Matrix;
use crate::pipeline::{
    ablation_baseline, default_ratios, run, run_ablation, sweep_ratios, Method, RunConfig,
};
use crate::report::{
    emit_ablation_report, emit_eval_report, emit_run_report, emit_sweep_report, evaluate_matrices,
};

#[derive(Parser, Debug)]
#[command(
    name = "latentforest",
    version,
    about = "Latent-space tree-driven diffusion for minority oversampling in imbalanced tabular data"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One augmentation run: synthetic CSV plus a JSON report.
    Augment(AugmentArgs),
    /// Similarity and privacy metrics between two numeric CSV files.
    Evaluate(EvaluateArgs),
    /// One run per augmentation ratio, with a shared split and seeds.
    Sweep(SweepArgs),
    /// One-factor-at-a-time ablation grid for the attention pipeline.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// TOML schema config naming the target and categorical columns.
    #[arg(long)]
    schema: PathBuf,
    /// Output directory for reports.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct HyperArgs {
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Variance retention target for the PCA pipeline.
    #[arg(long, default_value_t = 0.95)]
    variance_target: f64,

    /// Diffusion timesteps.
    #[arg(long, default_value_t = 50)]
    n_t: usize,
    /// Noise draws per training row.
    #[arg(long, default_value_t = 100)]
    duplicate_k: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha_min: f64,
    /// Trees per vector-field regressor.
    #[arg(long, default_value_t = 50)]
    flow_estimators: usize,
    #[arg(long, default_value_t = 1.0)]
    flow_learning_rate: f64,
    #[arg(long, default_value_t = 5)]
    flow_max_depth: usize,
    #[arg(long, default_value_t = 1.0)]
    flow_min_child_weight: f64,
    #[arg(long, default_value_t = 1.0)]
    flow_subsample: f64,
    /// Override the per-method flow target: icfm or vp_residual.
    #[arg(long)]
    flow_mode: Option<String>,

    /// Codec training epochs (MLP and transformer).
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    codec_learning_rate: f64,
    /// MLP latent width override (default: half the encoded width).
    #[arg(long)]
    latent_dim: Option<usize>,

    /// Token embedding width of the transformer codec.
    #[arg(long, default_value_t = 8)]
    d_model: usize,
    #[arg(long, default_value_t = 4)]
    nhead: usize,
    #[arg(long, default_value_t = 2)]
    num_layers: usize,
    #[arg(long, default_value_t = 64)]
    dim_ff: usize,
    #[arg(long, default_value_t = 0.5)]
    latent_factor: f64,

    #[arg(long, default_value_t = 5)]
    smote_k: usize,

    #[arg(long, default_value_t = 100)]
    rf_estimators: usize,
    #[arg(long, default_value_t = 42)]
    rf_seed: u64,
    #[arg(long, default_value_t = 100)]
    gbt_estimators: usize,
    #[arg(long, default_value_t = 0.1)]
    gbt_learning_rate: f64,
    #[arg(long, default_value_t = 6)]
    gbt_max_depth: usize,
}

impl HyperArgs {
    fn apply(&self, cfg: &mut RunConfig, seed: u64) -> Result<()> {
        cfg.seed = seed;
        cfg.train_fraction = self.train_fraction;
        cfg.variance_target = self.variance_target;
        cfg.flow.n_t = self.n_t;
        cfg.flow.duplicate_k = self.duplicate_k;
        cfg.flow.alpha_min = self.alpha_min;
        cfg.flow.gbt.n_estimators = self.flow_estimators;
        cfg.flow.gbt.learning_rate = self.flow_learning_rate;
        cfg.flow.gbt.max_depth = self.flow_max_depth;
        cfg.flow.gbt.min_child_weight = self.flow_min_child_weight;
        cfg.flow.gbt.subsample = self.flow_subsample;
        cfg.flow_mode = match self.flow_mode.as_deref() {
            None => None,
            Some("icfm") => Some(FlowTarget::Icfm),
            Some("vp_residual") => Some(FlowTarget::VpResidual),
            Some(other) => {
                return Err(Error::InvalidConfig(format!(
                    "flow_mode must be icfm or vp_residual, got {other:?}"
                )))
            }
        };
        cfg.mlp.epochs = self.epochs;
        cfg.mlp.batch_size = self.batch_size;
        cfg.mlp.learning_rate = self.codec_learning_rate;
        cfg.mlp_latent_dim = self.latent_dim;
        cfg.attn.d_model = self.d_model;
        cfg.attn.nhead = self.nhead;
        cfg.attn.num_layers = self.num_layers;
        cfg.attn.dim_ff = self.dim_ff;
        cfg.attn.latent_dim_factor = self.latent_factor;
        cfg.attn.epochs = self.epochs;
        cfg.attn.batch_size = self.batch_size;
        cfg.attn.learning_rate = self.codec_learning_rate;
        cfg.smote_k = self.smote_k;
        cfg.rf.n_estimators = self.rf_estimators;
        cfg.rf.seed = self.rf_seed;
        cfg.gbt_classifier.n_estimators = self.gbt_estimators;
        cfg.gbt_classifier.learning_rate = self.gbt_learning_rate;
        cfg.gbt_classifier.max_depth = self.gbt_max_depth;
        Ok(())
    }
}

#[derive(Args, Debug)]
struct AugmentArgs {
    /// pcaforest | embedforest | attentionforest | forestdiffusion | smote
    #[arg(long)]
    method: String,
    /// Synthetic rows as a percentage of minority training rows.
    #[arg(long, default_value_t = 100)]
    ratio: u32,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Real rows: numeric CSV with a header.
    #[arg(long)]
    real: PathBuf,
    /// Synthetic rows: numeric CSV with a header.
    #[arg(long)]
    synthetic: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    method: String,
    /// Comma-separated ratios; defaults to 25..300 step 25.
    #[arg(long)]
    ratios: Option<String>,
    /// Prepend a ratio-0 control row.
    #[arg(long, default_value_t = false)]
    baseline: bool,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[arg(long, default_value_t = 100)]
    ratio: u32,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    hyper: HyperArgs,
}

fn load_dataset(args: &DataArgs) -> Result<Dataset> {
    let schema = SchemaConfig::from_file(&args.schema)?;
    let (d, summary) = load_csv(&args.data, &schema)?;
    if summary.dropped_rows > 0 {
        eprintln!(
            "note: dropped {} rows with missing or unparseable cells",
            summary.dropped_rows
        );
    }
    Ok(d)
}

/// Plain numeric CSV (header + float cells) for `evaluate`.
fn load_numeric_csv(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let width = reader.headers()?.len();
    let mut m = Matrix::empty(width);
    for rec in reader.records() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .map(|c| {
                c.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidConfig(format!("non-numeric cell {c:?} in {path:?}"))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(Error::HeaderMismatch(format!(
                "row width {} does not match header width {width}",
                row.len()
            )));
        }
        m.push_row(&row);
    }
    if m.rows() == 0 {
        return Err(Error::EmptyDataset(format!("{path:?} has no data rows")));
    }
    Ok(m)
}

fn parse_ratios(s: &str) -> Result<Vec<u32>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidConfig(format!("bad ratio {p:?}")))
        })
        .collect()
}

fn run_command(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Augment(args) => {
            let method = Method::parse(&args.method)?;
            let d = load_dataset(&args.data)?;
            let mut cfg = RunConfig::new(method);
            cfg.ratio = args.ratio;
            args.hyper.apply(&mut cfg, args.data.seed)?;
            let result = run(&d, &cfg)?;
            let files = emit_run_report(&args.data.out, &d, &cfg, &result)?;
            println!(
                "method={} ratio={}% minority_label={} synthetic_rows={}",
                method, cfg.ratio, result.minority_label, result.synthetic_count
            );
            println!(
                "recall(rf)={:.4} recall(gbt)={:.4} f1(rf)={:.4} f1(gbt)={:.4} space={}",
                result.metrics.random_forest.recall,
                result.metrics.gbt.recall,
                result.metrics.random_forest.f1,
                result.metrics.gbt.f1,
                result.metrics.metric_space
            );
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Evaluate(args) => {
            let real = load_numeric_csv(&args.real)?;
            let synth = load_numeric_csv(&args.synthetic)?;
            let report = evaluate_matrices(&real, &synth)?;
            let files = emit_eval_report(&args.out, &report)?;
            println!(
                "wd={:.6} dcr_mean={:.6} dcr_median={:.6} nndr_mean={:.6}",
                report.deterministic.wd,
                report.deterministic.dcr_mean,
                report.deterministic.dcr_median,
                report.deterministic.nndr_mean
            );
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let method = Method::parse(&args.method)?;
            let d = load_dataset(&args.data)?;
            let mut cfg = RunConfig::new(method);
            args.hyper.apply(&mut cfg, args.data.seed)?;
            let mut ratios = match &args.ratios {
                Some(s) => parse_ratios(s)?,
                None => default_ratios(),
            };
            if args.baseline {
                ratios.insert(0, 0);
            }
            let sweep = sweep_ratios(&d, &cfg, &ratios)?;
            let files = emit_sweep_report(&args.data.out, &cfg, &ratios, &sweep.rows)?;
            for row in &sweep.rows {
                println!(
                    "ratio={:>3}% synthetic={:>5} recall(rf)={:.4} recall(gbt)={:.4}",
                    row.ratio,
                    row.synthetic_count,
                    row.metrics.random_forest.recall,
                    row.metrics.gbt.recall
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Ablate(args) => {
            let d = load_dataset(&args.data)?;
            let mut cfg = RunConfig::new(Method::AttentionForest);
            cfg.ratio = args.ratio;
            args.hyper.apply(&mut cfg, args.data.seed)?;
            let base = ablation_baseline(&cfg);
            let result = run_ablation(&d, &cfg)?;
            let files = emit_ablation_report(&args.data.out, &base, &result)?;
            println!(
                "baseline recall(rf)={:.4} over {} variant runs",
                result.baseline_recall,
                result.rows.len()
            );
            println!(
                "best component: {}={} recall={:.4} improvement={:.2}%",
                result.best.parameter,
                result.best.value,
                result.best.recall_rf,
                result.best.improvement_pct
            );
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

/// Parse argv and run; on failure print a machine-readable error object
/// to stderr and return the exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version through this path
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli) {
        Ok(()) => 0,
        Err(e) => {
            let obj = serde_json::json!({
                "error": { "kind": e.kind(), "message": e.to_string() }
            });
            eprintln!("{obj}");
            1
        }
    }
}
