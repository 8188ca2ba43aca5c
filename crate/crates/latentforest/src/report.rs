//! Report files: a JSON report per command plus CSV side-products.
//!
//! Every report splits into a `deterministic` section — config echo,
//! seeds, metric space, metrics, library version — that reproduces
//! byte-identically for a fixed config and seed, and a `timings` section
//! that never does. Field order is struct order, so serialization is
//! stable across runs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::flow::FlowTarget;
use crate::matrix::Matrix;
use crate::metrics::{MetricsReport, StageTimings};
use crate::pipeline::{AblationResult, AugmentationResult, RunConfig, SweepRow};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

fn library_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

fn strip_timings(m: &MetricsReport) -> MetricsReport {
    MetricsReport {
        timings: None,
        ..m.clone()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunDeterministic {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub config: RunConfig,
    pub minority_label: u8,
    pub synthetic_count: usize,
    pub flow_mode: Option<FlowTarget>,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub deterministic: RunDeterministic,
    pub timings: StageTimings,
}

impl RunReport {
    pub fn new(cfg: &RunConfig, result: &AugmentationResult) -> Self {
        RunReport {
            deterministic: RunDeterministic {
                schema_version: REPORT_SCHEMA_VERSION,
                library_version: library_version(),
                command: "augment".to_string(),
                config: cfg.clone(),
                minority_label: result.minority_label,
                synthetic_count: result.synthetic_count,
                flow_mode: result.flow_mode,
                metrics: strip_timings(&result.metrics),
            },
            timings: result.metrics.timings.unwrap_or_default(),
        }
    }
}

/// CSV text for synthetic rows. Feature-space rows go through the
/// dataset schema (one-hot spans collapse to category values); latent
/// rows get generated column names.
pub fn synthetic_csv(d: &Dataset, result: &AugmentationResult) -> Result<String> {
    if result.synthetic.cols() == d.width() {
        d.rows_to_csv(&result.synthetic, result.minority_label)
    } else {
        let mut out = String::new();
        let header: Vec<String> = (0..result.synthetic.cols())
            .map(|j| format!("c{j}"))
            .collect();
        out.push_str(&header.join(","));
        out.push_str(&format!(",{}\n", d.schema.target));
        for r in 0..result.synthetic.rows() {
            let cells: Vec<String> = result
                .synthetic
                .row(r)
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            out.push_str(&cells.join(","));
            out.push_str(&format!(
                ",{}\n",
                d.label_values[result.minority_label as usize]
            ));
        }
        Ok(out)
    }
}

/// Write `report.json` and `synthetic.csv` for one augmentation run.
pub fn emit_run_report(
    out_dir: &Path,
    d: &Dataset,
    cfg: &RunConfig,
    result: &AugmentationResult,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let report = RunReport::new(cfg, result);
    let report_path = out_dir.join("report.json");
    write_file(&report_path, &serde_json::to_string_pretty(&report)?)?;
    let csv_path = out_dir.join("synthetic.csv");
    write_file(&csv_path, &synthetic_csv(d, result)?)?;
    Ok(vec![report_path, csv_path])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepDeterministic {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub config: RunConfig,
    pub ratios: Vec<u32>,
    pub rows: Vec<SweepRowReport>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRowReport {
    pub ratio: u32,
    pub synthetic_count: usize,
    pub metrics: MetricsReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepReport {
    pub deterministic: SweepDeterministic,
    pub timings: Vec<StageTimings>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// One CSV line per ratio per classifier, mirroring the per-ratio recall
/// tables.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "ratio,classifier,recall,precision,f1,wd,dcr_mean,dcr_median,nndr_mean,metric_space\n",
    );
    for row in rows {
        for (name, m) in [
            ("random_forest", &row.metrics.random_forest),
            ("gbt", &row.metrics.gbt),
        ] {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                row.ratio,
                name,
                m.recall,
                m.precision,
                m.f1,
                opt(row.metrics.wd),
                opt(row.metrics.dcr_mean),
                opt(row.metrics.dcr_median),
                opt(row.metrics.nndr_mean),
                row.metrics.metric_space,
            ));
        }
    }
    out
}

pub fn emit_sweep_report(
    out_dir: &Path,
    cfg: &RunConfig,
    ratios: &[u32],
    rows: &[SweepRow],
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let report = SweepReport {
        deterministic: SweepDeterministic {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: library_version(),
            command: "sweep".to_string(),
            config: cfg.clone(),
            ratios: ratios.to_vec(),
            rows: rows
                .iter()
                .map(|r| SweepRowReport {
                    ratio: r.ratio,
                    synthetic_count: r.synthetic_count,
                    metrics: strip_timings(&r.metrics),
                })
                .collect(),
        },
        timings: rows
            .iter()
            .map(|r| r.metrics.timings.unwrap_or_default())
            .collect(),
    };
    let report_path = out_dir.join("report.json");
    write_file(&report_path, &serde_json::to_string_pretty(&report)?)?;
    let csv_path = out_dir.join("sweep.csv");
    write_file(&csv_path, &sweep_csv(rows))?;
    Ok(vec![report_path, csv_path])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationDeterministic {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub config: RunConfig,
    pub result: AblationResult,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationReport {
    pub deterministic: AblationDeterministic,
}

/// Grid rows plus the best-component summary line.
pub fn ablation_csv(a: &AblationResult) -> String {
    let mut out = String::from("parameter,value,recall_rf,improvement_pct\n");
    out.push_str(&format!("baseline,,{},0\n", a.baseline_recall));
    for row in &a.rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.parameter, row.value, row.recall_rf, row.improvement_pct
        ));
    }
    out
}

pub fn emit_ablation_report(
    out_dir: &Path,
    cfg: &RunConfig,
    result: &AblationResult,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let report = AblationReport {
        deterministic: AblationDeterministic {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: library_version(),
            command: "ablate".to_string(),
            config: cfg.clone(),
            result: result.clone(),
        },
    };
    let report_path = out_dir.join("report.json");
    write_file(&report_path, &serde_json::to_string_pretty(&report)?)?;
    let csv_path = out_dir.join("ablation.csv");
    write_file(&csv_path, &ablation_csv(result))?;
    Ok(vec![report_path, csv_path])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalDeterministic {
    pub schema_version: u32,
    pub library_version: String,
    pub command: String,
    pub real_rows: usize,
    pub synthetic_rows: usize,
    pub columns: usize,
    pub wd: f64,
    pub dcr_mean: f64,
    pub dcr_median: f64,
    pub nndr_mean: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub deterministic: EvalDeterministic,
}

/// Similarity and privacy metrics between two plain numeric matrices.
pub fn evaluate_matrices(real: &Matrix, synth: &Matrix) -> Result<EvalReport> {
    let wd = crate::metrics::wasserstein_distance(real, synth)?;
    let d = crate::metrics::dcr(synth, real)?;
    let n = crate::metrics::nndr(synth, real)?;
    Ok(EvalReport {
        deterministic: EvalDeterministic {
            schema_version: REPORT_SCHEMA_VERSION,
            library_version: library_version(),
            command: "evaluate".to_string(),
            real_rows: real.rows(),
            synthetic_rows: synth.rows(),
            columns: real.cols(),
            wd,
            dcr_mean: d.mean,
            dcr_median: d.median,
            nndr_mean: n.mean,
        },
    })
}

pub fn emit_eval_report(out_dir: &Path, report: &EvalReport) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let report_path = out_dir.join("report.json");
    write_file(&report_path, &serde_json::to_string_pretty(report)?)?;
    Ok(vec![report_path])
}

/// Canonical bytes of a report's deterministic section, for reproducibility
/// checks: parse, take the `deterministic` subtree, re-serialize.
pub fn deterministic_bytes(report_json: &str) -> Result<String> {
    let value: serde_json::Value = serde_json::from_str(report_json)?;
    let det = value.get("deterministic").ok_or_else(|| {
        Error::InvalidConfig("report has no deterministic section".to_string())
    })?;
    Ok(serde_json::to_string(det)?)
}
