//! End-to-end augmentation pipelines.
//!
//! Every method follows the same protocol: the stratified train/test
//! split happens before any augmentation, generators and codecs are
//! fitted on minority training rows only, synthetic rows are appended to
//! the training partition alone (provenance-flagged), and both downstream
//! classifiers are scored on the untouched real test partition.
//!
//! The PCA pipeline stays in its embedded space end to end (classifiers
//! and similarity/privacy metrics included); the autoencoder pipelines
//! decode back to feature space first. Every report carries the space its
//! distances were computed in.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attention::{fit_transformer_ae, AttnConfig, TransformerAutoencoder};
use crate::data::{
    augment, extract_class, minority_label, project_onehot_spans, standardize,
    stratified_split_indices, synthetic_count, Dataset,
};
use crate::error::{Error, Result};
use crate::flow::{
    build_training_pairs, derive_seed, fit_vector_field, forest_diffusion_generate, FlowConfig,
    FlowTarget, NoiseSchedule, VectorFieldModel,
};
use crate::gbt::{
    fit_gbt_classifier, fit_random_forest, ForestParams, GbtClassifier, GbtClassifierParams,
    RandomForestClassifier,
};
use crate::matrix::Matrix;
use crate::metrics::{
    classification_metrics, dcr, nndr, wasserstein_distance, MetricSpace, MetricsReport,
    StageTimings,
};
use crate::mlp::{default_latent_dim, fit_autoencoder, MlpAutoencoder, TrainConfig};
use crate::pca::{fit_pca, project, PcaModel};
use crate::smote::smote_generate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    PcaForest,
    EmbedForest,
    AttentionForest,
    ForestDiffusion,
    Smote,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::PcaForest,
        Method::EmbedForest,
        Method::AttentionForest,
        Method::ForestDiffusion,
        Method::Smote,
    ];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pcaforest" => Ok(Method::PcaForest),
            "embedforest" => Ok(Method::EmbedForest),
            "attentionforest" => Ok(Method::AttentionForest),
            "forestdiffusion" => Ok(Method::ForestDiffusion),
            "smote" => Ok(Method::Smote),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::PcaForest => "pcaforest",
            Method::EmbedForest => "embedforest",
            Method::AttentionForest => "attentionforest",
            Method::ForestDiffusion => "forestdiffusion",
            Method::Smote => "smote",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub method: Method,
    /// Synthetic rows as a percentage of minority training rows.
    pub ratio: u32,
    pub seed: u64,
    pub train_fraction: f64,
    pub variance_target: f64,
    pub flow: FlowConfig,
    /// None picks the per-method default: Icfm for the PCA pipeline and
    /// the raw-space baseline, VpResidual for the autoencoder pipelines.
    pub flow_mode: Option<FlowTarget>,
    pub mlp: TrainConfig,
    /// None derives ceil(width / 2).
    pub mlp_latent_dim: Option<usize>,
    pub attn: AttnConfig,
    pub smote_k: usize,
    pub rf: ForestParams,
    pub gbt_classifier: GbtClassifierParams,
}

impl RunConfig {
    pub fn new(method: Method) -> Self {
        RunConfig {
            method,
            ratio: 100,
            seed: 0,
            train_fraction: 0.7,
            variance_target: 0.95,
            flow: FlowConfig::default(),
            flow_mode: None,
            mlp: TrainConfig::default(),
            mlp_latent_dim: None,
            attn: AttnConfig::default(),
            smote_k: 5,
            rf: ForestParams::default(),
            gbt_classifier: GbtClassifierParams::default(),
        }
    }

    fn effective_flow_mode(&self) -> FlowTarget {
        self.flow_mode.unwrap_or(match self.method {
            Method::PcaForest | Method::ForestDiffusion => FlowTarget::Icfm,
            _ => FlowTarget::VpResidual,
        })
    }
}

/// Fitted-model handles of a completed run.
#[derive(Default)]
pub struct FittedModels {
    pub pca: Option<PcaModel>,
    pub mlp: Option<MlpAutoencoder>,
    pub attention: Option<TransformerAutoencoder>,
    pub flow: Option<VectorFieldModel>,
    pub random_forest: Option<RandomForestClassifier>,
    pub gbt_classifier: Option<GbtClassifier>,
}

pub struct AugmentationResult {
    /// Synthetic rows in the evaluation space (latent for the PCA
    /// pipeline, feature space otherwise).
    pub synthetic: Matrix,
    pub synthetic_count: usize,
    pub minority_label: u8,
    pub flow_mode: Option<FlowTarget>,
    pub metrics: MetricsReport,
    pub models: FittedModels,
    pub train_row_ids: Vec<usize>,
    pub test_row_ids: Vec<usize>,
    /// Provenance flags of the augmented training partition.
    pub train_synthetic_flags: Vec<bool>,
}

/// Fit the flow on minority rows and sample `count` new points in the
/// same space.
fn flow_generate(
    cfg: &RunConfig,
    x_min: &Matrix,
    mode: FlowTarget,
    count: usize,
    models: &mut FittedModels,
    timings: &mut StageTimings,
) -> Result<Matrix> {
    if count == 0 {
        return Ok(Matrix::empty(x_min.cols()));
    }
    let schedule = NoiseSchedule::linear(cfg.flow.n_t, cfg.flow.alpha_min)?;
    let t0 = Instant::now();
    let pairs = build_training_pairs(
        x_min,
        &schedule,
        mode,
        cfg.flow.duplicate_k,
        derive_seed(cfg.seed, 3),
    )?;
    let field = fit_vector_field(&pairs, &cfg.flow.gbt, derive_seed(cfg.seed, 4))?;
    timings.flow_fit_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    let out = field.sample(count, derive_seed(cfg.seed, 5))?;
    timings.sample_s = t0.elapsed().as_secs_f64();
    models.flow = Some(field);
    Ok(out)
}

/// One full augmentation run for any method.
pub fn run(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    let total_start = Instant::now();
    let mut models = FittedModels::default();
    let mut timings = StageTimings::default();
    let mode = cfg.effective_flow_mode();

    let (train_ids, test_ids) =
        stratified_split_indices(d, cfg.train_fraction, derive_seed(cfg.seed, 1))?;

    // the dataset the classifiers and metrics see: the PCA pipeline
    // embeds everything first, all others stay in feature space
    let (eval_d, space) = match cfg.method {
        Method::PcaForest => {
            let t0 = Instant::now();
            let (std_d, _scaler) = standardize(d)?;
            let pca = fit_pca(&std_d.x, cfg.variance_target)?;
            let latents = project(&pca, &std_d.x)?;
            timings.encode_s = t0.elapsed().as_secs_f64();
            models.pca = Some(pca);
            let mut latent_d = Dataset::from_matrix(latents, d.y.clone(), "c");
            latent_d.synthetic = d.synthetic.clone();
            (latent_d, MetricSpace::Latent)
        }
        _ => (d.clone(), MetricSpace::Raw),
    };

    let train = eval_d.take_rows(&train_ids);
    let test = eval_d.take_rows(&test_ids);
    let minority = minority_label(&train.y)?;
    let x_min_eval = extract_class(&train, minority);
    let count = synthetic_count(cfg.ratio, x_min_eval.rows());

    // synthetic rows, in evaluation space
    let synth = match cfg.method {
        Method::PcaForest => flow_generate(cfg, &x_min_eval, mode, count, &mut models, &mut timings)?,
        Method::ForestDiffusion => {
            let t0 = Instant::now();
            let raw = forest_diffusion_generate(&x_min_eval, count, &cfg.flow, cfg.seed)?;
            timings.flow_fit_s = t0.elapsed().as_secs_f64();
            project_onehot_spans(&raw, &d.encoding_map)
        }
        Method::EmbedForest | Method::AttentionForest => {
            let (std_d, scaler) = standardize(d)?;
            let std_train = std_d.take_rows(&train_ids);
            let x_min_std = extract_class(&std_train, minority);

            match cfg.method {
                Method::EmbedForest => {
                    let latent_dim = cfg
                        .mlp_latent_dim
                        .unwrap_or_else(|| default_latent_dim(d.width()));
                    let t0 = Instant::now();
                    let mlp_cfg = TrainConfig {
                        seed: derive_seed(cfg.seed, 2),
                        ..cfg.mlp.clone()
                    };
                    let (codec, _) = fit_autoencoder(&x_min_std, latent_dim, &mlp_cfg)?;
                    let z0 = codec.encode(&x_min_std)?;
                    timings.encode_s = t0.elapsed().as_secs_f64();

                    let latent = flow_generate(cfg, &z0, mode, count, &mut models, &mut timings)?;

                    let t0 = Instant::now();
                    let decoded = codec.decode(&latent)?;
                    let raw = scaler.inverse(&decoded);
                    let out = project_onehot_spans(&raw, &d.encoding_map);
                    timings.decode_s = t0.elapsed().as_secs_f64();
                    models.mlp = Some(codec);
                    out
                }
                _ => {
                    let t0 = Instant::now();
                    let attn_cfg = AttnConfig {
                        seed: derive_seed(cfg.seed, 2),
                        ..cfg.attn.clone()
                    };
                    let (codec, _) = fit_transformer_ae(&x_min_std, &d.schema, &attn_cfg)?;
                    let z0 = codec.encode(&x_min_std)?;
                    timings.encode_s = t0.elapsed().as_secs_f64();

                    let latent = flow_generate(cfg, &z0, mode, count, &mut models, &mut timings)?;

                    let t0 = Instant::now();
                    // numeric head outputs live in standardized space;
                    // categorical spans hold softmax probabilities and are
                    // arg-max projected, never inverse-scaled
                    let decoded = codec.decode(&latent)?;
                    let unscaled = scaler.inverse_columns(&decoded, &numeric_columns(d));
                    let out = project_onehot_spans(&unscaled, &d.encoding_map);
                    timings.decode_s = t0.elapsed().as_secs_f64();
                    models.attention = Some(codec);
                    out
                }
            }
        }
        Method::Smote => {
            // neighbor search in standardized space, output mapped back
            let (std_d, scaler) = standardize(d)?;
            let std_train = std_d.take_rows(&train_ids);
            let x_min_std = extract_class(&std_train, minority);
            let t0 = Instant::now();
            let out = if count == 0 {
                Matrix::empty(d.width())
            } else {
                let synth_std =
                    smote_generate(&x_min_std, count, cfg.smote_k, derive_seed(cfg.seed, 6))?;
                let raw = scaler.inverse(&synth_std);
                project_onehot_spans(&raw, &d.encoding_map)
            };
            timings.sample_s = t0.elapsed().as_secs_f64();
            out
        }
    };

    // protocol: only the training partition is augmented
    let aug_train = augment(&train, &synth, minority)?;

    let t0 = Instant::now();
    let rf = fit_random_forest(&aug_train.x, &aug_train.y, &cfg.rf)?;
    let rf_pred = rf.predict(&test.x)?;
    let gbt = fit_gbt_classifier(&aug_train.x, &aug_train.y, &cfg.gbt_classifier)?;
    let gbt_pred = gbt.predict(&test.x)?;
    timings.classify_s = t0.elapsed().as_secs_f64();

    let random_forest = classification_metrics(&test.y, &rf_pred, minority)?;
    let gbt_scores = classification_metrics(&test.y, &gbt_pred, minority)?;
    models.random_forest = Some(rf);
    models.gbt_classifier = Some(gbt);

    let (wd, dcr_mean, dcr_median, nndr_mean) = if synth.rows() > 0 {
        let wd = wasserstein_distance(&x_min_eval, &synth)?;
        let dm = dcr(&synth, &x_min_eval)?;
        let nm = nndr(&synth, &x_min_eval)?;
        (Some(wd), Some(dm.mean), Some(dm.median), Some(nm.mean))
    } else {
        (None, None, None, None)
    };

    timings.total_s = total_start.elapsed().as_secs_f64();
    let metrics = MetricsReport {
        random_forest,
        gbt: gbt_scores,
        wd,
        dcr_mean,
        dcr_median,
        nndr_mean,
        metric_space: space,
        timings: Some(timings),
    };

    Ok(AugmentationResult {
        synthetic: synth,
        synthetic_count: count,
        minority_label: minority,
        flow_mode: match cfg.method {
            Method::Smote => None,
            _ => Some(mode),
        },
        metrics,
        models,
        train_row_ids: train_ids,
        test_row_ids: test_ids,
        train_synthetic_flags: aug_train.synthetic,
    })
}

fn numeric_columns(d: &Dataset) -> Vec<usize> {
    let mut is_span = vec![false; d.width()];
    for span in &d.encoding_map {
        for j in span.start..span.start + span.len {
            is_span[j] = true;
        }
    }
    (0..d.width()).filter(|&j| !is_span[j]).collect()
}

pub fn run_pcaforest(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    run(d, &RunConfig { method: Method::PcaForest, ..cfg.clone() })
}

pub fn run_embedforest(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    run(d, &RunConfig { method: Method::EmbedForest, ..cfg.clone() })
}

pub fn run_attentionforest(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    run(d, &RunConfig { method: Method::AttentionForest, ..cfg.clone() })
}

pub fn run_forest_diffusion(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    run(d, &RunConfig { method: Method::ForestDiffusion, ..cfg.clone() })
}

pub fn run_smote(d: &Dataset, cfg: &RunConfig) -> Result<AugmentationResult> {
    run(d, &RunConfig { method: Method::Smote, ..cfg.clone() })
}

/// One sweep row: the run outcome for a single augmentation ratio.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: u32,
    pub synthetic_count: usize,
    pub metrics: MetricsReport,
}

pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Test partition of each run, for protocol checking; identical
    /// across rows by determinism, not by construction.
    pub test_row_ids: Vec<Vec<usize>>,
}

/// Default ratio grid: 25% to 300% in steps of 25.
pub fn default_ratios() -> Vec<u32> {
    (1..=12).map(|i| i * 25).collect()
}

/// One independent run per ratio under a shared master seed, so the split
/// and every derived seed agree across rows and only the ratio varies.
pub fn sweep_ratios(d: &Dataset, cfg: &RunConfig, ratios: &[u32]) -> Result<SweepResult> {
    if ratios.is_empty() {
        return Err(Error::InvalidConfig(
            "sweep needs at least one ratio".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(ratios.len());
    let mut test_ids = Vec::with_capacity(ratios.len());
    for &ratio in ratios {
        let r = run(d, &RunConfig { ratio, ..cfg.clone() })?;
        rows.push(SweepRow {
            ratio,
            synthetic_count: r.synthetic_count,
            metrics: r.metrics,
        });
        test_ids.push(r.test_row_ids);
    }
    Ok(SweepResult {
        rows,
        test_row_ids: test_ids,
    })
}

/// One ablation run: a named single-parameter deviation from baseline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationRow {
    pub parameter: String,
    pub value: f64,
    pub recall_rf: f64,
    pub improvement_pct: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AblationResult {
    pub baseline_recall: f64,
    pub rows: Vec<AblationRow>,
    pub best: AblationRow,
}

/// Baseline values of the one-factor-at-a-time ablation grid.
pub fn ablation_baseline(cfg: &RunConfig) -> RunConfig {
    let mut base = cfg.clone();
    base.method = Method::AttentionForest;
    base.attn.d_model = 16;
    base.attn.num_layers = 2;
    base.attn.nhead = 4;
    base.attn.latent_dim_factor = 0.5;
    base.attn.learning_rate = 1e-3;
    base.flow.n_t = 50;
    base.flow.duplicate_k = 100;
    base
}

/// The non-baseline grid values, one parameter at a time.
fn ablation_variants(base: &RunConfig) -> Vec<(String, f64, RunConfig)> {
    let mut out = Vec::new();
    for v in [8usize, 32] {
        let mut c = base.clone();
        c.attn.d_model = v;
        out.push(("embed_dim".to_string(), v as f64, c));
    }
    for v in [1usize, 3] {
        let mut c = base.clone();
        c.attn.num_layers = v;
        out.push(("num_layers".to_string(), v as f64, c));
    }
    for v in [2usize, 8] {
        let mut c = base.clone();
        c.attn.nhead = v;
        out.push(("nhead".to_string(), v as f64, c));
    }
    for v in [0.25f64, 1.0] {
        let mut c = base.clone();
        c.attn.latent_dim_factor = v;
        out.push(("latent_dim_factor".to_string(), v, c));
    }
    for v in [1e-4f64, 1e-2] {
        let mut c = base.clone();
        c.attn.learning_rate = v;
        out.push(("learning_rate".to_string(), v, c));
    }
    for v in [25usize, 100] {
        let mut c = base.clone();
        c.flow.n_t = v;
        out.push(("n_t".to_string(), v as f64, c));
    }
    for v in [50usize, 200] {
        let mut c = base.clone();
        c.flow.duplicate_k = v;
        out.push(("duplicate_K".to_string(), v as f64, c));
    }
    out
}

/// Table-style ablation: one baseline run plus every one-factor variant,
/// reporting minority recall under the random forest and the best
/// component's improvement over baseline.
pub fn run_ablation(d: &Dataset, cfg: &RunConfig) -> Result<AblationResult> {
    let base = ablation_baseline(cfg);
    let baseline = run(d, &base)?;
    let baseline_recall = baseline.metrics.random_forest.recall;

    let mut rows = Vec::new();
    for (parameter, value, variant_cfg) in ablation_variants(&base) {
        let r = run(d, &variant_cfg)?;
        let recall_rf = r.metrics.random_forest.recall;
        let improvement_pct = if baseline_recall > 0.0 {
            (recall_rf - baseline_recall) / baseline_recall * 100.0
        } else {
            0.0
        };
        rows.push(AblationRow {
            parameter,
            value,
            recall_rf,
            improvement_pct,
        });
    }

    let best = rows
        .iter()
        .cloned()
        .max_by(|a, b| {
            a.recall_rf
                .partial_cmp(&b.recall_rf)
                .unwrap()
                .then(b.parameter.cmp(&a.parameter))
        })
        .expect("grid is never empty");

    Ok(AblationResult {
        baseline_recall,
        rows,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::two_gaussians;

    fn small_cfg(method: Method) -> RunConfig {
        let mut cfg = RunConfig::new(method);
        cfg.flow.n_t = 10;
        cfg.flow.duplicate_k = 10;
        cfg.flow.gbt.n_estimators = 10;
        cfg.flow.gbt.max_depth = 3;
        cfg.mlp.epochs = 50;
        cfg.attn.epochs = 30;
        cfg.attn.d_model = 4;
        cfg.attn.nhead = 2;
        cfg.attn.num_layers = 1;
        cfg.attn.dim_ff = 8;
        cfg.rf.n_estimators = 20;
        cfg.gbt_classifier.n_estimators = 20;
        cfg
    }

    #[test]
    fn every_method_completes_and_respects_protocol() {
        let d = two_gaussians(120, 24, 4, 2.5, 1.0, 3);
        for method in Method::ALL {
            let cfg = small_cfg(method);
            let r = run(&d, &cfg).unwrap();
            assert_eq!(r.minority_label, 1, "{method}");
            // 24 minority -> 17 train rows; ratio 100 -> 17 synthetic
            assert_eq!(r.synthetic_count, 17, "{method}");
            assert_eq!(r.synthetic.rows(), 17, "{method}");
            // test partition holds only real rows
            assert!(r.test_row_ids.iter().all(|&i| !d.synthetic[i]));
            // provenance flags: exactly the appended block is synthetic
            let n_train = r.train_row_ids.len();
            assert_eq!(r.train_synthetic_flags.len(), n_train + 17);
            assert!(r.train_synthetic_flags[..n_train].iter().all(|f| !f));
            assert!(r.train_synthetic_flags[n_train..].iter().all(|f| *f));
            assert!(r.metrics.wd.is_some());
            let t = r.metrics.timings.unwrap();
            assert!(t.total_s > 0.0);
        }
    }

    #[test]
    fn pcaforest_metrics_live_in_latent_space() {
        let d = two_gaussians(120, 24, 6, 2.5, 1.0, 5);
        let r = run(&d, &small_cfg(Method::PcaForest)).unwrap();
        assert_eq!(r.metrics.metric_space, MetricSpace::Latent);
        let pca = r.models.pca.as_ref().unwrap();
        assert_eq!(r.synthetic.cols(), pca.d);
        assert!(r.flow_mode == Some(FlowTarget::Icfm));

        let r2 = run(&d, &small_cfg(Method::EmbedForest)).unwrap();
        assert_eq!(r2.metrics.metric_space, MetricSpace::Raw);
        assert_eq!(r2.synthetic.cols(), d.width());
        assert!(r2.flow_mode == Some(FlowTarget::VpResidual));
    }

    #[test]
    fn ratio_zero_is_a_clean_baseline() {
        let d = two_gaussians(100, 20, 3, 2.5, 1.0, 7);
        let mut cfg = small_cfg(Method::Smote);
        cfg.ratio = 0;
        let r = run(&d, &cfg).unwrap();
        assert_eq!(r.synthetic_count, 0);
        assert_eq!(r.synthetic.rows(), 0);
        assert!(r.metrics.wd.is_none());
        assert!(r.train_synthetic_flags.iter().all(|f| !f));
    }

    #[test]
    fn sweep_shares_split_and_counts_exactly() {
        let d = two_gaussians(100, 20, 3, 2.5, 1.0, 11);
        let cfg = small_cfg(Method::Smote);
        let ratios = [25u32, 50, 100];
        let s = sweep_ratios(&d, &cfg, &ratios).unwrap();
        assert_eq!(s.rows.len(), 3);
        // 20 minority -> 14 train; floor(r/100 * 14)
        assert_eq!(s.rows[0].synthetic_count, 3);
        assert_eq!(s.rows[1].synthetic_count, 7);
        assert_eq!(s.rows[2].synthetic_count, 14);
        for ids in &s.test_row_ids[1..] {
            assert_eq!(ids, &s.test_row_ids[0]);
        }
        assert_eq!(default_ratios().len(), 12);
        assert_eq!(default_ratios()[0], 25);
        assert_eq!(*default_ratios().last().unwrap(), 300);
    }

    #[test]
    fn ablation_grid_is_one_plus_fourteen() {
        let base = ablation_baseline(&RunConfig::new(Method::AttentionForest));
        let variants = ablation_variants(&base);
        assert_eq!(variants.len(), 14);
        // every variant differs from baseline in exactly the named knob
        let embeds: Vec<f64> = variants
            .iter()
            .filter(|(p, _, _)| p == "embed_dim")
            .map(|(_, v, _)| *v)
            .collect();
        assert_eq!(embeds, vec![8.0, 32.0]);
        assert_eq!(base.attn.d_model, 16);
        assert_eq!(base.flow.n_t, 50);
        assert_eq!(base.flow.duplicate_k, 100);
    }
}
