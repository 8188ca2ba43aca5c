//! Evaluation metrics: downstream classification quality, per-feature
//! Wasserstein distance between real and synthetic samples, and the two
//! empirical privacy probes (distance to closest record and the
//! nearest-neighbor distance ratio).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_labels(y_true: &[u8], y_pred: &[u8], positive: u8) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} predictions", y_true.len()),
                found: format!("{}", y_pred.len()),
            });
        }
        let mut c = ConfusionCounts {
            tp: 0,
            fp: 0,
            tn: 0,
            fn_: 0,
        };
        for (&t, &p) in y_true.iter().zip(y_pred) {
            match (t == positive, p == positive) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
                (true, false) => c.fn_ += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Recall, precision and F1 with explicit zero-denominator flags; a
/// zero-denominator quantity is reported as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
    pub recall_undefined: bool,
    pub precision_undefined: bool,
}

pub fn classification_metrics(
    y_true: &[u8],
    y_pred: &[u8],
    positive: u8,
) -> Result<ClassificationMetrics> {
    let c = ConfusionCounts::from_labels(y_true, y_pred, positive)?;
    let mut m = ClassificationMetrics::default();
    if c.tp + c.fn_ == 0 {
        m.recall_undefined = true;
    } else {
        m.recall = c.tp as f64 / (c.tp + c.fn_) as f64;
    }
    if c.tp + c.fp == 0 {
        m.precision_undefined = true;
    } else {
        m.precision = c.tp as f64 / (c.tp + c.fp) as f64;
    }
    m.f1 = if m.precision + m.recall > 0.0 {
        2.0 * m.precision * m.recall / (m.precision + m.recall)
    } else {
        0.0
    };
    Ok(m)
}

/// 1-D empirical W1 via the CDF-difference integral; exact sorted-sample
/// matching cost for equal sizes, quantile interpolation otherwise.
fn wasserstein_1d(u: &[f64], v: &[f64]) -> f64 {
    let mut us = u.to_vec();
    let mut vs = v.to_vec();
    us.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    vs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut all: Vec<f64> = us.iter().chain(vs.iter()).copied().collect();
    all.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let nu = us.len() as f64;
    let nv = vs.len() as f64;
    let mut iu = 0usize;
    let mut iv = 0usize;
    let mut total = 0.0;
    for w in all.windows(2) {
        while iu < us.len() && us[iu] <= w[0] {
            iu += 1;
        }
        while iv < vs.len() && vs[iv] <= w[0] {
            iv += 1;
        }
        let cdf_u = iu as f64 / nu;
        let cdf_v = iv as f64 / nv;
        total += (cdf_u - cdf_v).abs() * (w[1] - w[0]);
    }
    total
}

/// Mean over features of the per-feature 1-D Wasserstein distance.
pub fn wasserstein_distance(real: &Matrix, synth: &Matrix) -> Result<f64> {
    if real.cols() != synth.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", real.cols()),
            found: format!("{}", synth.cols()),
        });
    }
    if real.rows() == 0 || synth.rows() == 0 {
        return Err(Error::EmptyDataset("wasserstein inputs".to_string()));
    }
    let d = real.cols();
    let sum: f64 = (0..d)
        .map(|j| wasserstein_1d(&real.column(j), &synth.column(j)))
        .sum();
    Ok(sum / d as f64)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DcrReport {
    pub mean: f64,
    pub median: f64,
    pub per_point: Vec<f64>,
}

/// Distance from each synthetic row to its nearest real row. The median
/// of an even count is the average of the two middle values.
pub fn dcr(synth: &Matrix, real: &Matrix) -> Result<DcrReport> {
    if synth.cols() != real.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", real.cols()),
            found: format!("{}", synth.cols()),
        });
    }
    if real.rows() == 0 {
        return Err(Error::EmptyDataset("dcr reference rows".to_string()));
    }
    let per_point: Vec<f64> = synth
        .iter_rows()
        .map(|s| {
            real.iter_rows()
                .map(|r| euclidean(s, r))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mean = if per_point.is_empty() {
        0.0
    } else {
        per_point.iter().sum::<f64>() / per_point.len() as f64
    };
    let median = median_of(&per_point);
    Ok(DcrReport {
        mean,
        median,
        per_point,
    })
}

fn median_of(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let mut s = v.to_vec();
    s.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NndrReport {
    pub mean: f64,
    pub per_point: Vec<f64>,
}

/// Ratio of the closest to second-closest real-row distance per synthetic
/// row, in [0, 1]. A zero second distance (duplicated real points at the
/// query) reports 1.
pub fn nndr(synth: &Matrix, real: &Matrix) -> Result<NndrReport> {
    if synth.cols() != real.cols() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", real.cols()),
            found: format!("{}", synth.cols()),
        });
    }
    if real.rows() < 2 {
        return Err(Error::EmptyDataset(
            "nndr needs at least 2 reference rows".to_string(),
        ));
    }
    let per_point: Vec<f64> = synth
        .iter_rows()
        .map(|s| {
            let mut d1 = f64::INFINITY;
            let mut d2 = f64::INFINITY;
            for r in real.iter_rows() {
                let d = euclidean(s, r);
                if d < d1 {
                    d2 = d1;
                    d1 = d;
                } else if d < d2 {
                    d2 = d;
                }
            }
            if d2 == 0.0 {
                1.0
            } else {
                d1 / d2
            }
        })
        .collect();
    let mean = if per_point.is_empty() {
        0.0
    } else {
        per_point.iter().sum::<f64>() / per_point.len() as f64
    };
    Ok(NndrReport { mean, per_point })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricSpace {
    Raw,
    Latent,
}

impl std::fmt::Display for MetricSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricSpace::Raw => write!(f, "raw"),
            MetricSpace::Latent => write!(f, "latent"),
        }
    }
}

/// Wall-clock seconds per pipeline stage.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub encode_s: f64,
    pub flow_fit_s: f64,
    pub sample_s: f64,
    pub decode_s: f64,
    pub classify_s: f64,
    pub total_s: f64,
}

/// Full per-run evaluation: classifier quality, similarity and privacy,
/// stamped with the space the distances were computed in. Similarity and
/// privacy fields are None when a run produced no synthetic rows (the
/// ratio-0 baseline).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricsReport {
    pub random_forest: ClassificationMetrics,
    pub gbt: ClassificationMetrics,
    pub wd: Option<f64>,
    pub dcr_mean: Option<f64>,
    pub dcr_median: Option<f64>,
    pub nndr_mean: Option<f64>,
    pub metric_space: MetricSpace,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}
