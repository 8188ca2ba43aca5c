//! Tabular dataset handling: CSV ingestion, one-hot encoding, z-score
//! standardization, stratified splitting, minority extraction and
//! augmentation bookkeeping.
//!
//! Labels are binary and stored as `u8` in `{0, 1}`. Categorical columns
//! are one-hot expanded into contiguous column spans recorded in
//! [`Dataset::encoding_map`]; during generation those spans may become
//! real-valued and are re-projected with [`project_onehot_spans`].

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ColumnKind {
    Numeric,
    /// Ordered category vocabulary; one one-hot column per entry.
    Categorical(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

/// Ordered feature columns plus the name of the binary target column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
    pub target: String,
}

impl FeatureSchema {
    /// All-numeric schema with synthetic column names, for data that never
    /// came from a CSV (latent matrices, generated benchmarks).
    pub fn numeric(n_features: usize, prefix: &str, target: &str) -> Self {
        FeatureSchema {
            columns: (0..n_features)
                .map(|j| ColumnSpec {
                    name: format!("{prefix}{j}"),
                    kind: ColumnKind::Numeric,
                })
                .collect(),
            target: target.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate column name {:?}",
                    c.name
                )));
            }
            if c.name == self.target {
                return Err(Error::InvalidConfig(format!(
                    "target column {:?} listed among features",
                    self.target
                )));
            }
            if let ColumnKind::Categorical(vocab) = &c.kind {
                if vocab.is_empty() {
                    return Err(Error::InvalidConfig(format!(
                        "empty vocabulary for column {:?}",
                        c.name
                    )));
                }
                let mut vs = std::collections::BTreeSet::new();
                for v in vocab {
                    if !vs.insert(v.as_str()) {
                        return Err(Error::InvalidConfig(format!(
                            "duplicate category {v:?} in column {:?}",
                            c.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Width of the one-hot encoded feature matrix.
    pub fn encoded_width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match &c.kind {
                ColumnKind::Numeric => 1,
                ColumnKind::Categorical(v) => v.len(),
            })
            .sum()
    }

    /// Number of original (pre-encoding) feature columns.
    pub fn feature_count(&self) -> usize {
        self.columns.len()
    }

    /// Encoded column span of each categorical column, in schema order.
    pub fn onehot_spans(&self) -> Vec<OneHotSpan> {
        let mut spans = Vec::new();
        let mut at = 0usize;
        for c in &self.columns {
            match &c.kind {
                ColumnKind::Numeric => at += 1,
                ColumnKind::Categorical(v) => {
                    spans.push(OneHotSpan {
                        column: c.name.clone(),
                        start: at,
                        len: v.len(),
                    });
                    at += v.len();
                }
            }
        }
        spans
    }
}

/// Contiguous block of one-hot columns produced by one categorical column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneHotSpan {
    pub column: String,
    pub start: usize,
    pub len: usize,
}

/// User-facing schema description, parsed from a small TOML file:
///
/// ```toml
/// target = "label"
/// categorical = ["color", "size"]
///
/// # optional: pin a vocabulary instead of inferring it from the data
/// [vocab]
/// color = ["blue", "green", "red"]
/// ```
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub target: String,
    #[serde(default)]
    pub categorical: Vec<String>,
    #[serde(default)]
    pub vocab: BTreeMap<String, Vec<String>>,
}

impl SchemaConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::InvalidConfig(format!("schema config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}

/// Encoded feature matrix plus labels and provenance flags.
///
/// `synthetic[i]` is true for rows appended by [`augment`]; such rows must
/// never reach a test partition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Dataset {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub schema: FeatureSchema,
    pub encoding_map: Vec<OneHotSpan>,
    pub synthetic: Vec<bool>,
    /// Raw target values mapped to labels 0 and 1, in that order.
    pub label_values: [String; 2],
}

impl Dataset {
    /// Wrap a numeric matrix and labels, generating an all-numeric schema.
    pub fn from_matrix(x: Matrix, y: Vec<u8>, column_prefix: &str) -> Self {
        assert_eq!(x.rows(), y.len(), "row count must match label count");
        let schema = FeatureSchema::numeric(x.cols(), column_prefix, "label");
        let n = y.len();
        Dataset {
            x,
            y,
            schema,
            encoding_map: Vec::new(),
            synthetic: vec![false; n],
            label_values: ["0".to_string(), "1".to_string()],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.x.rows()
    }

    pub fn width(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.y.iter().filter(|&&l| l == 1).count();
        [self.y.len() - ones, ones]
    }

    /// Row indices carrying the given label, in order.
    pub fn class_indices(&self, label: u8) -> Vec<usize> {
        self.y
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-dataset of the given rows, preserving schema and flags.
    pub fn take_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            schema: self.schema.clone(),
            encoding_map: self.encoding_map.clone(),
            synthetic: idx.iter().map(|&i| self.synthetic[i]).collect(),
            label_values: self.label_values.clone(),
        }
    }

    /// Render rows of an encoded matrix back to CSV text using this
    /// dataset's schema: one-hot spans collapse to the arg-max category,
    /// numerics print as-is, and every row carries `label`.
    pub fn rows_to_csv(&self, rows: &Matrix, label: u8) -> Result<String> {
        if rows.cols() != self.width() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.width()),
                found: format!("{}", rows.cols()),
            });
        }
        let mut out = String::new();
        let mut header: Vec<&str> = self.schema.columns.iter().map(|c| c.name.as_str()).collect();
        header.push(&self.schema.target);
        let _ = writeln!(out, "{}", header.join(","));
        for r in 0..rows.rows() {
            let row = rows.row(r);
            let mut cells: Vec<String> = Vec::with_capacity(header.len());
            let mut at = 0usize;
            for c in &self.schema.columns {
                match &c.kind {
                    ColumnKind::Numeric => {
                        cells.push(format!("{}", row[at]));
                        at += 1;
                    }
                    ColumnKind::Categorical(vocab) => {
                        let k = argmax(&row[at..at + vocab.len()]);
                        cells.push(vocab[k].clone());
                        at += vocab.len();
                    }
                }
            }
            cells.push(self.label_values[label as usize].clone());
            let _ = writeln!(out, "{}", cells.join(","));
        }
        Ok(out)
    }
}

/// Rows dropped at ingestion, per the missing-value rule.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct LoadSummary {
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na")
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Load a CSV file, one-hot encode categoricals and map the binary target
/// to `{0, 1}`. Rows with any missing or unparseable cell are dropped and
/// counted. The two raw target values are ordered numerically when both
/// parse as numbers, lexicographically otherwise; the first maps to 0.
pub fn load_csv(path: &Path, config: &SchemaConfig) -> Result<(Dataset, LoadSummary)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_csv_str(&text, config)
}

/// Same as [`load_csv`] on in-memory text.
pub fn load_csv_str(text: &str, config: &SchemaConfig) -> Result<(Dataset, LoadSummary)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    {
        let mut seen = std::collections::BTreeSet::new();
        for h in &header {
            if !seen.insert(h.as_str()) {
                return Err(Error::HeaderMismatch(format!("duplicate column {h:?}")));
            }
        }
    }
    let target_idx = header
        .iter()
        .position(|h| *h == config.target)
        .ok_or_else(|| {
            Error::HeaderMismatch(format!("target column {:?} not in header", config.target))
        })?;
    for c in &config.categorical {
        if !header.iter().any(|h| h == c) {
            return Err(Error::HeaderMismatch(format!(
                "categorical column {c:?} not in header"
            )));
        }
    }

    let mut records: Vec<Vec<String>> = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let mut row: Vec<String> = rec.iter().map(|c| c.trim().to_string()).collect();
        // Short rows count as missing cells; long rows are malformed.
        if row.len() > header.len() {
            return Err(Error::HeaderMismatch(format!(
                "row with {} cells exceeds header width {}",
                row.len(),
                header.len()
            )));
        }
        row.resize(header.len(), String::new());
        records.push(row);
    }

    // Distinct raw target values, over non-missing cells only.
    let mut raw_labels: Vec<String> = Vec::new();
    for row in &records {
        let cell = &row[target_idx];
        if !is_missing(cell) && !raw_labels.iter().any(|l| l == cell) {
            raw_labels.push(cell.clone());
        }
    }
    if raw_labels.len() != 2 {
        return Err(Error::LabelCardinality(raw_labels));
    }
    let numeric_pair = raw_labels[0].parse::<f64>().ok().zip(raw_labels[1].parse::<f64>().ok());
    match numeric_pair {
        Some((a, b)) => {
            if b < a {
                raw_labels.swap(0, 1);
            }
        }
        None => raw_labels.sort(),
    }
    let label_values = [raw_labels[0].clone(), raw_labels[1].clone()];

    // Resolve the schema: header order, vocabularies pinned or inferred.
    let mut columns = Vec::new();
    for (j, name) in header.iter().enumerate() {
        if j == target_idx {
            continue;
        }
        let kind = if config.categorical.iter().any(|c| c == name) {
            let vocab = if let Some(v) = config.vocab.get(name) {
                v.clone()
            } else {
                let mut vals: Vec<String> = Vec::new();
                for row in &records {
                    let cell = &row[j];
                    if !is_missing(cell) && !vals.iter().any(|v| v == cell) {
                        vals.push(cell.clone());
                    }
                }
                vals.sort();
                vals
            };
            ColumnKind::Categorical(vocab)
        } else {
            ColumnKind::Numeric
        };
        columns.push((j, ColumnSpec { name: name.clone(), kind }));
    }
    let schema = FeatureSchema {
        columns: columns.iter().map(|(_, c)| c.clone()).collect(),
        target: config.target.clone(),
    };
    schema.validate()?;

    let width = schema.encoded_width();
    let mut x = Matrix::empty(width);
    let mut y = Vec::new();
    let mut dropped = 0usize;

    'rows: for row in &records {
        let target_cell = &row[target_idx];
        if is_missing(target_cell) {
            dropped += 1;
            continue;
        }
        let label = if *target_cell == label_values[0] { 0u8 } else { 1u8 };
        let mut enc = vec![0.0; width];
        let mut at = 0usize;
        for (j, spec) in &columns {
            let cell = &row[*j];
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            match &spec.kind {
                ColumnKind::Numeric => {
                    match cell.parse::<f64>() {
                        Ok(v) if v.is_finite() => enc[at] = v,
                        _ => {
                            dropped += 1;
                            continue 'rows;
                        }
                    }
                    at += 1;
                }
                ColumnKind::Categorical(vocab) => {
                    match vocab.iter().position(|v| v == cell) {
                        Some(k) => enc[at + k] = 1.0,
                        None => {
                            dropped += 1;
                            continue 'rows;
                        }
                    }
                    at += vocab.len();
                }
            }
        }
        x.push_row(&enc);
        y.push(label);
    }

    if x.rows() == 0 {
        return Err(Error::EmptyDataset(
            "no rows left after dropping missing values".to_string(),
        ));
    }

    let encoding_map = schema.onehot_spans();
    let n = y.len();
    Ok((
        Dataset {
            x,
            y,
            schema,
            encoding_map,
            synthetic: vec![false; n],
            label_values,
        },
        LoadSummary { dropped_rows: dropped },
    ))
}

/// Per-column z-score parameters with population (divisor n) standard
/// deviation. Columns with zero variance are flagged constant and map to
/// zero; their inverse restores the stored mean exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(x: &Matrix) -> ScalerParams {
        let n = x.rows() as f64;
        let mean = x.col_means();
        let mut var = vec![0.0; x.cols()];
        for row in x.iter_rows() {
            for (j, v) in row.iter().enumerate() {
                let d = v - mean[j];
                var[j] += d * d;
            }
        }
        let std = var.iter().map(|v| (v / n).sqrt()).collect();
        ScalerParams { mean, std }
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.std[j] == 0.0
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for j in 0..row.len() {
                row[j] = if self.std[j] == 0.0 {
                    0.0
                } else {
                    (row[j] - self.mean[j]) / self.std[j]
                };
            }
        }
        out
    }

    pub fn inverse(&self, z: &Matrix) -> Matrix {
        let mut out = z.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for j in 0..row.len() {
                row[j] = row[j] * self.std[j] + self.mean[j];
            }
        }
        out
    }

    /// Inverse transform restricted to the listed columns; the rest pass
    /// through unchanged.
    pub fn inverse_columns(&self, z: &Matrix, cols: &[usize]) -> Matrix {
        let mut out = z.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for &j in cols {
                row[j] = row[j] * self.std[j] + self.mean[j];
            }
        }
        out
    }
}

/// Standardize every column of the feature matrix (Eq.-style z-score with
/// population std). Returns the transformed dataset and the parameters
/// needed to invert it.
pub fn standardize(d: &Dataset) -> Result<(Dataset, ScalerParams)> {
    if d.n_rows() == 0 {
        return Err(Error::EmptyDataset("standardize".to_string()));
    }
    d.x.require_finite("feature matrix")?;
    let scaler = ScalerParams::fit(&d.x);
    let mut out = d.clone();
    out.x = scaler.transform(&d.x);
    Ok((out, scaler))
}

/// Label with the lower frequency; ties break toward the smaller label.
pub fn minority_label(y: &[u8]) -> Result<u8> {
    let ones = y.iter().filter(|&&l| l == 1).count();
    let zeros = y.len() - ones;
    if zeros == 0 || ones == 0 {
        return Err(Error::SingleClass);
    }
    Ok(if ones < zeros { 1 } else { 0 })
}

/// All rows of the given class, original order preserved.
pub fn extract_class(d: &Dataset, label: u8) -> Matrix {
    d.x.select_rows(&d.class_indices(label))
}

/// Row index partition for a deterministic per-class split. Train takes
/// `round(fraction * class count)` rows of each class (clamped so both
/// partitions keep both classes); disjoint and exhaustive, both sides in
/// original row order.
pub fn stratified_split_indices(
    d: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must be in (0,1), got {train_fraction}"
        )));
    }
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for label in [0u8, 1u8] {
        let idx = d.class_indices(label);
        if idx.len() < 2 {
            return Err(Error::ClassTooSmall {
                label,
                count: idx.len(),
            });
        }
        let mut shuffled = idx.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(label as u64 + 1);
        shuffled.shuffle(&mut rng);
        let want = (train_fraction * idx.len() as f64).round() as usize;
        let take = want.clamp(1, idx.len() - 1);
        train_idx.extend_from_slice(&shuffled[..take]);
        test_idx.extend_from_slice(&shuffled[take..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((train_idx, test_idx))
}

/// Deterministic stratified train/test split; see
/// [`stratified_split_indices`] for the counting rule.
pub fn stratified_split(d: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    let (train_idx, test_idx) = stratified_split_indices(d, train_fraction, seed)?;
    Ok((d.take_rows(&train_idx), d.take_rows(&test_idx)))
}

/// Number of synthetic rows for an augmentation ratio given in percent:
/// `floor(ratio/100 * minority_train_count)`.
pub fn synthetic_count(ratio_percent: u32, minority_train_count: usize) -> usize {
    (ratio_percent as usize * minority_train_count) / 100
}

/// Append synthetic rows under the given label. Appended rows are flagged
/// so they can never leak into a test partition.
pub fn augment(train: &Dataset, synthetic: &Matrix, label: u8) -> Result<Dataset> {
    if synthetic.cols() != train.width() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} columns", train.width()),
            found: format!("{}", synthetic.cols()),
        });
    }
    let mut out = train.clone();
    for r in 0..synthetic.rows() {
        out.x.push_row(synthetic.row(r));
        out.y.push(label);
        out.synthetic.push(true);
    }
    Ok(out)
}

/// Snap every one-hot span to an exact indicator via arg-max. Numeric
/// columns pass through untouched.
pub fn project_onehot_spans(x: &Matrix, spans: &[OneHotSpan]) -> Matrix {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        for span in spans {
            let k = argmax(&row[span.start..span.start + span.len]);
            for j in 0..span.len {
                row[span.start + j] = if j == k { 1.0 } else { 0.0 };
            }
        }
    }
    out
}
