//! Transformer autoencoder over tabular rows: one token per original
//! feature (numeric features enter through per-feature linear maps,
//! categoricals through embedding tables), sinusoidal positional
//! encoding, post-norm encoder layers, mean-pool + linear to the latent,
//! a learned latent-to-tokens broadcast, decoder layers with unmasked
//! self-attention, and per-feature output heads (linear for numerics,
//! softmax for categoricals).
//!
//! All parameters live in one flat buffer; backprop is hand-written and
//! verified against central finite differences in the tests.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ColumnKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const LN_EPS: f64 = 1e-8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AttnConfig {
    /// Token embedding width (the model dimension).
    pub d_model: usize,
    pub nhead: usize,
    pub num_layers: usize,
    pub dim_ff: usize,
    /// latent_dim = ceil(feature_count * latent_dim_factor).
    pub latent_dim_factor: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for AttnConfig {
    fn default() -> Self {
        AttnConfig {
            d_model: 8,
            nhead: 4,
            num_layers: 2,
            dim_ff: 64,
            latent_dim_factor: 0.5,
            epochs: 1000,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl AttnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0
            || self.nhead == 0
            || self.num_layers == 0
            || self.dim_ff == 0
            || self.epochs == 0
            || self.batch_size == 0
            || self.learning_rate <= 0.0
            || self.latent_dim_factor <= 0.0
        {
            return Err(Error::InvalidConfig(
                "attention config values must be positive".to_string(),
            ));
        }
        if self.d_model % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "d_model must be even for positional encoding, got {}",
                self.d_model
            )));
        }
        if self.d_model % self.nhead != 0 {
            return Err(Error::InvalidConfig(format!(
                "nhead {} must divide d_model {}",
                self.nhead, self.d_model
            )));
        }
        Ok(())
    }

    pub fn latent_dim(&self, feature_count: usize) -> usize {
        ((feature_count as f64 * self.latent_dim_factor).ceil() as usize).max(1)
    }
}

/// Sinusoidal table: PE(pos, 2i) = sin(pos / 10000^(2i/d)),
/// PE(pos, 2i+1) = cos(pos / 10000^(2i/d)).
pub fn positional_encoding(n_positions: usize, d_model: usize) -> Result<Matrix> {
    if d_model % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "positional encoding needs even d_model, got {d_model}"
        )));
    }
    let mut pe = Matrix::zeros(n_positions, d_model);
    for pos in 0..n_positions {
        for i in 0..d_model / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            pe[(pos, 2 * i)] = angle.sin();
            pe[(pos, 2 * i + 1)] = angle.cos();
        }
    }
    Ok(pe)
}

/// Scaled dot-product attention for a single head (Eq.-style softmax of
/// QK^T / sqrt(d_k) applied to V). Rows of the weight matrix sum to 1.
pub fn self_attention(q: &Matrix, k: &Matrix, v: &Matrix) -> Result<Matrix> {
    if q.cols() != k.cols() || k.rows() != v.rows() {
        return Err(Error::ShapeMismatch {
            expected: "conformable Q/K/V".to_string(),
            found: format!(
                "Q {}x{}, K {}x{}, V {}x{}",
                q.rows(),
                q.cols(),
                k.rows(),
                k.cols(),
                v.rows(),
                v.cols()
            ),
        });
    }
    let scale = 1.0 / (q.cols() as f64).sqrt();
    let mut out = Matrix::zeros(q.rows(), v.cols());
    let mut logits = vec![0.0; k.rows()];
    for a in 0..q.rows() {
        for b in 0..k.rows() {
            let mut dot = 0.0;
            for c in 0..q.cols() {
                dot += q[(a, c)] * k[(b, c)];
            }
            logits[b] = dot * scale;
        }
        softmax_inplace(&mut logits);
        for b in 0..k.rows() {
            let w = logits[b];
            for c in 0..v.cols() {
                out[(a, c)] += w * v[(b, c)];
            }
        }
    }
    Ok(out)
}

fn softmax_inplace(v: &mut [f64]) {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

/// How each original feature maps into the encoded matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum TokenKind {
    Numeric { col: usize },
    Categorical { start: usize, vocab: usize },
}

fn token_plan(schema: &FeatureSchema) -> Vec<TokenKind> {
    let mut plan = Vec::with_capacity(schema.columns.len());
    let mut at = 0usize;
    for c in &schema.columns {
        match &c.kind {
            ColumnKind::Numeric => {
                plan.push(TokenKind::Numeric { col: at });
                at += 1;
            }
            ColumnKind::Categorical(v) => {
                plan.push(TokenKind::Categorical {
                    start: at,
                    vocab: v.len(),
                });
                at += v.len();
            }
        }
    }
    plan
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------
// parameter layout

type Range = std::ops::Range<usize>;

#[derive(Clone, Debug)]
struct LayerSlots {
    wq: Range,
    bq: Range,
    wk: Range,
    bk: Range,
    wv: Range,
    bv: Range,
    wo: Range,
    bo: Range,
    ln1_g: Range,
    ln1_b: Range,
    w1: Range,
    b1: Range,
    w2: Range,
    b2: Range,
    ln2_g: Range,
    ln2_b: Range,
}

#[derive(Clone, Debug)]
enum EmbedSlot {
    Numeric { w: Range, b: Range },
    Categorical { table: Range },
}

#[derive(Clone, Debug)]
enum HeadSlot {
    Numeric { w: Range, b: Range },
    Categorical { w: Range, b: Range },
}

struct Layout {
    embed: Vec<EmbedSlot>,
    enc: Vec<LayerSlots>,
    pool_w: Range,
    pool_b: Range,
    up_w: Range,
    up_b: Range,
    dec: Vec<LayerSlots>,
    heads: Vec<HeadSlot>,
    total: usize,
}

struct LayoutBuilder {
    at: usize,
}

impl LayoutBuilder {
    fn take(&mut self, len: usize) -> Range {
        let r = self.at..self.at + len;
        self.at += len;
        r
    }

    fn layer(&mut self, d: usize, ff: usize) -> LayerSlots {
        LayerSlots {
            wq: self.take(d * d),
            bq: self.take(d),
            wk: self.take(d * d),
            bk: self.take(d),
            wv: self.take(d * d),
            bv: self.take(d),
            wo: self.take(d * d),
            bo: self.take(d),
            ln1_g: self.take(d),
            ln1_b: self.take(d),
            w1: self.take(d * ff),
            b1: self.take(ff),
            w2: self.take(ff * d),
            b2: self.take(d),
            ln2_g: self.take(d),
            ln2_b: self.take(d),
        }
    }
}

fn build_layout(plan: &[TokenKind], cfg: &AttnConfig, latent_dim: usize) -> Layout {
    let d = cfg.d_model;
    let t = plan.len();
    let mut b = LayoutBuilder { at: 0 };
    let embed = plan
        .iter()
        .map(|tk| match tk {
            TokenKind::Numeric { .. } => EmbedSlot::Numeric {
                w: b.take(d),
                b: b.take(d),
            },
            TokenKind::Categorical { vocab, .. } => EmbedSlot::Categorical {
                table: b.take(vocab * d),
            },
        })
        .collect();
    let enc = (0..cfg.num_layers).map(|_| b.layer(d, cfg.dim_ff)).collect();
    let pool_w = b.take(d * latent_dim);
    let pool_b = b.take(latent_dim);
    let up_w = b.take(latent_dim * t * d);
    let up_b = b.take(t * d);
    let dec = (0..cfg.num_layers).map(|_| b.layer(d, cfg.dim_ff)).collect();
    let heads = plan
        .iter()
        .map(|tk| match tk {
            TokenKind::Numeric { .. } => HeadSlot::Numeric {
                w: b.take(d),
                b: b.take(1),
            },
            TokenKind::Categorical { vocab, .. } => HeadSlot::Categorical {
                w: b.take(d * vocab),
                b: b.take(*vocab),
            },
        })
        .collect();
    Layout {
        embed,
        enc,
        pool_w,
        pool_b,
        up_w,
        up_b,
        dec,
        heads,
        total: b.at,
    }
}

// ---------------------------------------------------------------------
// flat token-matrix helpers (T x d stored row-major)

fn linear_fwd(x: &[f64], t: usize, din: usize, w: &[f64], bias: &[f64]) -> Vec<f64> {
    let dout = bias.len();
    let mut out = vec![0.0; t * dout];
    for r in 0..t {
        let xr = &x[r * din..(r + 1) * din];
        let or = &mut out[r * dout..(r + 1) * dout];
        or.copy_from_slice(bias);
        for (i, &xi) in xr.iter().enumerate() {
            let wr = &w[i * dout..(i + 1) * dout];
            for j in 0..dout {
                or[j] += xi * wr[j];
            }
        }
    }
    out
}

fn linear_bwd(
    x: &[f64],
    t: usize,
    din: usize,
    w: &[f64],
    d_out: &[f64],
    gw: &mut [f64],
    gb: &mut [f64],
    d_x: &mut [f64],
) {
    let dout = gb.len();
    for r in 0..t {
        let xr = &x[r * din..(r + 1) * din];
        let dor = &d_out[r * dout..(r + 1) * dout];
        let dxr = &mut d_x[r * din..(r + 1) * din];
        for j in 0..dout {
            gb[j] += dor[j];
        }
        for i in 0..din {
            let wr = &w[i * dout..(i + 1) * dout];
            let gwr = &mut gw[i * dout..(i + 1) * dout];
            let mut acc = 0.0;
            for j in 0..dout {
                gwr[j] += xr[i] * dor[j];
                acc += wr[j] * dor[j];
            }
            dxr[i] = acc;
        }
    }
}

// ---------------------------------------------------------------------
// per-layer caches

struct LayerTrace {
    input: Vec<f64>,
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// per head: T x T attention weights
    attn: Vec<Vec<f64>>,
    concat: Vec<f64>,
    ln1: LnTrace,
    ff_pre: Vec<f64>,
    ff_act: Vec<f64>,
    ln2: LnTrace,
    output: Vec<f64>,
}

struct LnTrace {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

fn layer_norm_fwd(x: &[f64], t: usize, d: usize, gamma: &[f64], beta: &[f64]) -> (Vec<f64>, LnTrace) {
    let mut out = vec![0.0; t * d];
    let mut xhat = vec![0.0; t * d];
    let mut inv_std = vec![0.0; t];
    for r in 0..t {
        let xr = &x[r * d..(r + 1) * d];
        let mean = xr.iter().sum::<f64>() / d as f64;
        let var = xr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + LN_EPS).sqrt();
        inv_std[r] = inv;
        for c in 0..d {
            let h = (xr[c] - mean) * inv;
            xhat[r * d + c] = h;
            out[r * d + c] = gamma[c] * h + beta[c];
        }
    }
    (out, LnTrace { xhat, inv_std })
}

fn layer_norm_bwd(
    d_out: &[f64],
    trace: &LnTrace,
    t: usize,
    d: usize,
    gamma: &[f64],
    g_gamma: &mut [f64],
    g_beta: &mut [f64],
    d_x: &mut [f64],
) {
    for r in 0..t {
        let dor = &d_out[r * d..(r + 1) * d];
        let xh = &trace.xhat[r * d..(r + 1) * d];
        let inv = trace.inv_std[r];
        let mut mean_dh = 0.0;
        let mut mean_dh_xh = 0.0;
        for c in 0..d {
            g_beta[c] += dor[c];
            g_gamma[c] += dor[c] * xh[c];
            let dh = dor[c] * gamma[c];
            mean_dh += dh;
            mean_dh_xh += dh * xh[c];
        }
        mean_dh /= d as f64;
        mean_dh_xh /= d as f64;
        for c in 0..d {
            let dh = dor[c] * gamma[c];
            d_x[r * d + c] = inv * (dh - mean_dh - xh[c] * mean_dh_xh);
        }
    }
}

// ---------------------------------------------------------------------
// the model

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformerAutoencoder {
    pub config: AttnConfig,
    pub plan: Vec<TokenKind>,
    pub latent_dim: usize,
    pub input_width: usize,
    pe: Matrix,
    params: Vec<f64>,
}

impl TransformerAutoencoder {
    pub fn init(schema: &FeatureSchema, input_width: usize, cfg: &AttnConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = token_plan(schema);
        if plan.is_empty() {
            return Err(Error::EmptyDataset("no feature tokens".to_string()));
        }
        if schema.encoded_width() != input_width {
            return Err(Error::ShapeMismatch {
                expected: format!("encoded width {}", schema.encoded_width()),
                found: format!("{input_width}"),
            });
        }
        let latent_dim = cfg.latent_dim(plan.len());
        let layout = build_layout(&plan, cfg, latent_dim);
        let pe = positional_encoding(plan.len(), cfg.d_model)?;

        let mut params = vec![0.0; layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let d = cfg.d_model;
        let mut init = |r: &Range, fan_in: usize, fan_out: usize, params: &mut Vec<f64>| {
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for v in &mut params[r.clone()] {
                *v = rng.random_range(-bound..bound);
            }
        };
        for slot in &layout.embed {
            match slot {
                EmbedSlot::Numeric { w, .. } => init(w, 1, d, &mut params),
                EmbedSlot::Categorical { table } => {
                    let vocab = table.len() / d;
                    init(table, vocab, d, &mut params);
                }
            }
        }
        for layer in layout.enc.iter().chain(layout.dec.iter()) {
            init(&layer.wq, d, d, &mut params);
            init(&layer.wk, d, d, &mut params);
            init(&layer.wv, d, d, &mut params);
            init(&layer.wo, d, d, &mut params);
            init(&layer.w1, d, cfg.dim_ff, &mut params);
            init(&layer.w2, cfg.dim_ff, d, &mut params);
            params[layer.ln1_g.clone()].fill(1.0);
            params[layer.ln2_g.clone()].fill(1.0);
        }
        init(&layout.pool_w, d, latent_dim, &mut params);
        let t = plan.len();
        init(&layout.up_w, latent_dim, t * d, &mut params);
        for slot in &layout.heads {
            match slot {
                HeadSlot::Numeric { w, .. } => init(w, d, 1, &mut params),
                HeadSlot::Categorical { w, .. } => {
                    let vocab = w.len() / d;
                    init(w, d, vocab, &mut params);
                }
            }
        }

        Ok(TransformerAutoencoder {
            config: cfg.clone(),
            plan,
            latent_dim,
            input_width,
            pe,
            params,
        })
    }

    fn layout(&self) -> Layout {
        build_layout(&self.plan, &self.config, self.latent_dim)
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    pub fn token_count(&self) -> usize {
        self.plan.len()
    }

    /// Per-feature tokens for one encoded row: embedding plus positional
    /// encoding.
    fn embed_row(&self, layout: &Layout, row: &[f64]) -> Vec<f64> {
        let d = self.config.d_model;
        let t = self.plan.len();
        let mut tokens = vec![0.0; t * d];
        for (i, tk) in self.plan.iter().enumerate() {
            let out = &mut tokens[i * d..(i + 1) * d];
            match (&layout.embed[i], tk) {
                (EmbedSlot::Numeric { w, b }, TokenKind::Numeric { col }) => {
                    let x = row[*col];
                    for c in 0..d {
                        out[c] = self.params[w.start + c] * x + self.params[b.start + c];
                    }
                }
                (EmbedSlot::Categorical { table }, TokenKind::Categorical { start, vocab }) => {
                    let k = argmax(&row[*start..*start + *vocab]);
                    out.copy_from_slice(&self.params[table.start + k * d..table.start + (k + 1) * d]);
                }
                _ => unreachable!("layout and plan are built together"),
            }
            for c in 0..d {
                out[c] += self.pe[(i, c)];
            }
        }
        tokens
    }

    fn layer_fwd(&self, slots: &LayerSlots, input: Vec<f64>) -> LayerTrace {
        let d = self.config.d_model;
        let t = self.plan.len();
        let nhead = self.config.nhead;
        let dk = d / nhead;
        let scale = 1.0 / (dk as f64).sqrt();
        let p = &self.params;

        let q = linear_fwd(&input, t, d, &p[slots.wq.clone()], &p[slots.bq.clone()]);
        let k = linear_fwd(&input, t, d, &p[slots.wk.clone()], &p[slots.bk.clone()]);
        let v = linear_fwd(&input, t, d, &p[slots.wv.clone()], &p[slots.bv.clone()]);

        let mut attn = Vec::with_capacity(nhead);
        let mut concat = vec![0.0; t * d];
        for h in 0..nhead {
            let off = h * dk;
            let mut weights = vec![0.0; t * t];
            for a in 0..t {
                let row = &mut weights[a * t..(a + 1) * t];
                for b in 0..t {
                    let mut dot = 0.0;
                    for c in 0..dk {
                        dot += q[a * d + off + c] * k[b * d + off + c];
                    }
                    row[b] = dot * scale;
                }
                softmax_inplace(row);
            }
            for a in 0..t {
                for b in 0..t {
                    let w = weights[a * t + b];
                    for c in 0..dk {
                        concat[a * d + off + c] += w * v[b * d + off + c];
                    }
                }
            }
            attn.push(weights);
        }

        let attn_out = linear_fwd(&concat, t, d, &p[slots.wo.clone()], &p[slots.bo.clone()]);
        let mut res1 = input.clone();
        for i in 0..t * d {
            res1[i] += attn_out[i];
        }
        let (ln1_out, ln1) =
            layer_norm_fwd(&res1, t, d, &p[slots.ln1_g.clone()], &p[slots.ln1_b.clone()]);
        drop(res1);

        let ff_pre = linear_fwd(&ln1_out, t, d, &p[slots.w1.clone()], &p[slots.b1.clone()]);
        let mut ff_act = ff_pre.clone();
        for v in ff_act.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let ff_out = linear_fwd(
            &ff_act,
            t,
            self.config.dim_ff,
            &p[slots.w2.clone()],
            &p[slots.b2.clone()],
        );
        let mut res2 = ln1_out;
        for i in 0..t * d {
            res2[i] += ff_out[i];
        }
        let (output, ln2) =
            layer_norm_fwd(&res2, t, d, &p[slots.ln2_g.clone()], &p[slots.ln2_b.clone()]);
        drop(res2);

        LayerTrace {
            input,
            q,
            k,
            v,
            attn,
            concat,
            ln1,
            ff_pre,
            ff_act,
            ln2,
            output,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn layer_bwd(
        &self,
        slots: &LayerSlots,
        trace: &LayerTrace,
        d_output: &[f64],
        grad: &mut [f64],
    ) -> Vec<f64> {
        let d = self.config.d_model;
        let t = self.plan.len();
        let ff = self.config.dim_ff;
        let nhead = self.config.nhead;
        let dk = d / nhead;
        let scale = 1.0 / (dk as f64).sqrt();
        let p = &self.params;

        // ln1 output reconstructed from its trace for the ffn backward
        let ln1_out: Vec<f64> = {
            let g = &p[slots.ln1_g.clone()];
            let b = &p[slots.ln1_b.clone()];
            (0..t * d)
                .map(|i| g[i % d] * trace.ln1.xhat[i] + b[i % d])
                .collect()
        };

        // ln2 backward into res2
        let mut d_res2 = vec![0.0; t * d];
        {
            let (g_g, g_b) = {
                // split disjoint grad slices for gamma/beta
                let (a, b) = (slots.ln2_g.clone(), slots.ln2_b.clone());
                split_two(grad, a, b)
            };
            layer_norm_bwd(
                d_output,
                &trace.ln2,
                t,
                d,
                &p[slots.ln2_g.clone()],
                g_g,
                g_b,
                &mut d_res2,
            );
        }

        // res2 = ln1_out + ffn(ln1_out)
        let mut d_ff_out = d_res2.clone();
        let mut d_ln1_out = d_res2;

        // ffn backward
        let mut d_ff_act = vec![0.0; t * ff];
        {
            let (gw, gb) = split_two(grad, slots.w2.clone(), slots.b2.clone());
            linear_bwd(
                &trace.ff_act,
                t,
                ff,
                &p[slots.w2.clone()],
                &d_ff_out,
                gw,
                gb,
                &mut d_ff_act,
            );
        }
        for i in 0..t * ff {
            if trace.ff_pre[i] <= 0.0 {
                d_ff_act[i] = 0.0;
            }
        }
        {
            let mut d_tmp = vec![0.0; t * d];
            let (gw, gb) = split_two(grad, slots.w1.clone(), slots.b1.clone());
            linear_bwd(
                &ln1_out,
                t,
                d,
                &p[slots.w1.clone()],
                &d_ff_act,
                gw,
                gb,
                &mut d_tmp,
            );
            for i in 0..t * d {
                d_ln1_out[i] += d_tmp[i];
            }
        }
        d_ff_out.clear();

        // ln1 backward into res1
        let mut d_res1 = vec![0.0; t * d];
        {
            let (g_g, g_b) = split_two(grad, slots.ln1_g.clone(), slots.ln1_b.clone());
            layer_norm_bwd(
                &d_ln1_out,
                &trace.ln1,
                t,
                d,
                &p[slots.ln1_g.clone()],
                g_g,
                g_b,
                &mut d_res1,
            );
        }

        // res1 = input + attn_out
        let mut d_input = d_res1.clone();
        let d_attn_out = d_res1;

        // output projection backward
        let mut d_concat = vec![0.0; t * d];
        {
            let (gw, gb) = split_two(grad, slots.wo.clone(), slots.bo.clone());
            linear_bwd(
                &trace.concat,
                t,
                d,
                &p[slots.wo.clone()],
                &d_attn_out,
                gw,
                gb,
                &mut d_concat,
            );
        }

        // attention backward per head
        let mut d_q = vec![0.0; t * d];
        let mut d_k = vec![0.0; t * d];
        let mut d_v = vec![0.0; t * d];
        for h in 0..nhead {
            let off = h * dk;
            let weights = &trace.attn[h];
            for a in 0..t {
                // dA[a, b] and softmax backward
                let mut d_a = vec![0.0; t];
                for b in 0..t {
                    let mut acc = 0.0;
                    for c in 0..dk {
                        acc += d_concat[a * d + off + c] * trace.v[b * d + off + c];
                    }
                    d_a[b] = acc;
                }
                let w_row = &weights[a * t..(a + 1) * t];
                let dot: f64 = d_a.iter().zip(w_row).map(|(da, w)| da * w).sum();
                for b in 0..t {
                    let d_logit = w_row[b] * (d_a[b] - dot);
                    for c in 0..dk {
                        d_q[a * d + off + c] += d_logit * trace.k[b * d + off + c] * scale;
                        d_k[b * d + off + c] += d_logit * trace.q[a * d + off + c] * scale;
                    }
                }
                for b in 0..t {
                    let w = w_row[b];
                    for c in 0..dk {
                        d_v[b * d + off + c] += w * d_concat[a * d + off + c];
                    }
                }
            }
        }

        // project Q/K/V gradients back to the layer input
        let mut d_tmp = vec![0.0; t * d];
        {
            let (gw, gb) = split_two(grad, slots.wq.clone(), slots.bq.clone());
            linear_bwd(&trace.input, t, d, &p[slots.wq.clone()], &d_q, gw, gb, &mut d_tmp);
            for i in 0..t * d {
                d_input[i] += d_tmp[i];
            }
        }
        {
            let (gw, gb) = split_two(grad, slots.wk.clone(), slots.bk.clone());
            linear_bwd(&trace.input, t, d, &p[slots.wk.clone()], &d_k, gw, gb, &mut d_tmp);
            for i in 0..t * d {
                d_input[i] += d_tmp[i];
            }
        }
        {
            let (gw, gb) = split_two(grad, slots.wv.clone(), slots.bv.clone());
            linear_bwd(&trace.input, t, d, &p[slots.wv.clone()], &d_v, gw, gb, &mut d_tmp);
            for i in 0..t * d {
                d_input[i] += d_tmp[i];
            }
        }

        d_input
    }

    /// Latent codes for every row.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.input_width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.input_width),
                found: format!("{}", x.cols()),
            });
        }
        let layout = self.layout();
        let mut out = Matrix::empty(self.latent_dim);
        for row in x.iter_rows() {
            let (latent, _) = self.encode_forward(&layout, row);
            out.push_row(&latent);
        }
        Ok(out)
    }

    fn encode_forward(&self, layout: &Layout, row: &[f64]) -> (Vec<f64>, EncState) {
        let d = self.config.d_model;
        let t = self.plan.len();
        let mut state = EncState {
            layers: Vec::with_capacity(layout.enc.len()),
            pooled: Vec::new(),
        };
        let mut tokens = self.embed_row(layout, row);
        for slots in &layout.enc {
            let trace = self.layer_fwd(slots, tokens);
            tokens = trace.output.clone();
            state.layers.push(trace);
        }
        let mut pooled = vec![0.0; d];
        for r in 0..t {
            for c in 0..d {
                pooled[c] += tokens[r * d + c];
            }
        }
        for v in pooled.iter_mut() {
            *v /= t as f64;
        }
        let latent = linear_fwd(
            &pooled,
            1,
            d,
            &self.params[layout.pool_w.clone()],
            &self.params[layout.pool_b.clone()],
        );
        state.pooled = pooled;
        (latent, state)
    }

    fn decode_forward(&self, layout: &Layout, latent: &[f64]) -> (DecOut, DecState) {
        let d = self.config.d_model;
        let mut state = DecState {
            layers: Vec::with_capacity(layout.dec.len()),
        };
        let mut tokens = linear_fwd(
            latent,
            1,
            self.latent_dim,
            &self.params[layout.up_w.clone()],
            &self.params[layout.up_b.clone()],
        );
        for slots in &layout.dec {
            let trace = self.layer_fwd(slots, tokens);
            tokens = trace.output.clone();
            state.layers.push(trace);
        }

        let mut numeric = vec![0.0; self.input_width];
        let mut cat_probs: Vec<Vec<f64>> = Vec::new();
        for (i, tk) in self.plan.iter().enumerate() {
            let tok = &tokens[i * d..(i + 1) * d];
            match (&layout.heads[i], tk) {
                (HeadSlot::Numeric { w, b }, TokenKind::Numeric { col }) => {
                    let mut acc = self.params[b.start];
                    for c in 0..d {
                        acc += self.params[w.start + c] * tok[c];
                    }
                    numeric[*col] = acc;
                }
                (HeadSlot::Categorical { w, b }, TokenKind::Categorical { vocab, .. }) => {
                    let mut logits = vec![0.0; *vocab];
                    for (k, l) in logits.iter_mut().enumerate() {
                        let mut acc = self.params[b.start + k];
                        for c in 0..d {
                            acc += self.params[w.start + c * *vocab + k] * tok[c];
                        }
                        *l = acc;
                    }
                    softmax_inplace(&mut logits);
                    cat_probs.push(logits);
                }
                _ => unreachable!(),
            }
        }
        (
            DecOut {
                numeric,
                cat_probs,
                tokens,
            },
            state,
        )
    }

    /// Reconstruct encoded rows from latent codes. Numeric columns carry
    /// the head outputs; each one-hot span carries its softmax
    /// probabilities (summing to 1), to be arg-max projected by callers
    /// that need exact indicators.
    pub fn decode(&self, latent: &Matrix) -> Result<Matrix> {
        if latent.cols() != self.latent_dim {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.latent_dim),
                found: format!("{}", latent.cols()),
            });
        }
        let layout = self.layout();
        let mut out = Matrix::empty(self.input_width);
        for row in latent.iter_rows() {
            let (dec, _) = self.decode_forward(&layout, row);
            let mut full = dec.numeric;
            let mut cat_iter = dec.cat_probs.into_iter();
            for tk in &self.plan {
                if let TokenKind::Categorical { start, vocab } = tk {
                    let probs = cat_iter.next().expect("one distribution per span");
                    full[*start..*start + *vocab].copy_from_slice(&probs);
                }
            }
            out.push_row(&full);
        }
        Ok(out)
    }

    /// Loss over the listed rows (numeric squared error plus categorical
    /// cross-entropy, averaged over rows) and the parameter gradient.
    pub fn loss_and_grad(&self, x: &Matrix, rows: &[usize]) -> (f64, Vec<f64>) {
        let layout = self.layout();
        let d = self.config.d_model;
        let t = self.plan.len();
        let inv_b = 1.0 / rows.len().max(1) as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;

        for &r in rows {
            let row = x.row(r);
            let (latent, enc_state) = self.encode_forward(&layout, row);
            let (dec, dec_state) = self.decode_forward(&layout, &latent);

            // heads: loss and gradient into the decoder's final tokens
            let mut d_tokens = vec![0.0; t * d];
            let mut cat_i = 0usize;
            for (i, tk) in self.plan.iter().enumerate() {
                let tok = &dec.tokens[i * d..(i + 1) * d];
                match (&layout.heads[i], tk) {
                    (HeadSlot::Numeric { w, b }, TokenKind::Numeric { col }) => {
                        let e = dec.numeric[*col] - row[*col];
                        loss += e * e * inv_b;
                        let dv = 2.0 * e * inv_b;
                        grad[b.start] += dv;
                        for c in 0..d {
                            grad[w.start + c] += dv * tok[c];
                            d_tokens[i * d + c] += dv * self.params[w.start + c];
                        }
                    }
                    (HeadSlot::Categorical { w, b }, TokenKind::Categorical { start, vocab }) => {
                        let truth = argmax(&row[*start..*start + *vocab]);
                        let probs = &dec.cat_probs[cat_i];
                        loss -= probs[truth].max(1e-300).ln() * inv_b;
                        for k in 0..*vocab {
                            let dl = (probs[k] - if k == truth { 1.0 } else { 0.0 }) * inv_b;
                            grad[b.start + k] += dl;
                            for c in 0..d {
                                grad[w.start + c * *vocab + k] += dl * tok[c];
                                d_tokens[i * d + c] += dl * self.params[w.start + c * *vocab + k];
                            }
                        }
                        cat_i += 1;
                    }
                    _ => unreachable!(),
                }
            }

            // decoder layers backward
            let mut d_cur = d_tokens;
            for (slots, trace) in layout.dec.iter().zip(&dec_state.layers).rev() {
                d_cur = self.layer_bwd(slots, trace, &d_cur, &mut grad);
            }

            // latent broadcast backward
            let mut d_latent = vec![0.0; self.latent_dim];
            {
                let (gw, gb) = split_two(&mut grad, layout.up_w.clone(), layout.up_b.clone());
                linear_bwd(
                    &latent,
                    1,
                    self.latent_dim,
                    &self.params[layout.up_w.clone()],
                    &d_cur,
                    gw,
                    gb,
                    &mut d_latent,
                );
            }

            // pool backward
            let mut d_pooled = vec![0.0; d];
            {
                let (gw, gb) = split_two(&mut grad, layout.pool_w.clone(), layout.pool_b.clone());
                linear_bwd(
                    &enc_state.pooled,
                    1,
                    d,
                    &self.params[layout.pool_w.clone()],
                    &d_latent,
                    gw,
                    gb,
                    &mut d_pooled,
                );
            }
            let mut d_enc = vec![0.0; t * d];
            for r2 in 0..t {
                for c in 0..d {
                    d_enc[r2 * d + c] = d_pooled[c] / t as f64;
                }
            }

            // encoder layers backward
            let mut d_cur = d_enc;
            for (slots, trace) in layout.enc.iter().zip(&enc_state.layers).rev() {
                d_cur = self.layer_bwd(slots, trace, &d_cur, &mut grad);
            }

            // embedding parameters
            for (i, tk) in self.plan.iter().enumerate() {
                let d_tok = &d_cur[i * d..(i + 1) * d];
                match (&layout.embed[i], tk) {
                    (EmbedSlot::Numeric { w, b }, TokenKind::Numeric { col }) => {
                        let xv = row[*col];
                        for c in 0..d {
                            grad[w.start + c] += d_tok[c] * xv;
                            grad[b.start + c] += d_tok[c];
                        }
                    }
                    (EmbedSlot::Categorical { table }, TokenKind::Categorical { start, vocab }) => {
                        let k = argmax(&row[*start..*start + *vocab]);
                        for c in 0..d {
                            grad[table.start + k * d + c] += d_tok[c];
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }

        (loss, grad)
    }

    /// Loss over all rows without gradients.
    pub fn loss(&self, x: &Matrix) -> f64 {
        let rows: Vec<usize> = (0..x.rows()).collect();
        // gradient buffer is wasted here but the row count is small in
        // every caller; keep one code path
        self.loss_and_grad(x, &rows).0
    }

    /// Token matrix (feature_count x d_model) for one encoded row:
    /// per-feature embedding plus positional encoding, before any
    /// attention layer.
    pub fn tokenize(&self, row: &[f64]) -> Result<Matrix> {
        if row.len() != self.input_width {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", self.input_width),
                found: format!("{}", row.len()),
            });
        }
        let layout = self.layout();
        let flat = self.embed_row(&layout, row);
        Ok(Matrix::from_vec(
            self.plan.len(),
            self.config.d_model,
            flat,
        ))
    }

    /// Attention weight maps for one encoded row, per encoder layer and
    /// head; used by invariant tests.
    pub fn attention_maps(&self, row: &[f64]) -> Vec<Vec<Vec<f64>>> {
        let layout = self.layout();
        let mut maps = Vec::new();
        let mut tokens = self.embed_row(&layout, row);
        for slots in &layout.enc {
            let trace = self.layer_fwd(slots, tokens);
            tokens = trace.output.clone();
            maps.push(trace.attn.clone());
        }
        maps
    }

    pub fn to_text(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

struct EncState {
    layers: Vec<LayerTrace>,
    pooled: Vec<f64>,
}

struct DecState {
    layers: Vec<LayerTrace>,
}

struct DecOut {
    numeric: Vec<f64>,
    cat_probs: Vec<Vec<f64>>,
    tokens: Vec<f64>,
}

/// Two non-overlapping mutable grad slices.
fn split_two(grad: &mut [f64], a: Range, b: Range) -> (&mut [f64], &mut [f64]) {
    assert!(a.end <= b.start || b.end <= a.start);
    if a.end <= b.start {
        let (left, right) = grad.split_at_mut(b.start);
        (&mut left[a], &mut right[..b.len()])
    } else {
        let (left, right) = grad.split_at_mut(a.start);
        let bl = b.len();
        (&mut right[..a.len()], &mut left[b.start..b.start + bl])
    }
}

/// Minibatch SGD on reconstruction loss (numeric MSE plus categorical
/// cross-entropy). Deterministic per seed.
pub fn fit_transformer_ae(
    x: &Matrix,
    schema: &FeatureSchema,
    cfg: &AttnConfig,
) -> Result<(TransformerAutoencoder, crate::mlp::FitReport)> {
    if x.rows() == 0 {
        return Err(Error::EmptyDataset("transformer training".to_string()));
    }
    x.require_finite("transformer training data")?;
    let mut model = TransformerAutoencoder::init(schema, x.cols(), cfg)?;
    let batch = cfg.batch_size.min(x.rows());
    let initial = model.loss(x);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..x.rows()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(crate::flow::derive_seed(cfg.seed, 0xA77));

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        for chunk in order.chunks(batch) {
            let (loss, grad) = model.loss_and_grad(x, chunk);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= cfg.learning_rate * g;
            }
            epoch_loss += loss;
            batches += 1.0;
        }
        epoch_losses.push(epoch_loss / batches);
    }

    let final_loss = model.loss(x);
    if !final_loss.is_finite() {
        return Err(Error::Diverged { epoch: cfg.epochs });
    }
    Ok((
        model,
        crate::mlp::FitReport {
            initial_mse: initial,
            final_mse: final_loss,
            epoch_mse: epoch_losses,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ColumnSpec;
    use rand_distr::{Distribution, StandardNormal};

    fn numeric_schema(n: usize) -> FeatureSchema {
        FeatureSchema::numeric(n, "f", "label")
    }

    fn mixed_schema() -> FeatureSchema {
        FeatureSchema {
            columns: vec![
                ColumnSpec {
                    name: "a".to_string(),
                    kind: ColumnKind::Numeric,
                },
                ColumnSpec {
                    name: "c".to_string(),
                    kind: ColumnKind::Categorical(vec![
                        "x".to_string(),
                        "y".to_string(),
                        "z".to_string(),
                    ]),
                },
            ],
            target: "label".to_string(),
        }
    }

    fn lowrank(n: usize, dim: usize, rank: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mixing: Vec<Vec<f64>> = (0..rank)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let f: Vec<f64> = (0..rank).map(|_| StandardNormal.sample(&mut rng)).collect();
                (0..dim)
                    .map(|j| f.iter().zip(&mixing).map(|(fi, m)| fi * m[j]).sum())
                    .collect()
            })
            .collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn positional_encoding_hand_values() {
        let pe = positional_encoding(4, 8).unwrap();
        assert_eq!(pe[(0, 0)], 0.0);
        assert_eq!(pe[(0, 1)], 1.0);
        assert!((pe[(1, 0)] - 0.841_470_984_807_896_5).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..8 {
                assert!((-1.0..=1.0).contains(&pe[(i, j)]));
            }
        }
        assert!(positional_encoding(4, 7).is_err());
    }

    #[test]
    fn attention_single_token_passes_value_through() {
        let q = Matrix::from_rows(&[vec![0.3, -0.7]]);
        let k = Matrix::from_rows(&[vec![1.0, 2.0]]);
        let v = Matrix::from_rows(&[vec![5.0, -3.0]]);
        let out = self_attention(&q, &k, &v).unwrap();
        assert_eq!(out.row(0), &[5.0, -3.0]);
    }

    #[test]
    fn attention_orthogonal_queries_average_uniformly() {
        let q = Matrix::from_rows(&[vec![1.0, 0.0]]);
        let k = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, -1.0]]);
        let v = Matrix::from_rows(&[vec![2.0], vec![4.0]]);
        let out = self_attention(&q, &k, &v).unwrap();
        assert!((out[(0, 0)] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn attention_hand_softmax() {
        // d_k = 1, logits (0, ln 3) -> weights (0.25, 0.75)
        let q = Matrix::from_rows(&[vec![1.0]]);
        let k = Matrix::from_rows(&[vec![0.0], vec![3f64.ln()]]);
        let v = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        let out = self_attention(&q, &k, &v).unwrap();
        assert!((out[(0, 0)] - (0.25 * 1.0 + 0.75 * 2.0)).abs() < 1e-12);
    }

    #[test]
    fn tokenize_locality_and_shape() {
        let schema = mixed_schema();
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            ..AttnConfig::default()
        };
        let mut model = TransformerAutoencoder::init(&schema, 4, &cfg).unwrap();
        assert_eq!(model.token_count(), 2);

        // zero parameters: tokens reduce to the positional encoding
        model.set_params(&vec![0.0; model.params().len()]);
        let toks = model.tokenize(&[0.7, 1.0, 0.0, 0.0]).unwrap();
        let pe = positional_encoding(2, 4).unwrap();
        for i in 0..2 {
            assert_eq!(toks.row(i), pe.row(i));
        }

        // rows differing in one feature differ only at that token
        let mut again = TransformerAutoencoder::init(&schema, 4, &cfg).unwrap();
        let _ = &mut again;
        let a = again.tokenize(&[0.7, 1.0, 0.0, 0.0]).unwrap();
        let b = again.tokenize(&[0.7, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.row(0), b.row(0));
        assert_ne!(a.row(1), b.row(1));
    }

    #[test]
    fn encode_shape_and_latent_rule() {
        let schema = numeric_schema(10);
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            ..AttnConfig::default()
        };
        let model = TransformerAutoencoder::init(&schema, 10, &cfg).unwrap();
        assert_eq!(model.latent_dim, 5);
        let x = lowrank(7, 10, 3, 1);
        let z = model.encode(&x).unwrap();
        assert_eq!(z.rows(), 7);
        assert_eq!(z.cols(), 5);

        // row permutation equivariance
        let rev_rows: Vec<Vec<f64>> = (0..7).rev().map(|i| x.row(i).to_vec()).collect();
        let z_rev = model.encode(&Matrix::from_rows(&rev_rows)).unwrap();
        for i in 0..7 {
            assert_eq!(z.row(i), z_rev.row(6 - i));
        }
    }

    #[test]
    fn decode_softmax_spans_sum_to_one() {
        let schema = mixed_schema();
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            ..AttnConfig::default()
        };
        let model = TransformerAutoencoder::init(&schema, 4, &cfg).unwrap();
        let z = Matrix::from_rows(&[vec![0.3], vec![-1.2]]);
        let out = model.decode(&z).unwrap();
        assert_eq!(out.cols(), 4);
        for i in 0..2 {
            let span: f64 = out.row(i)[1..4].iter().sum();
            assert!((span - 1.0).abs() < 1e-9);
            for v in &out.row(i)[1..4] {
                assert!(*v >= 0.0);
            }
        }
    }

    #[test]
    fn layer_norm_is_standardized_before_affine() {
        let t = 3;
        let d = 8;
        let mut x = vec![0.0; t * d];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for v in x.iter_mut() {
            *v = rng.random_range(-2.0..2.0);
        }
        let gamma = vec![1.0; d];
        let beta = vec![0.0; d];
        let (out, _) = layer_norm_fwd(&x, t, d, &gamma, &beta);
        for r in 0..t {
            let row = &out[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            assert!(mean.abs() < 1e-6);
            assert!((var - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn attention_rows_sum_to_one_everywhere() {
        let schema = numeric_schema(6);
        let cfg = AttnConfig {
            d_model: 8,
            ..AttnConfig::default()
        };
        let model = TransformerAutoencoder::init(&schema, 6, &cfg).unwrap();
        let row = [0.4, -0.2, 1.3, 0.0, -1.1, 2.2];
        let maps = model.attention_maps(&row);
        assert_eq!(maps.len(), cfg.num_layers);
        for layer in &maps {
            assert_eq!(layer.len(), cfg.nhead);
            for head in layer {
                for a in 0..6 {
                    let sum: f64 = head[a * 6..(a + 1) * 6].iter().sum();
                    assert!((sum - 1.0).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_head_count_rejected() {
        let schema = numeric_schema(4);
        let cfg = AttnConfig {
            d_model: 8,
            nhead: 3,
            ..AttnConfig::default()
        };
        assert!(matches!(
            TransformerAutoencoder::init(&schema, 4, &cfg),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn memorizes_identical_rows() {
        let schema = numeric_schema(4);
        let row = vec![0.5, -0.25, 1.0, 0.75];
        let x = Matrix::from_rows(&vec![row; 128]);
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            ..AttnConfig::default()
        };
        let (_, report) = fit_transformer_ae(&x, &schema, &cfg).unwrap();
        assert!(report.final_mse <= 1e-3, "final loss {}", report.final_mse);
    }

    #[test]
    fn loss_drops_on_numeric_data() {
        let schema = numeric_schema(8);
        let x = lowrank(48, 8, 3, 7);
        let cfg = AttnConfig {
            d_model: 8,
            nhead: 4,
            num_layers: 2,
            dim_ff: 64,
            ..AttnConfig::default()
        };
        let (_, report) = fit_transformer_ae(&x, &schema, &cfg).unwrap();
        assert!(
            report.final_mse <= report.initial_mse / 5.0,
            "initial {} final {}",
            report.initial_mse,
            report.final_mse
        );
    }

    #[test]
    fn reconstruction_matches_training_loss_path() {
        let schema = numeric_schema(5);
        let x = lowrank(40, 5, 2, 9);
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 16,
            epochs: 200,
            ..AttnConfig::default()
        };
        let (model, report) = fit_transformer_ae(&x, &schema, &cfg).unwrap();
        let z = model.encode(&x).unwrap();
        let back = model.decode(&z).unwrap();
        let mut mse = 0.0;
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                let e = back[(i, j)] - x[(i, j)];
                mse += e * e;
            }
        }
        mse /= x.rows() as f64;
        assert!((mse - report.final_mse).abs() < 1e-9);
    }

    #[test]
    fn deterministic_per_seed() {
        let schema = mixed_schema();
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..24 {
            let g: f64 = StandardNormal.sample(&mut rng);
            let k = rng.random_range(0..3usize);
            let mut r = vec![g, 0.0, 0.0, 0.0];
            r[1 + k] = 1.0;
            rows.push(r);
        }
        let x = Matrix::from_rows(&rows);
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            epochs: 50,
            seed: 5,
            ..AttnConfig::default()
        };
        let (a, _) = fit_transformer_ae(&x, &schema, &cfg).unwrap();
        let (b, _) = fit_transformer_ae(&x, &schema, &cfg).unwrap();
        assert_eq!(a.params(), b.params());
    }

    #[test]
    fn divergence_reports_epoch() {
        let schema = numeric_schema(4);
        let x = lowrank(32, 4, 2, 23);
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 2,
            num_layers: 1,
            dim_ff: 8,
            epochs: 100,
            learning_rate: 1e5,
            ..AttnConfig::default()
        };
        match fit_transformer_ae(&x, &schema, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        // 2-feature probe: one numeric, one 3-way categorical; 1 layer,
        // 1 head
        let schema = mixed_schema();
        let cfg = AttnConfig {
            d_model: 4,
            nhead: 1,
            num_layers: 1,
            dim_ff: 6,
            seed: 3,
            ..AttnConfig::default()
        };
        let mut model = TransformerAutoencoder::init(&schema, 4, &cfg).unwrap();
        let x = Matrix::from_rows(&[
            vec![0.8, 1.0, 0.0, 0.0],
            vec![-0.3, 0.0, 1.0, 0.0],
            vec![1.4, 0.0, 0.0, 1.0],
        ]);
        let rows: Vec<usize> = (0..3).collect();
        let (_, grad) = model.loss_and_grad(&x, &rows);
        let base = model.params().to_vec();
        let eps = 1e-5;
        let mut worst = 0.0f64;
        for i in 0..base.len() {
            let mut plus = base.clone();
            plus[i] += eps;
            model.set_params(&plus);
            let (lp, _) = model.loss_and_grad(&x, &rows);
            let mut minus = base.clone();
            minus[i] -= eps;
            model.set_params(&minus);
            let (lm, _) = model.loss_and_grad(&x, &rows);
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = (grad[i].abs() + numeric.abs()).max(1e-8);
            worst = worst.max((grad[i] - numeric).abs() / denom);
        }
        model.set_params(&base);
        assert!(worst <= 1e-3, "worst relative gradient error {worst}");
    }
}
