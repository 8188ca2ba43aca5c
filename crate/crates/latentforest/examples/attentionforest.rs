//! Tree diffusion in the latent space of a transformer autoencoder. The
//! codec tokenizes each feature, runs multi-head self-attention, and
//! decodes with per-feature heads (softmax over each category vocabulary).
//!
//! cargo run --example attentionforest

use latentforest::data::{load_csv_str, SchemaConfig};
use latentforest::pipeline::{run_attentionforest, Method, RunConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> latentforest::Result<()> {
    // mixed numeric + categorical table, written as CSV to exercise the
    // same ingestion path real data takes
    let mut csv = String::from("pressure,temp,mode,label\n");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for i in 0..360 {
        let minority = i % 9 == 0;
        let p: f64 = rng.random_range(-1.0..1.0) + if minority { 2.0 } else { 0.0 };
        let t: f64 = rng.random_range(-1.0..1.0) - if minority { 1.5 } else { 0.0 };
        let mode = if minority && rng.random_range(0..10) < 7 {
            "turbo"
        } else {
            ["idle", "cruise"][rng.random_range(0..2usize)]
        };
        csv.push_str(&format!("{p:.4},{t:.4},{mode},{}\n", u8::from(minority)));
    }
    let schema = SchemaConfig {
        target: "label".to_string(),
        categorical: vec!["mode".to_string()],
        ..SchemaConfig::default()
    };
    let (data, _) = load_csv_str(&csv, &schema)?;
    println!(
        "dataset: {} rows, encoded width {}, one-hot spans: {}",
        data.n_rows(),
        data.width(),
        data.encoding_map.len()
    );

    let mut cfg = RunConfig::new(Method::AttentionForest);
    cfg.seed = 2;
    cfg.ratio = 150;
    cfg.attn.epochs = 300;
    cfg.flow.n_t = 25;
    cfg.flow.duplicate_k = 25;
    cfg.flow.gbt.n_estimators = 20;

    let result = run_attentionforest(&data, &cfg)?;
    let codec = result.models.attention.as_ref().unwrap();
    println!(
        "transformer codec: {} tokens, d_model {}, latent {}",
        codec.token_count(),
        codec.config.d_model,
        codec.latent_dim
    );
    println!("synthetic rows ({}):", result.synthetic.rows());
    println!("{}", data.rows_to_csv(&result.synthetic, result.minority_label)?
        .lines()
        .take(4)
        .collect::<Vec<_>>()
        .join("\n"));
    let m = &result.metrics;
    println!(
        "recall(rf) {:.3} | recall(gbt) {:.3} | wd {:.4} | nndr {:.4}",
        m.random_forest.recall,
        m.gbt.recall,
        m.wd.unwrap(),
        m.nndr_mean.unwrap()
    );
    Ok(())
}
