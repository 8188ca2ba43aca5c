//! CSV ingestion: schema config, one-hot encoding, missing-row drops,
//! standardization and the stratified split.
//!
//! cargo run --example csv_schema

use latentforest::data::{
    load_csv_str, minority_label, standardize, stratified_split, SchemaConfig,
};

const CSV: &str = "\
age,bmi,smoker,outcome
63,27.1,yes,1
42,31.4,no,0
37,,no,0
55,24.9,yes,0
61,29.3,no,1
44,26.0,no,0
52,30.8,yes,0
49,22.7,no,0
58,28.2,yes,1
40,25.5,no,0
47,27.7,no,0
66,23.9,yes,1
";

fn main() -> latentforest::Result<()> {
    let schema = SchemaConfig::from_toml_str(
        "target = \"outcome\"\ncategorical = [\"smoker\"]\n",
    )?;
    let (data, summary) = load_csv_str(CSV, &schema)?;
    println!(
        "loaded {} rows ({} dropped), encoded width {}",
        data.n_rows(),
        summary.dropped_rows,
        data.width()
    );
    for span in &data.encoding_map {
        println!(
            "one-hot span for {:?}: columns {}..{}",
            span.column,
            span.start,
            span.start + span.len
        );
    }

    let (std_data, scaler) = standardize(&data)?;
    println!(
        "standardized; column 0 mean {:.2e}, constant flags {:?}",
        std_data.x.column(0).iter().sum::<f64>() / std_data.n_rows() as f64,
        (0..data.width()).filter(|&j| scaler.is_constant(j)).count()
    );

    let minority = minority_label(&data.y)?;
    let (train, test) = stratified_split(&data, 0.7, 9)?;
    println!(
        "minority label {minority}; split {} train / {} test, train counts {:?}, test counts {:?}",
        train.n_rows(),
        test.n_rows(),
        train.class_counts(),
        test.class_counts()
    );
    Ok(())
}
