//! Property tests for the algebraic invariants.

use proptest::prelude::*;

use latentforest::data::{
    augment, project_onehot_spans, standardize, stratified_split, Dataset, OneHotSpan,
};
use latentforest::flow::vp_invert;
use latentforest::matrix::Matrix;
use latentforest::metrics::wasserstein_distance;

fn matrix_strategy(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Matrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        proptest::collection::vec(
            proptest::collection::vec(-50.0..50.0f64, c..=c),
            r..=r,
        )
        .prop_map(|rows| Matrix::from_rows(&rows))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardize_then_inverse_is_identity(x in matrix_strategy(30, 6)) {
        let d = Dataset::from_matrix(x.clone(), vec![0; x.rows()], "f");
        let (z, scaler) = standardize(&d).unwrap();
        let back = scaler.inverse(&z.x);
        for i in 0..x.rows() {
            for j in 0..x.cols() {
                prop_assert!((back[(i, j)] - x[(i, j)]).abs() <= 1e-9
                    * x[(i, j)].abs().max(1.0));
            }
        }
        // non-constant columns end up with mean 0 and population std 1
        for j in 0..x.cols() {
            if !scaler.is_constant(j) {
                let col = z.x.column(j);
                let n = col.len() as f64;
                let mean = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
                prop_assert!(mean.abs() <= 1e-9);
                prop_assert!((var.sqrt() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn split_is_an_exhaustive_partition(
        n_major in 4..60usize,
        n_minor in 2..20usize,
        seed in 0..1000u64,
    ) {
        let n = n_major + n_minor;
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..n).map(|i| u8::from(i < n_minor)).collect();
        let d = Dataset::from_matrix(Matrix::from_rows(&rows), y, "f");
        let (train, test) = stratified_split(&d, 0.7, seed).unwrap();

        prop_assert_eq!(train.n_rows() + test.n_rows(), n);
        let mut seen: Vec<f64> = train.x.column(0);
        seen.extend(test.x.column(0));
        seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (i, v) in seen.iter().enumerate() {
            prop_assert_eq!(*v, i as f64); // disjoint and exhaustive
        }

        // per-class proportions preserved within one row
        let minority_frac = n_minor as f64 / n as f64;
        let train_frac = train.class_counts()[1] as f64 / train.n_rows() as f64;
        prop_assert!((train_frac - minority_frac).abs() <= 1.0 / n_minor as f64);
    }

    #[test]
    fn vp_inversion_is_exact(
        z0 in -100.0..100.0f64,
        eps in -5.0..5.0f64,
        alpha in 0.001..0.999f64,
    ) {
        let s = (1.0 - alpha * alpha).sqrt();
        let z_t = alpha * z0 + s * eps;
        let target = (z0 - z_t) / s;
        prop_assert!((vp_invert(z_t, target, alpha) - z0).abs() <= 1e-9 * z0.abs().max(1.0));
    }

    #[test]
    fn wasserstein_is_a_symmetric_premetric(
        a in proptest::collection::vec(-10.0..10.0f64, 1..20),
        b in proptest::collection::vec(-10.0..10.0f64, 1..20),
    ) {
        let col = |v: &[f64]| Matrix::from_rows(&v.iter().map(|&x| vec![x]).collect::<Vec<_>>());
        let ab = wasserstein_distance(&col(&a), &col(&b)).unwrap();
        let ba = wasserstein_distance(&col(&b), &col(&a)).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
        prop_assert!(ab >= 0.0);
        prop_assert!(wasserstein_distance(&col(&a), &col(&a)).unwrap() <= 1e-12);
    }

    #[test]
    fn projected_spans_are_exact_indicators(
        rows in proptest::collection::vec(
            proptest::collection::vec(0.0..1.0f64, 5..=5), 1..10),
    ) {
        let x = Matrix::from_rows(&rows);
        let spans = vec![
            OneHotSpan { column: "a".to_string(), start: 0, len: 2 },
            OneHotSpan { column: "b".to_string(), start: 2, len: 3 },
        ];
        let p = project_onehot_spans(&x, &spans);
        for i in 0..p.rows() {
            for span in &spans {
                let s = &p.row(i)[span.start..span.start + span.len];
                prop_assert_eq!(s.iter().sum::<f64>(), 1.0);
                prop_assert!(s.iter().all(|&v| v == 0.0 || v == 1.0));
            }
        }
    }

    #[test]
    fn augmented_flags_mark_exactly_the_appended_rows(
        n_real in 2..20usize,
        n_synth in 0..20usize,
    ) {
        let rows: Vec<Vec<f64>> = (0..n_real).map(|i| vec![i as f64]).collect();
        let y: Vec<u8> = (0..n_real).map(|i| u8::from(i % 2 == 0)).collect();
        let d = Dataset::from_matrix(Matrix::from_rows(&rows), y, "f");
        let synth_rows: Vec<Vec<f64>> = (0..n_synth).map(|i| vec![-(i as f64)]).collect();
        let synth = if n_synth == 0 {
            Matrix::empty(1)
        } else {
            Matrix::from_rows(&synth_rows)
        };
        let aug = augment(&d, &synth, 1).unwrap();
        prop_assert_eq!(aug.n_rows(), n_real + n_synth);
        prop_assert!(aug.synthetic[..n_real].iter().all(|f| !f));
        prop_assert!(aug.synthetic[n_real..].iter().all(|f| *f));
        prop_assert!(aug.y[n_real..].iter().all(|&l| l == 1));
    }
}
