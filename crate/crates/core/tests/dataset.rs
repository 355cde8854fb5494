use povbench::dataset::{
    format_sig, label_poor, load_csv, poverty_line, read_csv, synthesize, Covariate, GeneratorConfig, RegressorSet,
    TARGET_R2,
};
use povbench::models::{fit, Design, ModelCode, ModelSpec};
use povbench::Error;
use proptest::prelude::*;

fn small(seed: u64) -> povbench::dataset::Dataset {
    synthesize(&GeneratorConfig::baseline(800, seed)).unwrap()
}

#[test]
fn generator_is_deterministic_per_seed() {
    assert_eq!(small(4).rows(), small(4).rows());
    assert_ne!(small(4).rows(), small(5).rows());
}

#[test]
fn generated_rows_are_logically_consistent() {
    let ds = small(2);
    for h in ds.rows() {
        assert!((15.0..=98.0).contains(&h.age) && h.age.fract() == 0.0);
        assert!((1.0..=24.0).contains(&h.hhsize));
        assert_eq!(h.age2, h.age * h.age);
        let occupations = [h.work_salaried, h.work_selfemployed, h.work_unpaid, h.out_labor];
        assert!(occupations.iter().filter(|&&b| b).count() <= 1);
        if h.out_labor {
            assert!(!h.sect_sec && !h.sect_tert);
        }
        assert!(!(h.sect_sec && h.sect_tert));
        assert!((h.income_pc.ln() - h.log_income).abs() < 1e-12);
    }
}

#[test]
fn noise_is_calibrated_to_target_r2() {
    let ds = synthesize(&GeneratorConfig::baseline(20_000, 9)).unwrap();
    let idx: Vec<usize> = (0..ds.len()).collect();
    let spec = ModelSpec::new(ModelCode::Wcn, &Covariate::ALL);
    let m = fit(
        &spec,
        &Design::from_dataset(&ds, &Covariate::ALL, &idx),
        &ds.log_incomes(),
    )
    .unwrap();
    let r2 = m.diagnostics.r2.unwrap();
    assert!((r2 - TARGET_R2).abs() < 0.02, "R² {r2}");
}

#[test]
fn noiseless_generator_is_exactly_linear() {
    let mut cfg = GeneratorConfig::baseline(500, 1);
    cfg.noise_sd = 0.0;
    let ds = synthesize(&cfg).unwrap();
    for h in ds.rows() {
        assert!((cfg.coefficients.linear_predictor(h) - h.log_income).abs() < 1e-12);
    }
}

#[test]
fn csv_round_trip_keeps_twelve_digits() {
    let ds = small(3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    ds.save_csv(&path).unwrap();
    let back = load_csv(&path, &Covariate::ALL).unwrap();
    assert_eq!(back.len(), ds.len());
    for (a, b) in ds.rows().iter().zip(back.rows()) {
        assert_eq!(format_sig(a.income_pc, 12), format_sig(b.income_pc, 12));
        assert_eq!(
            (a.age, a.hhsize, a.urban, a.sect_tert),
            (b.age, b.hhsize, b.urban, b.sect_tert)
        );
    }
}

#[test]
fn columns_bind_by_name() {
    let text = "hhsize,income_pc,urban,age,male\n3,120.5,1,40,0\n6,80,0,33,1\n";
    let ds = read_csv(text.as_bytes(), &[Covariate::Urban, Covariate::Age, Covariate::Male]).unwrap();
    assert_eq!(
        ds.regressor_order(),
        &[Covariate::Urban, Covariate::Age, Covariate::Male]
    );
    let h = &ds.rows()[1];
    assert_eq!(
        (h.hhsize, h.income_pc, h.urban, h.age, h.male),
        (6.0, 80.0, false, 33.0, true)
    );
    assert_eq!(h.age2, 33.0 * 33.0);
}

#[test]
fn missing_column_is_a_schema_error() {
    let text = "income_pc,age,hhsize\n10,30,2\n";
    let err = read_csv(text.as_bytes(), &[Covariate::Urban]).unwrap_err();
    assert!(matches!(err, Error::Schema(ref m) if m.contains("urban")), "{err}");
}

#[test]
fn bad_cells_report_their_row() {
    let text = "income_pc,age,hhsize\n10,30,2\n12,thirty,2\n";
    match read_csv(text.as_bytes(), &[]).unwrap_err() {
        Error::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "age")),
        e => panic!("{e}"),
    }
    let text = "income_pc,age,hhsize\n10,30,2\n-1,30,2\n";
    assert!(matches!(
        read_csv(text.as_bytes(), &[]).unwrap_err(),
        Error::Validation { row: 2, .. }
    ));
}

#[test]
fn regressor_sets_nest() {
    assert_eq!(RegressorSet::Model1.covariates().len(), 12);
    let m2 = RegressorSet::Model2.covariates();
    assert_eq!(
        &m2[m2.len() - 3..],
        &[Covariate::Age, Covariate::Age2, Covariate::Hhsize]
    );
    assert!(RegressorSet::Model3.covariates().iter().all(|c| c.is_binary()));
    assert_eq!(RegressorSet::Model4.covariates().len(), 3);
}

#[test]
fn line_rejects_degenerate_quantiles() {
    let ds = small(1);
    assert!(matches!(poverty_line(&ds, 0.0), Err(Error::Domain { .. })));
    assert!(matches!(poverty_line(&ds, 1.0), Err(Error::Domain { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn headcount_at_line_is_ceil_qn(q in 0.01f64..0.99) {
        let ds = small(6);
        let z = poverty_line(&ds, q).unwrap();
        let poor = label_poor(&ds, z).iter().filter(|&&b| b).count();
        prop_assert_eq!(poor, (q * ds.len() as f64 - 1e-9).ceil() as usize);
    }

    #[test]
    fn format_sig_parses_back_within_precision(v in 1e-3f64..1e7) {
        let back: f64 = format_sig(v, 12).parse().unwrap();
        prop_assert!((back - v).abs() <= v * 1e-11);
    }
}
