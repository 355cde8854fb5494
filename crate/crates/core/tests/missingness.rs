use povbench::dataset::{synthesize, GeneratorConfig};
use povbench::missingness::{conditional_mask, mcar, split, Pattern};
use povbench::Error;
use proptest::prelude::*;

fn ds() -> povbench::dataset::Dataset {
    synthesize(&GeneratorConfig::baseline(1000, 17)).unwrap()
}

#[test]
fn labels_parse_back() {
    for p in Pattern::standard_sweep() {
        assert_eq!(p.label().parse::<Pattern>().unwrap(), p);
    }
    assert_eq!("mcar12.5".parse::<Pattern>().unwrap(), Pattern::Mcar(0.125));
    assert_eq!(Pattern::Mcar(0.5).label(), "MCAR50");
    assert!(matches!("MCAR150".parse::<Pattern>(), Err(Error::Domain { .. })));
    assert!(matches!("MNAR".parse::<Pattern>(), Err(Error::Pattern { .. })));
}

#[test]
fn masks_are_deterministic() {
    let d = ds();
    for p in Pattern::standard_sweep() {
        assert_eq!(p.apply(&d, 5).unwrap(), p.apply(&d, 5).unwrap());
    }
    assert_ne!(mcar(&d, 0.5, 1).unwrap().missing(), mcar(&d, 0.5, 2).unwrap().missing());
}

#[test]
fn conditional_patterns_respect_eligibility() {
    let d = ds();
    let mean = d.incomes().iter().sum::<f64>() / d.len() as f64;
    let check = |p: Pattern, ok: &dyn Fn(usize) -> bool| {
        let m = p.apply(&d, 3).unwrap();
        let eligible = (0..d.len()).filter(|&i| ok(i)).count();
        assert_eq!(m.missing_count(), eligible.min(500), "{p}");
        assert!(m.missing().iter().enumerate().all(|(i, &miss)| !miss || ok(i)), "{p}");
    };
    check(Pattern::MarPure, &|i| d.rows()[i].sect_sec);
    check(Pattern::MarMnar, &|i| d.rows()[i].hhsize < 5.0);
    check(Pattern::MnarPure, &|i| d.rows()[i].income_pc > mean);
}

#[test]
fn mcar_masks_independent_of_income() {
    // masked and observed means should agree within a few standard errors
    let d = synthesize(&GeneratorConfig::baseline(6000, 2)).unwrap();
    let m = mcar(&d, 0.5, 8).unwrap();
    let s = split(&d, &m).unwrap();
    let mean = |idx: &[usize]| idx.iter().map(|&i| d.rows()[i].log_income).sum::<f64>() / idx.len() as f64;
    let all = d.log_incomes();
    let mu = all.iter().sum::<f64>() / all.len() as f64;
    let sd = (all.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
    let se = sd * (2.0 / 3000.0f64).sqrt();
    assert!((mean(&s.train) - mean(&s.test)).abs() < 4.0 * se);
}

#[test]
fn bad_arguments_are_rejected() {
    let d = ds();
    assert!(matches!(mcar(&d, 1.5, 0), Err(Error::Domain { .. })));
    assert!(matches!(
        conditional_mask(&d, Pattern::MarPure, 0.0, 0),
        Err(Error::Domain { .. })
    ));
    assert!(matches!(
        conditional_mask(&d, Pattern::Mcar(0.5), 0.5, 0),
        Err(Error::Pattern { .. })
    ));
    let other = synthesize(&GeneratorConfig::baseline(150, 1)).unwrap();
    let m = mcar(&other, 0.5, 0).unwrap();
    assert!(matches!(split(&d, &m), Err(Error::Alignment { .. })));
}

#[test]
fn mask_csv_lists_every_row() {
    let d = ds();
    let m = Pattern::MarMnar.apply(&d, 4).unwrap();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let mut rdr = csv::Reader::from_reader(buf.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), d.len());
    let flagged = rows.iter().filter(|r| r.get(1) == Some("1")).count();
    assert_eq!(flagged, m.missing_count());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mcar_count_and_partition(share in 0.0f64..=1.0, seed in any::<u64>()) {
        let d = ds();
        let m = mcar(&d, share, seed).unwrap();
        prop_assert_eq!(m.missing_count(), (share * d.len() as f64).round() as usize);
        let s = split(&d, &m).unwrap();
        prop_assert_eq!(s.train.len() + s.test.len(), d.len());
        prop_assert!(s.test.iter().all(|&i| m.missing()[i]));
        prop_assert!(s.train.iter().all(|&i| !m.missing()[i]));
    }
}
