use povbench::evaluation::{
    confusion, metrics, paired_ttest, paired_ttest_counts, rank_models, weighted_preference, ConfusionMatrix,
    Direction, Objective, PREF_TRUE_NEG, PREF_TRUE_POS,
};
use povbench::Error;
use proptest::prelude::*;

#[test]
fn confusion_counts_each_cell() {
    let truth = [true, true, false, false, true];
    let pred = [true, false, true, false, true];
    assert_eq!(confusion(&truth, &pred).unwrap(), ConfusionMatrix::new(2, 1, 1, 1));
    assert!(matches!(confusion(&truth, &pred[..3]), Err(Error::Alignment { .. })));
}

#[test]
fn zero_denominators_are_undefined() {
    let r = metrics(&ConfusionMatrix::new(0, 10, 0, 0));
    assert_eq!(r.sensitivity, None);
    assert_eq!(r.precision, None);
    assert_eq!(r.specificity, Some(100.0));
    assert_eq!(r.accuracy, Some(100.0));
    assert_eq!(metrics(&ConfusionMatrix::default()).accuracy, None);
}

#[test]
fn diff_is_true_minus_predicted() {
    let r = metrics(&ConfusionMatrix::new(10, 70, 5, 15));
    assert_eq!(r.true_rate, Some(25.0));
    assert_eq!(r.pred_poverty, Some(15.0));
    assert_eq!(r.diff, Some(10.0));
}

#[test]
fn preference_constants() {
    let cm = ConfusionMatrix::new(2212, 2700, 831, 1319);
    let r = metrics(&cm);
    assert_eq!(r.pref_tp, weighted_preference(&cm, PREF_TRUE_POS.0, PREF_TRUE_POS.1));
    assert_eq!(r.pref_tn, weighted_preference(&cm, PREF_TRUE_NEG.0, PREF_TRUE_NEG.1));
}

#[test]
fn t_from_counts_matches_t_from_vectors() {
    let cm = ConfusionMatrix::new(30, 50, 7, 13);
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (t, p, k) in [
        (true, true, 30),
        (false, false, 50),
        (false, true, 7),
        (true, false, 13),
    ] {
        truth.extend(std::iter::repeat_n(t, k));
        pred.extend(std::iter::repeat_n(p, k));
    }
    let a = paired_ttest_counts(&cm).unwrap();
    let b = paired_ttest(&truth, &pred).unwrap();
    assert!((a - b).abs() < 1e-12);
}

#[test]
fn zero_variance_differences() {
    assert_eq!(paired_ttest_counts(&ConfusionMatrix::new(5, 5, 0, 0)), Some(0.0));
    assert_eq!(
        paired_ttest_counts(&ConfusionMatrix::new(0, 0, 0, 4)),
        Some(f64::INFINITY)
    );
    assert_eq!(paired_ttest_counts(&ConfusionMatrix::new(1, 0, 0, 0)), None);
}

#[test]
fn competition_ranking_with_undefined_last() {
    let r = rank_models(&[Some(3.0), Some(1.0), None, Some(3.0)], Direction::Max);
    let ranks: Vec<usize> = r.iter().map(|x| x.rank).collect();
    assert_eq!(ranks, vec![1, 3, 4, 1]);
    assert!(r[2].undefined);
    let r = rank_models(&[Some(3.0), Some(1.0)], Direction::Min);
    assert_eq!((r[0].rank, r[1].rank), (2, 1));
}

#[test]
fn diff_ranks_by_absolute_value() {
    let reports = [
        metrics(&ConfusionMatrix::new(40, 40, 10, 10)),
        metrics(&ConfusionMatrix::new(40, 40, 2, 18)),
    ];
    let scores: Vec<Option<f64>> = reports.iter().map(|r| Objective::DiffAbs.value(r)).collect();
    let ranks = rank_models(&scores, Objective::DiffAbs.direction().unwrap());
    assert_eq!((ranks[0].rank, ranks[1].rank), (1, 2));
}

#[test]
fn objectives_parse_from_labels() {
    for o in Objective::ALL {
        assert_eq!(o.label().parse::<Objective>().unwrap(), o);
    }
    assert_eq!("accuracy".parse::<Objective>().unwrap(), Objective::Accuracy);
}

proptest! {
    #[test]
    fn rates_are_consistent(tp in 0u64..500, tn in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
        prop_assume!(tp + tn + fp + fn_ > 0);
        let r = metrics(&ConfusionMatrix::new(tp, tn, fp, fn_));
        if let (Some(s), Some(u)) = (r.sensitivity, r.undercoverage) {
            prop_assert!((s + u - 100.0).abs() < 1e-9);
        }
        if let (Some(s), Some(l)) = (r.specificity, r.leakage) {
            prop_assert!((s + l - 100.0).abs() < 1e-9);
        }
        let acc = r.accuracy.unwrap();
        prop_assert!((0.0..=100.0).contains(&acc));
        // equal weights reduce both preference scores to accuracy
        prop_assert!((weighted_preference(&r.confusion, 1.0, 1.0).unwrap() - acc).abs() < 1e-9);
    }
}
