//! Confusion matrices, objective functions, the paired difference test and
//! competition ranking of models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of a poor/non-poor classification against the truth. Poor is the
/// positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, tn: u64, fp: u64, fn_: u64) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn true_poor(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn predicted_poor(&self) -> u64 {
        self.tp + self.fp
    }
}

pub fn confusion(truth: &[bool], pred: &[bool]) -> Result<ConfusionMatrix> {
    if truth.len() != pred.len() {
        return Err(Error::Alignment {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (t, p) {
            (true, true) => cm.tp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fp += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

fn pct(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// `100·(a·TP + b·TN)/N`.
pub fn weighted_preference(cm: &ConfusionMatrix, a: f64, b: f64) -> Option<f64> {
    let n = cm.total();
    (n > 0).then(|| 100.0 * (a * cm.tp as f64 + b * cm.tn as f64) / n as f64)
}

/// Paired t statistic on `d_i = truth_i − pred_i`, from counts alone:
/// `d` is +1 on false negatives, −1 on false positives and 0 elsewhere.
///
/// Zero spread gives `0` for a zero mean and `±∞` otherwise; `None` below two rows.
pub fn paired_ttest_counts(cm: &ConfusionMatrix) -> Option<f64> {
    let n = cm.total() as f64;
    if n < 2.0 {
        return None;
    }
    let mean = (cm.fn_ as f64 - cm.fp as f64) / n;
    let ss = (cm.fn_ + cm.fp) as f64 - n * mean * mean;
    let var = (ss / (n - 1.0)).max(0.0);
    Some(t_from_moments(mean, var, n))
}

fn t_from_moments(mean: f64, var: f64, n: f64) -> f64 {
    if var == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            mean.signum() * f64::INFINITY
        }
    } else {
        mean / (var.sqrt() / n.sqrt())
    }
}

/// Paired t statistic on per-row differences of two binary vectors.
pub fn paired_ttest(truth: &[bool], pred: &[bool]) -> Result<f64> {
    if truth.len() != pred.len() {
        return Err(Error::Alignment {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let n = truth.len();
    if n < 2 {
        return Err(Error::Size { n, min: 2 });
    }
    let d: Vec<f64> = truth
        .iter()
        .zip(pred)
        .map(|(&t, &p)| t as u8 as f64 - p as u8 as f64)
        .collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(t_from_moments(mean, var, n as f64))
}

/// Every objective of the comparison table. Rates are percentages; `None`
/// marks a metric whose denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub confusion: ConfusionMatrix,
    pub observations: u64,
    pub true_rate: Option<f64>,
    pub pred_poverty: Option<f64>,
    /// True minus predicted rate.
    pub diff: Option<f64>,
    pub t_stat: Option<f64>,
    pub pref_tp: Option<f64>,
    pub pref_tn: Option<f64>,
    pub leakage: Option<f64>,
    pub undercoverage: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Weights (a on TP, b on TN) of the two preference scores.
pub const PREF_TRUE_POS: (f64, f64) = (1.25, 0.75);
pub const PREF_TRUE_NEG: (f64, f64) = (0.75, 1.25);

pub fn metrics(cm: &ConfusionMatrix) -> ObjectiveReport {
    let n = cm.total();
    let true_rate = pct(cm.true_poor(), n);
    let pred_poverty = pct(cm.predicted_poor(), n);
    ObjectiveReport {
        confusion: *cm,
        observations: n,
        true_rate,
        pred_poverty,
        diff: true_rate.zip(pred_poverty).map(|(t, p)| t - p),
        t_stat: paired_ttest_counts(cm),
        pref_tp: weighted_preference(cm, PREF_TRUE_POS.0, PREF_TRUE_POS.1),
        pref_tn: weighted_preference(cm, PREF_TRUE_NEG.0, PREF_TRUE_NEG.1),
        leakage: pct(cm.fp, cm.fp + cm.tn),
        undercoverage: pct(cm.fn_, cm.fn_ + cm.tp),
        sensitivity: pct(cm.tp, cm.fn_ + cm.tp),
        specificity: pct(cm.tn, cm.tn + cm.fp),
        precision: pct(cm.tp, cm.tp + cm.fp),
        accuracy: pct(cm.tp + cm.tn, n),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

/// Rows of the comparison table, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Observations,
    TruePovRate,
    PredPoverty,
    DiffAbs,
    TStat,
    PrefTruePos,
    PrefTrueNeg,
    TruePos,
    TrueNeg,
    FalsePos,
    FalseNeg,
    Leakage,
    Undercoverage,
    Sensitivity,
    Specificity,
    Precision,
    Accuracy,
}

impl Objective {
    pub const ALL: [Objective; 17] = [
        Objective::Observations,
        Objective::TruePovRate,
        Objective::PredPoverty,
        Objective::DiffAbs,
        Objective::TStat,
        Objective::PrefTruePos,
        Objective::PrefTrueNeg,
        Objective::TruePos,
        Objective::TrueNeg,
        Objective::FalsePos,
        Objective::FalseNeg,
        Objective::Leakage,
        Objective::Undercoverage,
        Objective::Sensitivity,
        Objective::Specificity,
        Objective::Precision,
        Objective::Accuracy,
    ];

    /// Row label as printed in comparison tables.
    pub fn label(self) -> &'static str {
        match self {
            Objective::Observations => "Observations",
            Objective::TruePovRate => "TruePovRate",
            Objective::PredPoverty => "PredPoverty",
            Objective::DiffAbs => "Diff.(absmin)",
            Objective::TStat => "Diff.(tstat)",
            Objective::PrefTruePos => "PrefTruePos(max)",
            Objective::PrefTrueNeg => "PrefTrueNeg(max)",
            Objective::TruePos => "TruePos(max)",
            Objective::TrueNeg => "TrueNeg(max)",
            Objective::FalsePos => "FalsePos(min)",
            Objective::FalseNeg => "FalseNeg(min)",
            Objective::Leakage => "Leakage(min)",
            Objective::Undercoverage => "Undercoverage(min)",
            Objective::Sensitivity => "Sensitivity(max)",
            Objective::Specificity => "Specificity(max)",
            Objective::Precision => "Precision(max)",
            Objective::Accuracy => "Accuracy(max)",
        }
    }

    /// `None` for descriptive rows that are not ranked.
    pub fn direction(self) -> Option<Direction> {
        use Objective::*;
        match self {
            Observations | TruePovRate | PredPoverty | TStat => None,
            DiffAbs | FalsePos | FalseNeg | Leakage | Undercoverage => Some(Direction::Min),
            _ => Some(Direction::Max),
        }
    }

    pub fn value(self, r: &ObjectiveReport) -> Option<f64> {
        use Objective::*;
        let cm = &r.confusion;
        match self {
            Observations => Some(r.observations as f64),
            TruePovRate => r.true_rate,
            PredPoverty => r.pred_poverty,
            DiffAbs => r.diff.map(f64::abs),
            TStat => r.t_stat,
            PrefTruePos => r.pref_tp,
            PrefTrueNeg => r.pref_tn,
            TruePos => Some(cm.tp as f64),
            TrueNeg => Some(cm.tn as f64),
            FalsePos => Some(cm.fp as f64),
            FalseNeg => Some(cm.fn_ as f64),
            Leakage => r.leakage,
            Undercoverage => r.undercoverage,
            Sensitivity => r.sensitivity,
            Specificity => r.specificity,
            Precision => r.precision,
            Accuracy => r.accuracy,
        }
    }

    /// Whether the row holds a count rather than a percentage.
    pub fn is_count(self) -> bool {
        use Objective::*;
        matches!(self, Observations | TruePos | TrueNeg | FalsePos | FalseNeg)
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase();
        Objective::ALL
            .into_iter()
            .find(|o| {
                let label = o.label().to_ascii_lowercase();
                label == key || label.split('(').next() == Some(key.as_str())
            })
            .ok_or_else(|| Error::Config(format!("unknown objective `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rank {
    pub rank: usize,
    /// The score was undefined; the model is placed after every defined one.
    pub undefined: bool,
}

/// Competition ranking ("1224"): ties share the best rank and the next rank
/// skips. Undefined or NaN scores share the rank after all defined ones.
pub fn rank_models(scores: &[Option<f64>], direction: Direction) -> Vec<Rank> {
    let defined: Vec<f64> = scores.iter().flatten().copied().filter(|v| !v.is_nan()).collect();
    scores
        .iter()
        .map(|s| match s {
            Some(v) if !v.is_nan() => {
                let better = defined
                    .iter()
                    .filter(|o| match direction {
                        Direction::Max => *o > v,
                        Direction::Min => *o < v,
                    })
                    .count();
                Rank {
                    rank: better + 1,
                    undefined: false,
                }
            }
            _ => Rank {
                rank: defined.len() + 1,
                undefined: true,
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_example() {
        let cm = confusion(&[true, true, false, false], &[true, false, false, true]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
    }

    #[test]
    fn undefined_denominators_are_marked() {
        let r = metrics(&ConfusionMatrix::new(0, 5, 0, 0));
        assert_eq!(r.sensitivity, None);
        assert_eq!(r.precision, None);
        assert_eq!(r.specificity, Some(100.0));
        assert_eq!(r.accuracy, Some(100.0));
    }

    #[test]
    fn ttest_from_vectors_agrees_with_counts() {
        let truth = [true, true, false, true, false, false, true];
        let pred = [true, false, false, false, true, false, true];
        let cm = confusion(&truth, &pred).unwrap();
        let a = paired_ttest(&truth, &pred).unwrap();
        let b = paired_ttest_counts(&cm).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn ttest_degenerate_spread() {
        assert_eq!(paired_ttest(&[true, false], &[true, false]).unwrap(), 0.0);
        assert_eq!(paired_ttest(&[true, true], &[false, false]).unwrap(), f64::INFINITY);
        assert_eq!(paired_ttest(&[false, false], &[true, true]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn competition_ranking_with_ties_and_gaps() {
        let r = rank_models(&[Some(3.0), Some(5.0), Some(3.0), None, Some(1.0)], Direction::Max);
        let ranks: Vec<usize> = r.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![2, 1, 2, 5, 4]);
        assert!(r[3].undefined);
    }

    #[test]
    fn objectives_parse_by_short_or_full_label() {
        assert_eq!("accuracy".parse::<Objective>().unwrap(), Objective::Accuracy);
        assert_eq!("Leakage(min)".parse::<Objective>().unwrap(), Objective::Leakage);
        assert!("nonsense".parse::<Objective>().is_err());
    }
}
