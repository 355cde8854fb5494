//! Fit on observed rows, predict the rest, classify, score.
//!
//! Continuous models predict log income and flag a row poor when the
//! prediction is at or below `ln z`. Categorical models predict the
//! probability of being poor and flag a row poor when it exceeds the cutpoint.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{label_poor, poverty_line, quantile_line, Covariate, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{confusion, metrics, ConfusionMatrix, ObjectiveReport};
use crate::missingness::{split, MissingnessMask};
use crate::models::{fit, predict, Design, FitDiagnostics, FittedModel, ModelCode, ModelSpec, Target};
use crate::rng;

/// Slack on the log-space comparison, far below any currency resolution, so
/// a prediction that reproduces an income on the line exactly up to rounding
/// still counts as at the line.
pub const LOG_LINE_SLACK: f64 = 1e-9;

/// The conventional probability cutpoint.
pub const DEFAULT_CUTPOINT: f64 = 0.5;

/// Flags rows whose predicted log income is at or below `log_line`.
pub fn classify_continuous(log_preds: &[f64], log_line: f64) -> Result<Vec<bool>> {
    if !log_line.is_finite() {
        return Err(Error::Domain {
            name: "log poverty line",
            value: log_line,
            domain: "finite",
        });
    }
    Ok(log_preds.iter().map(|&p| p <= log_line + LOG_LINE_SLACK).collect())
}

fn check_cutpoint(cutpoint: f64) -> Result<()> {
    if cutpoint > 0.0 && cutpoint < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "cutpoint",
            value: cutpoint,
            domain: "(0, 1)",
        })
    }
}

/// Flags rows whose probability of being poor strictly exceeds `cutpoint`.
pub fn classify_categorical(probs: &[f64], cutpoint: f64) -> Result<Vec<bool>> {
    check_cutpoint(cutpoint)?;
    Ok(probs.iter().map(|&p| p > cutpoint).collect())
}

fn rate(flags: &[bool]) -> f64 {
    100.0 * flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// Poverty rate after adding resampled training residuals back to the point
/// predictions: each row's poverty probability is the share of `draws`
/// residual draws that put it at or below the line.
pub fn error_adjusted_rate_from(
    log_preds: &[f64],
    residuals: &[f64],
    log_line: f64,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    if residuals.is_empty() {
        return Err(Error::State("no training residuals to resample".into()));
    }
    if draws == 0 {
        return Err(Error::Spec("error adjustment needs at least one draw".into()));
    }
    if log_preds.is_empty() {
        return Err(Error::Size { n: 0, min: 1 });
    }
    let mut rng = rng::stream(seed);
    let mut poor = 0u64;
    for &p in log_preds {
        for _ in 0..draws {
            let r = residuals[rng.random_range(0..residuals.len())];
            if p + r <= log_line + LOG_LINE_SLACK {
                poor += 1;
            }
        }
    }
    Ok(100.0 * poor as f64 / (draws * log_preds.len()) as f64)
}

/// [`error_adjusted_rate_from`] for a fitted continuous model on `x`.
pub fn error_adjusted_rate(m: &FittedModel, x: &Design, log_line: f64, draws: usize, seed: u64) -> Result<f64> {
    if m.spec.target != Target::Continuous {
        return Err(Error::State(
            "error adjustment by residuals needs a continuous model".into(),
        ));
    }
    let residuals = m
        .train_residuals
        .as_deref()
        .ok_or_else(|| Error::State("model has no stored training residuals".into()))?;
    let preds = predict(m, x)?;
    error_adjusted_rate_from(&preds, residuals, log_line, draws, seed)
}

/// Categorical analogue: each row is drawn poor with its predicted
/// probability, `draws` times, and the rate averages all draws.
pub fn bernoulli_adjusted_rate(probs: &[f64], draws: usize, seed: u64) -> Result<f64> {
    if draws == 0 {
        return Err(Error::Spec("error adjustment needs at least one draw".into()));
    }
    if probs.is_empty() {
        return Err(Error::Size { n: 0, min: 1 });
    }
    let mut rng = rng::stream(seed);
    let mut poor = 0u64;
    for &p in probs {
        for _ in 0..draws {
            if rng.random::<f64>() < p {
                poor += 1;
            }
        }
    }
    Ok(100.0 * poor as f64 / (draws * probs.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub cutpoint: f64,
    /// Fractions, not percentages.
    pub sensitivity: f64,
    pub specificity: f64,
}

/// One point at 0, at every distinct probability and at 1, in increasing
/// cutpoint order, under the rule "poor iff probability > cutpoint".
pub fn roc_curve(probs: &[f64], truth: &[bool]) -> Result<Vec<RocPoint>> {
    if probs.len() != truth.len() {
        return Err(Error::Alignment {
            expected: truth.len(),
            found: probs.len(),
        });
    }
    let pos = truth.iter().filter(|&&t| t).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateTarget(format!(
            "ROC needs both classes; got {pos} poor and {neg} non-poor"
        )));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));

    let mut cuts: Vec<f64> = vec![0.0];
    for &i in &order {
        let p = probs[i];
        if p > 0.0 && p < 1.0 && cuts.last() != Some(&p) {
            cuts.push(p);
        }
    }
    cuts.push(1.0);

    // Sweep: rows at or below the cutpoint are classified non-poor.
    let mut points = Vec::with_capacity(cuts.len());
    let (mut k, mut fn_, mut tn) = (0usize, 0usize, 0usize);
    for &c in &cuts {
        while k < order.len() && probs[order[k]] <= c {
            if truth[order[k]] {
                fn_ += 1;
            } else {
                tn += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            cutpoint: c,
            sensitivity: (pos - fn_) as f64 / pos as f64,
            specificity: tn as f64 / neg as f64,
        });
    }
    Ok(points)
}

/// Area under the curve by the trapezoid rule over (1 − specificity, sensitivity).
pub fn roc_auc(roc: &[RocPoint]) -> f64 {
    let mut pts: Vec<(f64, f64)> = roc.iter().map(|p| (1.0 - p.specificity, p.sensitivity)).collect();
    pts.push((0.0, 0.0));
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YoudenChoice {
    pub cutpoint: f64,
    /// sensitivity + specificity − 1 at the chosen cutpoint.
    pub j: f64,
}

/// Cutpoint maximising Youden's J.
///
/// Each ROC point stands for the half-open interval of cutpoints up to the
/// next point, which all classify identically. Among optimal intervals the
/// one nearest 0.5 wins; the cutpoint returned is 0.5 itself when it lies
/// inside, otherwise the interval's lower end (or its midpoint when that end
/// is 0, so the result is always a valid cutpoint).
pub fn youden_cutpoint(roc: &[RocPoint]) -> Result<YoudenChoice> {
    if roc.is_empty() {
        return Err(Error::Spec("empty ROC curve".into()));
    }
    let j_max = roc
        .iter()
        .map(|p| p.sensitivity + p.specificity - 1.0)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(f64, f64)> = None; // (distance to 0.5, cutpoint)
    for (k, p) in roc.iter().enumerate() {
        if p.sensitivity + p.specificity - 1.0 < j_max {
            continue;
        }
        let lo = p.cutpoint;
        let hi = roc.get(k + 1).map_or(1.0, |n| n.cutpoint);
        let (dist, cut) = if lo <= DEFAULT_CUTPOINT && DEFAULT_CUTPOINT < hi {
            (0.0, DEFAULT_CUTPOINT)
        } else if DEFAULT_CUTPOINT < lo {
            (lo - DEFAULT_CUTPOINT, lo)
        } else {
            let cut = if lo > 0.0 { lo } else { hi / 2.0 };
            (DEFAULT_CUTPOINT - hi, cut)
        };
        if best.is_none_or(|(d, _)| dist < d) {
            best = Some((dist, cut));
        }
    }
    let (_, cutpoint) = best.expect("at least one point attains the maximum");
    Ok(YoudenChoice { cutpoint, j: j_max })
}

/// Probability cutpoint of a categorical scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cutpoint {
    Fixed(f64),
    /// Youden-optimal cutpoint from the training rows' fitted probabilities.
    AutoYouden,
}

impl Default for Cutpoint {
    fn default() -> Self {
        Cutpoint::Fixed(DEFAULT_CUTPOINT)
    }
}

impl std::fmt::Display for Cutpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cutpoint::Fixed(c) => write!(f, "{c}"),
            Cutpoint::AutoYouden => f.write_str("AUTO_YOUDEN"),
        }
    }
}

impl std::str::FromStr for Cutpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("AUTO_YOUDEN") {
            return Ok(Cutpoint::AutoYouden);
        }
        let c: f64 = s
            .parse()
            .map_err(|_| Error::Config(format!("cutpoint `{s}` is neither a number nor AUTO_YOUDEN")))?;
        check_cutpoint(c)?;
        Ok(Cutpoint::Fixed(c))
    }
}

impl Serialize for Cutpoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cutpoint::Fixed(c) => s.serialize_f64(*c),
            Cutpoint::AutoYouden => s.serialize_str("AUTO_YOUDEN"),
        }
    }
}

impl<'de> Deserialize<'de> for Cutpoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) => {
                check_cutpoint(c).map_err(serde::de::Error::custom)?;
                Ok(Cutpoint::Fixed(c))
            }
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which rows are predicted and scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictOn {
    #[default]
    MissingRows,
    /// Every row; with an empty mask this is the full-sample comparison.
    AllRows,
}

/// Income distribution the poverty line is read from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSource {
    #[default]
    Full,
    /// Observed rows only.
    Train,
}

/// Poverty line at quantile `q`, as `(z, ln z)`.
pub fn line_for(ds: &Dataset, train: &[usize], q: f64, source: LineSource) -> Result<(f64, f64)> {
    let z = match source {
        LineSource::Full => poverty_line(ds, q)?,
        LineSource::Train => {
            let incomes: Vec<f64> = train.iter().map(|&i| ds.rows()[i].income_pc).collect();
            if incomes.is_empty() {
                return Err(Error::Size { n: 0, min: 1 });
            }
            quantile_line(&incomes, q)?
        }
    };
    Ok((z, z.ln()))
}

/// A model fitted on the observed rows.
#[derive(Debug, Clone)]
pub struct ObservedFit {
    pub model: FittedModel,
    /// Regressors actually used.
    pub covariates: Vec<Covariate>,
    /// Regressors dropped because they are constant on the observed rows.
    pub dropped: Vec<Covariate>,
    pub train: Vec<usize>,
}

/// Fits `spec` on rows `train`. The target is log income for a continuous
/// spec and the poor flag at `log_line` for a categorical one.
///
/// Regressors constant on `train` carry no information and would make the
/// design singular, so they are dropped for every family.
pub fn fit_observed(ds: &Dataset, train: &[usize], spec: &ModelSpec, log_line: Option<f64>) -> Result<ObservedFit> {
    let requested: Vec<Covariate> = spec.regressors.iter().map(|n| n.parse()).collect::<Result<_>>()?;
    let rows = ds.rows();
    let (covariates, dropped): (Vec<Covariate>, Vec<Covariate>) = requested.iter().partition(|c| {
        let mut it = train.iter().map(|&i| c.value(&rows[i]));
        let first = it.next();
        it.any(|v| Some(v) != first)
    });
    if !dropped.is_empty() {
        log::info!(
            "{}: dropping regressors constant on observed rows: {}",
            spec.code()?,
            dropped.iter().map(|c| c.name()).collect::<Vec<_>>().join(", ")
        );
    }
    let y: Vec<f64> = match spec.target {
        Target::Continuous => train.iter().map(|&i| rows[i].log_income).collect(),
        Target::Categorical => {
            let line = log_line.ok_or_else(|| Error::Spec("a categorical fit needs a poverty line".into()))?;
            train
                .iter()
                .map(|&i| (rows[i].log_income <= line) as u8 as f64)
                .collect()
        }
    };
    let mut fitted_spec = spec.clone();
    fitted_spec.regressors = covariates.iter().map(|c| c.name().to_string()).collect();
    let x = Design::from_dataset(ds, &covariates, train);
    let model = fit(&fitted_spec, &x, &y)?;
    Ok(ObservedFit {
        model,
        covariates,
        dropped,
        train: train.to_vec(),
    })
}

/// Everything measured for one (pattern, model, line, cutpoint).
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioResult {
    pub model: ModelCode,
    pub q: f64,
    pub line: f64,
    /// Cutpoint applied (categorical models only).
    pub cutpoint: Option<f64>,
    pub train_rows: usize,
    /// Rows predicted and scored.
    pub rows: Vec<usize>,
    /// Log income or probability of being poor, per scored row.
    pub predictions: Vec<f64>,
    pub poor_flags: Vec<bool>,
    pub truth: Vec<bool>,
    pub confusion: ConfusionMatrix,
    pub metrics: ObjectiveReport,
    /// Percentage of scored rows predicted poor.
    pub predicted_rate: f64,
    /// Percentage of scored rows truly poor.
    pub true_rate: f64,
    /// Whole-sample rate: observed rows at their true status, scored rows as predicted.
    pub population_rate: f64,
    /// Whole-sample true rate.
    pub population_true_rate: f64,
    /// Rate after re-adding model error, when requested.
    pub adjusted_rate: Option<f64>,
    pub dropped: Vec<String>,
    pub diagnostics: FitDiagnostics,
}

/// Scores an observed fit on `rows`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    ds: &Dataset,
    fitted: &ObservedFit,
    rows: &[usize],
    q: f64,
    z: f64,
    cutpoint: Cutpoint,
    adjust_draws: Option<usize>,
    seed: u64,
) -> Result<ScenarioResult> {
    if rows.is_empty() {
        return Err(Error::Size { n: 0, min: 1 });
    }
    let log_line = z.ln();
    let x = Design::from_dataset(ds, &fitted.covariates, rows);
    let predictions = predict(&fitted.model, &x)?;
    let target = fitted.model.spec.target;
    let (poor_flags, applied_cut) = match target {
        Target::Continuous => (classify_continuous(&predictions, log_line)?, None),
        Target::Categorical => {
            let c = match cutpoint {
                Cutpoint::Fixed(c) => c,
                Cutpoint::AutoYouden => {
                    let xt = Design::from_dataset(ds, &fitted.covariates, &fitted.train);
                    let probs = predict(&fitted.model, &xt)?;
                    let labels: Vec<bool> = fitted.train.iter().map(|&i| ds.rows()[i].income_pc <= z).collect();
                    youden_cutpoint(&roc_curve(&probs, &labels)?)?.cutpoint
                }
            };
            (classify_categorical(&predictions, c)?, Some(c))
        }
    };
    let all_truth = label_poor(ds, z);
    let truth: Vec<bool> = rows.iter().map(|&i| all_truth[i]).collect();
    let cm = confusion(&truth, &poor_flags)?;

    let mut scored = vec![false; ds.len()];
    for &i in rows {
        scored[i] = true;
    }
    let observed_poor = (0..ds.len()).filter(|&i| !scored[i] && all_truth[i]).count();
    let predicted_poor = poor_flags.iter().filter(|&&f| f).count();
    let population_rate = 100.0 * (observed_poor + predicted_poor) as f64 / ds.len() as f64;

    let adjusted_rate = match adjust_draws {
        None => None,
        Some(draws) => Some(match target {
            Target::Continuous => {
                let resid = fitted
                    .model
                    .train_residuals
                    .as_deref()
                    .ok_or_else(|| Error::State("model has no stored training residuals".into()))?;
                error_adjusted_rate_from(&predictions, resid, log_line, draws, seed)?
            }
            Target::Categorical => bernoulli_adjusted_rate(&predictions, draws, seed)?,
        }),
    };

    Ok(ScenarioResult {
        model: fitted.model.code(),
        q,
        line: z,
        cutpoint: applied_cut,
        train_rows: fitted.train.len(),
        rows: rows.to_vec(),
        predicted_rate: rate(&poor_flags),
        true_rate: rate(&truth),
        population_rate,
        population_true_rate: rate(&all_truth),
        metrics: metrics(&cm),
        confusion: cm,
        predictions,
        poor_flags,
        truth,
        adjusted_rate,
        dropped: fitted.dropped.iter().map(|c| c.name().to_string()).collect(),
        diagnostics: fitted.model.diagnostics.clone(),
    })
}

/// One end-to-end experiment cell.
#[derive(Debug, Clone)]
pub struct Scenario<'a> {
    pub dataset: &'a Dataset,
    pub mask: &'a MissingnessMask,
    /// The model seed lives in `spec.hyper.seed`.
    pub spec: ModelSpec,
    pub q: f64,
    pub cutpoint: Cutpoint,
    pub predict_on: PredictOn,
    pub line_source: LineSource,
    /// Draws for the error-adjusted rate; `None` skips it.
    pub adjust_draws: Option<usize>,
    /// Seed of the adjustment draws.
    pub seed: u64,
}

impl<'a> Scenario<'a> {
    pub fn new(dataset: &'a Dataset, mask: &'a MissingnessMask, spec: ModelSpec, q: f64) -> Self {
        Scenario {
            dataset,
            mask,
            spec,
            q,
            cutpoint: Cutpoint::default(),
            predict_on: PredictOn::default(),
            line_source: LineSource::default(),
            adjust_draws: None,
            seed: 0,
        }
    }
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    let context = || {
        format!(
            "{} at q={} ({} rows masked)",
            s.spec.code().map(|c| c.to_string()).unwrap_or_default(),
            s.q,
            s.mask.missing_count()
        )
    };
    let inner = || -> Result<ScenarioResult> {
        let parts = split(s.dataset, s.mask)?;
        let (z, log_line) = line_for(s.dataset, &parts.train, s.q, s.line_source)?;
        let fitted = fit_observed(s.dataset, &parts.train, &s.spec, Some(log_line))?;
        let rows: Vec<usize> = match s.predict_on {
            PredictOn::MissingRows => parts.test,
            PredictOn::AllRows => (0..s.dataset.len()).collect(),
        };
        evaluate(s.dataset, &fitted, &rows, s.q, z, s.cutpoint, s.adjust_draws, s.seed)
    };
    inner().map_err(|e| e.with_context(context()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_boundary_is_inclusive() {
        assert_eq!(
            classify_continuous(&[9.0, 10.0, 11.0], 10.0).unwrap(),
            vec![true, true, false]
        );
    }

    #[test]
    fn categorical_boundary_is_strict() {
        assert_eq!(
            classify_categorical(&[0.4, 0.5, 0.6], 0.5).unwrap(),
            vec![false, false, true]
        );
        assert!(classify_categorical(&[0.4], 1.0).is_err());
        assert!(classify_categorical(&[0.4], 0.0).is_err());
    }

    #[test]
    fn zero_residuals_collapse_to_point_rate() {
        let preds = [9.0, 9.5, 10.0, 10.5];
        let adjusted = error_adjusted_rate_from(&preds, &[0.0; 5], 10.0, 10, 1).unwrap();
        assert_eq!(adjusted, 75.0);
        assert!(error_adjusted_rate_from(&preds, &[], 10.0, 10, 1).is_err());
    }

    #[test]
    fn roc_endpoints_and_monotone_sensitivity() {
        let probs = [0.1, 0.4, 0.35, 0.8, 0.7, 0.2];
        let truth = [false, true, false, true, true, false];
        let roc = roc_curve(&probs, &truth).unwrap();
        assert_eq!(roc.first().unwrap().cutpoint, 0.0);
        assert_eq!(roc.last().unwrap().cutpoint, 1.0);
        assert_eq!(roc.len(), probs.len() + 2);
        assert!(roc.windows(2).all(|w| w[1].sensitivity <= w[0].sensitivity));
        assert!(roc_auc(&roc) > 0.5);
    }

    #[test]
    fn chance_line_picks_half() {
        let probs = [0.3; 6];
        let truth = [true, false, true, false, false, true];
        let y = youden_cutpoint(&roc_curve(&probs, &truth).unwrap()).unwrap();
        assert_eq!(y.j, 0.0);
        assert_eq!(y.cutpoint, 0.5);
    }

    #[test]
    fn perfect_classifier_has_unit_j() {
        let truth = [true, false, true, false];
        let probs: Vec<f64> = truth.iter().map(|&t| t as u8 as f64).collect();
        let roc = roc_curve(&probs, &truth).unwrap();
        assert!(roc.iter().any(|p| p.sensitivity == 1.0 && p.specificity == 1.0));
        let y = youden_cutpoint(&roc).unwrap();
        assert_eq!(y.j, 1.0);
        assert_eq!(classify_categorical(&probs, y.cutpoint).unwrap(), truth);
    }

    #[test]
    fn cutpoint_parses() {
        assert_eq!("AUTO_YOUDEN".parse::<Cutpoint>().unwrap(), Cutpoint::AutoYouden);
        assert_eq!("0.45".parse::<Cutpoint>().unwrap(), Cutpoint::Fixed(0.45));
        assert!("1.5".parse::<Cutpoint>().is_err());
    }
}
