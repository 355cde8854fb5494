//! Estimator families fitted on a continuous target (log income) or a
//! categorical one (poor = 1).
//!
//! | family        | continuous | categorical |
//! |---------------|------------|-------------|
//! | OLS           | `wcn`      |             |
//! | logit         |            | `pct`       |
//! | random forest | `rcn`      | `rct`       |
//! | elastic net   | `ecn`      | `ect`       |
//! | two-layer MLP | `ncn`      | `nct`       |

pub mod elastic_net;
pub mod forest;
pub mod logit;
pub mod mlp;
pub mod ols;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{Covariate, Dataset};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

pub use elastic_net::ElasticNetModel;
pub use forest::Forest;
pub use mlp::Network;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Ols,
    Logit,
    RandomForest,
    ElasticNet,
    Mlp2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    Continuous,
    Categorical,
}

/// The eight model codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelCode {
    Wcn,
    Rcn,
    Ecn,
    Ncn,
    Pct,
    Rct,
    Ect,
    Nct,
}

impl ModelCode {
    /// Column order of the comparison tables.
    pub const ALL: [ModelCode; 8] = [
        ModelCode::Wcn,
        ModelCode::Rcn,
        ModelCode::Ecn,
        ModelCode::Ncn,
        ModelCode::Pct,
        ModelCode::Rct,
        ModelCode::Ect,
        ModelCode::Nct,
    ];

    pub fn family(self) -> Family {
        match self {
            ModelCode::Wcn => Family::Ols,
            ModelCode::Pct => Family::Logit,
            ModelCode::Rcn | ModelCode::Rct => Family::RandomForest,
            ModelCode::Ecn | ModelCode::Ect => Family::ElasticNet,
            ModelCode::Ncn | ModelCode::Nct => Family::Mlp2,
        }
    }

    pub fn target(self) -> Target {
        match self {
            ModelCode::Wcn | ModelCode::Rcn | ModelCode::Ecn | ModelCode::Ncn => Target::Continuous,
            _ => Target::Categorical,
        }
    }

    pub fn from_parts(family: Family, target: Target) -> Result<Self> {
        use {Family::*, Target::*};
        Ok(match (family, target) {
            (Ols, Continuous) => ModelCode::Wcn,
            (Logit, Categorical) => ModelCode::Pct,
            (RandomForest, Continuous) => ModelCode::Rcn,
            (RandomForest, Categorical) => ModelCode::Rct,
            (ElasticNet, Continuous) => ModelCode::Ecn,
            (ElasticNet, Categorical) => ModelCode::Ect,
            (Mlp2, Continuous) => ModelCode::Ncn,
            (Mlp2, Categorical) => ModelCode::Nct,
            (Ols, Categorical) => return Err(Error::Spec("OLS needs a continuous target".into())),
            (Logit, Continuous) => return Err(Error::Spec("logit needs a categorical target".into())),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelCode::Wcn => "wcn",
            ModelCode::Rcn => "rcn",
            ModelCode::Ecn => "ecn",
            ModelCode::Ncn => "ncn",
            ModelCode::Pct => "pct",
            ModelCode::Rct => "rct",
            ModelCode::Ect => "ect",
            ModelCode::Nct => "nct",
        }
    }
}

impl fmt::Display for ModelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelCode::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Spec(format!("unknown model code `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub trees: usize,
    /// Covariates sampled per split; `None` means `⌊√p⌋`.
    pub mtry: Option<usize>,
    /// 0 grows until leaves are pure or hit `min_leaf`.
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            mtry: None,
            max_depth: 0,
            min_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElasticNetParams {
    /// Mixing weight of the L1 penalty (0 = ridge, 1 = lasso).
    pub alpha: f64,
    pub lambda_grid_size: usize,
    pub cv_folds: usize,
    /// Fit at this penalty instead of cross-validating over the grid.
    pub lambda: Option<f64>,
}

impl Default for ElasticNetParams {
    fn default() -> Self {
        ElasticNetParams {
            alpha: 0.0,
            lambda_grid_size: 100,
            cv_folds: 10,
            lambda: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpParams {
    pub layer1: usize,
    pub layer2: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub max_restarts: usize,
    pub bias: bool,
}

impl Default for MlpParams {
    fn default() -> Self {
        MlpParams {
            layer1: 100,
            layer2: 100,
            learning_rate: 0.1,
            batch_size: 50,
            epochs: 100,
            max_restarts: 10,
            bias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogitParams {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogitParams {
    fn default() -> Self {
        LogitParams {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    pub rf: ForestParams,
    pub en: ElasticNetParams,
    pub mlp: MlpParams,
    pub logit: LogitParams,
    /// Root of every random stream used while fitting.
    pub seed: u64,
}

impl HyperParams {
    /// Sets one hyperparameter by its dotted name, e.g. `rf.trees`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{name} must be a non-negative integer, got {v}")))
            }
        };
        match name {
            "rf.trees" => self.rf.trees = count(value)?,
            "rf.mtry" => self.rf.mtry = Some(count(value)?),
            "rf.max_depth" => self.rf.max_depth = count(value)?,
            "rf.min_leaf" => self.rf.min_leaf = count(value)?,
            "en.alpha" => self.en.alpha = value,
            "en.lambda_grid_size" => self.en.lambda_grid_size = count(value)?,
            "en.cv_folds" => self.en.cv_folds = count(value)?,
            "en.lambda" => self.en.lambda = Some(value),
            "mlp.layer1" => self.mlp.layer1 = count(value)?,
            "mlp.layer2" => self.mlp.layer2 = count(value)?,
            "mlp.learning_rate" => self.mlp.learning_rate = value,
            "mlp.batch_size" => self.mlp.batch_size = count(value)?,
            "mlp.epochs" => self.mlp.epochs = count(value)?,
            "mlp.max_restarts" => self.mlp.max_restarts = count(value)?,
            "logit.max_iter" => self.logit.max_iter = count(value)?,
            "logit.tol" => self.logit.tol = value,
            _ => return Err(Error::Config(format!("unknown hyperparameter `{name}`"))),
        }
        Ok(())
    }
}

/// What to fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub target: Target,
    pub hyper: HyperParams,
    pub regressors: Vec<String>,
}

impl ModelSpec {
    pub fn new(code: ModelCode, regressors: &[Covariate]) -> Self {
        ModelSpec {
            family: code.family(),
            target: code.target(),
            hyper: HyperParams::default(),
            regressors: regressors.iter().map(|c| c.name().to_string()).collect(),
        }
    }

    pub fn code(&self) -> Result<ModelCode> {
        ModelCode::from_parts(self.family, self.target)
    }

    pub fn with_hyper(mut self, hyper: HyperParams) -> Self {
        self.hyper = hyper;
        self
    }
}

/// Covariate matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub x: Matrix,
}

impl Design {
    pub fn new(names: Vec<String>, x: Matrix) -> Result<Self> {
        if names.len() != x.cols() {
            return Err(Error::Schema(format!(
                "{} column names for a matrix with {} columns",
                names.len(),
                x.cols()
            )));
        }
        Ok(Design { names, x })
    }

    pub fn from_dataset(ds: &Dataset, covariates: &[Covariate], idx: &[usize]) -> Self {
        Design {
            names: covariates.iter().map(|c| c.name().to_string()).collect(),
            x: ds.matrix_rows(covariates, idx),
        }
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Parameters {
    /// OLS coefficients, intercept first.
    Linear {
        coefficients: Vec<f64>,
    },
    /// Logit coefficients, intercept first.
    Logit {
        coefficients: Vec<f64>,
    },
    Forest(Forest),
    ElasticNet(ElasticNetModel),
    Mlp(Network),
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// R² for continuous fits, McFadden pseudo-R² for logit.
    pub r2: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub training_loss: Option<f64>,
}

pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub parameters: Parameters,
    /// `y − ŷ` on the training rows (continuous targets only).
    pub train_residuals: Option<Vec<f64>>,
    pub diagnostics: FitDiagnostics,
}

#[derive(Serialize, Deserialize)]
struct Artifact {
    version: u32,
    model: FittedModel,
}

impl FittedModel {
    pub fn code(&self) -> ModelCode {
        self.spec.code().expect("fitted specs are valid")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Artifact {
            version: ARTIFACT_VERSION,
            model: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let a: Artifact = serde_json::from_str(s)?;
        if a.version != ARTIFACT_VERSION {
            return Err(Error::State(format!(
                "model artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                a.version
            )));
        }
        Ok(a.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

fn check_columns(spec: &ModelSpec, x: &Design) -> Result<()> {
    if spec.regressors != x.names {
        return Err(Error::Schema(format!(
            "design columns [{}] do not match model regressors [{}]",
            x.names.join(", "),
            spec.regressors.join(", ")
        )));
    }
    Ok(())
}

/// Fits `spec` on `x` and target `y` (log income, or 0/1 poor flags).
pub fn fit(spec: &ModelSpec, x: &Design, y: &[f64]) -> Result<FittedModel> {
    spec.code()?;
    check_columns(spec, x)?;
    let n = x.rows();
    if y.len() != n {
        return Err(Error::Alignment {
            expected: n,
            found: y.len(),
        });
    }
    let min = spec.regressors.len() + 1;
    if n < min {
        return Err(Error::Size { n, min });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Spec("target contains non-finite values".into()));
    }
    if spec.target == Target::Categorical {
        if y.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Spec("categorical target must be 0/1".into()));
        }
        let poor = y.iter().filter(|&&v| v == 1.0).count();
        if poor == 0 || poor == n {
            return Err(Error::DegenerateTarget(format!(
                "{poor} of {n} training rows are poor; both classes are required"
            )));
        }
    }

    let (parameters, diagnostics) = match spec.family {
        Family::Ols => ols::fit(x, y)?,
        Family::Logit => logit::fit(x, y, &spec.hyper.logit)?,
        Family::RandomForest => {
            let f = Forest::fit(&x.x, y, spec.target, &spec.hyper.rf, spec.hyper.seed)?;
            (
                Parameters::Forest(f),
                FitDiagnostics {
                    converged: true,
                    ..Default::default()
                },
            )
        }
        Family::ElasticNet => {
            let m = ElasticNetModel::fit(&x.x, y, spec.target, &spec.hyper.en, spec.hyper.seed)?;
            let diag = FitDiagnostics {
                converged: m.converged(),
                iterations: m.iterations(),
                ..Default::default()
            };
            (Parameters::ElasticNet(m), diag)
        }
        Family::Mlp2 => {
            let (net, report) = mlp::train(&x.x, y, spec.target, &spec.hyper.mlp, spec.hyper.seed)?;
            let diag = FitDiagnostics {
                converged: report.loss.is_finite(),
                iterations: report.attempts,
                training_loss: Some(report.loss),
                r2: None,
            };
            (Parameters::Mlp(net), diag)
        }
    };

    let mut model = FittedModel {
        spec: spec.clone(),
        parameters,
        train_residuals: None,
        diagnostics,
    };
    if spec.target == Target::Continuous {
        let yhat = predict(&model, x)?;
        let resid: Vec<f64> = y.iter().zip(&yhat).map(|(a, b)| a - b).collect();
        if model.diagnostics.r2.is_none() {
            let ybar = linalg::mean(y);
            let tss: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
            let rss: f64 = resid.iter().map(|r| r * r).sum();
            model.diagnostics.r2 = Some(if tss > 0.0 { 1.0 - rss / tss } else { 1.0 });
        }
        model.train_residuals = Some(resid);
    }
    Ok(model)
}

/// Point predictions: log income for continuous targets, probability of
/// being poor for categorical ones.
pub fn predict(m: &FittedModel, x: &Design) -> Result<Vec<f64>> {
    check_columns(&m.spec, x)?;
    let out = match &m.parameters {
        Parameters::Linear { coefficients } => x.x.with_intercept().mul_vec(coefficients),
        Parameters::Logit { coefficients } => {
            x.x.with_intercept()
                .mul_vec(coefficients)
                .into_iter()
                .map(logistic)
                .collect()
        }
        Parameters::Forest(f) => f.predict(&x.x),
        Parameters::ElasticNet(e) => e.predict(&x.x),
        Parameters::Mlp(n) => n.predict(&x.x),
    };
    Ok(out)
}

#[inline]
pub(crate) fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// Summary of a vector of predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionStats {
    pub mean: f64,
    pub sd: f64,
    /// `(probability, lower empirical quantile)` at 5, 25, 50, 75 and 95%.
    pub quantiles: Vec<(f64, f64)>,
}

pub fn predicted_distribution_stats(preds: &[f64]) -> Result<DistributionStats> {
    if preds.is_empty() {
        return Err(Error::Size { n: 0, min: 1 });
    }
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95]
        .into_iter()
        .map(|q| crate::dataset::quantile_line(preds, q).map(|v| (q, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DistributionStats {
        mean: linalg::mean(preds),
        sd: linalg::sample_sd(preds),
        quantiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_round_trip_through_family_and_target() {
        for code in ModelCode::ALL {
            assert_eq!(ModelCode::from_parts(code.family(), code.target()).unwrap(), code);
            assert_eq!(code.as_str().parse::<ModelCode>().unwrap(), code);
        }
        assert!(ModelCode::from_parts(Family::Ols, Target::Categorical).is_err());
        assert!(ModelCode::from_parts(Family::Logit, Target::Continuous).is_err());
    }

    #[test]
    fn baseline_hyperparameters() {
        let h = HyperParams::default();
        assert_eq!(
            (h.rf.trees, h.rf.mtry, h.rf.max_depth, h.rf.min_leaf),
            (100, None, 0, 1)
        );
        assert_eq!((h.en.alpha, h.en.lambda_grid_size, h.en.cv_folds), (0.0, 100, 10));
        assert_eq!(
            (
                h.mlp.layer1,
                h.mlp.layer2,
                h.mlp.learning_rate,
                h.mlp.batch_size,
                h.mlp.epochs,
                h.mlp.max_restarts
            ),
            (100, 100, 0.1, 50, 100, 10)
        );
        assert_eq!((h.logit.max_iter, h.logit.tol), (100, 1e-8));
    }

    #[test]
    fn hyperparameters_set_by_name() {
        let mut h = HyperParams::default();
        h.set("rf.mtry", 6.0).unwrap();
        h.set("mlp.learning_rate", 0.01).unwrap();
        assert_eq!(h.rf.mtry, Some(6));
        assert_eq!(h.mlp.learning_rate, 0.01);
        assert!(h.set("rf.trees", 2.5).is_err());
        assert!(h.set("rf.colour", 1.0).is_err());
    }

    #[test]
    fn constant_predictions_have_zero_spread() {
        let s = predicted_distribution_stats(&[3.0; 10]).unwrap();
        assert_eq!(s.sd, 0.0);
        assert_eq!(s.mean, 3.0);
        assert!(predicted_distribution_stats(&[]).is_err());
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let x = Design::new(
            vec!["a".into()],
            Matrix::from_vec(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap(),
        )
        .unwrap();
        let spec = ModelSpec {
            family: Family::Logit,
            target: Target::Categorical,
            hyper: HyperParams::default(),
            regressors: vec!["a".into()],
        };
        assert!(matches!(fit(&spec, &x, &[1.0; 4]), Err(Error::DegenerateTarget(_))));
        assert!(matches!(fit(&spec, &x, &[0.0, 1.0, 2.0, 1.0]), Err(Error::Spec(_))));
        let mut wrong = spec.clone();
        wrong.regressors = vec!["b".into()];
        assert!(matches!(fit(&wrong, &x, &[0.0, 1.0, 0.0, 1.0]), Err(Error::Schema(_))));
        let mut ols_cat = spec;
        ols_cat.family = Family::Ols;
        assert!(matches!(fit(&ols_cat, &x, &[0.0, 1.0, 0.0, 1.0]), Err(Error::Spec(_))));
    }
}
