//! TOML experiment configuration and the named presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{load_csv, synthesize, Covariate, Dataset, GeneratorConfig, SURVEY_ROWS};
use crate::error::{Error, Result};
use crate::missingness::Pattern;
use crate::models::{Family, HyperParams, ModelCode, Target};
use crate::pipeline::{Cutpoint, LineSource, PredictOn};
use crate::tuning::GridSpec;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Synthetic,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: SourceKind,
    /// Rows to synthesise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Overrides the calibrated noise sd of the synthetic generator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
    /// Survey CSV to load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

/// The only sources of randomness in a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub data: u64,
    pub mask: u64,
    pub model: u64,
    pub split: u64,
}

/// A model code, optionally with hyperparameter overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelEntry {
    Code(String),
    Detailed {
        code: String,
        #[serde(default)]
        hyper: HyperParams,
    },
}

impl ModelEntry {
    pub fn code(&self) -> Result<ModelCode> {
        match self {
            ModelEntry::Code(c) | ModelEntry::Detailed { code: c, .. } => c.parse(),
        }
    }

    /// Hyperparameters before the run assigns the model seed.
    pub fn hyper(&self) -> HyperParams {
        match self {
            ModelEntry::Code(_) => HyperParams::default(),
            ModelEntry::Detailed { hyper, .. } => hyper.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Thinned grids sized for a desk machine.
    Desk,
    /// The complete published ranges (hours of compute).
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    pub families: Vec<Family>,
    pub target: Target,
    pub q: f64,
    pub grid: GridKind,
    #[serde(default = "default_objective")]
    pub objective: String,
}

fn default_objective() -> String {
    "accuracy".into()
}

fn default_version() -> u32 {
    CONFIG_VERSION
}

fn default_cutpoints() -> Vec<Cutpoint> {
    vec![Cutpoint::default()]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub data: DataConfig,
    pub seeds: Seeds,
    /// Covariate names; all twelve when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regressors: Option<Vec<String>>,
    #[serde(default)]
    pub patterns: Vec<String>,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub lines: Vec<f64>,
    #[serde(default = "default_cutpoints")]
    pub cutpoints: Vec<Cutpoint>,
    #[serde(default)]
    pub predict_on: PredictOn,
    #[serde(default)]
    pub line_source: LineSource,
    /// Draws for error-adjusted rates; omitted means none are computed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjust_draws: Option<usize>,
    #[serde(default = "default_true")]
    pub emit_cdf: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tune: Option<TuneConfig>,
}

/// Named configurations selectable with `--preset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// All eight models on the full sample at the median line.
    Baseline,
    /// Eight patterns × eight models × four lines.
    Table6,
    /// Thinned grid search over the three tunable families.
    GridDesk,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Preset::Baseline),
            "table6" => Ok(Preset::Table6),
            "grid-desk" => Ok(Preset::GridDesk),
            _ => Err(Error::Config(format!(
                "unknown preset `{s}` (expected baseline, table6 or grid-desk)"
            ))),
        }
    }
}

const PRESET_SEEDS: Seeds = Seeds {
    data: 1,
    mask: 2,
    model: 3,
    split: 4,
};

impl Preset {
    pub fn config(self) -> ExperimentConfig {
        let all_models = || ModelCode::ALL.iter().map(|c| ModelEntry::Code(c.to_string())).collect();
        let base = ExperimentConfig {
            version: CONFIG_VERSION,
            data: DataConfig {
                source: SourceKind::Synthetic,
                n: Some(SURVEY_ROWS),
                noise_sd: None,
                path: None,
            },
            seeds: PRESET_SEEDS,
            regressors: None,
            patterns: Vec::new(),
            models: Vec::new(),
            lines: Vec::new(),
            cutpoints: default_cutpoints(),
            predict_on: PredictOn::MissingRows,
            line_source: LineSource::Full,
            adjust_draws: None,
            emit_cdf: true,
            tune: None,
        };
        match self {
            Preset::Baseline => ExperimentConfig {
                patterns: vec!["MCAR0".into()],
                models: all_models(),
                lines: vec![0.5],
                predict_on: PredictOn::AllRows,
                ..base
            },
            Preset::Table6 => ExperimentConfig {
                patterns: Pattern::standard_sweep().iter().map(|p| p.label()).collect(),
                models: all_models(),
                lines: vec![0.05, 0.25, 0.5, 0.75],
                emit_cdf: false,
                ..base
            },
            Preset::GridDesk => ExperimentConfig {
                emit_cdf: false,
                tune: Some(TuneConfig {
                    families: vec![Family::RandomForest, Family::ElasticNet, Family::Mlp2],
                    target: Target::Continuous,
                    q: 0.5,
                    grid: GridKind::Desk,
                    objective: default_objective(),
                }),
                ..base
            },
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Parse errors carry the line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    fn config_err(field: &str, message: impl std::fmt::Display) -> Error {
        Error::Config(format!("field `{field}`: {message}"))
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Self::config_err(
                "version",
                format!("unsupported version {} (expected {CONFIG_VERSION})", self.version),
            ));
        }
        match self.data.source {
            SourceKind::Synthetic => {
                if self.data.path.is_some() {
                    return Err(Self::config_err("data.path", "only valid with source = \"csv\""));
                }
                let n = self.data.n.unwrap_or(SURVEY_ROWS);
                if n < 100 {
                    return Err(Self::config_err(
                        "data.n",
                        format!("{n} rows is below the minimum of 100"),
                    ));
                }
                if let Some(sd) = self.data.noise_sd {
                    if !(sd >= 0.0 && sd.is_finite()) {
                        return Err(Self::config_err(
                            "data.noise_sd",
                            format!("{sd} is not a finite non-negative number"),
                        ));
                    }
                }
            }
            SourceKind::Csv => {
                if self.data.path.is_none() {
                    return Err(Self::config_err("data.path", "required with source = \"csv\""));
                }
                if self.data.n.is_some() || self.data.noise_sd.is_some() {
                    return Err(Self::config_err("data", "n and noise_sd apply to synthetic data only"));
                }
            }
        }
        self.covariates()?;
        for (k, p) in self.patterns.iter().enumerate() {
            p.parse::<Pattern>()
                .map_err(|e| Self::config_err(&format!("patterns[{k}]"), e))?;
        }
        for (k, m) in self.models.iter().enumerate() {
            m.code().map_err(|e| Self::config_err(&format!("models[{k}]"), e))?;
        }
        for (k, &q) in self.lines.iter().enumerate() {
            if !(q > 0.0 && q < 1.0) {
                return Err(Self::config_err(
                    &format!("lines[{k}]"),
                    format!("{q} is not in (0, 1)"),
                ));
            }
        }
        if self.cutpoints.is_empty() {
            return Err(Self::config_err("cutpoints", "at least one cutpoint is required"));
        }
        if self.adjust_draws == Some(0) {
            return Err(Self::config_err("adjust_draws", "must be at least 1"));
        }
        if let Some(t) = &self.tune {
            if t.families.is_empty() {
                return Err(Self::config_err("tune.families", "at least one family is required"));
            }
            for f in &t.families {
                GridSpec::desk(*f, t.target).map_err(|e| Self::config_err("tune.families", e))?;
            }
            if !(t.q > 0.0 && t.q < 1.0) {
                return Err(Self::config_err("tune.q", format!("{} is not in (0, 1)", t.q)));
            }
            t.objective
                .parse::<crate::evaluation::Objective>()
                .map_err(|e| Self::config_err("tune.objective", e))?;
        }
        Ok(())
    }

    /// Requirements of the `run` verb on top of [`validate`](Self::validate).
    pub fn validate_for_run(&self) -> Result<()> {
        if self.patterns.is_empty() {
            return Err(Self::config_err("patterns", "at least one pattern is required"));
        }
        if self.models.is_empty() {
            return Err(Self::config_err("models", "at least one model is required"));
        }
        if self.lines.is_empty() {
            return Err(Self::config_err("lines", "at least one line is required"));
        }
        Ok(())
    }

    pub fn covariates(&self) -> Result<Vec<Covariate>> {
        match &self.regressors {
            None => Ok(Covariate::ALL.to_vec()),
            Some(names) if names.is_empty() => Err(Self::config_err("regressors", "list is empty")),
            Some(names) => names
                .iter()
                .map(|n| n.parse().map_err(|e| Self::config_err("regressors", e)))
                .collect(),
        }
    }

    pub fn parsed_patterns(&self) -> Result<Vec<Pattern>> {
        self.patterns.iter().map(|p| p.parse()).collect()
    }

    pub fn generator(&self) -> Option<GeneratorConfig> {
        (self.data.source == SourceKind::Synthetic).then(|| {
            let mut g = GeneratorConfig::baseline(self.data.n.unwrap_or(SURVEY_ROWS), self.seeds.data);
            if let Some(sd) = self.data.noise_sd {
                g.noise_sd = sd;
            }
            g
        })
    }

    /// Synthesises or loads the dataset.
    pub fn dataset(&self) -> Result<Dataset> {
        match self.data.source {
            SourceKind::Synthetic => synthesize(&self.generator().expect("synthetic source")),
            SourceKind::Csv => load_csv(self.data.path.as_ref().expect("validated"), &self.covariates()?),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for p in [Preset::Baseline, Preset::Table6, Preset::GridDesk] {
            let cfg = p.config();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn unknown_keys_are_errors_with_location() {
        let text = "[data]\nsource = \"synthetic\"\n[seeds]\ndata = 1\nmask = 2\nmodel = 3\nsplit = 4\nbogus = 1\n";
        match ExperimentConfig::from_toml(text) {
            Err(Error::Config(m)) => assert!(m.contains("bogus") && m.contains("line"), "{m}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn models_accept_codes_and_overrides() {
        let text = r#"
patterns = ["MCAR50"]
lines = [0.5]
models = ["wcn", { code = "rct", hyper = { rf = { trees = 10 } } }]
[data]
source = "synthetic"
n = 500
[seeds]
data = 1
mask = 2
model = 3
split = 4
"#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        cfg.validate_for_run().unwrap();
        assert_eq!(cfg.models[1].code().unwrap(), ModelCode::Rct);
        assert_eq!(cfg.models[1].hyper().rf.trees, 10);
        assert_eq!(cfg.cutpoints, vec![Cutpoint::Fixed(0.5)]);
    }

    #[test]
    fn bad_values_name_the_field() {
        let mut cfg = Preset::Table6.config();
        cfg.lines.push(1.5);
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("lines[4]"), "{err}");
        let mut cfg = Preset::Table6.config();
        cfg.patterns.push("MCAR".into());
        assert!(cfg.validate().unwrap_err().to_string().contains("patterns[8]"));
    }
}
