//! Exhaustive hyperparameter grid search on a random half split, scored on
//! the held-out half after classification at the poverty line.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{poverty_line, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::{Direction, Objective};
use crate::linalg;
use crate::models::{Family, HyperParams, ModelCode, ModelSpec, Target};
use crate::pipeline::{evaluate, fit_observed, Cutpoint};
use crate::rng;

/// One searched hyperparameter, by its dotted name (see [`HyperParams::set`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: &[f64]) -> Self {
        Axis {
            name: name.to_string(),
            values: values.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub family: Family,
    pub target: Target,
    pub axes: Vec<Axis>,
    pub objective: Objective,
    pub split_seed: u64,
    /// Values of every hyperparameter not on an axis.
    pub base: HyperParams,
}

fn range(lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|v| v as f64).collect()
}

impl GridSpec {
    fn with_axes(family: Family, target: Target, axes: Vec<Axis>) -> Result<Self> {
        ModelCode::from_parts(family, target)?;
        Ok(GridSpec {
            family,
            target,
            axes,
            objective: Objective::Accuracy,
            split_seed: 0,
            base: HyperParams::default(),
        })
    }

    /// The full published search ranges for the three tunable families.
    pub fn full(family: Family, target: Target) -> Result<Self> {
        let axes = match family {
            Family::RandomForest => vec![
                Axis::new("rf.trees", &[50.0, 100.0, 200.0, 400.0]),
                Axis::new("rf.mtry", &range(1, 12)),
                Axis::new("rf.max_depth", &range(3, 8)),
                Axis::new("rf.min_leaf", &[5.0, 10.0, 50.0, 100.0]),
            ],
            Family::ElasticNet => vec![
                Axis::new("en.alpha", &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
                Axis::new("en.lambda_grid_size", &[50.0, 100.0, 200.0]),
                Axis::new("en.cv_folds", &[5.0, 10.0, 20.0]),
            ],
            Family::Mlp2 => vec![
                Axis::new("mlp.layer1", &[64.0, 128.0, 256.0]),
                Axis::new("mlp.layer2", &[64.0, 128.0, 256.0]),
                Axis::new("mlp.learning_rate", &[0.01, 0.001]),
                Axis::new("mlp.batch_size", &[20.0, 80.0]),
                Axis::new("mlp.epochs", &[50.0, 200.0]),
            ],
            other => return Err(Error::Config(format!("no tuning grid for {other:?}"))),
        };
        Self::with_axes(family, target, axes)
    }

    /// Thinned grids that run in minutes on one core.
    pub fn desk(family: Family, target: Target) -> Result<Self> {
        let axes = match family {
            Family::RandomForest => vec![
                Axis::new("rf.trees", &[50.0, 100.0]),
                Axis::new("rf.mtry", &[2.0, 6.0, 12.0]),
                Axis::new("rf.max_depth", &[4.0, 8.0]),
                Axis::new("rf.min_leaf", &[10.0, 100.0]),
            ],
            Family::ElasticNet => vec![
                Axis::new("en.alpha", &[0.0, 0.2, 0.4, 0.6, 0.8, 1.0]),
                Axis::new("en.lambda_grid_size", &[50.0, 100.0]),
                Axis::new("en.cv_folds", &[5.0, 10.0]),
            ],
            Family::Mlp2 => vec![
                Axis::new("mlp.layer1", &[64.0, 128.0]),
                Axis::new("mlp.layer2", &[64.0]),
                Axis::new("mlp.learning_rate", &[0.01, 0.001]),
                Axis::new("mlp.batch_size", &[80.0]),
                Axis::new("mlp.epochs", &[50.0]),
            ],
            other => return Err(Error::Config(format!("no tuning grid for {other:?}"))),
        };
        Self::with_axes(family, target, axes)
    }

    pub fn size(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn validate(&self) -> Result<()> {
        ModelCode::from_parts(self.family, self.target)?;
        if self.axes.is_empty() {
            return Err(Error::Config("grid has no axes".into()));
        }
        let mut probe = self.base.clone();
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(Error::Config(format!("axis `{}` has no values", a.name)));
            }
            for &v in &a.values {
                probe.set(&a.name, v)?;
            }
        }
        if self.objective.direction().is_none() {
            return Err(Error::Config(format!(
                "objective {} cannot be optimised",
                self.objective.label()
            )));
        }
        Ok(())
    }

    /// Every grid point in lexicographic axis order (first axis slowest).
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for a in &self.axes {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    a.values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect();
        }
        out
    }
}

/// Random disjoint halves of sizes ⌈n/2⌉ and ⌊n/2⌋, each in row order.
pub fn half_split(ds: &Dataset, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = ds.len();
    if n < 2 {
        return Err(Error::Size { n, min: 2 });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed));
    let mut second = idx.split_off(n.div_ceil(2));
    idx.sort_unstable();
    second.sort_unstable();
    Ok((idx, second))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub index: usize,
    pub values: Vec<f64>,
    /// Objective on the held-out half; `None` if the point failed or was skipped.
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreSummary {
    pub count: usize,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (0 for a single point).
    pub sd: f64,
}

impl ScoreSummary {
    pub fn of(scores: &[f64]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        Some(ScoreSummary {
            count: scores.len(),
            max: scores.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean: linalg::mean(scores),
            sd: linalg::sample_sd(scores),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSearchResult {
    pub family: Family,
    pub target: Target,
    pub objective: Objective,
    pub axes: Vec<Axis>,
    pub points: Vec<GridPoint>,
    /// Index into `points` of the best scored point.
    pub best: Option<usize>,
    pub summary: Option<ScoreSummary>,
    /// False when the budget ran out before every point was tried.
    pub complete: bool,
}

impl GridSearchResult {
    pub fn best_point(&self) -> Option<&GridPoint> {
        self.best.map(|i| &self.points[i])
    }

    pub fn best_score(&self) -> Option<f64> {
        self.best_point().and_then(|p| p.score)
    }

    pub fn scores(&self) -> Vec<f64> {
        self.points.iter().filter_map(|p| p.score).collect()
    }

    pub fn failed(&self) -> usize {
        self.points.iter().filter(|p| p.score.is_none()).count()
    }

    /// Hyperparameters of the best point.
    pub fn best_params(&self, base: &HyperParams) -> Option<HyperParams> {
        let p = self.best_point()?;
        let mut h = base.clone();
        for (a, &v) in self.axes.iter().zip(&p.values) {
            h.set(&a.name, v).ok()?;
        }
        Some(h)
    }

    /// One row per grid point: index, axis values, score, status.
    pub fn write_score_table<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["index".to_string()];
        header.extend(self.axes.iter().map(|a| a.name.clone()));
        header.push("score".into());
        header.push("status".into());
        w.write_record(&header)?;
        for p in &self.points {
            let mut rec = vec![p.index.to_string()];
            rec.extend(p.values.iter().map(|v| v.to_string()));
            rec.push(p.score.map(|s| s.to_string()).unwrap_or_default());
            rec.push(p.error.clone().unwrap_or_else(|| "ok".into()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("score table", e))?;
        Ok(())
    }

    /// Parameter, searched range and optimal value, one row per axis.
    pub fn write_best_params<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["family", "parameter", "grid_range", "optimal"])?;
        let best = self.best_point();
        for (k, a) in self.axes.iter().enumerate() {
            let range = a.values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
            let optimal = best.map(|p| p.values[k].to_string()).unwrap_or_default();
            w.write_record([format!("{:?}", self.family).as_str(), &a.name, &range, &optimal])?;
        }
        w.flush().map_err(|e| Error::io("best parameters", e))?;
        Ok(())
    }
}

pub fn grid_search(gs: &GridSpec, ds: &Dataset, q: f64) -> Result<GridSearchResult> {
    grid_search_with_budget(gs, ds, q, None)
}

/// Grid search that stops starting new points once `budget` has elapsed;
/// unstarted points are reported as skipped and `complete` is false.
pub fn grid_search_with_budget(
    gs: &GridSpec,
    ds: &Dataset,
    q: f64,
    budget: Option<Duration>,
) -> Result<GridSearchResult> {
    gs.validate()?;
    let direction = gs.objective.direction().expect("validated");
    let (sample1, sample2) = half_split(ds, gs.split_seed)?;
    let z = poverty_line(ds, q)?;
    let code = ModelCode::from_parts(gs.family, gs.target)?;
    let regressors = ds.regressor_order().to_vec();
    let started = Instant::now();

    let points: Vec<GridPoint> = gs
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(index, values)| {
            if budget.is_some_and(|b| started.elapsed() >= b) {
                return GridPoint {
                    index,
                    values,
                    score: None,
                    error: Some("skipped: budget exhausted".into()),
                };
            }
            let score = (|| -> Result<f64> {
                let mut hyper = gs.base.clone();
                for (a, &v) in gs.axes.iter().zip(&values) {
                    hyper.set(&a.name, v)?;
                }
                hyper.seed = rng::derive(gs.split_seed, index as u64);
                let spec = ModelSpec::new(code, &regressors).with_hyper(hyper);
                let fitted = fit_observed(ds, &sample1, &spec, Some(z.ln()))?;
                let res = evaluate(ds, &fitted, &sample2, q, z, Cutpoint::default(), None, 0)?;
                gs.objective
                    .value(&res.metrics)
                    .ok_or_else(|| Error::State(format!("{} undefined", gs.objective.label())))
            })();
            match score {
                Ok(s) => GridPoint {
                    index,
                    values,
                    score: Some(s),
                    error: None,
                },
                Err(e) => {
                    log::warn!("grid point {index} ({values:?}) failed: {e}");
                    GridPoint {
                        index,
                        values,
                        score: None,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect();

    // First point in grid order wins ties.
    let mut best: Option<usize> = None;
    for (i, p) in points.iter().enumerate() {
        if let Some(s) = p.score {
            let better = match best.and_then(|b| points[b].score) {
                None => true,
                Some(b) => match direction {
                    Direction::Max => s > b,
                    Direction::Min => s < b,
                },
            };
            if better {
                best = Some(i);
            }
        }
    }
    let scores: Vec<f64> = points.iter().filter_map(|p| p.score).collect();
    let complete = !points
        .iter()
        .any(|p| p.error.as_deref().is_some_and(|e| e.starts_with("skipped")));
    Ok(GridSearchResult {
        family: gs.family,
        target: gs.target,
        objective: gs.objective,
        axes: gs.axes.clone(),
        summary: ScoreSummary::of(&scores),
        points,
        best,
        complete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grids_have_published_sizes() {
        assert_eq!(
            GridSpec::full(Family::RandomForest, Target::Continuous).unwrap().size(),
            4 * 12 * 6 * 4
        );
        assert_eq!(
            GridSpec::full(Family::ElasticNet, Target::Continuous).unwrap().size(),
            54
        );
        assert_eq!(GridSpec::full(Family::Mlp2, Target::Categorical).unwrap().size(), 72);
        assert!(GridSpec::full(Family::Ols, Target::Continuous).is_err());
    }

    #[test]
    fn points_are_lexicographic() {
        let mut g = GridSpec::desk(Family::ElasticNet, Target::Continuous).unwrap();
        g.axes = vec![
            Axis::new("en.alpha", &[0.0, 1.0]),
            Axis::new("en.cv_folds", &[5.0, 10.0]),
        ];
        assert_eq!(
            g.points(),
            vec![vec![0.0, 5.0], vec![0.0, 10.0], vec![1.0, 5.0], vec![1.0, 10.0]]
        );
    }

    #[test]
    fn bad_axis_name_is_a_config_error() {
        let mut g = GridSpec::desk(Family::RandomForest, Target::Continuous).unwrap();
        g.axes.push(Axis::new("rf.nonsense", &[1.0]));
        assert!(matches!(g.validate(), Err(Error::Config(_))));
    }
}
