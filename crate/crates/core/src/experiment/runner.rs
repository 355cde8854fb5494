//! Executes a configuration: masks, fits, scoring, tables, manifest.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, GridKind, Seeds};
use super::report::{self, ScenarioRow, NO_CUTPOINT};
use crate::dataset::{Covariate, Dataset};
use crate::error::{Error, Result};
use crate::evaluation::Objective;
use crate::missingness::{split, MissingnessMask, Pattern};
use crate::models::{Family, ModelCode, ModelSpec, Target};
use crate::pipeline::{evaluate, fit_observed, line_for, Cutpoint, ObservedFit, PredictOn, ScenarioResult};
use crate::rng;
use crate::tuning::{grid_search_with_budget, GridSearchResult, GridSpec, ScoreSummary};

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenarios: usize,
    pub failures: usize,
    /// Output files relative to the output directory, manifest excluded.
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    /// 0 when every scenario succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures == 0 {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct ManifestFile {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: String,
    seeds: Seeds,
    scenarios: usize,
    failures: usize,
    files: Vec<ManifestFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn write_manifest(
    out: &Path,
    command: &str,
    config_text: &str,
    seeds: Seeds,
    scenarios: usize,
    failures: usize,
    files: &[PathBuf],
) -> Result<()> {
    let mut entries = Vec::new();
    let mut sorted = files.to_vec();
    sorted.sort();
    for rel in &sorted {
        let path = out.join(rel);
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestFile {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: sha256_hex(config_text.as_bytes()),
        seeds,
        scenarios,
        failures,
        files: entries,
    };
    let path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))
}

/// One fit: a continuous model per pattern, a categorical model per pattern and line.
struct FitJob {
    pattern: usize,
    model: usize,
    line: Option<usize>,
}

struct Cell {
    key: (usize, usize, usize, usize),
    row: ScenarioRow,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    ds: &'a Dataset,
    covariates: Vec<Covariate>,
    patterns: Vec<Pattern>,
    masks: Vec<MissingnessMask>,
    models: Vec<(ModelCode, crate::models::HyperParams)>,
}

fn failed_row(q: f64, pattern: &Pattern, code: ModelCode, cut: &str, e: &Error) -> ScenarioRow {
    ScenarioRow {
        q,
        line: None,
        pattern: pattern.label(),
        model: code.to_string(),
        cutpoint: cut.to_string(),
        applied_cutpoint: None,
        train_rows: None,
        scored_rows: None,
        dropped: String::new(),
        true_rate: None,
        predicted_rate: None,
        population_true_rate: None,
        population_rate: None,
        adjusted_rate: None,
        tp: None,
        tn: None,
        fp: None,
        fn_: None,
        status: format!("failed: {e}"),
    }
}

fn ok_row(pattern: &Pattern, cut: &str, r: &ScenarioResult) -> ScenarioRow {
    ScenarioRow {
        q: r.q,
        line: Some(r.line),
        pattern: pattern.label(),
        model: r.model.to_string(),
        cutpoint: cut.to_string(),
        applied_cutpoint: r.cutpoint,
        train_rows: Some(r.train_rows),
        scored_rows: Some(r.rows.len()),
        dropped: r.dropped.join(";"),
        true_rate: Some(r.true_rate),
        predicted_rate: Some(r.predicted_rate),
        population_true_rate: Some(r.population_true_rate),
        population_rate: Some(r.population_rate),
        adjusted_rate: r.adjusted_rate,
        tp: Some(r.confusion.tp),
        tn: Some(r.confusion.tn),
        fp: Some(r.confusion.fp),
        fn_: Some(r.confusion.fn_),
        status: "ok".into(),
    }
}

/// CDF series collected from one job: (pattern, series, q, values).
type Series = (usize, String, String, Vec<f64>);

impl Context<'_> {
    fn run_job(&self, job: &FitJob) -> (Vec<Cell>, Vec<Series>) {
        let cfg = self.cfg;
        let pattern = &self.patterns[job.pattern];
        let label = pattern.label();
        let (code, hyper) = &self.models[job.model];
        let lines: Vec<usize> = match job.line {
            Some(l) => vec![l],
            None => (0..cfg.lines.len()).collect(),
        };
        let cuts: Vec<(usize, Cutpoint, String)> = match code.target() {
            Target::Continuous => vec![(0, Cutpoint::default(), NO_CUTPOINT.to_string())],
            Target::Categorical => cfg
                .cutpoints
                .iter()
                .enumerate()
                .map(|(k, c)| (k, *c, c.to_string()))
                .collect(),
        };
        let mut cells = Vec::new();
        let mut series = Vec::new();
        let fail_all = |cells: &mut Vec<Cell>, e: &Error| {
            for &l in &lines {
                for (k, _, name) in &cuts {
                    cells.push(Cell {
                        key: (l, job.pattern, job.model, *k),
                        row: failed_row(cfg.lines[l], pattern, *code, name, e),
                    });
                }
            }
        };

        let parts = match split(self.ds, &self.masks[job.pattern]) {
            Ok(p) => p,
            Err(e) => {
                fail_all(&mut cells, &e);
                return (cells, series);
            }
        };
        let scored: Vec<usize> = match cfg.predict_on {
            PredictOn::MissingRows => parts.test.clone(),
            PredictOn::AllRows => (0..self.ds.len()).collect(),
        };

        let mut spec = ModelSpec::new(*code, &self.covariates).with_hyper(hyper.clone());
        let seed_label = match job.line {
            Some(l) => format!("{label}/{code}/q{}", cfg.lines[l]),
            None => format!("{label}/{code}"),
        };
        spec.hyper.seed = rng::derive_labeled(cfg.seeds.model, &seed_label);

        let fit_line = match job.line {
            Some(l) => line_for(self.ds, &parts.train, cfg.lines[l], cfg.line_source).map(|(_, ll)| Some(ll)),
            None => Ok(None),
        };
        let fitted: Result<ObservedFit> = fit_line.and_then(|ll| fit_observed(self.ds, &parts.train, &spec, ll));
        let fitted = match fitted {
            Ok(f) => f,
            Err(e) => {
                let e = e.with_context(format!("{code} on {label}"));
                log::warn!("{e}");
                fail_all(&mut cells, &e);
                return (cells, series);
            }
        };

        for &l in &lines {
            let q = cfg.lines[l];
            let z = match line_for(self.ds, &parts.train, q, cfg.line_source) {
                Ok((z, _)) => z,
                Err(e) => {
                    for (k, _, name) in &cuts {
                        cells.push(Cell {
                            key: (l, job.pattern, job.model, *k),
                            row: failed_row(q, pattern, *code, name, &e),
                        });
                    }
                    continue;
                }
            };
            let adjust_seed = rng::derive_labeled(cfg.seeds.model, &format!("adjust/{label}/{code}/q{q}"));
            for (k, cut, name) in &cuts {
                let row = match evaluate(self.ds, &fitted, &scored, q, z, *cut, cfg.adjust_draws, adjust_seed) {
                    Ok(r) => {
                        // Predictions do not depend on the cutpoint, nor on the line for continuous models.
                        if cfg.emit_cdf && *k == 0 && (code.target() == Target::Categorical || l == lines[0]) {
                            let qtag = match code.target() {
                                Target::Continuous => NO_CUTPOINT.to_string(),
                                Target::Categorical => q.to_string(),
                            };
                            series.push((job.pattern, code.to_string(), qtag, r.predictions.clone()));
                        }
                        ok_row(pattern, name, &r)
                    }
                    Err(e) => failed_row(q, pattern, *code, name, &e.with_context(format!("{code} on {label}"))),
                };
                cells.push(Cell {
                    key: (l, job.pattern, job.model, *k),
                    row,
                });
            }
        }
        (cells, series)
    }
}

/// Runs every (pattern, model, line, cutpoint) of `cfg` and writes all
/// artifacts under `out`. Scenario failures are recorded, not fatal.
pub fn run(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<RunSummary> {
    cfg.validate()?;
    cfg.validate_for_run()?;
    prepare_out(out)?;
    let config_text = cfg.to_toml()?;
    let ds = cfg.dataset()?;
    let patterns = cfg.parsed_patterns()?;
    let masks = patterns
        .iter()
        .map(|p| p.apply(&ds, rng::derive_labeled(cfg.seeds.mask, &p.label())))
        .collect::<Result<Vec<_>>>()?;
    let models = cfg
        .models
        .iter()
        .map(|m| Ok((m.code()?, m.hyper())))
        .collect::<Result<Vec<_>>>()?;
    let ctx = Context {
        cfg,
        ds: &ds,
        covariates: cfg.covariates()?,
        patterns,
        masks,
        models,
    };

    let mut jobs = Vec::new();
    for p in 0..ctx.patterns.len() {
        for (m, (code, _)) in ctx.models.iter().enumerate() {
            match code.target() {
                Target::Continuous => jobs.push(FitJob {
                    pattern: p,
                    model: m,
                    line: None,
                }),
                Target::Categorical => jobs.extend((0..cfg.lines.len()).map(|l| FitJob {
                    pattern: p,
                    model: m,
                    line: Some(l),
                })),
            }
        }
    }
    log::info!(
        "{} fits over {} rows on {} workers",
        jobs.len(),
        ds.len(),
        workers.max(1)
    );
    let started = Instant::now();
    let results: Vec<(Vec<Cell>, Vec<Series>)> = pool(workers)?.install(|| {
        jobs.par_iter()
            .map(|j| {
                let r = ctx.run_job(j);
                log::debug!(
                    "done {} on {} ({:.1}s elapsed)",
                    ctx.models[j.model].0,
                    ctx.patterns[j.pattern].label(),
                    started.elapsed().as_secs_f64()
                );
                r
            })
            .collect()
    });

    let mut cells: Vec<Cell> = Vec::new();
    let mut series: Vec<Series> = Vec::new();
    for (c, s) in results {
        cells.extend(c);
        series.extend(s);
    }
    cells.sort_by_key(|c| c.key);
    let rows: Vec<ScenarioRow> = cells.into_iter().map(|c| c.row).collect();
    let failures = rows.iter().filter(|r| !r.is_ok()).count();

    let mut files = Vec::new();
    let cfg_path = out.join("config.toml");
    std::fs::write(&cfg_path, &config_text).map_err(|e| Error::io(&cfg_path, e))?;
    files.push(PathBuf::from("config.toml"));
    let mut buf = Vec::new();
    report::write_rows(&rows, &mut buf)?;
    let scen = out.join("scenarios.csv");
    std::fs::write(&scen, buf).map_err(|e| Error::io(&scen, e))?;
    files.push(PathBuf::from("scenarios.csv"));
    files.extend(report::render_reports(&rows, out)?);

    if cfg.emit_cdf {
        for (p, pattern) in ctx.patterns.iter().enumerate() {
            let parts = split(&ds, &ctx.masks[p])?;
            let scored: Vec<usize> = match cfg.predict_on {
                PredictOn::MissingRows => parts.test,
                PredictOn::AllRows => (0..ds.len()).collect(),
            };
            let mut s: Vec<(String, String, Vec<f64>)> = vec![(
                "truth".into(),
                NO_CUTPOINT.into(),
                scored.iter().map(|&i| ds.rows()[i].log_income).collect(),
            )];
            s.extend(
                series
                    .iter()
                    .filter(|(sp, ..)| *sp == p)
                    .map(|(_, name, q, v)| (name.clone(), q.clone(), v.clone())),
            );
            let rel = PathBuf::from(format!("cdf/{}.csv", pattern.label()));
            let path = out.join(&rel);
            std::fs::create_dir_all(path.parent().expect("has parent")).map_err(|e| Error::io(&path, e))?;
            let mut buf = Vec::new();
            report::write_cdf(&s, &mut buf)?;
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            files.push(rel);
        }
    }

    write_manifest(out, "run", &config_text, cfg.seeds, rows.len(), failures, &files)?;
    log::info!(
        "{} scenarios ({} failed) in {:.1}s",
        rows.len(),
        failures,
        started.elapsed().as_secs_f64()
    );
    Ok(RunSummary {
        scenarios: rows.len(),
        failures,
        files,
    })
}

/// Re-renders tables from a stored `scenarios.csv` into `out`.
pub fn rerender(scenarios: &Path, out: &Path) -> Result<RunSummary> {
    let rows = report::load_rows(scenarios)?;
    prepare_out(out)?;
    let files = report::render_reports(&rows, out)?;
    let failures = rows.iter().filter(|r| !r.is_ok()).count();
    Ok(RunSummary {
        scenarios: rows.len(),
        failures,
        files,
    })
}

pub fn family_name(f: Family) -> &'static str {
    match f {
        Family::Ols => "ols",
        Family::Logit => "logit",
        Family::RandomForest => "random_forest",
        Family::ElasticNet => "elastic_net",
        Family::Mlp2 => "mlp2",
    }
}

#[derive(Debug, Clone)]
pub struct TuneSummary {
    pub results: Vec<GridSearchResult>,
    pub files: Vec<PathBuf>,
}

impl TuneSummary {
    /// 0 when every grid point was scored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.results.iter().all(|r| r.complete && r.failed() == 0) {
            0
        } else {
            1
        }
    }
}

/// Grid search for each configured family on the same half split.
pub fn tune(cfg: &ExperimentConfig, out: &Path, workers: usize, budget: Option<Duration>) -> Result<TuneSummary> {
    cfg.validate()?;
    let t = cfg
        .tune
        .as_ref()
        .ok_or_else(|| Error::Config("field `tune`: the tune verb needs a [tune] section".into()))?;
    prepare_out(out)?;
    let config_text = cfg.to_toml()?;
    let ds = cfg.dataset()?;
    let objective: Objective = t.objective.parse()?;
    let started = Instant::now();
    let pool = pool(workers)?;
    let mut results = Vec::new();
    let mut files = Vec::new();
    for &family in &t.families {
        let mut gs = match t.grid {
            GridKind::Desk => GridSpec::desk(family, t.target)?,
            GridKind::Full => GridSpec::full(family, t.target)?,
        };
        gs.objective = objective;
        gs.split_seed = cfg.seeds.split;
        let remaining = budget.map(|b| b.saturating_sub(started.elapsed()));
        let res = pool.install(|| grid_search_with_budget(&gs, &ds, t.q, remaining))?;
        let name = family_name(family);
        for (rel, writer) in [(format!("grid_{name}.csv"), 0), (format!("best_{name}.csv"), 1)] {
            let mut buf = Vec::new();
            if writer == 0 {
                res.write_score_table(&mut buf)?;
            } else {
                res.write_best_params(&mut buf)?;
            }
            let path = out.join(&rel);
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            files.push(PathBuf::from(rel));
        }
        log::info!(
            "{name}: {} points, best {:?} ({:.1}s elapsed)",
            res.points.len(),
            res.best_score(),
            started.elapsed().as_secs_f64()
        );
        results.push(res);
    }
    let table = summary_table(&results);
    for (rel, text) in [("summary.csv", table.to_csv()?), ("summary.md", table.to_markdown())] {
        let path = out.join(rel);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        files.push(PathBuf::from(rel));
    }
    let cfg_path = out.join("config.toml");
    std::fs::write(&cfg_path, &config_text).map_err(|e| Error::io(&cfg_path, e))?;
    files.push(PathBuf::from("config.toml"));
    let points: usize = results.iter().map(|r| r.points.len()).sum();
    let failed: usize = results.iter().map(|r| r.failed()).sum();
    write_manifest(out, "tune", &config_text, cfg.seeds, points, failed, &files)?;
    Ok(TuneSummary { results, files })
}

/// Max, mean and sd of held-out scores per family.
pub fn summary_table(results: &[GridSearchResult]) -> report::Table {
    let header = ["family", "points", "scored", "max", "mean", "sd", "complete"]
        .map(String::from)
        .to_vec();
    let rows = results
        .iter()
        .map(|r| {
            let s: Option<ScoreSummary> = r.summary;
            let f = |v: Option<f64>| v.map_or_else(|| ".".into(), |v| format!("{v:.4}"));
            vec![
                family_name(r.family).to_string(),
                r.points.len().to_string(),
                r.scores().len().to_string(),
                f(s.map(|s| s.max)),
                f(s.map(|s| s.mean)),
                f(s.map(|s| s.sd)),
                r.complete.to_string(),
            ]
        })
        .collect();
    report::Table { header, rows }
}
