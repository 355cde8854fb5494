//! Scenario rows and the tables rendered from them.
//!
//! Every table is a pure function of the stored scenario rows, so `report`
//! can re-render a finished run without refitting anything.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{metrics, rank_models, ConfusionMatrix, Direction, Objective, ObjectiveReport};

/// Cutpoint column value for continuous models.
pub const NO_CUTPOINT: &str = "-";

/// One line of `scenarios.csv`. Count and rate fields are empty for failed scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRow {
    pub q: f64,
    pub line: Option<f64>,
    pub pattern: String,
    pub model: String,
    /// Configured cutpoint, or `-` for continuous models.
    pub cutpoint: String,
    pub applied_cutpoint: Option<f64>,
    pub train_rows: Option<usize>,
    pub scored_rows: Option<usize>,
    /// Regressors dropped as constant on the observed rows, `;`-separated.
    pub dropped: String,
    pub true_rate: Option<f64>,
    pub predicted_rate: Option<f64>,
    pub population_true_rate: Option<f64>,
    pub population_rate: Option<f64>,
    pub adjusted_rate: Option<f64>,
    pub tp: Option<u64>,
    pub tn: Option<u64>,
    pub fp: Option<u64>,
    #[serde(rename = "fn")]
    pub fn_: Option<u64>,
    /// `ok` or the failure message.
    pub status: String,
}

impl ScenarioRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn confusion(&self) -> Option<ConfusionMatrix> {
        Some(ConfusionMatrix::new(self.tp?, self.tn?, self.fp?, self.fn_?))
    }

    pub fn report(&self) -> Option<ObjectiveReport> {
        self.confusion().map(|cm| metrics(&cm))
    }
}

pub fn write_rows<W: Write>(rows: &[ScenarioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("scenario rows", e))?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ScenarioRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn load_rows(path: impl AsRef<Path>) -> Result<Vec<ScenarioRow>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_rows(std::io::BufReader::new(f))
}

/// A rectangular table of rendered cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::State(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::State(e.to_string()))
    }

    /// Pipe table with every column padded to its widest cell.
    pub fn to_markdown(&self) -> String {
        let cols = self.header.len();
        let mut width = vec![3usize; cols];
        for r in std::iter::once(&self.header).chain(&self.rows) {
            for (w, c) in width.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&width)
                .enumerate()
                .map(|(k, (c, w))| if k == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut s = line(&self.header);
        let rule: Vec<String> = width
            .iter()
            .enumerate()
            .map(|(k, w)| {
                if k == 0 {
                    "-".repeat(*w)
                } else {
                    format!("{}:", "-".repeat(w - 1))
                }
            })
            .collect();
        s.push_str(&format!("| {} |\n", rule.join(" | ")));
        for r in &self.rows {
            s.push_str(&line(r));
        }
        s
    }
}

const MISSING: &str = ".";

fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.2}"))
}

fn model_header(models: &[String]) -> Vec<String> {
    let mut h = vec![String::new()];
    for m in models {
        h.push(m.clone());
        h.push(format!("{m}_r"));
    }
    h
}

/// Distinct values in order of first appearance.
fn ordered<T: PartialEq + Clone>(items: impl IntoIterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for i in items {
        if !out.contains(&i) {
            out.push(i);
        }
    }
    out
}

/// The axes of a run, recovered from its rows in output order.
#[derive(Debug, Clone, PartialEq)]
pub struct RunAxes {
    pub lines: Vec<f64>,
    pub patterns: Vec<String>,
    pub models: Vec<String>,
    /// Configured cutpoints of categorical rows; `-` alone when there are none.
    pub cutpoints: Vec<String>,
}

impl RunAxes {
    pub fn of(rows: &[ScenarioRow]) -> Self {
        let mut cutpoints = ordered(rows.iter().map(|r| r.cutpoint.clone()).filter(|c| c != NO_CUTPOINT));
        if cutpoints.is_empty() {
            cutpoints.push(NO_CUTPOINT.to_string());
        }
        RunAxes {
            lines: ordered(rows.iter().map(|r| r.q)),
            patterns: ordered(rows.iter().map(|r| r.pattern.clone())),
            models: ordered(rows.iter().map(|r| r.model.clone())),
            cutpoints,
        }
    }
}

/// The row for `model` in one comparison cell: continuous rows ignore the cutpoint.
fn cell<'a>(rows: &'a [ScenarioRow], q: f64, pattern: &str, model: &str, cut: &str) -> Option<&'a ScenarioRow> {
    rows.iter().find(|r| {
        r.q == q && r.pattern == pattern && r.model == model && (r.cutpoint == NO_CUTPOINT || r.cutpoint == cut)
    })
}

/// Every objective for every model at one (line, pattern, cutpoint), with
/// horizontal rank columns.
pub fn comparison_table(rows: &[ScenarioRow], models: &[String], q: f64, pattern: &str, cut: &str) -> Table {
    let reports: Vec<Option<ObjectiveReport>> = models
        .iter()
        .map(|m| cell(rows, q, pattern, m, cut).and_then(|r| r.report()))
        .collect();
    let mut out = Vec::new();
    for obj in Objective::ALL {
        let values: Vec<Option<f64>> = reports.iter().map(|r| r.as_ref().and_then(|r| obj.value(r))).collect();
        let ranks = obj.direction().map(|d| rank_models(&values, d));
        let mut line = vec![obj.label().to_string()];
        for (k, v) in values.iter().enumerate() {
            line.push(match v {
                Some(v) if obj.is_count() => format!("{v:.0}"),
                Some(v) if v.is_infinite() => {
                    if *v > 0.0 {
                        "inf".into()
                    } else {
                        "-inf".into()
                    }
                }
                other => fmt2(*other),
            });
            line.push(match &ranks {
                Some(r) if !r[k].undefined => r[k].rank.to_string(),
                _ => MISSING.to_string(),
            });
        }
        out.push(line);
    }
    Table {
        header: model_header(models),
        rows: out,
    }
}

/// Whole-sample predicted rates by line and pattern, ranked by distance to the
/// true rate, with an average row per line.
pub fn rates_table(rows: &[ScenarioRow], axes: &RunAxes, cut: &str) -> Table {
    let n_models = axes.models.len();
    let mut out = Vec::new();
    for &q in &axes.lines {
        let mut head = vec![format!("PovLine={}%", crate::dataset::format_sig(q * 100.0, 6))];
        head.extend(std::iter::repeat_n(MISSING.to_string(), 2 * n_models));
        out.push(head);
        let mut rate_sum = vec![(0.0, 0usize); n_models];
        let mut rank_sum = vec![(0.0, 0usize); n_models];
        for p in &axes.patterns {
            let cells: Vec<Option<&ScenarioRow>> = axes
                .models
                .iter()
                .map(|m| cell(rows, q, p, m, cut).filter(|r| r.is_ok()))
                .collect();
            let rates: Vec<Option<f64>> = cells.iter().map(|c| c.and_then(|r| r.population_rate)).collect();
            let gaps: Vec<Option<f64>> = cells
                .iter()
                .map(|c| c.and_then(|r| Some((r.population_rate? - r.population_true_rate?).abs())))
                .collect();
            let ranks = rank_models(&gaps, Direction::Min);
            let mut line = vec![p.clone()];
            for k in 0..n_models {
                line.push(fmt2(rates[k]));
                if let Some(v) = rates[k] {
                    rate_sum[k].0 += v;
                    rate_sum[k].1 += 1;
                }
                if ranks[k].undefined {
                    line.push(MISSING.to_string());
                } else {
                    line.push(ranks[k].rank.to_string());
                    rank_sum[k].0 += ranks[k].rank as f64;
                    rank_sum[k].1 += 1;
                }
            }
            out.push(line);
        }
        let mean = |(s, c): (f64, usize)| (c > 0).then(|| s / c as f64);
        let mut avg = vec!["Average".to_string()];
        for k in 0..n_models {
            avg.push(fmt2(mean(rate_sum[k])));
            avg.push(fmt2(mean(rank_sum[k])));
        }
        out.push(avg);
    }
    Table {
        header: model_header(&axes.models),
        rows: out,
    }
}

/// Scored-row true, predicted and error-adjusted rates, for rows that carry an adjustment.
pub fn adjusted_table(rows: &[ScenarioRow]) -> Option<Table> {
    let with: Vec<&ScenarioRow> = rows.iter().filter(|r| r.adjusted_rate.is_some()).collect();
    if with.is_empty() {
        return None;
    }
    let header = [
        "pattern",
        "q",
        "model",
        "cutpoint",
        "true_rate",
        "predicted_rate",
        "adjusted_rate",
    ]
    .map(String::from)
    .to_vec();
    let body = with
        .iter()
        .map(|r| {
            vec![
                r.pattern.clone(),
                r.q.to_string(),
                r.model.clone(),
                r.cutpoint.clone(),
                fmt2(r.true_rate),
                fmt2(r.predicted_rate),
                fmt2(r.adjusted_rate),
            ]
        })
        .collect();
    Some(Table { header, rows: body })
}

/// Step CDF of `values`: `(min, 0)` then `(v, share ≤ v)` at each distinct value.
pub fn cdf_points(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out = vec![(v[0], 0.0)];
    for (k, x) in v.iter().enumerate() {
        if k + 1 == v.len() || v[k + 1] != *x {
            out.push((*x, (k + 1) as f64 / n));
        }
    }
    out
}

/// `series,q,value,cumulative_share` rows for every named series.
pub fn write_cdf<W: Write>(series: &[(String, String, Vec<f64>)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "q", "value", "cumulative_share"])?;
    for (name, q, values) in series {
        for (v, s) in cdf_points(values) {
            w.write_record([name.as_str(), q.as_str(), &v.to_string(), &s.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io("cdf", e))?;
    Ok(())
}

fn file_tag(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '.' || c == '_' {
                c
            } else {
                '-'
            }
        })
        .collect()
}

fn write_file(dir: &Path, rel: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(PathBuf::from(rel));
    Ok(())
}

/// Writes every table derivable from `rows` under `dir`; returns the paths
/// written, relative to `dir`.
pub fn render_reports(rows: &[ScenarioRow], dir: &Path) -> Result<Vec<PathBuf>> {
    let axes = RunAxes::of(rows);
    let mut written = Vec::new();
    for &q in &axes.lines {
        for p in &axes.patterns {
            for cut in &axes.cutpoints {
                let t = comparison_table(rows, &axes.models, q, p, cut);
                let stem = format!("comparison/{}_q{}_c{}", file_tag(p), q, file_tag(cut));
                write_file(dir, &format!("{stem}.csv"), &t.to_csv()?, &mut written)?;
                write_file(dir, &format!("{stem}.md"), &t.to_markdown(), &mut written)?;
            }
        }
    }
    for cut in &axes.cutpoints {
        let t = rates_table(rows, &axes, cut);
        let stem = format!("rates_c{}", file_tag(cut));
        write_file(dir, &format!("{stem}.csv"), &t.to_csv()?, &mut written)?;
        write_file(dir, &format!("{stem}.md"), &t.to_markdown(), &mut written)?;
    }
    if let Some(t) = adjusted_table(rows) {
        write_file(dir, "adjusted_rates.csv", &t.to_csv()?, &mut written)?;
        write_file(dir, "adjusted_rates.md", &t.to_markdown(), &mut written)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_values_give_a_two_point_step() {
        assert_eq!(cdf_points(&[3.0, 3.0, 3.0]), vec![(3.0, 0.0), (3.0, 1.0)]);
        assert_eq!(
            cdf_points(&[2.0, 1.0, 2.0, 4.0]),
            vec![(1.0, 0.0), (1.0, 0.25), (2.0, 0.75), (4.0, 1.0)]
        );
    }

    #[test]
    fn markdown_is_aligned() {
        let t = Table {
            header: vec!["".into(), "a".into()],
            rows: vec![vec!["Accuracy(max)".into(), "69.56".into()]],
        };
        let md = t.to_markdown();
        let widths: Vec<usize> = md.lines().map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{md}");
    }
}
