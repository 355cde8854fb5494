//! Household survey tables: CSV ingestion and a synthetic generator whose
//! marginals and income equation are calibrated to a national living
//! standards survey (7,062 households, log income per capita on twelve
//! household-head and household covariates).

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng;

/// Survey size used throughout the benchmark.
pub const SURVEY_ROWS: usize = 7062;

/// The twelve regressors of the income equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    Age,
    Age2,
    Hhsize,
    Male,
    Marstat,
    Skills,
    Urban,
    WorkSalaried,
    WorkSelfemployed,
    SectSec,
    SectTert,
    OutLabor,
}

impl Covariate {
    /// Baseline order of the income regression.
    pub const ALL: [Covariate; 12] = [
        Covariate::Age,
        Covariate::Age2,
        Covariate::Hhsize,
        Covariate::Male,
        Covariate::Marstat,
        Covariate::Skills,
        Covariate::Urban,
        Covariate::WorkSalaried,
        Covariate::WorkSelfemployed,
        Covariate::SectSec,
        Covariate::SectTert,
        Covariate::OutLabor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Covariate::Age => "age",
            Covariate::Age2 => "age2",
            Covariate::Hhsize => "hhsize",
            Covariate::Male => "male",
            Covariate::Marstat => "marstat",
            Covariate::Skills => "skills",
            Covariate::Urban => "urban",
            Covariate::WorkSalaried => "work_salaried",
            Covariate::WorkSelfemployed => "work_selfemployed",
            Covariate::SectSec => "sect_sec",
            Covariate::SectTert => "sect_tert",
            Covariate::OutLabor => "out_labor",
        }
    }

    pub fn is_binary(self) -> bool {
        !matches!(self, Covariate::Age | Covariate::Age2 | Covariate::Hhsize)
    }

    pub fn value(self, h: &Household) -> f64 {
        match self {
            Covariate::Age => h.age,
            Covariate::Age2 => h.age2,
            Covariate::Hhsize => h.hhsize,
            Covariate::Male => flag(h.male),
            Covariate::Marstat => flag(h.marstat),
            Covariate::Skills => flag(h.skills),
            Covariate::Urban => flag(h.urban),
            Covariate::WorkSalaried => flag(h.work_salaried),
            Covariate::WorkSelfemployed => flag(h.work_selfemployed),
            Covariate::SectSec => flag(h.sect_sec),
            Covariate::SectTert => flag(h.sect_tert),
            Covariate::OutLabor => flag(h.out_labor),
        }
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Covariate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Covariate::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown covariate `{s}`")))
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Alternative regressor sets, for comparing model variants against each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorSet {
    /// All twelve regressors in baseline order.
    Model1,
    /// Same regressors with the continuous ones (age, age2, hhsize) moved last.
    Model2,
    /// Drops age, age2 and hhsize.
    Model3,
    /// Keeps only male, marstat and urban.
    Model4,
}

impl RegressorSet {
    pub fn covariates(self) -> Vec<Covariate> {
        use Covariate::*;
        match self {
            RegressorSet::Model1 => Covariate::ALL.to_vec(),
            RegressorSet::Model2 => Covariate::ALL
                .iter()
                .copied()
                .filter(|c| c.is_binary())
                .chain([Age, Age2, Hhsize])
                .collect(),
            RegressorSet::Model3 => Covariate::ALL.iter().copied().filter(|c| c.is_binary()).collect(),
            RegressorSet::Model4 => vec![Male, Marstat, Urban],
        }
    }
}

/// One surveyed household.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: usize,
    pub income_pc: f64,
    pub log_income: f64,
    pub age: f64,
    pub age2: f64,
    pub hhsize: f64,
    pub male: bool,
    pub marstat: bool,
    pub skills: bool,
    pub urban: bool,
    pub work_salaried: bool,
    pub work_selfemployed: bool,
    pub work_unpaid: bool,
    pub sect_sec: bool,
    pub sect_tert: bool,
    pub out_labor: bool,
}

impl Household {
    /// Checks the per-row invariants; `row` is used for error reporting.
    pub fn validate(&self, row: usize) -> Result<()> {
        let fail = |message: String| Err(Error::Validation { row, message });
        if !(self.income_pc.is_finite() && self.income_pc > 0.0) {
            return fail(format!("income_pc must be positive, got {}", self.income_pc));
        }
        if !(15.0..=98.0).contains(&self.age) {
            return fail(format!("age {} outside [15, 98]", self.age));
        }
        if !(1.0..=24.0).contains(&self.hhsize) || self.hhsize.fract() != 0.0 {
            return fail(format!("hhsize {} is not an integer in [1, 24]", self.hhsize));
        }
        let occupations = [
            self.work_salaried,
            self.work_selfemployed,
            self.work_unpaid,
            self.out_labor,
        ];
        if occupations.iter().filter(|&&b| b).count() > 1 {
            return fail("occupation indicators are not mutually exclusive".into());
        }
        if self.sect_sec && self.sect_tert {
            return fail("sect_sec and sect_tert both set".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Loaded,
    Synthetic { seed: u64 },
}

/// An ordered table of households.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Household>,
    regressor_order: Vec<Covariate>,
    provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, renumbering ids from 0 and validating every row.
    pub fn new(mut rows: Vec<Household>, regressor_order: Vec<Covariate>, provenance: Provenance) -> Result<Self> {
        let mut seen = regressor_order.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != regressor_order.len() {
            return Err(Error::Schema("regressor order repeats a covariate".into()));
        }
        for (i, h) in rows.iter_mut().enumerate() {
            h.id = i;
            h.log_income = h.income_pc.ln();
            h.age2 = h.age * h.age;
            h.validate(i + 1)?;
        }
        Ok(Dataset {
            rows,
            regressor_order,
            provenance,
        })
    }

    pub fn rows(&self) -> &[Household] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn regressor_order(&self) -> &[Covariate] {
        &self.regressor_order
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn incomes(&self) -> Vec<f64> {
        self.rows.iter().map(|h| h.income_pc).collect()
    }

    pub fn log_incomes(&self) -> Vec<f64> {
        self.rows.iter().map(|h| h.log_income).collect()
    }

    /// Covariate matrix over all rows, columns in the given order.
    pub fn matrix(&self, covariates: &[Covariate]) -> Matrix {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.matrix_rows(covariates, &idx)
    }

    /// Covariate matrix over the selected rows.
    pub fn matrix_rows(&self, covariates: &[Covariate], idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * covariates.len());
        for &i in idx {
            let h = &self.rows[i];
            data.extend(covariates.iter().map(|c| c.value(h)));
        }
        Matrix::from_vec(idx.len(), covariates.len(), data).expect("shape is consistent")
    }

    /// Writes the dataset as CSV with twelve significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for h in &self.rows {
            let b = |v: bool| if v { "1" } else { "0" };
            w.write_record([
                h.id.to_string(),
                format_sig(h.income_pc, 12),
                format_sig(h.age, 12),
                format_sig(h.age2, 12),
                format_sig(h.hhsize, 12),
                b(h.male).into(),
                b(h.marstat).into(),
                b(h.skills).into(),
                b(h.urban).into(),
                b(h.work_salaried).into(),
                b(h.work_selfemployed).into(),
                b(h.work_unpaid).into(),
                b(h.sect_sec).into(),
                b(h.sect_tert).into(),
                b(h.out_labor).into(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Column layout of the CSV interchange format.
pub const CSV_COLUMNS: [&str; 15] = [
    "id",
    "income_pc",
    "age",
    "age2",
    "hhsize",
    "male",
    "marstat",
    "skills",
    "urban",
    "work_salaried",
    "work_selfemployed",
    "work_unpaid",
    "sect_sec",
    "sect_tert",
    "out_labor",
];

/// Decimal rendering with `digits` significant digits, no exponent.
pub fn format_sig(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    if v.fract() == 0.0 && v.abs() < 1e15 {
        return format!("{v:.0}");
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Loads a survey CSV. `schema` names the regressors the caller will use;
/// `income_pc`, `age` and `hhsize` are always required, other household
/// indicators default to 0 when absent. Columns are bound by name, and
/// `log_income`/`age2` are recomputed from the raw columns. Row numbers in
/// errors count data lines from 1.
pub fn load_csv(path: impl AsRef<Path>, schema: &[Covariate]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(std::io::BufReader::new(file), schema)
}

pub fn read_csv<R: Read>(input: R, schema: &[Covariate]) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let find = |name: &str| header.iter().position(|h| h == name);

    let mut required: Vec<&str> = vec!["income_pc", "age", "hhsize"];
    required.extend(schema.iter().filter(|c| **c != Covariate::Age2).map(|c| c.name()));
    for name in &required {
        if find(name).is_none() {
            return Err(Error::Schema(format!("missing column `{name}`")));
        }
    }
    let col = |name: &str| find(name);
    let income_col = col("income_pc").unwrap();
    let age_col = col("age").unwrap();
    let hh_col = col("hhsize").unwrap();
    let flag_cols: Vec<(&str, Option<usize>)> = CSV_COLUMNS[5..].iter().map(|&name| (name, col(name))).collect();

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record?;
        let num = |c: usize, name: &str| -> Result<f64> {
            let cell = record.get(c).unwrap_or("");
            cell.parse::<f64>().map_err(|e| Error::Parse {
                row,
                column: name.to_string(),
                message: format!("`{cell}`: {e}"),
            })
        };
        let mut flags = [false; 10];
        for (slot, (name, c)) in flags.iter_mut().zip(&flag_cols) {
            if let Some(c) = c {
                let v = num(*c, name)?;
                if v != 0.0 && v != 1.0 {
                    return Err(Error::Validation {
                        row,
                        message: format!("{name} must be 0 or 1, got {v}"),
                    });
                }
                *slot = v == 1.0;
            }
        }
        let income_pc = num(income_col, "income_pc")?;
        if income_pc.is_nan() || income_pc <= 0.0 {
            return Err(Error::Validation {
                row,
                message: format!("income_pc must be positive, got {income_pc}"),
            });
        }
        let age = num(age_col, "age")?;
        let [male, marstat, skills, urban, work_salaried, work_selfemployed, work_unpaid, sect_sec, sect_tert, out_labor] =
            flags;
        rows.push(Household {
            id: i,
            income_pc,
            log_income: income_pc.ln(),
            age,
            age2: age * age,
            hhsize: num(hh_col, "hhsize")?,
            male,
            marstat,
            skills,
            urban,
            work_salaried,
            work_selfemployed,
            work_unpaid,
            sect_sec,
            sect_tert,
            out_labor,
        });
    }
    Dataset::new(rows, schema.to_vec(), Provenance::Loaded)
}

/// Target marginals for the covariate generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateMarginals {
    pub age_mean: f64,
    pub age_sd: f64,
    pub hhsize_mean: f64,
    pub hhsize_sd: f64,
    pub male: f64,
    pub marstat: f64,
    pub skills: f64,
    pub urban: f64,
    /// Head occupation shares: salaried, self-employed, unpaid, employer/other, out of labor force.
    pub occupation: [f64; 5],
    /// Overall shares of the secondary and tertiary sectors.
    pub sect_sec: f64,
    pub sect_tert: f64,
}

impl Default for CovariateMarginals {
    fn default() -> Self {
        CovariateMarginals {
            age_mean: 51.64,
            age_sd: 14.00,
            hhsize_mean: 5.14,
            hhsize_sd: 2.43,
            male: 0.82,
            marstat: 0.83,
            skills: 0.19,
            urban: 0.60,
            occupation: [0.39, 0.31, 0.0025, 0.0375, 0.26],
            sect_sec: 0.17,
            sect_tert: 0.33,
        }
    }
}

/// Income equation: intercept plus one coefficient per covariate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub intercept: f64,
    pub betas: Vec<(Covariate, f64)>,
}

impl Coefficients {
    /// Baseline OLS estimates of log income per capita.
    pub fn baseline() -> Self {
        use Covariate::*;
        Coefficients {
            intercept: 9.156962,
            betas: vec![
                (Age, 0.0165937),
                (Age2, -0.0001052),
                (Hhsize, -0.1087016),
                (Male, 0.1536354),
                (Marstat, -0.0538351),
                (Skills, 0.5101445),
                (Urban, 0.2795772),
                (WorkSalaried, -0.4529071),
                (WorkSelfemployed, -0.3464273),
                (SectSec, -0.0749966),
                (SectTert, 0.0828654),
                (OutLabor, -0.1971939),
            ],
        }
    }

    /// Reported standard errors of [`Coefficients::baseline`], intercept first.
    pub fn baseline_standard_errors() -> (f64, Vec<(Covariate, f64)>) {
        use Covariate::*;
        (
            0.0929127,
            vec![
                (Age, 0.003265),
                (Age2, 0.0000301),
                (Hhsize, 0.0031699),
                (Male, 0.0297315),
                (Marstat, 0.0289874),
                (Skills, 0.0207039),
                (Urban, 0.0180025),
                (WorkSalaried, 0.0386937),
                (WorkSelfemployed, 0.0395114),
                (SectSec, 0.0264836),
                (SectTert, 0.0233992),
                (OutLabor, 0.0439236),
            ],
        )
    }

    pub fn beta(&self, c: Covariate) -> f64 {
        self.betas.iter().find(|(k, _)| *k == c).map_or(0.0, |(_, b)| *b)
    }

    pub fn linear_predictor(&self, h: &Household) -> f64 {
        self.intercept + self.betas.iter().map(|(c, b)| b * c.value(h)).sum::<f64>()
    }
}

/// Target population R² of the generating income equation.
pub const TARGET_R2: f64 = 0.33;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n: usize,
    pub seed: u64,
    pub coefficients: Coefficients,
    pub noise_sd: f64,
    pub marginals: CovariateMarginals,
}

impl GeneratorConfig {
    /// Baseline coefficients and marginals, with `noise_sd` calibrated to
    /// [`TARGET_R2`].
    pub fn baseline(n: usize, seed: u64) -> Self {
        static NOISE: OnceLock<f64> = OnceLock::new();
        let coefficients = Coefficients::baseline();
        let marginals = CovariateMarginals::default();
        let noise_sd =
            *NOISE.get_or_init(|| calibrate_noise_sd(&coefficients, &marginals, TARGET_R2, 1_000_000, PILOT_SEED));
        GeneratorConfig {
            n,
            seed,
            coefficients,
            noise_sd,
            marginals,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 100 {
            return Err(Error::Size { n: self.n, min: 100 });
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::Config(format!(
                "noise_sd must be finite and non-negative, got {}",
                self.noise_sd
            )));
        }
        let m = &self.marginals;
        let occ: f64 = m.occupation.iter().sum();
        if (occ - 1.0).abs() > 1e-9 || m.occupation.iter().any(|p| *p < 0.0) {
            return Err(Error::Config("occupation shares must sum to 1".into()));
        }
        let employed = 1.0 - m.occupation[4];
        if m.sect_sec + m.sect_tert > employed + 1e-12 {
            return Err(Error::Config("sector shares exceed the employed share".into()));
        }
        for (name, p) in [
            ("male", m.male),
            ("marstat", m.marstat),
            ("skills", m.skills),
            ("urban", m.urban),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} share {p} outside [0, 1]")));
            }
        }
        if !(m.age_sd > 0.0 && m.hhsize_sd > 0.0) {
            return Err(Error::Config("age and hhsize spreads must be positive".into()));
        }
        Ok(())
    }
}

const PILOT_SEED: u64 = 0x5eed_0fc0_ffee;

/// Noise sd that gives the generating model a population R² of `r2`,
/// estimated from `pilot_rows` covariate draws.
pub fn calibrate_noise_sd(
    coefficients: &Coefficients,
    marginals: &CovariateMarginals,
    r2: f64,
    pilot_rows: usize,
    seed: u64,
) -> f64 {
    let sampler = CovariateSampler::new(marginals);
    let mut rng = rng::stream(seed);
    // Welford running variance.
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..pilot_rows {
        let h = sampler.draw(&mut rng, 0, 1.0);
        let xb = coefficients.linear_predictor(&h);
        let delta = xb - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (xb - mean);
    }
    let var_xb = m2 / (pilot_rows - 1) as f64;
    (var_xb * (1.0 - r2) / r2).sqrt()
}

struct CovariateSampler<'a> {
    m: &'a CovariateMarginals,
    age_loc: f64,
    hhsize_loc: f64,
}

impl<'a> CovariateSampler<'a> {
    fn new(m: &'a CovariateMarginals) -> Self {
        CovariateSampler {
            m,
            age_loc: rounded_truncated_location(m.age_mean, m.age_sd, 15, 98),
            hhsize_loc: rounded_truncated_location(m.hhsize_mean, m.hhsize_sd, 1, 24),
        }
    }

    fn draw(&self, rng: &mut rng::Rng, id: usize, income_pc: f64) -> Household {
        let m = self.m;
        let age = rounded_truncated(rng, self.age_loc, m.age_sd, 15, 98);
        let hhsize = rounded_truncated(rng, self.hhsize_loc, m.hhsize_sd, 1, 24);
        let occ = categorical(rng, &m.occupation);
        let employed = occ != 4;
        let employed_share = 1.0 - m.occupation[4];
        let (sect_sec, sect_tert) = if employed {
            let u: f64 = rng.random();
            (
                u < m.sect_sec / employed_share,
                u >= m.sect_sec / employed_share && u < (m.sect_sec + m.sect_tert) / employed_share,
            )
        } else {
            (false, false)
        };
        Household {
            id,
            income_pc,
            log_income: income_pc.ln(),
            age,
            age2: age * age,
            hhsize,
            male: rng.random::<f64>() < m.male,
            marstat: rng.random::<f64>() < m.marstat,
            skills: rng.random::<f64>() < m.skills,
            urban: rng.random::<f64>() < m.urban,
            work_salaried: occ == 0,
            work_selfemployed: occ == 1,
            work_unpaid: occ == 2,
            sect_sec,
            sect_tert,
            out_labor: occ == 4,
        }
    }
}

fn categorical(rng: &mut rng::Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn rounded_truncated(rng: &mut rng::Rng, loc: f64, sd: f64, lo: i64, hi: i64) -> f64 {
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let v = (loc + sd * z).round();
        if v >= lo as f64 && v <= hi as f64 {
            return v;
        }
    }
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Mean of `round(N(loc, sd))` conditioned on landing in `[lo, hi]`.
fn rounded_truncated_mean(loc: f64, sd: f64, lo: i64, hi: i64) -> f64 {
    let (mut mass, mut first) = (0.0, 0.0);
    for k in lo..=hi {
        let p = normal_cdf((k as f64 + 0.5 - loc) / sd) - normal_cdf((k as f64 - 0.5 - loc) / sd);
        mass += p;
        first += p * k as f64;
    }
    first / mass
}

/// Location of the underlying Gaussian whose rounded, truncated draws have
/// mean `target`.
fn rounded_truncated_location(target: f64, sd: f64, lo: i64, hi: i64) -> f64 {
    let (mut a, mut b) = (lo as f64 - 4.0 * sd, hi as f64 + 4.0 * sd);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if rounded_truncated_mean(mid, sd, lo, hi) < target {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Generates a bias-free synthetic survey.
///
/// Covariates are drawn independently except for the occupation/sector
/// exclusivity; `ln(income_pc) = intercept + Σ β·x + ε` with Gaussian `ε`
/// of sd `noise_sd`.
pub fn synthesize(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let sampler = CovariateSampler::new(&cfg.marginals);
    let mut rng = rng::stream(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.n);
    for id in 0..cfg.n {
        let mut h = sampler.draw(&mut rng, id, 1.0);
        let eps: f64 = StandardNormal.sample(&mut rng);
        let log_income = cfg.coefficients.linear_predictor(&h) + cfg.noise_sd * eps;
        h.income_pc = log_income.exp();
        h.log_income = log_income;
        rows.push(h);
    }
    Ok(Dataset {
        rows,
        regressor_order: Covariate::ALL.to_vec(),
        provenance: Provenance::Synthetic { seed: cfg.seed },
    })
}

/// Lower empirical quantile of per-capita income: the `⌈q·n⌉`-th order
/// statistic, so the share of rows at or below the line is `⌈q·n⌉/n` when
/// incomes are distinct.
pub fn poverty_line(ds: &Dataset, q: f64) -> Result<f64> {
    quantile_line(&ds.incomes(), q)
}

pub(crate) fn quantile_line(values: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain {
            name: "q",
            value: q,
            domain: "(0, 1)",
        });
    }
    if values.is_empty() {
        return Err(Error::Size { n: 0, min: 1 });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let k = ((q * n as f64) - 1e-9).ceil().max(1.0) as usize;
    Ok(sorted[k.min(n) - 1])
}

/// `true` where per-capita income is at or below the line.
pub fn label_poor(ds: &Dataset, z: f64) -> Vec<bool> {
    ds.rows.iter().map(|h| h.income_pc <= z).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(incomes: &[f64]) -> Dataset {
        let rows = incomes
            .iter()
            .map(|&income_pc| Household {
                id: 0,
                income_pc,
                log_income: 0.0,
                age: 40.0,
                age2: 0.0,
                hhsize: 4.0,
                male: true,
                marstat: true,
                skills: false,
                urban: true,
                work_salaried: true,
                work_selfemployed: false,
                work_unpaid: false,
                sect_sec: false,
                sect_tert: true,
                out_labor: false,
            })
            .collect();
        Dataset::new(rows, Covariate::ALL.to_vec(), Provenance::Loaded).unwrap()
    }

    #[test]
    fn quantile_line_on_order_statistics() {
        let ds = toy(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(poverty_line(&ds, 0.5).unwrap(), 2.0);
        assert_eq!(poverty_line(&ds, 0.25).unwrap(), 1.0);
        let rate = |z| label_poor(&ds, z).iter().filter(|&&b| b).count() as f64 / 4.0;
        assert_eq!(rate(2.0), 0.5);
        assert_eq!(rate(1.0), 0.25);
        assert!(matches!(poverty_line(&ds, 1.0), Err(Error::Domain { .. })));
        assert!(matches!(poverty_line(&ds, 0.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn labels_are_inclusive_at_the_line() {
        let ds = toy(&[1.0, 2.0, 3.0]);
        assert_eq!(label_poor(&ds, 2.0), vec![true, true, false]);
        assert_eq!(label_poor(&ds, 3.0), vec![true, true, true]);
    }

    #[test]
    fn derived_columns_are_recomputed() {
        let ds = toy(&[100.0, 200.0, 400.0]);
        let li = ds.log_incomes();
        for (got, want) in li.iter().zip([4.6052, 5.2983, 5.9915]) {
            assert!((got - want).abs() < 5e-5);
        }
        assert!(ds.rows().iter().all(|h| h.age2 == h.age * h.age));
        assert_eq!(ds.rows()[2].id, 2);
    }

    #[test]
    fn rounded_truncated_location_hits_target_mean() {
        let loc = rounded_truncated_location(5.14, 2.43, 1, 24);
        assert!(loc < 5.14);
        assert!((rounded_truncated_mean(loc, 2.43, 1, 24) - 5.14).abs() < 1e-9);
    }

    #[test]
    fn sig_formatting() {
        assert_eq!(format_sig(13118.456789012345, 12), "13118.456789");
        assert_eq!(format_sig(13118.4567891234, 12), "13118.4567891");
        assert_eq!(format_sig(0.000123456789012345, 12), "0.000123456789012");
        assert_eq!(format_sig(42.0, 12), "42");
    }

    #[test]
    fn size_and_noise_are_validated() {
        let mut cfg = GeneratorConfig {
            n: 99,
            seed: 1,
            coefficients: Coefficients::baseline(),
            noise_sd: 0.5,
            marginals: CovariateMarginals::default(),
        };
        assert!(matches!(synthesize(&cfg), Err(Error::Size { .. })));
        cfg.n = 100;
        cfg.noise_sd = -1.0;
        assert!(matches!(synthesize(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn regressor_sets() {
        assert_eq!(RegressorSet::Model1.covariates().len(), 12);
        let m2 = RegressorSet::Model2.covariates();
        assert_eq!(&m2[9..], &[Covariate::Age, Covariate::Age2, Covariate::Hhsize]);
        assert_eq!(RegressorSet::Model3.covariates().len(), 9);
        assert_eq!(RegressorSet::Model4.covariates().len(), 3);
    }
}
