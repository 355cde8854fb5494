//! Income corruption patterns and the observed/missing split.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Household};
use crate::error::{Error, Result};
use crate::rng;

/// Mechanism that decided which incomes are unobserved.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Pattern {
    /// Missing completely at random; the share is the fraction of rows masked.
    Mcar(f64),
    /// Missing at random on a regressor unrelated to income (secondary-sector heads).
    MarPure,
    /// Missing at random on a regressor tied to income (household size below 5).
    MarMnar,
    /// Missing not at random: only incomes above the mean are eligible.
    MnarPure,
}

impl Pattern {
    /// The five MCAR shares and three conditional patterns of the standard sweep.
    pub fn standard_sweep() -> Vec<Pattern> {
        vec![
            Pattern::Mcar(0.95),
            Pattern::Mcar(0.75),
            Pattern::Mcar(0.50),
            Pattern::Mcar(0.25),
            Pattern::Mcar(0.05),
            Pattern::MarPure,
            Pattern::MarMnar,
            Pattern::MnarPure,
        ]
    }

    pub fn label(&self) -> String {
        match self {
            Pattern::Mcar(s) => format!("MCAR{}", crate::dataset::format_sig(s * 100.0, 6)),
            Pattern::MarPure => "MAR_PURE".into(),
            Pattern::MarMnar => "MAR_MNAR".into(),
            Pattern::MnarPure => "MNAR_PURE".into(),
        }
    }

    /// Masks this pattern using the standard 50% target for the conditional patterns.
    pub fn apply(&self, ds: &Dataset, seed: u64) -> Result<MissingnessMask> {
        match *self {
            Pattern::Mcar(share) => mcar(ds, share, seed),
            p => conditional_mask(ds, p, 0.5, seed),
        }
    }

    fn eligible(&self, h: &Household, mean_income: f64) -> bool {
        match self {
            Pattern::Mcar(_) => true,
            Pattern::MarPure => h.sect_sec,
            Pattern::MarMnar => h.hhsize < 5.0,
            Pattern::MnarPure => h.income_pc > mean_income,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        match upper.as_str() {
            "MAR_PURE" | "MARPURE" => Ok(Pattern::MarPure),
            "MAR_MNAR" | "MARMNAR" => Ok(Pattern::MarMnar),
            "MNAR_PURE" | "MNARPURE" => Ok(Pattern::MnarPure),
            _ => {
                let pct = upper
                    .strip_prefix("MCAR")
                    .and_then(|rest| rest.parse::<f64>().ok())
                    .ok_or_else(|| Error::Pattern {
                        pattern: s.to_string(),
                        message: "expected MCAR<percent>, MAR_PURE, MAR_MNAR or MNAR_PURE".into(),
                    })?;
                if !(0.0..=100.0).contains(&pct) {
                    return Err(Error::Domain {
                        name: "MCAR percent",
                        value: pct,
                        domain: "[0, 100]",
                    });
                }
                Ok(Pattern::Mcar(pct / 100.0))
            }
        }
    }
}

/// Which incomes are unobserved (`true` = missing).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissingnessMask {
    missing: Vec<bool>,
    pattern: Pattern,
    seed: u64,
}

impl MissingnessMask {
    /// A mask with nothing missing.
    pub fn none(n: usize) -> Self {
        MissingnessMask {
            missing: vec![false; n],
            pattern: Pattern::Mcar(0.0),
            seed: 0,
        }
    }

    pub fn missing(&self) -> &[bool] {
        &self.missing
    }

    pub fn pattern(&self) -> Pattern {
        self.pattern
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.missing.len()
    }

    pub fn is_empty(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Audit CSV: `id,missing,pattern,seed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "missing", "pattern", "seed"])?;
        let label = self.pattern.label();
        let seed = self.seed.to_string();
        for (i, m) in self.missing.iter().enumerate() {
            w.write_record([i.to_string().as_str(), if *m { "1" } else { "0" }, &label, &seed])?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Nearest integer, halves rounded up: 0.75 · 7062 masks 5297 rows.
fn mask_count(x: f64) -> usize {
    x.round() as usize
}

fn mask_from(n: usize, chosen: impl IntoIterator<Item = usize>, pattern: Pattern, seed: u64) -> MissingnessMask {
    let mut missing = vec![false; n];
    for i in chosen {
        missing[i] = true;
    }
    MissingnessMask { missing, pattern, seed }
}

/// Masks exactly `round(share · n)` rows chosen uniformly without replacement.
pub fn mcar(ds: &Dataset, share: f64, seed: u64) -> Result<MissingnessMask> {
    if !(0.0..=1.0).contains(&share) {
        return Err(Error::Domain {
            name: "share",
            value: share,
            domain: "[0, 1]",
        });
    }
    let n = ds.len();
    let k = mask_count(share * n as f64).min(n);
    let mut rng = rng::stream(seed);
    let chosen = index::sample(&mut rng, n, k);
    Ok(mask_from(n, chosen.iter(), Pattern::Mcar(share), seed))
}

/// Masks `min(round(target_share · n), |eligible|)` rows drawn uniformly from
/// the rows eligible under `pattern`.
pub fn conditional_mask(ds: &Dataset, pattern: Pattern, target_share: f64, seed: u64) -> Result<MissingnessMask> {
    if matches!(pattern, Pattern::Mcar(_)) {
        return Err(Error::Pattern {
            pattern: pattern.label(),
            message: "MCAR is not a conditional pattern".into(),
        });
    }
    if !(target_share > 0.0 && target_share < 1.0) {
        return Err(Error::Domain {
            name: "target_share",
            value: target_share,
            domain: "(0, 1)",
        });
    }
    let n = ds.len();
    let mean_income = ds.incomes().iter().sum::<f64>() / n.max(1) as f64;
    let eligible: Vec<usize> = ds
        .rows()
        .iter()
        .enumerate()
        .filter(|(_, h)| pattern.eligible(h, mean_income))
        .map(|(i, _)| i)
        .collect();
    if eligible.is_empty() {
        return Err(Error::Pattern {
            pattern: pattern.label(),
            message: "no rows satisfy the eligibility condition".into(),
        });
    }
    let k = mask_count(target_share * n as f64).min(eligible.len());
    let mut rng = rng::stream(seed);
    let picks = index::sample(&mut rng, eligible.len(), k);
    Ok(mask_from(n, picks.iter().map(|j| eligible[j]), pattern, seed))
}

/// Row indices of the observed (train) and missing (test) parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split(ds: &Dataset, mask: &MissingnessMask) -> Result<Split> {
    if mask.len() != ds.len() {
        return Err(Error::Alignment {
            expected: ds.len(),
            found: mask.len(),
        });
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| mask.missing[i]);
    Ok(Split { train, test })
}
