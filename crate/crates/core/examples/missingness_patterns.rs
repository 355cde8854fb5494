//! Every standard missingness pattern applied to one survey.

use povbench::dataset::{synthesize, GeneratorConfig, SURVEY_ROWS};
use povbench::missingness::{split, Pattern};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 3))?;
    let mean_income = ds.incomes().iter().sum::<f64>() / ds.len() as f64;

    println!(
        "{:<10} {:>7} {:>7} {:>12} {:>12}",
        "pattern", "masked", "train", "mean income", "mean hhsize"
    );
    for p in Pattern::standard_sweep() {
        let mask = p.apply(&ds, 11)?;
        let parts = split(&ds, &mask)?;
        let masked = &parts.test;
        let avg = |f: &dyn Fn(usize) -> f64| {
            if masked.is_empty() {
                f64::NAN
            } else {
                masked.iter().map(|&i| f(i)).sum::<f64>() / masked.len() as f64
            }
        };
        println!(
            "{:<10} {:>7} {:>7} {:>12.1} {:>12.2}",
            p.label(),
            mask.missing_count(),
            parts.train.len(),
            avg(&|i| ds.rows()[i].income_pc),
            avg(&|i| ds.rows()[i].hhsize),
        );
    }
    println!("sample mean income {mean_income:.1}");

    // masks are plain CSV: id, missing, pattern, seed
    let mask = "MNAR_PURE".parse::<Pattern>()?.apply(&ds, 11)?;
    let mut buf = Vec::new();
    mask.write_csv(&mut buf)?;
    let text = String::from_utf8(buf).expect("utf8");
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
