//! Synthesize a survey, write it to CSV and read it back.
//!
//! cargo run --example generate_survey -- [out.csv]

use povbench::dataset::{load_csv, poverty_line, synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};

fn main() -> povbench::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("povbench_survey.csv"));

    let cfg = GeneratorConfig::baseline(SURVEY_ROWS, 7);
    println!(
        "noise sd {:.4} (calibrated so the true model explains a third of log income)",
        cfg.noise_sd
    );
    let ds = synthesize(&cfg)?;

    let logs = ds.log_incomes();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    println!("{} households, mean log income {mean:.3}", ds.len());
    for q in [0.25, 0.5, 0.75] {
        println!("  line at q={q}: {:.2}", poverty_line(&ds, q)?);
    }
    let urban = ds.rows().iter().filter(|h| h.urban).count();
    println!("  urban share {:.3}", urban as f64 / ds.len() as f64);

    ds.save_csv(&out)?;
    let back = load_csv(&out, &Covariate::ALL)?;
    println!("wrote {} and read back {} rows", out.display(), back.len());
    Ok(())
}
