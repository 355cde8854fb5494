//! Re-adding resampled residuals restores the tails that point predictions lose.

use povbench::dataset::{synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};
use povbench::missingness::{split, Pattern};
use povbench::models::{predict, Design, ModelCode, ModelSpec};
use povbench::pipeline::{classify_continuous, error_adjusted_rate, fit_observed, line_for, LineSource};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 21))?;
    let mask = Pattern::Mcar(0.5).apply(&ds, 21)?;
    let parts = split(&ds, &mask)?;
    let fit = fit_observed(
        &ds,
        &parts.train,
        &ModelSpec::new(ModelCode::Wcn, &Covariate::ALL),
        None,
    )?;
    let x = Design::from_dataset(&ds, &fit.covariates, &parts.test);
    let preds = predict(&fit.model, &x)?;

    println!("{:>5} {:>8} {:>9} {:>9}", "q", "true", "point", "adjusted");
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let (_, log_line) = line_for(&ds, &parts.train, q, LineSource::Full)?;
        let point = classify_continuous(&preds, log_line)?;
        let point = 100.0 * point.iter().filter(|&&b| b).count() as f64 / point.len() as f64;
        let truth = parts
            .test
            .iter()
            .filter(|&&i| ds.rows()[i].log_income <= log_line)
            .count();
        let truth = 100.0 * truth as f64 / parts.test.len() as f64;
        let adjusted = error_adjusted_rate(&fit.model, &x, log_line, 100, 99)?;
        println!("{q:>5} {truth:>8.2} {point:>9.2} {adjusted:>9.2}");
    }
    Ok(())
}
