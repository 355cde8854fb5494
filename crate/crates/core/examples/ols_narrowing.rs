//! OLS predictions are narrower than the incomes they stand in for, so the
//! predicted headcount at a low line falls short of the truth.

use povbench::dataset::{synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};
use povbench::missingness::{split, Pattern};
use povbench::models::{predict, predicted_distribution_stats, Design, FittedModel, ModelCode, ModelSpec};
use povbench::pipeline::{classify_continuous, fit_observed, line_for, LineSource};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 5))?;
    let mask = Pattern::Mcar(0.5).apply(&ds, 5)?;
    let parts = split(&ds, &mask)?;

    let spec = ModelSpec::new(ModelCode::Wcn, &Covariate::ALL);
    let fit = fit_observed(&ds, &parts.train, &spec, None)?;
    println!(
        "R² on observed rows: {:.3}",
        fit.model.diagnostics.r2.unwrap_or(f64::NAN)
    );

    let x = Design::from_dataset(&ds, &fit.covariates, &parts.test);
    let preds = predict(&fit.model, &x)?;
    let truth: Vec<f64> = parts.test.iter().map(|&i| ds.rows()[i].log_income).collect();
    let p = predicted_distribution_stats(&preds)?;
    let t = predicted_distribution_stats(&truth)?;
    println!("sd of log income: predicted {:.3}, true {:.3}", p.sd, t.sd);
    for ((q, a), (_, b)) in p.quantiles.iter().zip(&t.quantiles) {
        println!("  q{:<4} predicted {a:.3} true {b:.3}", q);
    }

    for q in [0.25, 0.5, 0.75] {
        let (_, log_line) = line_for(&ds, &parts.train, q, LineSource::Full)?;
        let poor = classify_continuous(&preds, log_line)?;
        let rate = 100.0 * poor.iter().filter(|&&b| b).count() as f64 / poor.len() as f64;
        let true_rate = 100.0 * truth.iter().filter(|&&v| v <= log_line).count() as f64 / truth.len() as f64;
        println!("line q={q}: predicted {rate:.1}% vs true {true_rate:.1}%");
    }

    // fitted models round-trip through JSON
    let back = FittedModel::from_json(&fit.model.to_json()?)?;
    assert_eq!(predict(&back, &x)?, preds);
    Ok(())
}
