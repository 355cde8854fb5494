//! Logit on the poor flag, classified at a few probability cutpoints.

use povbench::dataset::{synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};
use povbench::evaluation::{confusion, metrics};
use povbench::missingness::{split, Pattern};
use povbench::models::{predict, Design, ModelCode, ModelSpec, Parameters};
use povbench::pipeline::{classify_categorical, fit_observed, line_for, LineSource};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 9))?;
    let mask = Pattern::Mcar(0.25).apply(&ds, 9)?;
    let parts = split(&ds, &mask)?;
    let (z, log_line) = line_for(&ds, &parts.train, 0.5, LineSource::Full)?;

    let spec = ModelSpec::new(ModelCode::Pct, &Covariate::ALL);
    let fit = fit_observed(&ds, &parts.train, &spec, Some(log_line))?;
    let d = &fit.model.diagnostics;
    println!(
        "IRLS: {} iterations, converged {}, pseudo-R² {:.3}",
        d.iterations,
        d.converged,
        d.r2.unwrap_or(f64::NAN)
    );
    if let Parameters::Logit { coefficients } = &fit.model.parameters {
        println!("  intercept {:+.3}", coefficients[0]);
        for (c, b) in fit.covariates.iter().zip(&coefficients[1..]) {
            println!("  {:<18} {b:+.3}", c.name());
        }
    }

    let x = Design::from_dataset(&ds, &fit.covariates, &parts.test);
    let probs = predict(&fit.model, &x)?;
    let truth: Vec<bool> = parts.test.iter().map(|&i| ds.rows()[i].income_pc <= z).collect();
    for cut in [0.3, 0.5, 0.7] {
        let m = metrics(&confusion(&truth, &classify_categorical(&probs, cut)?)?);
        println!(
            "cut {cut}: accuracy {:.2} leakage {:.2} undercoverage {:.2}",
            m.accuracy.unwrap_or(f64::NAN),
            m.leakage.unwrap_or(f64::NAN),
            m.undercoverage.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
