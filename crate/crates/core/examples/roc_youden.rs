//! ROC curve of a logit fit and the Youden-optimal cutpoint.

use povbench::dataset::{synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};
use povbench::missingness::{split, Pattern};
use povbench::models::{predict, Design, ModelCode, ModelSpec};
use povbench::pipeline::{fit_observed, line_for, roc_auc, roc_curve, youden_cutpoint, LineSource};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 12))?;
    let mask = Pattern::Mcar(0.5).apply(&ds, 12)?;
    let parts = split(&ds, &mask)?;

    for q in [0.25, 0.5, 0.75] {
        let (z, log_line) = line_for(&ds, &parts.train, q, LineSource::Full)?;
        let fit = fit_observed(
            &ds,
            &parts.train,
            &ModelSpec::new(ModelCode::Pct, &Covariate::ALL),
            Some(log_line),
        )?;
        let probs = predict(&fit.model, &Design::from_dataset(&ds, &fit.covariates, &parts.train))?;
        let truth: Vec<bool> = parts.train.iter().map(|&i| ds.rows()[i].income_pc <= z).collect();
        let roc = roc_curve(&probs, &truth)?;
        let best = youden_cutpoint(&roc)?;
        println!(
            "q={q}: {} ROC points, AUC {:.3}, Youden cutpoint {:.3} (J = {:.3})",
            roc.len(),
            roc_auc(&roc),
            best.cutpoint,
            best.j
        );
    }

    // tiny hand fixture
    let roc = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true])?;
    for p in &roc {
        println!(
            "  cut {:.2}: sensitivity {:.2} specificity {:.2}",
            p.cutpoint, p.sensitivity, p.specificity
        );
    }
    println!("  chosen {:.3}", youden_cutpoint(&roc)?.cutpoint);
    Ok(())
}
