//! Elastic net: the cross-validated penalty path for a few mixing weights.

use povbench::dataset::{synthesize, Covariate, GeneratorConfig};
use povbench::models::elastic_net::ElasticNetModel;
use povbench::models::{ElasticNetParams, Target};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(2000, 8))?;
    let x = ds.matrix(&Covariate::ALL);
    let y = ds.log_incomes();

    for alpha in [0.0, 0.5, 1.0] {
        let params = ElasticNetParams {
            alpha,
            lambda_grid_size: 50,
            cv_folds: 5,
            lambda: None,
        };
        let m = ElasticNetModel::fit(&x, &y, Target::Continuous, &params, 3)?;
        let beta = m.coefficients();
        let zeros = beta[1..].iter().filter(|b| **b == 0.0).count();
        println!(
            "alpha {alpha:.1}: lambda {:.2e} (index {} of {}), cv deviance {:.4}, {zeros} zero coefficients",
            m.selected_lambda(),
            m.selected_index(),
            m.lambdas().len(),
            m.cv_deviance()[m.selected_index()],
        );
    }

    // a fixed lambda skips cross-validation; at zero it is plain least squares
    let ols = ElasticNetModel::fit(
        &x,
        &y,
        Target::Continuous,
        &ElasticNetParams {
            lambda: Some(0.0),
            ..Default::default()
        },
        0,
    )?;
    println!("lambda 0 coefficients:");
    for (name, b) in std::iter::once("intercept")
        .chain(Covariate::ALL.iter().map(|c| c.name()))
        .zip(ols.coefficients())
    {
        println!("  {name:<18} {b:+.4}");
    }
    Ok(())
}
