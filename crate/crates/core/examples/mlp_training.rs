//! Two-hidden-layer perceptron: gradient check, then minibatch training.

use povbench::dataset::{label_poor, poverty_line, synthesize, Covariate, GeneratorConfig};
use povbench::models::mlp::{train, Network};
use povbench::models::{MlpParams, Target};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(2000, 6))?;
    let x = ds.matrix(&Covariate::ALL);
    let y = ds.log_incomes();

    // analytic gradient against central differences on a small net
    let small = ds.matrix_rows(&Covariate::ALL, &(0..40).collect::<Vec<_>>());
    let net = Network::init(&small, &y[..40], Target::Continuous, 5, 4, true, 1);
    let (_, grad) = net.loss_and_gradient(&small, &y[..40]);
    let mut worst = 0.0f64;
    for k in (0..grad.len()).step_by(7) {
        let h = 1e-5;
        let mut p = net.parameters().to_vec();
        p[k] += h;
        let mut up = net.clone();
        up.set_parameters(&p)?;
        p[k] -= 2.0 * h;
        let mut down = net.clone();
        down.set_parameters(&p)?;
        let fd = (up.loss(&small, &y[..40]) - down.loss(&small, &y[..40])) / (2.0 * h);
        worst = worst.max((fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-6));
    }
    println!("gradient check: worst relative error {worst:.2e}");

    let params = MlpParams {
        layer1: 64,
        layer2: 32,
        learning_rate: 0.01,
        batch_size: 50,
        epochs: 30,
        ..Default::default()
    };
    let (net, report) = train(&x, &y, Target::Continuous, &params, 2)?;
    println!(
        "continuous: loss {:.4} after {} attempt(s)",
        report.loss, report.attempts
    );
    let pred = net.predict(&x);
    println!("  first predictions {:.3} {:.3} {:.3}", pred[0], pred[1], pred[2]);

    let poor = label_poor(&ds, poverty_line(&ds, 0.5)?);
    let yc: Vec<f64> = poor.iter().map(|&b| b as u8 as f64).collect();
    let (net, report) = train(&x, &yc, Target::Categorical, &params, 2)?;
    let hits = net
        .predict(&x)
        .iter()
        .zip(&poor)
        .filter(|(p, t)| (**p > 0.5) == **t)
        .count();
    println!(
        "categorical: cross-entropy {:.4}, in-sample accuracy {:.2}",
        report.loss,
        100.0 * hits as f64 / poor.len() as f64
    );
    Ok(())
}
