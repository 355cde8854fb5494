//! Regression and classification forests grown directly on a design matrix.

use povbench::dataset::{label_poor, poverty_line, synthesize, Covariate, GeneratorConfig};
use povbench::models::forest::Forest;
use povbench::models::{ForestParams, Target};

fn main() -> povbench::Result<()> {
    let ds = synthesize(&GeneratorConfig::baseline(3000, 4))?;
    let (fit_rows, hold): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|i| i % 3 != 0);
    let x_fit = ds.matrix_rows(&Covariate::ALL, &fit_rows);
    let x_hold = ds.matrix_rows(&Covariate::ALL, &hold);
    let logs = ds.log_incomes();
    let y: Vec<f64> = fit_rows.iter().map(|&i| logs[i]).collect();

    for (depth, leaf) in [(4, 10), (8, 10), (0, 1)] {
        let params = ForestParams {
            trees: 100,
            mtry: None,
            max_depth: depth,
            min_leaf: leaf,
        };
        let f = Forest::fit(&x_fit, &y, Target::Continuous, &params, 1)?;
        let pred = f.predict(&x_hold);
        let mse = hold.iter().zip(&pred).map(|(&i, p)| (logs[i] - p).powi(2)).sum::<f64>() / hold.len() as f64;
        let deepest = f.trees().iter().map(|t| t.depth()).max().unwrap_or(0);
        println!("depth {depth:>2} leaf {leaf:>3}: holdout MSE {mse:.4}, deepest tree {deepest}");
    }

    // classification: leaf values are class-1 shares, the forest averages them
    let poor = label_poor(&ds, poverty_line(&ds, 0.5)?);
    let yc: Vec<f64> = fit_rows.iter().map(|&i| poor[i] as u8 as f64).collect();
    let f = Forest::fit(&x_fit, &yc, Target::Categorical, &ForestParams::default(), 2)?;
    let probs = f.predict(&x_hold);
    let hits = hold.iter().zip(&probs).filter(|(&i, &p)| (p > 0.5) == poor[i]).count();
    println!(
        "classification forest: holdout accuracy {:.2}",
        100.0 * hits as f64 / hold.len() as f64
    );
    Ok(())
}
