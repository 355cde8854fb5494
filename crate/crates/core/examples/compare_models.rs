//! Fit all eight model codes on one synthetic survey and score them at the median line.
//!
//! cargo run --release --example compare_models -- [n] [seed]

use std::time::Instant;

use povbench::dataset::{synthesize, Covariate, GeneratorConfig};
use povbench::missingness::Pattern;
use povbench::models::{ModelCode, ModelSpec};
use povbench::pipeline::{run_scenario, PredictOn, Scenario};

fn main() -> povbench::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(7062, |s| s.parse().expect("n"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let ds = synthesize(&GeneratorConfig::baseline(n, seed))?;
    // nothing masked: fit on every row, score every row
    let mask = Pattern::Mcar(0.0).apply(&ds, seed)?;

    println!(
        "{:<5} {:>9} {:>9} {:>9} {:>8}",
        "model", "accuracy", "pred%", "true%", "secs"
    );
    for code in ModelCode::ALL {
        let mut spec = ModelSpec::new(code, &Covariate::ALL);
        spec.hyper.seed = seed;
        let mut s = Scenario::new(&ds, &mask, spec, 0.5);
        s.predict_on = PredictOn::AllRows;
        let t = Instant::now();
        let r = run_scenario(&s)?;
        println!(
            "{:<5} {:>9.2} {:>9.2} {:>9.2} {:>8.2}",
            code,
            r.metrics.accuracy.unwrap_or(f64::NAN),
            r.predicted_rate,
            r.true_rate,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
