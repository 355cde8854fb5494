//! Desk-sized grid search for one family, with a wall-clock budget.
//!
//! cargo run --release --example grid_search -- [rf|en|mlp2] [budget seconds]

use std::time::Duration;

use povbench::dataset::{synthesize, GeneratorConfig, SURVEY_ROWS};
use povbench::models::{Family, Target};
use povbench::tuning::{grid_search_with_budget, GridSpec};

fn main() -> povbench::Result<()> {
    let mut args = std::env::args().skip(1);
    let family = match args.next().as_deref().unwrap_or("en") {
        "rf" => Family::RandomForest,
        "mlp2" => Family::Mlp2,
        _ => Family::ElasticNet,
    };
    let budget = args.next().map(|s| Duration::from_secs(s.parse().expect("seconds")));

    let ds = synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 1))?;
    let gs = GridSpec::desk(family, Target::Continuous)?;
    println!(
        "{} points over axes {:?}",
        gs.size(),
        gs.axes.iter().map(|a| a.name.as_str()).collect::<Vec<_>>()
    );

    let res = grid_search_with_budget(&gs, &ds, 0.5, budget)?;
    res.write_score_table(std::io::stdout())?;
    if let Some(s) = &res.summary {
        println!(
            "max {:.2} mean {:.2} sd {:.3} over {} scored points",
            s.max, s.mean, s.sd, s.count
        );
    }
    if !res.complete {
        println!("budget ran out before every point started");
    }
    println!("best:");
    res.write_best_params(std::io::stdout())?;
    Ok(())
}
