//! Comparison-table metrics from confusion counts, and model ranking.

use povbench::evaluation::{metrics, rank_models, ConfusionMatrix, Objective};

fn main() {
    // (TP, TN, FP, FN) on 7062 rows at the median line
    let models = [
        ("wcn", ConfusionMatrix::new(2212, 2700, 831, 1319)),
        ("rcn", ConfusionMatrix::new(2935, 2931, 600, 596)),
        ("rct", ConfusionMatrix::new(3093, 3099, 432, 438)),
    ];
    let reports: Vec<_> = models.iter().map(|(_, cm)| metrics(cm)).collect();

    print!("{:<20}", "objective");
    for (name, _) in &models {
        print!("{name:>10} {:>4}", "rank");
    }
    println!();
    for obj in Objective::ALL {
        let scores: Vec<Option<f64>> = reports.iter().map(|r| obj.value(r)).collect();
        let ranks = obj.direction().map(|d| rank_models(&scores, d));
        print!("{:<20}", obj.label());
        for (k, s) in scores.iter().enumerate() {
            let v = s.map_or("n/a".to_string(), |v| {
                if obj.is_count() {
                    format!("{v:.0}")
                } else {
                    format!("{v:.2}")
                }
            });
            let r = ranks.as_ref().map_or(String::new(), |r| r[k].rank.to_string());
            print!("{v:>10} {r:>4}");
        }
        println!();
    }
}
