//! Rebuild the tables from stored scenario rows, without refitting anything.
//!
//! cargo run --example rerender_report -- <run dir>

use povbench::experiment::report::{comparison_table, load_rows, RunAxes};
use povbench::experiment::rerender;

fn main() -> povbench::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(std::path::PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("povbench_run_experiment"));
    let scenarios = dir.join("scenarios.csv");
    let rows = load_rows(&scenarios)?;
    let axes = RunAxes::of(&rows);
    println!(
        "{} rows: {} patterns, {} models, {} lines",
        rows.len(),
        axes.patterns.len(),
        axes.models.len(),
        axes.lines.len()
    );

    if let (Some(p), Some(&q), Some(c)) = (axes.patterns.first(), axes.lines.first(), axes.cutpoints.first()) {
        println!("{}", comparison_table(&rows, &axes.models, q, p, c).to_markdown());
    }

    let out = dir.join("rerendered");
    let s = rerender(&scenarios, &out)?;
    println!("wrote {} files to {}", s.files.len(), out.display());
    Ok(())
}
