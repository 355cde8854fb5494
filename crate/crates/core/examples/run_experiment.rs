//! A small configured experiment: two patterns, three models, two lines,
//! a fixed and a Youden cutpoint. Writes every artifact under a temp dir.

use povbench::experiment::{run, ExperimentConfig};

const CONFIG: &str = r#"
version = 1
patterns = ["MCAR50", "MAR_MNAR"]
models = ["wcn", { code = "rct", hyper = { rf = { trees = 50 } } }, "pct"]
lines = [0.25, 0.5]
cutpoints = [0.5, "AUTO_YOUDEN"]
adjust_draws = 50

[data]
source = "synthetic"
n = 3000

[seeds]
data = 10
mask = 20
model = 30
split = 40
"#;

fn main() -> povbench::Result<()> {
    let cfg = ExperimentConfig::from_toml(CONFIG)?;
    let out = std::env::temp_dir().join("povbench_run_experiment");
    let summary = run(&cfg, &out, 2)?;
    println!(
        "{} scenarios, {} failed, exit code {}",
        summary.scenarios,
        summary.failures,
        summary.exit_code()
    );
    for f in &summary.files {
        println!("  {}", f.display());
    }
    let rates = std::fs::read_to_string(out.join("rates_c0.5.md"))
        .map_err(|e| povbench::Error::io(out.join("rates_c0.5.md"), e))?;
    println!("\n{rates}");

    // a typo in a key is an error, not a silent default
    let bad = CONFIG.replace("adjust_draws", "adjust_drawz");
    if let Err(e) = ExperimentConfig::from_toml(&bad) {
        println!("rejected: {e}");
    }
    Ok(())
}
