use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use povbench::dataset::{load_csv, synthesize, Covariate, GeneratorConfig, SURVEY_ROWS};
use povbench::experiment::{self, ExperimentConfig, Preset};
use povbench::missingness::Pattern;
use povbench::{rng, Error, Result};

#[derive(Parser)]
#[command(
    name = "povbench",
    version,
    about = "Poverty prediction benchmarks under missing incomes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Experiment configuration (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration: baseline, table6 or grid-desk.
    #[arg(long)]
    preset: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Option<ExperimentConfig>> {
        match (&self.config, &self.preset) {
            (Some(path), _) => ExperimentConfig::load(path).map(Some),
            (None, Some(p)) => Ok(Some(p.parse::<Preset>()?.config())),
            (None, None) => Ok(None),
        }
    }

    fn require(&self) -> Result<ExperimentConfig> {
        self.load()?
            .ok_or_else(|| Error::Config("one of --config or --preset is required".into()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic survey to CSV.
    Generate {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a missingness mask (id, missing, pattern, seed) to CSV.
    Corrupt {
        #[command(flatten)]
        source: Source,
        /// Survey CSV; defaults to the configured data source.
        #[arg(long)]
        data: Option<PathBuf>,
        /// MCAR<percent missing>, MAR_PURE, MAR_MNAR or MNAR_PURE.
        #[arg(long)]
        pattern: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every scenario of a configuration.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Grid search over hyperparameters.
    Tune {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Stop starting new grid points after this many seconds.
        #[arg(long)]
        budget_seconds: Option<u64>,
    },
    /// Re-render tables from a finished run's scenarios.csv.
    Report {
        /// Run directory or scenarios.csv.
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn is_config_error(e: &Error) -> bool {
    match e {
        Error::Config(_) | Error::Pattern { .. } | Error::Domain { .. } | Error::Spec(_) => true,
        Error::Scenario { source, .. } => is_config_error(source),
        _ => false,
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| Error::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Generate { source, n, seed, out } => {
            let cfg = source.load()?;
            let mut g = cfg
                .as_ref()
                .and_then(|c| c.generator())
                .unwrap_or_else(|| GeneratorConfig::baseline(SURVEY_ROWS, 1));
            if n.is_some() || seed.is_some() {
                let noise = g.noise_sd;
                g = GeneratorConfig::baseline(n.unwrap_or(g.n), seed.unwrap_or(g.seed));
                g.noise_sd = noise;
            }
            let ds = synthesize(&g)?;
            ensure_parent(&out)?;
            ds.save_csv(&out)?;
            log::info!("wrote {} rows to {}", ds.len(), out.display());
            Ok(0)
        }
        Command::Corrupt {
            source,
            data,
            pattern,
            seed,
            out,
        } => {
            let cfg = source.load()?;
            let ds = match (&data, &cfg) {
                (Some(path), _) => load_csv(path, &Covariate::ALL)?,
                (None, Some(c)) => c.dataset()?,
                (None, None) => synthesize(&GeneratorConfig::baseline(SURVEY_ROWS, 1))?,
            };
            let p: Pattern = pattern.parse()?;
            let seed = seed.unwrap_or_else(|| {
                let root = cfg.as_ref().map_or(2, |c| c.seeds.mask);
                rng::derive_labeled(root, &p.label())
            });
            let mask = p.apply(&ds, seed)?;
            ensure_parent(&out)?;
            let f = std::fs::File::create(&out).map_err(|e| Error::Io {
                path: out.clone(),
                source: e,
            })?;
            mask.write_csv(std::io::BufWriter::new(f))?;
            log::info!("masked {} of {} rows ({})", mask.missing_count(), ds.len(), p.label());
            Ok(0)
        }
        Command::Run { source, out, workers } => {
            let cfg = source.require()?;
            let s = experiment::run(&cfg, &out, workers)?;
            println!(
                "{} scenarios, {} failed; results in {}",
                s.scenarios,
                s.failures,
                out.display()
            );
            Ok(s.exit_code())
        }
        Command::Tune {
            source,
            out,
            workers,
            budget_seconds,
        } => {
            let cfg = source.require()?;
            let s = experiment::tune(&cfg, &out, workers, budget_seconds.map(Duration::from_secs))?;
            print!("{}", experiment::runner::summary_table(&s.results).to_markdown());
            Ok(s.exit_code())
        }
        Command::Report { from, out } => {
            let path = if from.is_dir() {
                from.join("scenarios.csv")
            } else {
                from
            };
            let s = experiment::rerender(&path, &out)?;
            println!("rendered {} files from {} scenarios", s.files.len(), s.scenarios);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(if is_config_error(&e) { 2 } else { 1 })
        }
    }
}
