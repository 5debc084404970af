mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use displab_core::par::Exec;

use config::{ConfigError, ExperimentConfig, ExperimentId};

/// Run a displab experiment and write its report.
#[derive(Debug, Parser)]
#[command(name = "displab", version)]
struct Cli {
    /// Experiment to run.
    #[arg(value_enum)]
    experiment: ExperimentId,
    /// `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config `output`, then $DISPLAB_OUT/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_TOLERANCE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn output_dir(cli: &Cli, config: &ExperimentConfig) -> PathBuf {
    if let Some(o) = &cli.out {
        return o.clone();
    }
    if let Some(o) = &config.output {
        return o.clone();
    }
    let root = std::env::var_os("DISPLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("displab-out"));
    root.join(config.experiment.name())
}

fn execute(cli: &Cli) -> Result<bool> {
    let text = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("reading {}", cli.config.display()))?;
    let mut config = ExperimentConfig::parse(cli.experiment, &text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let exec = match cli.jobs {
        Some(0) => return Err(ConfigError::Invalid("--jobs must be at least 1".into()).into()),
        Some(1) => Exec::Sequential,
        Some(n) => {
            init_pool(n)?;
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let dir = output_dir(cli, &config);
    log::info!("running {} into {}", config.experiment, dir.display());
    let run = experiments::run(&config, exec);
    let files = report::emit_report(&run, &dir)?;
    let passed = run.records.iter().filter(|r| r.passed).count();
    println!(
        "{}: {}/{} samples within tolerance, {}",
        config.experiment,
        passed,
        run.records.len(),
        if run.passed { "PASS" } else { "FAIL" }
    );
    for f in &run.fits {
        println!(
            "  fit {}: slope {:.4} (95% CI {:.4}..{:.4}), target {:.4}",
            f.label, f.slope, f.slope_ci95.0, f.slope_ci95.1, f.target
        );
    }
    for p in files {
        println!("  wrote {}", p.display());
    }
    Ok(run.passed)
}

#[cfg(feature = "parallel")]
fn init_pool(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the worker pool")
}

#[cfg(not(feature = "parallel"))]
fn init_pool(_n: usize) -> Result<()> {
    log::warn!("built without the parallel feature; running sequentially");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            // configuration and I/O failures share the usage code; 1 means a tolerance miss
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
