use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

use omamrc_sim::config::{Experiment, Overrides};
use omamrc_sim::report::write_csv;
use omamrc_sim::sweep::{run_experiment, Row};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

/// Sweep cooperative HARQ scheduling strategies and write throughput CSVs.
#[derive(Debug, Parser)]
#[command(name = "omamrc", version)]
struct Cli {
    /// Experiment description (TOML).
    #[arg(long)]
    config: PathBuf,
    /// CSV destination. Link adaptation also writes `<stem>_per_rate.csv`.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Strategy to run; repeat for several. Replaces the config list.
    #[arg(long = "strategy")]
    strategies: Vec<String>,
    /// symmetric_gamma, link_adaptation or delta_gamma.
    #[arg(long)]
    sweep: Option<String>,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long)]
    workers: Option<usize>,
}

fn per_rate_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}_per_rate.csv"))
}

fn write(path: &Path, sources: usize, rows: &[Row]) -> anyhow::Result<()> {
    let file = File::create(path)?;
    write_csv(BufWriter::new(file), sources, rows)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        frames: cli.frames,
        seed: cli.seed,
        strategies: cli.strategies,
        sweep: cli.sweep,
        workers: cli.workers,
    };
    let experiment = match Experiment::load(&cli.config, &overrides) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let result = match run_experiment(&experiment) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    };
    let sources = experiment.network.sources;
    let mut outputs = vec![(cli.output.clone(), &result.rows)];
    if !result.per_rate.is_empty() {
        outputs.push((per_rate_path(&cli.output), &result.per_rate));
    }
    for (path, rows) in outputs {
        if let Err(e) = write(&path, sources, rows) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    ExitCode::SUCCESS
}
