mod config;
mod output;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use config::{Config, Format, ScenarioName};
use scenario::RunError;

/// Evaluates entanglement witnesses along a scenario sweep and writes the
/// curves as CSV and the full reports as JSON.
///
/// Exit codes: 0 success, 1 I/O error, 2 invalid configuration, 3 numerical failure.
#[derive(Debug, Parser)]
#[command(name = "entwit", version)]
struct Args {
    /// Scenario to run. Replaces the config file's scenario (and its parameters, if it differs).
    #[arg(long, value_enum)]
    scenario: Option<ScenarioName>,
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for the optimizers' random restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Evaluate witnesses on every n-th point of a time grid.
    #[arg(long)]
    stride: Option<usize>,
}

enum Failure {
    Io(String),
    Config(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Io(m) => format!("I/O error: {m}"),
            Failure::Config(m) => format!("invalid configuration: {m}"),
            Failure::Numerical(m) => format!("numerical failure: {m}"),
        }
    }
}

fn load(args: &Args) -> Result<Config, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            text.parse::<Config>().map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => match args.scenario {
            Some(s) => Config::defaults(s),
            None => return Err(Failure::Config("either --scenario or --config is required".into())),
        },
    };
    if let Some(s) = args.scenario {
        config.set_scenario(s);
    }
    if let Some(out) = &args.out {
        config.output.path = out.to_string_lossy().into_owned();
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    if let Some(t) = args.threads {
        config.threads = Some(t);
    }
    if let Some(seed) = args.seed {
        config.optimizer.rng_seed = seed;
    }
    if let Some(stride) = args.stride {
        config.stride = stride;
    }
    config.validate().map_err(Failure::Config)?;
    Ok(config)
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn run(args: &Args) -> Result<(), Failure> {
    let config = load(args)?;
    let started = Instant::now();
    let points = scenario::run(&config).map_err(|e| match e {
        RunError::Config(m) => Failure::Config(m),
        RunError::Numerical(m) => Failure::Numerical(m),
    })?;
    let wall = started.elapsed().as_secs_f64();

    let dir = PathBuf::from(&config.output.path);
    std::fs::create_dir_all(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    let stem = config.scenario.as_str();
    if config.output.format.csv() {
        write(&dir.join(format!("{stem}.csv")), &output::csv(&config, &points))?;
    }
    if config.output.format.json() {
        let text = serde_json::to_string_pretty(&output::report(&config, &points, wall)).expect("report serializes");
        write(&dir.join(format!("{stem}.json")), &(text + "\n"))?;
    }
    eprintln!("{stem}: {} points in {wall:.2} s", points.len());
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("entwit: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
