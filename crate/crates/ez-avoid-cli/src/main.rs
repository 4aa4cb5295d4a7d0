use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use ez_avoid_cli::{run, Format, RunConfig, RunError, ScenarioChoice};

/// Trajectory planner around a heading-dependent cardioid keepout zone.
///
/// Configuration comes from one JSON document (see the repository README
/// for the schema); every flag below overrides the corresponding field.
/// Logging is controlled by the EZ_AVOID_LOG environment variable
/// (error, info or debug).
#[derive(Parser, Debug)]
#[command(name = "ez-avoid", version)]
struct Cli {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario to run.
    #[arg(long)]
    scenario: Option<ScenarioChoice>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for jittered solver restarts.
    #[arg(long)]
    seed: Option<u64>,
    /// Collocation node count override.
    #[arg(long = "grid-m")]
    grid_m: Option<usize>,
    /// Output formats, comma separated (csv,json,svg).
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<Format>>,
}

fn load_config(cli: &Cli) -> Result<RunConfig, RunError> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(RunError::Io)?;
            serde_json::from_str(&text)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = cli.scenario {
        config.scenario = s;
    }
    if let Some(out) = &cli.out {
        config.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(m) = cli.grid_m {
        config.grid_m = m;
    }
    if let Some(formats) = &cli.format {
        config.formats = formats.clone();
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("EZ_AVOID_LOG")).init();
    let cli = Cli::parse();
    let outcome = load_config(&cli).and_then(|config| {
        log::info!(
            "running scenario {:?} into {}",
            config.scenario,
            config.output_dir.display()
        );
        run(&config)
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more solves did not converge");
            ExitCode::from(2)
        }
        Err(RunError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(1)
        }
        Err(RunError::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Io(e)) => {
            eprintln!("i/o error: {e}");
            ExitCode::from(3)
        }
    }
}
