use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qlab::{run_scenario, Pipeline, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "qlab", version, about = "Exit times and decay rates of compound Poisson processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Principal eigenpair, decay rate, prefactor and compactness diagnostics.
    Spectral(Common),
    /// Monte Carlo survival curve and fitted decay rate.
    Simulate(Common),
    /// Mean exit time from the quasi-potential and from simulation.
    ExitTime(Common),
    /// Root table of the bilateral exponential example.
    Table61(Common),
    /// Spectral and Monte Carlo pipelines with a cross-check.
    Validate(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; overrides `output_dir` of the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn split(c: Command) -> (Pipeline, Common) {
    match c {
        Command::Spectral(a) => (Pipeline::Spectral, a),
        Command::Simulate(a) => (Pipeline::Simulate, a),
        Command::ExitTime(a) => (Pipeline::ExitTime, a),
        Command::Table61(a) => (Pipeline::Table61, a),
        Command::Validate(a) => (Pipeline::Validate, a),
    }
}

fn execute(pipeline: Pipeline, args: &Common) -> Result<PathBuf, RunError> {
    let (cfg, base) = ScenarioConfig::load(&args.config)?;
    let sc = cfg.check(Some(pipeline), &base)?;
    let out = args
        .out
        .clone()
        .or_else(|| sc.config.output_dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from("qlab-out"));
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(RunError::Config("--threads must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| RunError::Config(e.to_string()))?;
    pool.install(|| run_scenario(&sc, &out, None))?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (pipeline, args) = split(cli.command);
    match execute(pipeline, &args) {
        Ok(out) => {
            println!("{}", out.join("summary.json").display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let payload = serde_json::json!({
                "error": e.kind(),
                "message": e.to_string(),
                "exit_code": e.exit_code(),
            });
            eprintln!("{payload}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
