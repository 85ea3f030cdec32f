use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cmcs::experiment::{run_experiment, sweep, ErrorReport, ExperimentConfig, ModeKind};
use cmcs::Error;

#[derive(Parser)]
#[command(name = "cmcs", version, about = "Concentrated Monte Carlo sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ground-state experiment at the configured parameters.
    Ground(RunArgs),
    /// Thermal experiment over `mode.betas`.
    Thermal(RunArgs),
    /// Grid sweep over the `[sweep]` axis.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path; overrides `output.path`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides `experiment.workers`.
    #[arg(long)]
    workers: Option<usize>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if let Some(workers) = self.workers {
            cfg.experiment.workers = workers;
        }
        if let Some(out) = &self.out {
            cfg.output.path = Some(out.clone());
        }
        Ok(cfg)
    }
}

fn execute(command: Command) -> Result<(PathBuf, usize), Error> {
    let (report, cfg) = match command {
        Command::Ground(args) => {
            let mut cfg = args.load()?;
            cfg.mode.kind = ModeKind::Ground;
            (run_experiment::<f64>(&cfg)?, cfg)
        }
        Command::Thermal(args) => {
            let mut cfg = args.load()?;
            cfg.mode.kind = ModeKind::Thermal;
            (run_experiment::<f64>(&cfg)?, cfg)
        }
        Command::Sweep(args) => {
            let cfg = args.load()?;
            let axis = cfg
                .sweep
                .clone()
                .ok_or_else(|| Error::Config("sweep needs a [sweep] section with axis and values".into()))?;
            (ErrorReport::merge(sweep::<f64>(&cfg, &axis)?), cfg)
        }
    };
    let path = cfg.output_path();
    report.emit_csv(&path)?;
    Ok((path, report.series.len()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.kind().to_string();
            eprintln!("{}", serde_json::json!({ "error": "usage", "message": message }));
            eprint!("{}", e.render());
            return ExitCode::from(2);
        }
    };
    match execute(cli.command) {
        Ok((path, series)) => {
            log::info!("wrote {series} series to {}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let line = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}
