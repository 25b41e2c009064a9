use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use patrolscope::pipeline::{run, RunConfig, Stage};

/// Police presence pipeline.
///
/// Subcommands: validate, synth, qualify, homes, shifts, presence, regress,
/// validate-city, all.
#[derive(Parser)]
#[command(name = "patrolscope", version)]
struct Cli {
    #[arg(value_parser = parse_stage, value_name = "SUBCOMMAND")]
    stage: Stage,
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set thresholds.min_shift_h=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Worker threads (also PATROLSCOPE_WORKERS).
    #[arg(long)]
    workers: Option<usize>,
    /// Overrides the synthetic seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: patrolscope::Error| e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = RunConfig::load(&cli.config, &cli.overrides).and_then(|mut cfg| {
        if let Some(d) = cli.output_dir {
            cfg.output_dir = d;
        }
        if cli.workers.is_some() {
            cfg.workers = cli.workers;
        }
        if cli.seed.is_some() {
            cfg.rng_seed = cli.seed;
        }
        run(cli.stage, &cfg)
    });
    match result {
        Ok(report) => {
            for s in &report.stages {
                let rows: Vec<String> = s.rows.iter().map(|(k, v)| format!("{k}={v}")).collect();
                println!("{:<14} {:>8.2}s  {}", s.stage, s.seconds, rows.join(" "));
                for w in &s.warnings {
                    log::warn!("{}: {w}", s.stage);
                }
            }
            println!("config_hash={}", report.config_hash);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}
