use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dnc::experiment::{self, ExperimentConfig};
use dnc::{DncError, Result};

#[derive(Parser)]
#[command(
    name = "dnc",
    about = "Dynamic nested clustering for uplink C-RAN detection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON configuration file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for distance thresholds and report sparsity.
    Threshold,
    /// Monte Carlo SINR ratio against the analytic bound.
    Detect,
    /// Run the clustered solver end to end.
    Solve,
    /// Choose cluster sizes and a computing mode.
    Plan,
    #[command(name = "repro-table1")]
    ReproTable1,
    #[command(name = "repro-table2")]
    ReproTable2,
}

const TABLE_DEFAULT: &str =
    r#"{"shape":{"kind":"circle","radius":10000.0},"beta_n":1.0,"beta_k":10.0,"rho_star":0.95}"#;

fn load(cli: &Cli, needs_file: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None if !needs_file => ExperimentConfig::from_json(TABLE_DEFAULT)?,
        None => {
            return Err(DncError::InvalidArgument(
                "--config is required for this command".into(),
            ))
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(o) = &cli.out_dir {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<serde_json::Value> {
    let json = |v: serde_json::Result<serde_json::Value>| v.map_err(DncError::from);
    match cli.command {
        Command::Threshold => json(serde_json::to_value(experiment::cmd_threshold(&load(
            cli, true,
        )?)?)),
        Command::Detect => json(serde_json::to_value(experiment::cmd_detect(&load(
            cli, true,
        )?)?)),
        Command::Solve => json(serde_json::to_value(experiment::cmd_solve(&load(
            cli, true,
        )?)?)),
        Command::Plan => json(serde_json::to_value(experiment::cmd_plan(&load(
            cli, true,
        )?)?)),
        Command::ReproTable1 => json(serde_json::to_value(experiment::repro_table1(&load(
            cli, false,
        )?)?)),
        Command::ReproTable2 => json(serde_json::to_value(experiment::repro_table2(&load(
            cli, false,
        )?)?)),
    }
}

fn report(kind: &str, message: String) {
    eprintln!(
        "{}",
        serde_json::json!({ "error": kind, "message": message })
    );
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            report("Usage", e.to_string().trim_end().to_string());
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(v) => {
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = format!("{e:?}");
            let kind = kind
                .split(|c: char| !c.is_alphanumeric())
                .next()
                .unwrap_or("Error")
                .to_string();
            report(&kind, e.to_string());
            ExitCode::FAILURE
        }
    }
}
