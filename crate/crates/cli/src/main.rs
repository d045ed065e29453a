use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use streamplan::Vec2;
use streamplan_cli::{
    load_config, run_advect, run_bench, run_edge, run_plan, write_plan_outputs, Method, RunStatus,
    Scenario,
};

#[derive(Parser)]
#[command(
    name = "streamplan",
    version,
    about = "Streamline-based planning in steady 2D currents"
)]
struct Cli {
    /// Worker threads for edge evaluation.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Overrides the seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream value between two points, in m^2/s.
    #[command(allow_negative_numbers = true)]
    StreamValue {
        config: PathBuf,
        px: f64,
        py: f64,
        qx: f64,
        qy: f64,
    },
    /// Solve one directed edge.
    #[command(allow_negative_numbers = true)]
    Edge {
        config: PathBuf,
        px: f64,
        py: f64,
        qx: f64,
        qy: f64,
        #[arg(long, default_value = "streamline")]
        method: Method,
    },
    /// Plan from start to goal and write summary.json plus CSV files.
    Plan {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare the streamline planner with the shooting baseline.
    Bench {
        config: PathBuf,
        /// Number of consecutive seeds starting at the config seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
    /// Idle RK4 drift from a point; reports the stream value picked up.
    #[command(allow_negative_numbers = true)]
    Advect {
        config: PathBuf,
        px: f64,
        py: f64,
        #[arg(long)]
        steps: usize,
        /// Step size in seconds; defaults to the config dt.
        #[arg(long)]
        dt: Option<f64>,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario> {
    let mut cfg = load_config(path).with_context(|| format!("loading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(Scenario::new(cfg)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    let threads = cli.threads.max(1);
    match cli.command {
        Command::StreamValue {
            config,
            px,
            py,
            qx,
            qy,
        } => {
            let s = load(&config, cli.seed)?;
            let psi = s.field.stream_value(Vec2::new(px, py), Vec2::new(qx, qy))?;
            print_json(&serde_json::json!({ "psi": psi }))?;
        }
        Command::Edge {
            config,
            px,
            py,
            qx,
            qy,
            method,
        } => {
            let s = load(&config, cli.seed)?;
            print_json(&run_edge(&s, Vec2::new(px, py), Vec2::new(qx, qy), method)?)?;
        }
        Command::Plan { config, out } => {
            let s = load(&config, cli.seed)?;
            let result = run_plan(&s, threads)?;
            write_plan_outputs(&result, &out)?;
            print!("{}", result.summary.to_json()?);
            if result.summary.status == RunStatus::NoPath {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench { config, seeds } => {
            let s = load(&config, cli.seed)?;
            let first = s.config.seed;
            let seeds: Vec<u64> = (0..seeds).map(|k| first + k).collect();
            print_json(&run_bench(&s, &seeds, threads)?)?;
        }
        Command::Advect {
            config,
            px,
            py,
            steps,
            dt,
        } => {
            let s = load(&config, cli.seed)?;
            let dt = dt.unwrap_or(s.config.dt);
            print_json(&run_advect(&s, Vec2::new(px, py), steps, dt)?)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
