use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use fsav::io::{parse_config, RunConfig};
use fsav::{Error, Result};
use fsav_cli::{converge, exit_code, RunOptions, SimulateOutcome, EXIT_BLOWUP, EXIT_INVARIANT, EXIT_OK};

/// Time steps of the default refinement sweep.
const DEFAULT_KS: [f64; 5] = [0.0125, 0.00625, 0.003125, 0.0015625, 0.00078125];

#[derive(Parser)]
#[command(name = "fsav", version, about = "Energy-stable 2D Navier-Stokes experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Long {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    max_wall_seconds: Option<f64>,
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step refinement on the manufactured problem.
    Converge {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        k: Vec<f64>,
    },
    Simulate(Long),
    Bursting(Long),
    /// Runs the invariant suites.
    Verify,
}

fn load(common: &Common) -> Result<RunConfig> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn options(args: &Long) -> RunOptions {
    RunOptions { max_wall_seconds: args.max_wall_seconds, resume: args.resume.clone() }
}

fn outcome_line(outcome: &SimulateOutcome) -> (serde_json::Value, i32) {
    match outcome {
        SimulateOutcome::Completed { steps } => (json!({"status": "completed", "steps": steps}), EXIT_OK),
        SimulateOutcome::BlowUp { t, step } => {
            (json!({"status": "blowup", "blowup_t": t, "step": step}), EXIT_BLOWUP)
        }
        SimulateOutcome::TimedOut { step, checkpoint } => (
            json!({"status": "timeout", "step": step, "checkpoint": checkpoint.display().to_string()}),
            EXIT_OK,
        ),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Converge { common, k } => {
            let cfg = load(&common)?;
            let ks = if k.is_empty() { DEFAULT_KS.to_vec() } else { k };
            let rows = converge::cmd_converge(&cfg, &ks)?;
            ensure_dir(&cfg.output_dir)?;
            converge::write_converge_csv(&cfg.output_dir.join("converge.csv"), &rows)?;
            for r in &rows {
                println!(
                    "{}",
                    json!({
                        "k": r.k,
                        "status": if r.blowup_t.is_some() { "blowup" } else { "completed" },
                        "blowup_t": r.blowup_t,
                        "error_omega": r.error_omega,
                        "error_psi": r.error_psi,
                        "q_error": r.q_error,
                        "order_omega": r.order_omega,
                        "order_psi": r.order_psi,
                        "runtime_s": r.runtime_s,
                    })
                );
            }
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => {
            let cfg = load(&args.common)?;
            let outcome = fsav_cli::cmd_simulate(&cfg, &options(&args))?;
            let (line, code) = outcome_line(&outcome);
            println!("{line}");
            Ok(code)
        }
        Command::Bursting(args) => {
            let cfg = load(&args.common)?;
            let summary = fsav_cli::cmd_bursting(&cfg, &options(&args))?;
            let (mut line, code) = outcome_line(&summary.outcome);
            line["bursts"] = json!(summary.events.len());
            line["low_frequency_share"] = json!(summary.low_frequency_share);
            println!("{line}");
            Ok(code)
        }
        Command::Verify => {
            let results = fsav_cli::cmd_verify()?;
            for r in &results {
                println!("{r}");
            }
            Ok(if results.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_INVARIANT })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            if let Error::BlowUp { t, step } = e {
                println!("{}", json!({"status": "blowup", "blowup_t": t, "step": step}));
            }
            eprintln!("fsav: {e}");
            code
        }
    };
    ExitCode::from(code as u8)
}
