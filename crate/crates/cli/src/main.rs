use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lmc_cli::{builtin_configs, exit, preset, run_experiment, validate_config, ExperimentConfig, RunError};

#[derive(Parser)]
#[command(name = "lmc", version, about = "Langevin Monte Carlo experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "lmc-out")]
        out: PathBuf,
    },
    /// List or run the built-in configurations.
    Preset {
        #[arg(long)]
        list: bool,
        #[arg(long, required_unless_present = "list")]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the config instead of running it.
        #[arg(long)]
        dump: bool,
    },
}

fn execute(mut cfg: ExperimentConfig, seed: Option<u64>, out: PathBuf) -> i32 {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    for w in cfg.warnings() {
        eprintln!("warning: {w}");
    }
    match run_experiment(&cfg, &out) {
        Ok(summary) => {
            for r in &summary.runs {
                let acc = r.acceptance_rate.map(|a| format!(" acceptance {a:.3}")).unwrap_or_default();
                let status = r.failure.as_deref().unwrap_or("ok");
                eprintln!("{:<28} {:>8} retained{acc} in {:.2?}: {status}", r.plan.label, r.n_retained, r.wall_time);
            }
            if summary.diverged() {
                eprintln!("some chains diverged; partial outputs are in {}", out.display());
                exit::DIVERGED
            } else {
                println!("{}", out.display());
                exit::OK
            }
        }
        Err(RunError::Invalid(e)) => {
            eprint!("{e}");
            exit::INVALID
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit::FAILURE
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, seed, out } => match std::fs::read_to_string(&config) {
            Err(e) => {
                eprintln!("error: {}: {e}", config.display());
                exit::FAILURE
            }
            Ok(raw) => match validate_config(&raw) {
                Ok(cfg) => execute(cfg, seed, out),
                Err(e) => {
                    eprint!("{e}");
                    exit::INVALID
                }
            },
        },
        Command::Preset { list, name, out, seed, dump } => {
            if list {
                for (name, cfg) in builtin_configs() {
                    println!("{name}\t{}", cfg.family.as_str());
                }
                exit::OK
            } else {
                let name = name.expect("clap enforces --name");
                match preset(&name) {
                    None => {
                        eprintln!("unknown preset {name:?}; see `lmc preset --list`");
                        exit::INVALID
                    }
                    Some(cfg) if dump => {
                        println!("{}", cfg.to_json());
                        exit::OK
                    }
                    Some(cfg) => execute(cfg, seed, out.unwrap_or_else(|| PathBuf::from(&name))),
                }
            }
        }
    };
    ExitCode::from(code as u8)
}
