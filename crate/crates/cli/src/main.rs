use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use probmc_cli::bench::{format_table, run_bench};
use probmc_cli::{run_check, Arith, CheckConfig, CliError, Engine};

/// Probabilistic model checker for discrete- and continuous-time Markov
/// chains with a memory-frugal exploration-elimination engine.
#[derive(Parser)]
#[command(name = "probmc", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check one property of one model.
    Check(CheckArgs),
    /// Run every row of a benchmark manifest.
    Bench {
        /// JSON manifest listing model instances and expected values.
        manifest: PathBuf,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Model file.
    model: PathBuf,
    /// Property to check, e.g. 'P=? [ F "ok" ]'.
    #[arg(long)]
    prop: Option<String>,
    /// File containing the property.
    #[arg(long, conflicts_with = "prop")]
    prop_file: Option<PathBuf>,
    /// Engine: symblicit, vi or linear.
    #[arg(long, default_value = "symblicit")]
    engine: String,
    /// Arithmetic backend: f64, rational or bigfloat:<bits>.
    #[arg(long, default_value = "f64")]
    arith: String,
    /// Constant override NAME=VALUE; repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE")]
    constants: Vec<String>,
    /// Convergence threshold for value iteration.
    #[arg(long, default_value = "1e-10")]
    epsilon: String,
    /// Write the machine-readable run record to this file.
    #[arg(long)]
    stats_json: Option<PathBuf>,
    /// Print the live chain after each elimination (small chains only).
    #[arg(long)]
    trace: bool,
    /// Abort when more states than this are discovered.
    #[arg(long, default_value_t = 1u64 << 40)]
    max_states: u64,
    /// Compact the decision diagram when its arena exceeds this many nodes.
    #[arg(long, default_value_t = usize::MAX)]
    dd_node_budget: usize,
    /// Print exploration progress every N states (0 = quiet).
    #[arg(long, default_value_t = 0)]
    progress: u64,
    /// Run the engine's internal invariant sweeps (slow).
    #[arg(long)]
    validate: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Check(args) => {
            let property = match (&args.prop, &args.prop_file) {
                (Some(p), _) => p.clone(),
                (None, Some(path)) => std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?
                    .trim()
                    .to_string(),
                (None, None) => {
                    return Err(CliError::Usage(
                        "a property is required: pass --prop or --prop-file".into(),
                    ))
                }
            };
            let mut constants = BTreeMap::new();
            for kv in &args.constants {
                let Some((name, value)) = kv.split_once('=') else {
                    return Err(CliError::Usage(format!(
                        "bad --const `{kv}`, expected NAME=VALUE"
                    )));
                };
                constants.insert(name.trim().to_string(), value.trim().to_string());
            }
            let cfg = CheckConfig {
                model_path: args.model,
                property,
                constants,
                engine: Engine::parse(&args.engine)?,
                arith: Arith::parse(&args.arith)?,
                epsilon: args.epsilon,
                max_states: args.max_states,
                dd_node_budget: args.dd_node_budget,
                trace: args.trace,
                validate: args.validate,
                progress_interval: args.progress,
            };
            let record = run_check(&cfg)?;
            println!("value = {}", record.value);
            print!("{}", record.human());
            if let Some(path) = &args.stats_json {
                let json = serde_json::to_string_pretty(&record).expect("record serializes");
                std::fs::write(path, json).map_err(|e| {
                    CliError::Usage(format!("cannot write {}: {e}", path.display()))
                })?;
            }
            Ok(())
        }
        Command::Bench { manifest } => {
            let results = run_bench(&manifest)?;
            print!("{}", format_table(&results));
            Ok(())
        }
    }
}
