use std::path::PathBuf;
use std::process::ExitCode;

use cfextract_cli::commands::{self, SyntheticKind};
use cfextract_cli::{CliError, ExperimentConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfextract", version, about = "Model extraction through counterfactual explanations")]
struct Cli {
    /// Worker threads for repetitions (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Train the target model and report its accuracy.
    TrainTarget(Common),
    /// Run the configured scenario over its grid.
    RunScenario {
        #[command(flatten)]
        common: Common,
        /// Write per-iteration explainer objectives (first cell, first
        /// repetition) to this CSV file.
        #[arg(long)]
        cf_trace: Option<PathBuf>,
    },
    /// Compare the counterfactual attack with extraction on the full pool.
    CompareBaseline(Common),
    /// Write a synthetic dataset and its schema.
    GenSynthetic {
        #[arg(long, value_enum, default_value = "two-moons")]
        kind: SyntheticKind,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Noise level (two-moons) or boundary gap (linear).
        #[arg(long, default_value_t = 0.1)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut config = ExperimentConfig::from_json_file(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    match cli.command {
        Command::TrainTarget(common) => {
            let s = commands::cmd_train_target(&load(&common)?)?;
            println!(
                "{}: train {:.2}% test {:.2}% ({} / {} / {} rows), model at {}",
                s.dataset,
                100.0 * s.train_accuracy,
                100.0 * s.test_accuracy,
                s.n_train,
                s.n_test,
                s.n_pool,
                s.model_path.display()
            );
        }
        Command::RunScenario { common, cf_trace } => {
            let config = load(&common)?;
            let rows = commands::cmd_run_scenario(&config, cf_trace.as_deref())?;
            println!("{} row(s) written to {}", rows.len(), config.out_dir.display());
        }
        Command::CompareBaseline(common) => {
            let config = load(&common)?;
            for r in commands::cmd_compare_baseline(&config)? {
                println!(
                    "{:<14} |Q|={:<6} fidelity {:.2}% accuracy {:.2}% delta {:+.2}",
                    r.method,
                    r.query_budget,
                    100.0 * r.mean_fidelity,
                    100.0 * r.mean_accuracy,
                    100.0 * r.delta_fidelity
                );
            }
        }
        Command::GenSynthetic {
            kind,
            n,
            noise,
            seed,
            out,
        } => {
            let schema = commands::cmd_gen_synthetic(kind, n, noise, seed, &out)?;
            println!("wrote {} and {}", out.display(), schema.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
