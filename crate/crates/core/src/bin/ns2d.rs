use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stochastic_ns2d::harness::{self, RunConfig, RunContext, Suite};
use stochastic_ns2d::{Error, Result};

#[derive(Parser)]
#[command(name = "ns2d", version, about = "Coupled stochastic 2D Navier-Stokes / advection runs and checks")]
struct Cli {
    /// Run configuration (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replace simulation.seed from the configuration.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, env = "NS2D_OUT_DIR", default_value = "ns2d-out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write series, statistics and checkpoints.
    Simulate,
    /// Run oracle and identity suites.
    Verify {
        /// Suites to run; repeat or comma-separate. Default: all.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
    },
    /// Run the coupling sweep described by the [sweep] section.
    Sweep,
    /// Structure functions and scaling fits from stored checkpoints.
    Structure {
        /// Glob selecting checkpoint files.
        #[arg(long)]
        checkpoints: String,
    },
}

fn run(cli: Cli) -> Result<harness::Outcome> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_path(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed_override {
        cfg.simulation.seed = seed;
    }
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Usage(format!("--threads {t}: {e}")))?;
    }
    let ctx = RunContext {
        out_dir: cli.out_dir,
        threads: rayon::current_num_threads(),
    };
    match cli.command {
        Command::Simulate => harness::simulate(&cfg, &ctx),
        Command::Verify { suite } => {
            let suites = if suite.is_empty() {
                Suite::ALL.to_vec()
            } else {
                suite.iter().map(|s| s.parse()).collect::<Result<Vec<Suite>>>()?
            };
            harness::verify(&cfg, &suites, &ctx)
        }
        Command::Sweep => harness::sweep(&cfg, &ctx),
        Command::Structure { checkpoints } => harness::structure(&cfg, &checkpoints, &ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
