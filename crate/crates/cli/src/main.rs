mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Job;
use config::{ConfigError, Overrides, RunConfig, Stage};

#[derive(Parser)]
#[command(name = "levy-branching", version, about = "Branching systems coded by one-sided Levy processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML); `verify` accepts several.
    #[arg(long, global = true, value_name = "PATH")]
    config: Vec<PathBuf>,

    /// Number of paths (simulate, verify) or replicas (cmj).
    #[arg(long, global = true, value_name = "N")]
    paths: Option<usize>,

    #[arg(long, global = true, value_name = "S")]
    seed: Option<u64>,

    /// Jump truncation level.
    #[arg(long, global = true, value_name = "E")]
    eps: Option<f64>,

    /// Comma-separated levels t1,t2,...
    #[arg(long, global = true, value_delimiter = ',', value_name = "T")]
    levels: Option<Vec<f64>>,

    #[arg(long, global = true, value_name = "NAME")]
    suite: Option<String>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker thread cap.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the model's regime, Laplace exponent and scale function.
    ModelInfo,
    /// Simulate killed paths and store them as line-delimited JSON.
    Simulate,
    /// Read the atom measures off stored paths.
    Extract {
        /// Path file; defaults to `<out>/paths.jsonl`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Solve the cumulant, moment or occupation equation on a grid.
    Solve,
    /// Simulate the branching system directly.
    Cmj,
    /// Run a verification suite; exits with status 1 if a check fails.
    Verify,
}

fn load(cli: &Cli) -> Result<Vec<Job>, ConfigError> {
    if cli.config.is_empty() {
        return Err(ConfigError::new("", "--config is required"));
    }
    let stage = match cli.command {
        Command::Extract { .. } => Stage::Extract,
        Command::Cmj => Stage::Cmj,
        Command::Verify => Stage::Verify,
        _ => Stage::Any,
    };
    let overrides = Overrides {
        stage,
        paths: cli.paths,
        seed: cli.seed,
        eps: cli.eps,
        levels: cli.levels.clone(),
        suite: cli.suite.clone(),
        out: cli.out.as_ref().map(|p| p.display().to_string()),
    };
    cli.config
        .iter()
        .map(|path| {
            let mut cfg = RunConfig::load(path)?;
            cfg.apply(&overrides);
            let model = cfg.validate()?;
            let hash = cfg.hash();
            Ok(Job { cfg, model, hash })
        })
        .collect()
}

fn run(cli: &Cli, jobs: &[Job]) -> anyhow::Result<bool> {
    if !matches!(cli.command, Command::Verify) && jobs.len() > 1 {
        anyhow::bail!("only verify accepts more than one --config");
    }
    let job = &jobs[0];
    match &cli.command {
        Command::ModelInfo => commands::model_info(job)?,
        Command::Simulate => commands::simulate(job)?,
        Command::Extract { input } => commands::extract(job, input.as_deref())?,
        Command::Solve => commands::solve(job)?,
        Command::Cmj => commands::cmj(job)?,
        Command::Verify => {
            let mut ok = true;
            for job in jobs {
                ok &= commands::verify(job)?;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("error: cannot set thread count: {e}");
            return ExitCode::from(2);
        }
    }
    let jobs = match load(&cli) {
        Ok(j) => j,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, &jobs) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
