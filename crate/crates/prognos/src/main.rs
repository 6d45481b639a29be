use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use prognos::{commands, CliError, PipelineConfig, RunContext};

#[derive(Parser)]
#[command(name = "prognos", version, about = "Fuel-cell health indicator and RUL pipeline")]
struct Cli {
    /// TOML configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for ensemble training (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Overrides the configured base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic ageing record.
    Synth,
    /// Empirical mode decomposition and Hilbert spectrum of a series.
    Decompose {
        input: PathBuf,
        /// Also write the dense time-frequency matrix.
        #[arg(long)]
        dense: bool,
    },
    /// Extract and normalize the health indicator from a voltage series.
    Extract { input: PathBuf },
    /// Estimate RUL at one prognostics point.
    Predict {
        hi: PathBuf,
        /// Prognostics time in hours.
        #[arg(long)]
        t_now: f64,
    },
    /// Sweep the prognostics points and score against the full HI.
    Evaluate { hi: PathBuf },
    /// Print the fully resolved configuration.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Command::Decompose { dense: true, .. } = cli.command {
        cfg.spectrum.dense = true;
    }
    if let Command::Config = cli.command {
        print!("{}", cfg.resolve()?.to_toml());
        return Ok(());
    }
    let ctx = RunContext::new(cfg, cli.out, cli.jobs)?;
    match cli.command {
        Command::Synth => commands::synth(&ctx),
        Command::Decompose { input, .. } => commands::decompose_file(&ctx, &input),
        Command::Extract { input } => commands::extract(&ctx, &input).map(drop),
        Command::Predict { hi, t_now } => commands::predict(&ctx, &hi, t_now).map(drop),
        Command::Evaluate { hi } => commands::evaluate(&ctx, &hi).map(drop),
        Command::Config => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
