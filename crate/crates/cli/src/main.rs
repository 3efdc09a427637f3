use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod report;

/// Distribution-based iterative variable screening.
#[derive(Debug, Parser)]
#[command(name = "sievecast", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Screen the predictors of a data file against one response column.
    Screen(ScreenArgs),
    /// Run a simulation table.
    Simulate(SimulateArgs),
    /// False-selection calculator for the normal threshold.
    Theory(TheoryArgs),
    /// Time the correlation scan and one screening pass on synthetic data.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svm1,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ThresholdArg {
    Auto,
    Normal,
    Bootstrap,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Basic,
    TwoStage,
    Auto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum EmitArg {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Common {
    /// Master seed; falls back to SIEVECAST_SEED, then 0.
    #[arg(long, env = "SIEVECAST_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
}

#[derive(Debug, Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = sievecast::config::DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = ThresholdArg::Auto)]
    threshold: ThresholdArg,
    #[arg(long, default_value_t = sievecast::config::DEFAULT_BOOTSTRAP_REPS)]
    bootstrap_reps: usize,
    #[arg(long, default_value_t = sievecast::config::DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Debug, Args)]
struct ScreenArgs {
    #[arg(long)]
    input: std::path::PathBuf,
    /// Input format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Response column: header name, or 0-based column index.
    #[arg(long)]
    response: String,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Auto)]
    algorithm: AlgorithmArg,
    /// Number of random partitions for the two-stage screener.
    #[arg(long = "T", default_value_t = sievecast::config::DEFAULT_PARTITIONS)]
    partitions: usize,
    /// Include wall-clock time in the report (breaks byte-identical output).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// One of table1, table2, table3, table-heavy.
    #[arg(long)]
    preset: String,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "T")]
    partitions: Option<usize>,
    #[command(flatten)]
    threshold: ThresholdArgs,
    #[arg(long, value_enum, default_value_t = EmitArg::Csv)]
    emit: EmitArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct TheoryArgs {
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 2000)]
    p: usize,
    #[arg(long, default_value_t = sievecast::config::DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of active predictors excluded from the false-selection count.
    #[arg(long, default_value_t = 0)]
    kappa: usize,
    #[arg(long, default_value_t = 100_000)]
    mc_reps: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 34_000)]
    p: usize,
    #[arg(long, default_value_t = sievecast::config::DEFAULT_ALPHA)]
    alpha: f64,
    /// Refuse to allocate more than this many GiB.
    #[arg(long, default_value_t = 16.0)]
    mem_cap_gib: f64,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
