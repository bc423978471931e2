//! Command-line entry point: scenario loading, experiment execution, and
//! report emission. Exit codes: 0 on completion (whatever the verdicts),
//! 1 on runtime failure, 2 on configuration errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use trilab::scenario::{
    run_counterexample, run_graph_metrics, run_merkle_vectors_check, run_merkle_vectors_emit,
    run_scenario, GraphMetricsScenario, OutputFormat, RunError, RunResult, ScenarioFile,
    DEFAULT_SEEDS,
};

#[derive(Parser)]
#[command(
    name = "trilab",
    version,
    about = "Desk-scale blockchain protocol laboratory",
    long_about = "Evaluates security, scalability, and decentralisation predicates over \
                  protocol configurations, simulates relay-cost models, and emits \
                  byte-reproducible reports."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Replace the scenario's seed list with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for emitted report files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Summary format printed to stdout.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Suppress stdout summaries (files are still written).
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(arg: FormatArg) -> Self {
        match arg {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the three trilemma predicates from a scenario file.
    Trilemma { scenario: PathBuf },
    /// Simulate message propagation from a scenario file.
    Propagate { scenario: PathBuf },
    /// Exact connectivity metrics of a scenario topology or an edge-list
    /// graph file.
    GraphMetrics { path: PathBuf },
    /// Measure propagation latency against topology size across families.
    CausalChain { scenario: PathBuf },
    /// Emit or check Merkle inclusion-proof golden vectors.
    MerkleVectors {
        #[command(subcommand)]
        action: VectorAction,
    },
    /// Emit the reference counterexample configuration, then evaluate it.
    Counterexample,
}

#[derive(Subcommand)]
enum VectorAction {
    /// Write the deterministic golden-vector corpus.
    Emit {
        /// Largest leaf count in the corpus.
        #[arg(long, default_value_t = 16)]
        max_leaves: usize,
    },
    /// Verify a golden-vector file against this implementation.
    Check { file: PathBuf },
}

fn read_file(path: &Path) -> Result<String, RunError> {
    std::fs::read_to_string(path)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<ScenarioFile, RunError> {
    ScenarioFile::parse(&read_file(path)?)
        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<RunResult, RunError> {
    let format: OutputFormat = cli.format.into();
    match &cli.command {
        Command::Trilemma { scenario }
        | Command::Propagate { scenario }
        | Command::CausalChain { scenario } => {
            run_scenario(&load_scenario(scenario)?, cli.seed, format)
        }
        Command::GraphMetrics { path } => {
            let text = read_file(path)?;
            if text.trim_start().starts_with('{') {
                run_scenario(
                    &ScenarioFile::parse(&text)
                        .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?,
                    cli.seed,
                    format,
                )
            } else {
                // Edge-list interchange format.
                let seeds = cli.seed.map(|s| vec![s]).unwrap_or(DEFAULT_SEEDS.to_vec());
                run_graph_metrics(
                    &GraphMetricsScenario {
                        topology: None,
                        graph_text: Some(text),
                    },
                    &seeds,
                    format,
                )
            }
        }
        Command::MerkleVectors { action } => match action {
            VectorAction::Emit { max_leaves } => {
                run_merkle_vectors_emit(cli.seed.unwrap_or(DEFAULT_SEEDS[0]), *max_leaves)
            }
            VectorAction::Check { file } => run_merkle_vectors_check(&read_file(file)?),
        },
        Command::Counterexample => run_counterexample(cli.seed, format),
    }
}

fn emit(cli: &Cli, result: &RunResult) -> Result<(), RunError> {
    if !result.files.is_empty() {
        std::fs::create_dir_all(&cli.out_dir).map_err(|e| {
            RunError::Runtime(format!("cannot create {}: {e}", cli.out_dir.display()))
        })?;
    }
    for file in &result.files {
        let path = cli.out_dir.join(&file.name);
        std::fs::write(&path, &file.contents)
            .map_err(|e| RunError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        eprintln!("wrote {}", path.display());
    }
    if !cli.quiet {
        for line in &result.summary_lines {
            println!("{line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli).and_then(|result| emit(&cli, &result)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err @ RunError::Config(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
        Err(err @ RunError::Runtime(_)) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
