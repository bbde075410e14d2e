//! `gudie`: batch front end for GraphUnit extraction.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gudie::{Aggregator, Decay, EdgeMode};

#[derive(Parser, Debug)]
#[command(
    name = "gudie",
    version,
    about = "Interest-driven subgraph extraction around seed nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a configuration file with every default spelled out
    InitConfig {
        /// Destination; standard output when omitted
        path: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Compute initial node and edge interest
    Score(RunArgs),
    /// Propagate interest from saved initial scores
    Propagate(StageArgs),
    /// Expand seeds over saved propagated scores
    Expand(StageArgs),
    /// Assemble GraphUnits from a saved expansion trace
    Units(StageArgs),
    /// Run the whole pipeline
    Run(RunArgs),
    /// Built-in scenario graphs
    Examples {
        #[command(subcommand)]
        command: ExamplesCommand,
    },
    /// Time the pipeline on a synthetic power-law graph
    Bench(BenchArgs),
    /// Serve the HTTP API
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: std::net::SocketAddr,
        /// Idle seconds before a session is dropped
        #[arg(long, default_value_t = 3600)]
        ttl_secs: u64,
    },
}

#[derive(Subcommand, Debug)]
enum ExamplesCommand {
    /// List the scenarios
    List,
    /// Write scenario graphs, manifests and configs
    Export {
        /// Example number (1-5) or `all`
        which: String,
        dir: PathBuf,
    },
    /// Run scenarios and check their expectations
    Run {
        /// Example number (1-5) or `all`
        #[arg(default_value = "all")]
        which: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Settings that override the configuration file.
#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    #[arg(long)]
    h: Option<usize>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    theta: Option<Decay>,
    #[arg(long)]
    gamma: Option<Aggregator>,
    /// Comma-separated seed ids
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<String>>,
    #[arg(long)]
    edge_mode: Option<EdgeMode>,
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    max_path_length: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Directory holding nodes.csv and transactions.csv
    #[arg(long, conflicts_with_all = ["nodes", "transactions"])]
    graph: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<PathBuf>,
    #[arg(long)]
    transactions: Option<PathBuf>,
    /// Also write one Graphviz file per unit
    #[arg(long)]
    dot: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug, Clone)]
struct StageArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Directory with the previous stage's files; defaults to the output directory
    #[arg(long)]
    from: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct BenchArgs {
    #[arg(long, default_value_t = 100_000)]
    nodes: usize,
    #[arg(long, default_value_t = 1)]
    rng_seed: u64,
    /// Number of seeds, spread evenly over the node list
    #[arg(long, default_value_t = 10)]
    seed_count: usize,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(err.code())
        }
    }
}
