use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use devs_cli::client::{run, AssignChoice, RunConfig, RunMode};

/// Client for a cluster of simulation nodes.
#[derive(Parser)]
#[command(name = "devs-client", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upload a model package, compile it, run it, and write a report.
    Run(RunArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    /// Server list file: one host:port per line, '#' comments.
    #[arg(long)]
    servers: PathBuf,
    /// Model package (.devs.json manifest).
    #[arg(long)]
    model: PathBuf,
    /// "auto" for round robin, or a JSON file mapping components to servers.
    #[arg(long, default_value = "auto")]
    assign: String,
    #[arg(long, value_enum, default_value_t = ModeArg::Centralized)]
    mode: ModeArg,
    /// Cycle bound for centralized runs.
    #[arg(long)]
    iterations: Option<u64>,
    /// Model-time bound for centralized runs.
    #[arg(long)]
    end_time: Option<f64>,
    /// Observation window in model time units, for rt runs.
    #[arg(long)]
    observe: Option<f64>,
    /// Wall-clock seconds per model time unit in rt runs.
    #[arg(long, default_value_t = 1.0)]
    timescale: f64,
    /// Where the JSON report goes.
    #[arg(long)]
    out: PathBuf,
    /// Rewrite server and client addresses in the report to stable names,
    /// for run-to-run comparison.
    #[arg(long)]
    stable_output: bool,
    /// Client address used in simulator keys (auto-detected otherwise).
    #[arg(long)]
    client_addr: Option<String>,
}

#[derive(ValueEnum, Clone, Copy)]
enum ModeArg {
    Centralized,
    Rt,
}

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let assign = if args.assign == "auto" {
                AssignChoice::Auto
            } else {
                AssignChoice::File(PathBuf::from(args.assign))
            };
            let config = RunConfig {
                servers_file: args.servers,
                model_file: args.model,
                assign,
                mode: match args.mode {
                    ModeArg::Centralized => RunMode::Centralized,
                    ModeArg::Rt => RunMode::Rt,
                },
                iterations: args.iterations,
                end_time: args.end_time,
                observe: args.observe,
                timescale: args.timescale,
                out: args.out,
                stable_output: args.stable_output,
                client_addr: args.client_addr,
            };
            run(&config)?;
            Ok(())
        }
    }
}
