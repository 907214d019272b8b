use std::path::PathBuf;

use clap::Parser;

use devs_cli::node::{run, NodeConfig};

/// Simulation node daemon: hosts simulators, stores model packages, and
/// coordinates runs when addressed as the head node.
#[derive(Parser)]
#[command(name = "devs-node", version)]
struct Args {
    /// Bind address (use port 0 to pick a free port).
    #[arg(long, default_value = "127.0.0.1:8080")]
    listen: String,
    /// Address reported to peers and clients, when it differs from the
    /// bound one (NAT, container).
    #[arg(long, env = "DEVS_NODE_ADDR")]
    advertise: Option<String>,
    /// Directory for per-client console log files.
    #[arg(long)]
    log_dir: Option<PathBuf>,
    /// Exit after this many seconds without a request.
    #[arg(long)]
    idle_timeout_secs: Option<u64>,
}

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args = Args::parse();
    run(NodeConfig {
        listen: args.listen,
        advertise: args.advertise,
        log_dir: args.log_dir,
        idle_timeout_secs: args.idle_timeout_secs,
    })
}
