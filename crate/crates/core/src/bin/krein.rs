use clap::Parser;
use std::path::PathBuf;

use krein::cli::{run, Command, EXIT_CONFIG};

/// Point interactions in bounded Dirichlet domains.
#[derive(Parser)]
#[command(name = "krein", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for the landscape and atlas stages.
    #[arg(long)]
    threads: Option<usize>,
    /// Reserved; no stage is stochastic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() {
    let args = Args::parse();
    let _ = args.seed;
    if let Some(n) = args.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("config error: invalid thread count {n}");
            std::process::exit(EXIT_CONFIG);
        }
    }
    std::process::exit(run(args.command, &args.config, args.out));
}
