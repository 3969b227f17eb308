use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sqg_core::io::config::key_help;
use sqg_core::io::run;

#[derive(Parser)]
#[command(name = "sqg", version, about = "Critical SQG on the half-plane with a Dirichlet condition")]
#[command(after_help = key_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Time-step the equation and write snapshots and diagnostics.
    Simulate(Common),
    /// Solve the mild formulation by Picard iteration.
    Picard(Common),
    /// Run the estimate audits and write reports.csv.
    Verify(Common),
    /// Simulate to `analyticity.t` and tabulate derivative growth there.
    Analyticity(Common),
}

#[derive(Args)]
struct Common {
    /// key = value configuration file; missing keys keep their defaults
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override one key, applied after the file
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    emit_gnuplot: bool,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (mode, common) = match cli.command {
        Command::Simulate(c) => ("simulate", c),
        Command::Picard(c) => ("picard", c),
        Command::Verify(c) => ("verify", c),
        Command::Analyticity(c) => ("analyticity", c),
    };
    let mut overrides = common.set;
    overrides.push(format!("mode={mode}"));
    if common.emit_gnuplot {
        overrides.push("output.gnuplot=true".into());
    }
    std::process::exit(run(common.config.as_deref(), &overrides));
}
