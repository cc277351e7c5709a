use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use schauder_cli::{run, RunOptions, Verb};

#[derive(Parser)]
#[command(name = "schauder", version, about = "Solves and audits parabolic problems described by a JSON config")]
struct Cli {
    #[command(subcommand)]
    verb: Cmd,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides outputs.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed for random suites (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Treat hypothesis violations as fatal.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Sample the hypotheses only.
    Check,
    /// Solve the configured problem and write the CSV.
    Solve,
    /// Run the configured audit suites.
    Audit,
    /// Everything, plus the plot script.
    All,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config) = cli.config else {
        eprintln!("error: --config PATH is required");
        return ExitCode::from(3);
    };
    let verb = match cli.verb {
        Cmd::Check => Verb::Check,
        Cmd::Solve => Verb::Solve,
        Cmd::Audit => Verb::Audit,
        Cmd::All => Verb::All,
    };
    let outcome = run(verb, &RunOptions { config, out: cli.out, seed: cli.seed, strict: cli.strict });
    if let Some(reason) = &outcome.report.reason {
        eprintln!("{reason}");
    }
    if let Some(path) = &outcome.report_path {
        println!("{}", path.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
