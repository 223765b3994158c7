mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

/// Trace identities, Fredholm series and vertex-operator products.
#[derive(Debug, Parser)]
#[command(name = "focktrace", version)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Root seed for every random input.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Replace every tolerance by this value.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the seeded identity suite.
    Identities(commands::IdentitiesArgs),
    /// Solve a second-kind integral equation by Fredholm series.
    Fredholm(commands::FredholmArgs),
    /// Evaluate a vertex or eta trace ratio from a JSON spec.
    Vertex(commands::VertexArgs),
    /// Residue-trace checks on seeded random operators.
    Genfun(commands::GenfunArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match &cli.command {
        Command::Identities(args) => commands::identities(&cli.config, args),
        Command::Fredholm(args) => commands::fredholm(&cli.config, args),
        Command::Vertex(args) => commands::vertex(&cli.config, args),
        Command::Genfun(args) => commands::genfun(&cli.config, args),
    };
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.emit(cli.config.format, cli.config.out.as_deref()) {
        eprintln!("error: cannot write report: {e}");
        return ExitCode::from(2);
    }
    if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
