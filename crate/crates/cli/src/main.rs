//! Command-line front end for the multigraph routing toolkit.

mod commands;
mod util;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "polyroute", version, about = "Vehicle routing on multigraphs: generators, solvers, training and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate seeded instances plus a manifest with the calibrated spec.
    Gen(commands::gen::GenArgs),
    /// Solve instances with a classical heuristic or a trained model.
    Solve(commands::solve::SolveArgs),
    /// Train the two-stage policy.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint over an instance directory.
    Eval(commands::eval::EvalArgs),
    /// Greedy-vs-exact edge selection study over a preference grid.
    CompareFsasp(commands::compare::CompareArgs),
    /// Aggregate metric CSVs into a summary table.
    Aggregate(commands::aggregate::AggregateArgs),
    /// Run the built-in oracle, gradient and invariant suites.
    Selftest(commands::selftest::SelftestArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::gen::run(args),
        Command::Solve(args) => commands::solve::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::CompareFsasp(args) => commands::compare::run(args),
        Command::Aggregate(args) => commands::aggregate::run(args),
        Command::Selftest(args) => commands::selftest::run(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
