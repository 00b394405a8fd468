use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expsieve_cli::{manifest, run, CliError, Command, RunOptions};

#[derive(Parser)]
#[command(name = "expsieve", version, about = "Exponential sums over powers modulo primes: batch experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (one JSON document).
    #[arg(long)]
    config: PathBuf,
    /// Order database to load, or to create when absent.
    #[arg(long)]
    order_db: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build an order database.
    Orders(RunArgs),
    /// The statistics V and W over E_Delta(X).
    Vsum(RunArgs),
    /// Scan subgroup sums against an admissible pair.
    Admissible(RunArgs),
    /// Large-sieve sum against (K^2 + S) sum |gamma|^2.
    LargeSieve(RunArgs),
    /// Exact discrepancy survey of {lambda^s / p}.
    Discrepancy(RunArgs),
    /// Divisibility of integers with prescribed binary digits.
    Digits(RunArgs),
    /// Count primes with a large subgroup sum.
    Exceptional(RunArgs),
    /// Evaluate the closed-form bounds.
    Report(RunArgs),
    /// Check the artifacts of a finished run.
    Verify {
        #[arg(long)]
        manifest: PathBuf,
        /// Also repeat the run and compare outputs.
        #[arg(long)]
        rerun: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.cmd {
        Cmd::Orders(a) => (Command::Orders, a),
        Cmd::Vsum(a) => (Command::Vsum, a),
        Cmd::Admissible(a) => (Command::Admissible, a),
        Cmd::LargeSieve(a) => (Command::LargeSieve, a),
        Cmd::Discrepancy(a) => (Command::Discrepancy, a),
        Cmd::Digits(a) => (Command::Digits, a),
        Cmd::Exceptional(a) => (Command::Exceptional, a),
        Cmd::Report(a) => (Command::Report, a),
        Cmd::Verify { manifest, rerun } => {
            return match manifest::verify(&manifest, rerun) {
                Ok(r) => {
                    println!("ok: {} artifacts verified{}", r.checked, if r.rerun { ", rerun identical" } else { "" });
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            };
        }
    };
    let opts = RunOptions {
        command,
        config: args.config,
        order_db: args.order_db,
        out: args.out,
        threads: args.threads,
    };
    match run(&opts) {
        Ok(m) => {
            let names: Vec<_> = m.outputs.iter().map(|o| o.path.as_str()).collect();
            println!("{command}: wrote {} in {:.3}s", names.join(", "), m.wall_time_s);
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code())
}
