use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sfv::config::RunConfig;
use sfv_cli::commands;

/// Stochastic finite volume solver with POD/Q-DEIM reduced flux integrals.
///
/// Settings come from an optional `key=value` config file followed by
/// `key=value` overrides. Exit codes: 2 configuration, 3 positivity,
/// 4 integration failure, 5 IO or file format.
#[derive(Parser)]
#[command(name = "sfv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Config file of `key=value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// `key=value` overrides, applied after the config file.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solve and write mean/std and slice CSVs plus a JSON summary.
    Solve(RunArgs),
    /// Build a flux snapshot matrix (intrusive or non-intrusive).
    Snapshots(RunArgs),
    /// POD basis, face integrals and optional Q-DEIM points from snapshots.
    Basis(RunArgs),
    /// Relative L1 error of the means of run A against reference run B.
    Compare { a: PathBuf, b: PathBuf },
    /// Run an experiment protocol: table1, table2, burgers-rom-sweep, sod-rom-sweep.
    Reproduce {
        id: String,
        #[command(flatten)]
        args: RunArgs,
    },
}

fn load(args: &RunArgs) -> sfv::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_overrides(&args.overrides)?;
    Ok(cfg)
}

fn run(cli: Cli) -> sfv::Result<()> {
    match cli.command {
        Command::Solve(a) => {
            let s = commands::solve(&load(&a)?)?;
            println!("{}", s.to_json());
        }
        Command::Snapshots(a) => {
            let (r, c) = commands::snapshots(&load(&a)?)?;
            println!("snapshot matrix {r} x {c}");
        }
        Command::Basis(a) => {
            let n = commands::basis(&load(&a)?)?;
            println!("basis with {n} modes");
        }
        Command::Compare { a, b } => {
            for (name, r) in commands::compare(&a, &b)? {
                println!("{name},{:.16e}", r.aggregate);
            }
        }
        Command::Reproduce { id, args } => commands::reproduce(&id, &load(&args)?)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(sfv_cli::exit_code(&e))
        }
    }
}
