use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use crestim_cli::meshfile::read_mesh;
use crestim_cli::run::{fixtures_list, mesh_info, run_config_file, summary};
use crestim_cli::CliResult;

/// Guaranteed error bounds for plane-stress finite element solutions.
#[derive(Parser)]
#[command(name = "crestim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the case described by a config file.
    Run { config: PathBuf },
    /// Built-in problems.
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
    /// Mesh files.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// List the built-in fixtures.
    List,
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print statistics of a mesh file.
    Info { path: PathBuf },
}

fn dispatch(cli: Cli) -> CliResult<String> {
    match cli.command {
        Command::Run { config } => Ok(summary(&run_config_file(&config)?)),
        Command::Fixtures { command: FixturesCommand::List } => Ok(fixtures_list()),
        Command::Mesh { command: MeshCommand::Info { path } } => Ok(mesh_info(&read_mesh(&path)?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
