use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = ale_cli::Cli::parse();
    ExitCode::from(ale_cli::run(&cli).code())
}
