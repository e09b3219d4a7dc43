//! Library side of the `ale` command-line tool.

pub mod args;
pub mod common;
pub mod explain;
pub mod oracle;
pub mod stats;
pub mod synth;
pub mod verify;

pub use args::{Cli, Command};
pub use common::Status;
pub use stats::cmd_stats;

/// Runs a parsed command line. Errors are reported on stderr and map to
/// [`Status::InputError`].
pub fn run(cli: &Cli) -> Status {
    let result = match &cli.command {
        Command::Explain(a) => explain::run_explain(a),
        Command::Verify(a) => verify::run_verify(a),
        Command::Stats(a) => stats::run_stats(a),
        Command::Oracle(c) => oracle::run_oracle(c),
        Command::Synth(a) => synth::run_synth(a),
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e:#}");
            Status::InputError
        }
    }
}
