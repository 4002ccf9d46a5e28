use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    match rise_cli::run(rise_cli::Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rise: {e:#}");
            ExitCode::FAILURE
        }
    }
}
