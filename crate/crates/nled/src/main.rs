use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    nled::run(&nled::Cli::parse())
}
