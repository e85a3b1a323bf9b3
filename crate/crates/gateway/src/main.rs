use std::process::ExitCode;

use bidchess_gateway::cli::{self, Cli};
use clap::Parser;

fn main() -> ExitCode {
    let args = Cli::parse();
    bidchess_gateway::init_logging();
    cli::run(args)
}
