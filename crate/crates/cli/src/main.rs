use std::process::ExitCode;

use clap::Parser;
use randers_cli::{run, Cli};

fn main() -> ExitCode {
    run(Cli::parse()).into()
}
