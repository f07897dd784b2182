//! Command-line driver: randomized formula verification and rotational
//! surface generation in the hyperbolic Randers domain.

pub mod args;
pub mod report;
pub mod surface;
pub mod verify;

use std::process::ExitCode;

pub use args::Cli;
use args::{Command, SurfaceCommand};

/// Exit status contract: 0 pass, 1 verification failure or empty domain, 2 usage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Usage,
}

impl Status {
    pub fn code(self) -> u8 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Usage => 2,
        }
    }
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s.code())
    }
}

/// Error carrying the exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub error: anyhow::Error,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self {
            status: Status::Usage,
            error: anyhow::anyhow!(msg.into()),
        }
    }

    pub fn fail(error: impl Into<anyhow::Error>) -> Self {
        Self {
            status: Status::Fail,
            error: error.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::fail(e)
    }
}

pub fn run(cli: Cli) -> Status {
    let result = match cli.command {
        Command::Verify(a) => verify::run(&a),
        Command::Surface { command } => match command {
            SurfaceCommand::Generate(a) => surface::generate(&a, None),
            SurfaceCommand::Special(a) => surface::generate(&a.surface, Some(a.kind)),
            SurfaceCommand::Check(a) => surface::check(&a),
        },
    };
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            e.status
        }
    }
}
