use std::io;
use std::process::ExitCode;

use clap::Parser;
use eclc::cli::{execute, Cli};

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let status = execute(cli, &mut io::stdout(), &mut io::stderr());
    ExitCode::from(status.code())
}
