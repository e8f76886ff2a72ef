use std::process::ExitCode;

use clap::Parser;
use neuroneval_cli::{Cli, run};

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    cli.config.resolve();
    match run(&cli.config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
