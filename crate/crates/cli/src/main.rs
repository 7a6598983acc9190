use std::process::ExitCode;

use clap::Parser;
use strata_lab::{run, Cli, EXIT_OK};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("strata-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
