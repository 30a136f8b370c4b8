use std::process::ExitCode;

use clap::Parser;
use homodyne::cli::{run, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match run(&config) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("homodyne: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
