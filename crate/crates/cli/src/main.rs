use std::process::ExitCode;

use clap::Parser;

use vertexforge_cli::{run, CommandConfig};

fn main() -> ExitCode {
    let config = CommandConfig::parse();
    match run(&config) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("vertexforge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
