use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cellmeasure_cli::Cli::parse();
    match cellmeasure_cli::run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
