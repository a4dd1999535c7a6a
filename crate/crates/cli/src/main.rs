use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = odar_cli::Cli::parse();
    match odar_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("odar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
