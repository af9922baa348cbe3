use std::process::ExitCode;

use clap::Parser;
use heavyspec::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli, std::env::args().skip(1).collect()) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if cli.strict && !outcome.all_passed {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
