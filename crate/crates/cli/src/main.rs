use std::process::ExitCode;

use clap::Parser;
use morph_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("morph: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
