use std::process::ExitCode;

use clap::Parser;

mod cmd;
mod out;

fn main() -> ExitCode {
    let cli = cmd::Cli::parse();
    match cmd::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
