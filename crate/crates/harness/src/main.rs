use std::process::ExitCode;

use clap::Parser;
use pdebet_harness::cli::{run_cli, Cli};

fn main() -> ExitCode {
    // help, version and usage errors are printed and exited by clap itself
    if let Err(e) = Cli::try_parse() {
        e.exit();
    }
    let mut stdout = std::io::stdout().lock();
    match run_cli(std::env::args_os(), &mut stdout) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(msg) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
    }
}
