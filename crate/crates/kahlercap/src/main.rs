use std::process::ExitCode;

use clap::Parser;
use kahlercap::cli::{init_threads, run, Cli};
use kahlercap::error::{EXIT_INVARIANT, EXIT_PASS};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_threads().and_then(|()| run(cli));
    let code = match outcome {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_INVARIANT,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
