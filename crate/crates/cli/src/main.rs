use std::process::ExitCode;

use clap::Parser;
use newton_flow_cli::{execute, init_logging, Cli};

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
