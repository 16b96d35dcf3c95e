use std::process::ExitCode;

use clap::Parser;
use thermomech_cli::cli::{run, Cli};
use thermomech_cli::commands::TOLERANCE_ENV;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are configuration errors; help and version succeed.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let tol = std::env::var(TOLERANCE_ENV).ok();
    let stdout = std::io::stdout();
    match run(&cli, tol.as_deref(), &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
