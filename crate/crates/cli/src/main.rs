use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use rnn_linz_cli::{run, Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let out = match &cli.command {
        Command::Simulate(a)
        | Command::Linearize(a)
        | Command::Eigen(a)
        | Command::Equiv(a)
        | Command::Context(a)
        | Command::Export(a) => a.out.as_ref(),
    };
    let written = match out {
        Some(path) => std::fs::write(path, &outcome.output)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout()
            .lock()
            .write_all(outcome.output.as_bytes())
            .map_err(|e| format!("cannot write stdout: {e}")),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    if outcome.exit_code == 4 {
        eprintln!("error: property check failed; see report");
    } else if outcome.exit_code == 3 {
        eprintln!("error: some contexts failed to instantiate; see report");
    }
    ExitCode::from(outcome.exit_code as u8)
}
