use std::process::ExitCode;

use clap::Parser;
use rfenchel::cli::{error_object, execute, Cli, EXIT_IO, EXIT_SCHEMA};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = cli.command.split();
    let text = match std::fs::read_to_string(&args.scenario) {
        Ok(t) => t,
        Err(e) => {
            print!("{}", error_object("schema", &format!("cannot read {}: {e}", args.scenario.display())));
            return ExitCode::from(EXIT_SCHEMA as u8);
        }
    };
    let outcome = execute(kind, &text, args.seed);
    match (&args.out, outcome.code) {
        (Some(path), 0) => {
            if let Err(e) = std::fs::write(path, &outcome.output) {
                print!("{}", error_object("io", &format!("cannot write {}: {e}", path.display())));
                return ExitCode::from(EXIT_IO as u8);
            }
        }
        _ => print!("{}", outcome.output),
    }
    ExitCode::from(outcome.code as u8)
}
