use std::process::ExitCode;

use clap::Parser;
use entconf_cli::config::{Cli, Command};
use entconf_cli::{oracle_check, run, synth};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(args) => run::run_eval(args),
        Command::Transfer(args) => run::run_transfer(args),
        Command::Synth(args) => synth::run_synth(args),
        Command::OracleCheck(args) => oracle_check::run_oracle_check(args),
    };
    match result {
        Ok(outcome) => {
            if outcome == entconf_cli::Outcome::UndefinedOnly {
                eprintln!("warning: every metric is undefined (the scored words hold a single class)");
            }
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
