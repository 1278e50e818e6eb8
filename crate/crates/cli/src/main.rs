use std::process::ExitCode;

use clap::Parser;

mod args;
mod commands;
mod report;

use args::{Cli, Command};

const EXIT_USAGE: u8 = 1;
const EXIT_PROCESSING: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            // --help and --version also come through here.
            return if usage { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Align(a) => commands::run_align(a),
        Command::Normalize(a) => commands::run_normalize(a),
        Command::Imf(a) => commands::run_imf(a),
        Command::Synth(a) => commands::run_synth(a),
        Command::Eval(a) => commands::run_eval(a).map(|table| print!("{table}")),
        Command::Codes(a) => commands::run_codes(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("exposalign: {e}");
            ExitCode::from(EXIT_PROCESSING)
        }
    }
}
