#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod config;
mod error;
mod plot;

use std::fmt::Write;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use svi2r::{ModelParameters, ParamName, State};

use args::Cli;

/// Listing of the built-in parameter values and initial conditions.
fn defaults_help() -> String {
    let p = ModelParameters::default();
    let mut s = String::from("Model parameters (defaults; override with --param KEY=VALUE):\n");
    for name in ParamName::ALL {
        let _ = writeln!(s, "  {:<18} {}", name.key(), p.get(name));
    }
    s.push_str("\nInitial conditions (defaults; override with --init COMPARTMENT=VALUE):\n");
    for (c, v) in State::COLUMNS.iter().zip(State::reference_initial().to_array()) {
        let _ = writeln!(s, "  {c:<18} {v}");
    }
    s.push_str("\nExit status: 0 success, 1 analysis failure, 2 usage or input error.");
    s
}

fn main() -> ExitCode {
    let extra = defaults_help();
    let mut cmd = Cli::command().after_help(extra.clone());
    let names: Vec<String> = cmd.get_subcommands().map(|c| c.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |c| c.after_help(extra.clone()));
    }
    let matches = cmd.get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };

    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("SVI2R_LOG").init();

    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svi2r: {e}");
            e.exit_code()
        }
    }
}
