//! Command-line front end: `generate`, `analyze`, `simulate` and `report`.
//! Configuration comes from an optional `key = value` file overridden by
//! one long flag per key (`th_sim` is `--th-sim`).

mod commands;
mod config;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Arg, ArgMatches, Command};

pub use commands::{
    cmd_analyze, cmd_generate, cmd_report, cmd_simulate, load_trace, simulate_rows, EFFECTIVE_CONFIG, ENCOUNTER_FILE,
    RESULTS_FILE, STABILITY_FILE, TRACE_FILE,
};
pub use config::{RunConfig, KEYS, PROTOCOL_NAMES};

use crate::error::{Error, Result};

fn flag(key: &str) -> String {
    key.replace('_', "-")
}

fn config_args() -> Vec<Arg> {
    let mut args = vec![Arg::new("config")
        .long("config")
        .value_name("FILE")
        .value_parser(clap::value_parser!(PathBuf))
        .help("key = value configuration file")];
    for (key, help) in KEYS {
        args.push(Arg::new(key).long(flag(key)).value_name("VALUE").help(help));
    }
    args
}

pub fn command() -> Command {
    Command::new("csi")
        .about("Behavior-profile driven dissemination: trace analysis and protocol simulation")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("generate")
                .about("Write a synthetic session trace")
                .args(config_args()),
        )
        .subcommand(
            Command::new("analyze")
                .about("Profile stability curves and encounter statistics")
                .args(config_args()),
        )
        .subcommand(
            Command::new("simulate")
                .about("Replay protocols over the evaluation half of a trace")
                .args(config_args()),
        )
        .subcommand(
            Command::new("report")
                .about("Summarize a results CSV as tab-separated tables")
                .arg(
                    Arg::new("results")
                        .long("results")
                        .value_name("FILE")
                        .required(true)
                        .value_parser(clap::value_parser!(PathBuf))
                        .help("results CSV written by simulate"),
                )
                .arg(
                    Arg::new("bin_width")
                        .long("bin-width")
                        .value_name("WIDTH")
                        .default_value("0.1")
                        .value_parser(clap::value_parser!(f64))
                        .help("sender-to-target similarity bin width"),
                ),
        )
}

/// Configuration file first, then command-line overrides.
fn resolve(m: &ArgMatches) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        let f = File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_file(BufReader::new(f))?;
    }
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn dispatch(m: &ArgMatches) -> Result<()> {
    match m.subcommand() {
        Some(("generate", sub)) => cmd_generate(&resolve(sub)?).map(drop),
        Some(("analyze", sub)) => cmd_analyze(&resolve(sub)?),
        Some(("simulate", sub)) => cmd_simulate(&resolve(sub)?).map(drop),
        Some(("report", sub)) => {
            let results = sub.get_one::<PathBuf>("results").expect("required");
            let width = *sub.get_one::<f64>("bin_width").expect("defaulted");
            cmd_report(results, width, io::stdout().lock())
        }
        _ => Err(Error::Usage("missing subcommand".into())),
    }
}

/// Parses `args` and runs the command. Returns the process exit code: 0 ok,
/// 1 usage, 2 input, 3 internal.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| dispatch(&matches))) {
        Ok(Ok(())) => 0,
        Ok(Err(Error::Io(e))) if e.kind() == io::ErrorKind::BrokenPipe => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
        Err(_) => 3,
    }
}
