use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use symtube_cli::commands;
use symtube_cli::config::{layered, read_config_file, KEYS};
use symtube_cli::{CliError, RunConfig};

fn cli() -> Command {
    let mut cmd = Command::new("symtube")
        .about("Experiments on symmetric cones, tube domains and weighted Bergman spaces")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").value_name("FILE").global(true).help("flat key=value settings file"));
    for (key, _, help) in KEYS {
        cmd = cmd.arg(Arg::new(*key).long(key.replace('_', "-")).value_name("VALUE").global(true).help(*help));
    }
    cmd.subcommand(Command::new("lattice").about("build and verify Whitney lattices, or re-verify one with --input"))
        .subcommand(Command::new("laplace").about("Laplace transform of a generalized power"))
        .subcommand(Command::new("sampling").about("sampling ratios of an atom family across a delta sweep"))
        .subcommand(Command::new("reconstruct").about("atomic reconstruction residuals"))
        .subcommand(Command::new("params").about("exact parameter windows and interpolation arithmetic"))
}

fn settings(m: &ArgMatches) -> Result<RunConfig, CliError> {
    let file = match m.get_one::<String>("config") {
        Some(path) => read_config_file(Path::new(path))?,
        None => BTreeMap::new(),
    };
    let flags = KEYS
        .iter()
        .filter_map(|(k, _, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    RunConfig::from_map(&layered(file, flags))
}

fn run(name: &str, m: &ArgMatches) -> Result<(), CliError> {
    let cfg = settings(m)?;
    match name {
        "lattice" => commands::lattice(&cfg),
        "laplace" => commands::laplace(&cfg),
        "sampling" => commands::sampling(&cfg),
        "reconstruct" => commands::reconstruct(&cfg),
        "params" => commands::params(&cfg),
        _ => unreachable!(),
    }
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("symtube {name}: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
