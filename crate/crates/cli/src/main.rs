mod commands;
mod output;
mod params;

use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Arg, ArgMatches};
use winmart::{Error, Result};

use commands::Registry;
use output::{write_manifest, Format, ManifestInfo};
use params::{read_config, Params};

const THREADS_ENV: &str = "WINMART_THREADS";

fn build_cli(registry: &Registry) -> clap::Command {
    let mut cli = clap::Command::new("winmart")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Win-martingales, reciprocal specific relative entropy and the scaled Wright-Fisher diffusion")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("flat key = value file; flags override it"))
        .arg(Arg::new("out").long("out").global(true).value_name("FILE").help("write the artifact here plus FILE.manifest.json"))
        .arg(Arg::new("format").long("format").global(true).value_name("csv|json|bin").help("artifact format [default: csv]"))
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_name("N")
                .help(format!("worker threads [default: ${THREADS_ENV} or all cores]")),
        );
    for cmd in registry.iter() {
        let mut sub = clap::Command::new(cmd.name()).about(cmd.about());
        for spec in cmd.params() {
            let help = match spec.default {
                Some(d) => format!("{} [default: {d}]", spec.help),
                None => spec.help.to_string(),
            };
            sub = sub.arg(
                Arg::new(spec.name)
                    .long(spec.name)
                    .value_name(spec.kind.placeholder())
                    .allow_hyphen_values(true)
                    .help(help),
            );
        }
        cli = cli.subcommand(sub);
    }
    cli
}

fn global(sub: &ArgMatches, config: &BTreeMap<String, String>, key: &str) -> Option<String> {
    sub.get_one::<String>(key)
        .cloned()
        .or_else(|| config.get(key).cloned())
}

fn thread_count(sub: &ArgMatches, config: &BTreeMap<String, String>) -> Result<Option<usize>> {
    let raw = global(sub, config, "threads").or_else(|| std::env::var(THREADS_ENV).ok());
    raw.map(|s| match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(Error::Usage(format!(
            "threads must be a positive integer, got '{s}'"
        ))),
    })
    .transpose()
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn run(registry: &Registry, matches: &ArgMatches) -> Result<()> {
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cmd = registry.get(name)?;
    let config = match sub.get_one::<String>("config") {
        Some(path) => read_config(Path::new(path))?,
        None => BTreeMap::new(),
    };
    let specs = cmd.params();
    for key in config.keys() {
        let known = specs.iter().any(|s| s.name == key)
            || ["out", "format", "threads"].contains(&key.as_str());
        if !known {
            return Err(Error::Usage(format!(
                "config key '{key}' is not a parameter of {name}"
            )));
        }
    }
    let format: Format = global(sub, &config, "format")
        .as_deref()
        .unwrap_or("csv")
        .parse()?;
    if format == Format::Bin && name != "simulate" {
        return Err(Error::Usage(
            "binary output is only available for simulate".into(),
        ));
    }
    let out = global(sub, &config, "out");
    let threads = thread_count(sub, &config)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let flags: BTreeMap<&'static str, String> = specs
        .iter()
        .filter_map(|s| sub.get_one::<String>(s.name).map(|v| (s.name, v.clone())))
        .collect();
    let params = Params::resolve(&specs, &config, &flags)?;

    let start = Instant::now();
    let outcome = cmd.run(&params)?;
    let wall = start.elapsed().as_secs_f64();
    if !outcome.artifact.supports(format) {
        return Err(Error::Usage(format!(
            "{name} cannot write {} output",
            format.name()
        )));
    }

    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for line in &outcome.summary {
        writeln!(lock, "{line}")?;
    }
    if let Some(out) = out {
        let path = Path::new(&out);
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        outcome.artifact.write(format, &mut w)?;
        w.flush()?;
        let info = ManifestInfo {
            command: name,
            params: params.resolved(),
            format,
            output: &out,
            threads,
            wall_time_s: wall,
        };
        write_manifest(&manifest_path(path), &info)?;
    }
    Ok(())
}

/// 2 for bad input, 3 for failed computations, 1 for I/O.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Usage(_) | Error::Format(_) => 2,
        Error::Numerical(_) | Error::Simulation(_) => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let registry = Registry::default();
    let matches = match build_cli(&registry).try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&registry, &matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("winmart: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
