use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory, FromArgMatches};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Cli, Command};
use crate::commands;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qfin_core::Error),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use qfin_core::Error as E;
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) | CliError::Core(E::Argument(_)) => 2,
            CliError::Validation(_) | CliError::Core(E::Validation(_) | E::Io(_) | E::Csv(_) | E::Json(_)) => 3,
            CliError::Core(E::Capacity { .. }) => 4,
            CliError::Solver(_) | CliError::Core(E::Infeasible(_)) => 5,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Arguments after the program name, without the output directory.
    pub argv: Vec<String>,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Inputs read and outputs produced by one command.
pub struct Run {
    pub seed: u64,
    pub verbose: bool,
    inputs: Vec<FileDigest>,
    outputs: BTreeMap<String, Vec<u8>>,
}

impl Run {
    pub fn read(&mut self, path: &Path) -> Result<String> {
        let bytes = fs::read(path).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        self.record_input(path, &bytes);
        String::from_utf8(bytes).map_err(|_| CliError::Validation(format!("{} is not UTF-8 text", path.display())))
    }

    fn record_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) });
    }

    pub fn write(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.outputs.insert(name.to_string(), bytes.into());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s);
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(qfin_core::Error::from)?;
        for r in rows {
            w.write_record(&r).map_err(qfin_core::Error::from)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Validation(e.to_string()))?;
        self.write(name, bytes);
        Ok(())
    }
}

/// Parse, run and write outputs plus manifest. Returns the manifest.
pub fn run(argv: Vec<String>) -> Result<Manifest> {
    let (cli, config_bytes) = parse_with_config(&argv)?;
    let mut run = Run { seed: cli.seed, verbose: cli.verbose, inputs: Vec::new(), outputs: BTreeMap::new() };
    if let (Some(path), Some(bytes)) = (&cli.config, &config_bytes) {
        run.record_input(path, bytes);
    }
    let command = match &cli.command {
        Command::Replay(args) => return replay(&args.manifest, &cli.out),
        Command::Risk(c) => commands::risk(c, &mut run)?,
        Command::Opt(c) => commands::opt(c, &mut run)?,
        Command::Ml(c) => commands::ml(c, &mut run)?,
        Command::Ae(c) => commands::ae(c, &mut run)?,
    };
    let digest = |(name, bytes): (&String, &Vec<u8>)| FileDigest { path: name.clone(), sha256: sha256_hex(bytes) };
    let manifest = Manifest {
        tool: "qfin".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.to_string(),
        argv: strip_out(&argv[1.min(argv.len())..]),
        seed: cli.seed,
        inputs: run.inputs,
        outputs: run.outputs.iter().map(digest).collect(),
    };
    fs::create_dir_all(&cli.out)?;
    for (name, bytes) in &run.outputs {
        fs::write(cli.out.join(name), bytes)?;
    }
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(cli.out.join(MANIFEST), text)?;
    println!("wrote {} files and {} to {}", run.outputs.len(), MANIFEST, cli.out.display());
    Ok(manifest)
}

fn strip_out(args: &[String]) -> Vec<String> {
    let mut kept = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if std::mem::take(&mut skip) {
            continue;
        }
        if a == "--out" || a == "-o" {
            skip = true;
        } else if !(a.starts_with("--out=") || (a.starts_with("-o") && a.len() > 2 && !a.starts_with("--"))) {
            kept.push(a.clone());
        }
    }
    kept
}

fn replay(manifest_path: &Path, out: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(manifest_path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", manifest_path.display())))?;
    let recorded: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("malformed manifest: {e}")))?;
    if recorded.argv.iter().any(|a| a == "replay") {
        return usage("a manifest cannot record another replay");
    }
    if recorded.version != env!("CARGO_PKG_VERSION") {
        eprintln!("warning: manifest written by version {}, replaying with {}", recorded.version, env!("CARGO_PKG_VERSION"));
    }
    for input in &recorded.inputs {
        let bytes = fs::read(&input.path).map_err(|e| CliError::Validation(format!("cannot read input {}: {e}", input.path)))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::Validation(format!("input {} changed since the recorded run", input.path)));
        }
    }
    let mut argv = vec!["qfin".to_string(), "--out".to_string(), out.display().to_string()];
    argv.extend(recorded.argv.iter().cloned());
    let fresh = run(argv)?;
    let diverged: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !fresh.outputs.contains(o))
        .map(|o| o.path.as_str())
        .collect();
    if !diverged.is_empty() || fresh.outputs.len() != recorded.outputs.len() {
        return Err(CliError::Solver(format!("replay diverged in: {}", diverged.join(", "))));
    }
    println!("replay reproduced {} files byte for byte", fresh.outputs.len());
    Ok(fresh)
}

/// Parse `argv`, filling flags absent from the command line from the `--config` TOML.
fn parse_with_config(argv: &[String]) -> Result<(Cli, Option<Vec<u8>>)> {
    let matches = Cli::command().try_get_matches_from(argv)?;
    let Some(path) = matches.get_one::<PathBuf>("config").cloned() else {
        return Ok((Cli::from_arg_matches(&matches)?, None));
    };
    let bytes = fs::read(&path).map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    let table: toml::Table = std::str::from_utf8(&bytes)
        .map_err(|_| CliError::Validation("config is not UTF-8".into()))?
        .parse()
        .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;

    let mut names = Vec::new();
    let mut leaf = &matches;
    let mut leaf_cmd = Cli::command();
    while let Some((name, sub)) = leaf.subcommand() {
        names.push(name.to_string());
        leaf = sub;
        leaf_cmd = leaf_cmd.find_subcommand(name).expect("parsed subcommand exists").clone();
    }
    let mut extra = Vec::new();
    let mut section = &table;
    let root = Cli::command();
    for (key, value) in &table {
        if !value.is_table() {
            append_flag(&mut extra, &[(&root, &matches)], key, value)?;
        }
    }
    for name in &names {
        match section.get(name) {
            Some(toml::Value::Table(t)) => section = t,
            _ => return Ok((reparse(argv, extra)?, Some(bytes))),
        }
    }
    for (key, value) in section {
        if value.is_table() {
            continue;
        }
        append_flag(&mut extra, &[(&leaf_cmd, leaf), (&root, &matches)], key, value)?;
    }
    Ok((reparse(argv, extra)?, Some(bytes)))
}

fn reparse(argv: &[String], extra: Vec<String>) -> Result<Cli> {
    let mut full = argv.to_vec();
    full.extend(extra);
    Ok(<Cli as clap::Parser>::try_parse_from(full)?)
}

/// Append `--key value` unless the flag was given on the command line. `scopes` are searched
/// in order; keys may use `_` for `-`.
fn append_flag(
    extra: &mut Vec<String>,
    scopes: &[(&clap::Command, &ArgMatches)],
    key: &str,
    value: &toml::Value,
) -> Result<()> {
    let long = key.replace('_', "-");
    let found = scopes
        .iter()
        .find_map(|(cmd, m)| cmd.get_arguments().find(|a| a.get_long() == Some(long.as_str())).map(|a| (a, m)));
    let Some((arg, matches)) = found else {
        return usage(format!("config key {key:?} is not a flag of this command"));
    };
    if matches!(matches.value_source(arg.get_id().as_str()), Some(ValueSource::CommandLine)) {
        return Ok(());
    }
    let flag = format!("--{long}");
    let scalar = |v: &toml::Value| -> Result<String> {
        Ok(match v {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            other => return usage(format!("config key {key:?} has unsupported value {other}")),
        })
    };
    match value {
        toml::Value::Boolean(true) => extra.push(flag),
        toml::Value::Boolean(false) => {}
        toml::Value::Array(items) => {
            let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
            extra.push(flag);
            extra.push(parts.join(","));
        }
        v => {
            extra.push(flag);
            extra.push(scalar(v)?);
        }
    }
    Ok(())
}
