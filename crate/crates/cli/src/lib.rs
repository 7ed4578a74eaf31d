//! Configuration parsing for the `exner` driver.
//!
//! A config is either flat `key = value` text with `#` comments or a JSON
//! object with the same keys. Keys are applied in order on top of the preset
//! named by `experiment`, which is always applied first.

use std::path::{Path, PathBuf};

use exner_core::harness::{CflKind, ExperimentSpec, SolverKind};
use exner_core::ExnerError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(ExnerError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<ExnerError> for CliError {
    fn from(e: ExnerError) -> Self {
        match e {
            ExnerError::InvalidParameter { .. } | ExnerError::Parse { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub const KEYS: [&str; 13] = [
    "experiment", "solver", "N", "ny", "cfl", "cfl_kind", "t_end", "a_g", "m_g", "rho0", "output_every", "out", "verbosity",
];

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    pub out_dir: PathBuf,
    pub verbosity: u8,
}

/// One `key = value` entry with the line it came from (0 for command-line
/// overrides).
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

fn config_err(line: usize, msg: impl std::fmt::Display) -> CliError {
    if line == 0 {
        CliError::Config(msg.to_string())
    } else {
        CliError::Config(format!("line {line}: {msg}"))
    }
}

/// Split config text into entries; JSON is detected by a leading `{`.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>, CliError> {
    if text.trim_start().starts_with('{') {
        return parse_json(text);
    }
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| config_err(no + 1, format!("expected `key = value`, found `{line}`")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(config_err(no + 1, format!("empty key or value in `{line}`")));
        }
        check_key(k, no + 1)?;
        out.push(Entry { key: k.into(), value: v.trim_matches('"').into(), line: no + 1 });
    }
    Ok(out)
}

fn parse_json(text: &str) -> Result<Vec<Entry>, CliError> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| CliError::Config(format!("line {} column {}: {e}", e.line(), e.column())))?;
    let obj = value.as_object().ok_or_else(|| CliError::Config("top-level JSON value must be an object".into()))?;
    let line_of = |key: &str| {
        let needle = format!("\"{key}\"");
        text.lines().position(|l| l.contains(&needle)).map_or(1, |p| p + 1)
    };
    let mut out = Vec::new();
    for (k, v) in obj {
        let line = line_of(k);
        check_key(k, line)?;
        let value = match v {
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            other => return Err(config_err(line, format!("`{k}` must be a string or number, found {other}"))),
        };
        out.push(Entry { key: k.clone(), value, line });
    }
    Ok(out)
}

fn check_key(k: &str, line: usize) -> Result<(), CliError> {
    if KEYS.contains(&k) {
        Ok(())
    } else {
        Err(config_err(line, format!("unknown key `{k}` (known: {})", KEYS.join(", "))))
    }
}

/// Parse `key=value` command-line overrides.
pub fn parse_overrides(items: &[String]) -> Result<Vec<Entry>, CliError> {
    items
        .iter()
        .map(|item| {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override `{item}` is not `key=value`")))?;
            check_key(k.trim(), 0)?;
            Ok(Entry { key: k.trim().into(), value: v.trim().into(), line: 0 })
        })
        .collect()
}

fn number<T: std::str::FromStr>(e: &Entry) -> Result<T, CliError> {
    e.value
        .parse()
        .map_err(|_| config_err(e.line, format!("`{}` expects a number, got `{}`", e.key, e.value)))
}

/// Build a validated [`RunConfig`] from the config file (if any) followed
/// by `overrides`. `default_out` is used when no `out` key is given.
pub fn build_config(file_entries: Vec<Entry>, overrides: Vec<Entry>, default_out: &Path) -> Result<RunConfig, CliError> {
    let entries: Vec<Entry> = file_entries.into_iter().chain(overrides).collect();
    let experiment = entries.iter().rev().find(|e| e.key == "experiment");
    let mut spec = match experiment {
        Some(e) => ExperimentSpec::preset(&e.value).map_err(|err| config_err(e.line, err))?,
        None => return Err(CliError::Usage("no experiment given (use --exp or `experiment = ...`)".into())),
    };
    let mut out_dir = default_out.to_path_buf();
    let mut verbosity = 1;
    let mut cfl_override = None;
    for e in &entries {
        match e.key.as_str() {
            "experiment" => {}
            "solver" => {
                let kind: SolverKind = e.value.parse().map_err(|err| config_err(e.line, err))?;
                spec = spec.with_solver(kind);
            }
            "N" => {
                let n = number(e)?;
                spec = spec.with_n(n);
            }
            "ny" => spec.ny = number(e)?,
            "cfl" => cfl_override = Some(number(e)?),
            "cfl_kind" => spec.cfl_kind = e.value.parse::<CflKind>().map_err(|err| config_err(e.line, err))?,
            "t_end" => spec.t_end = number(e)?,
            "a_g" => spec.a_g = number(e)?,
            "m_g" => spec.m_g = number(e)?,
            "rho0" => spec.rho0 = number(e)?,
            "output_every" => spec.output_every = number(e)?,
            "out" => out_dir = PathBuf::from(&e.value),
            "verbosity" => verbosity = number(e)?,
            _ => unreachable!("keys are checked while parsing"),
        }
    }
    // A solver switch resets the CFL to its preset value, so an explicit
    // CFL wins regardless of order.
    if let Some(c) = cfl_override {
        spec.cfl = c;
    }
    spec.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunConfig { spec, out_dir, verbosity })
}

/// Read and parse `path` (if given), then apply `overrides`.
pub fn parse_config(path: Option<&Path>, overrides: &[String], default_out: &Path) -> Result<RunConfig, CliError> {
    let file_entries = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    build_config(file_entries, parse_overrides(overrides)?, default_out)
}
