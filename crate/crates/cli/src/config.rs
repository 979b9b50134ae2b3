//! `--config file.json` support.
//!
//! The file holds a flat JSON object whose keys are flag names. Its entries
//! are spliced in as `--key value` tokens directly after the subcommand, so
//! any flag given explicitly later on the command line wins.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::Value;

/// Rewrites `args` with every `--config PATH` replaced by the file's flags.
pub fn expand(args: Vec<String>) -> Result<Vec<String>> {
    let mut config = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let path = it.next().context("--config needs a file path")?;
            config = Some(path);
        } else if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let tokens = tokens_from_file(Path::new(&path))?;
    // insert after the first non-flag token following the program name
    let at = subcommand_position(&rest).map_or(rest.len(), |i| i + 1);
    rest.splice(at..at, tokens);
    Ok(rest)
}

fn subcommand_position(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if !a.starts_with('-') {
            return Some(i);
        }
        // global flags that take a value
        if a == "--threads" {
            i += 1;
        }
        i += 1;
    }
    None
}

fn tokens_from_file(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    let Value::Object(map) = value else {
        bail!("config {} must be a JSON object", path.display());
    };
    let mut out = Vec::new();
    for (key, v) in map {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let parts: Vec<String> = items.iter().map(scalar).collect::<Result<_>>()?;
                out.push(flag);
                out.push(parts.join(","));
            }
            other => {
                out.push(flag);
                out.push(scalar(&other)?);
            }
        }
    }
    Ok(out)
}

fn scalar(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => bail!("unsupported config value {v}"),
    }
}
