//! `--config` handling and the run header.
//!
//! A config file is a flat JSON object whose keys are flag names of the
//! chosen subcommand (`n_list` and `n-list` both work). Its entries are
//! spliced into argv right after the subcommand, ahead of the user's own
//! flags; every flag overrides itself, so the command line wins.

use std::ffi::OsString;
use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "metric-entropy-lab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const SEED_ENV: &str = "METRIC_ENTROPY_LAB_SEED";

/// Position of the subcommand token in `argv`, if any.
fn subcommand_position(argv: &[OsString]) -> Option<usize> {
    argv.iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| !a.to_string_lossy().starts_with('-'))
        .map(|(i, _)| i)
}

fn config_path(argv: &[OsString]) -> Option<String> {
    let mut it = argv.iter().map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn scalar_token(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(format!(
            "config key `{key}`: lists may only hold strings and numbers"
        )),
    }
}

/// Flag tokens for one config object.
pub fn config_tokens(obj: &Map<String, Value>) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    for (key, value) in obj {
        if key == "config" {
            return Err("config files cannot include other config files".into());
        }
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Null | Value::Bool(false) => {}
            Value::Bool(true) => tokens.push(flag),
            Value::String(_) | Value::Number(_) => {
                tokens.push(flag);
                tokens.push(scalar_token(key, value)?);
            }
            Value::Array(items) => {
                let parts = items
                    .iter()
                    .map(|v| scalar_token(key, v))
                    .collect::<Result<Vec<_>, _>>()?;
                tokens.push(flag);
                tokens.push(parts.join(","));
            }
            Value::Object(_) => {
                return Err(format!(
                    "config key `{key}`: nested objects are not supported"
                ))
            }
        }
    }
    Ok(tokens)
}

/// Returns `argv` with the entries of the `--config` file spliced in.
pub fn inject_config(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = subcommand_position(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config `{path}`: {e}"))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| format!("config `{path}` is not valid JSON: {e}"))?;
    let Value::Object(obj) = value else {
        return Err(format!("config `{path}` must hold a JSON object"));
    };
    let tokens = config_tokens(&obj)?;
    let mut out = argv;
    out.splice(pos + 1..pos + 1, tokens.into_iter().map(OsString::from));
    Ok(out)
}

/// `--seed`, then the environment, then 0.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| format!("{SEED_ENV} must be an unsigned 64-bit integer, got `{v}`")),
        Err(_) => Ok(0),
    }
}

/// Recursively sorts object keys.
fn canonical(v: &Value) -> Value {
    match v {
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            let mut out = Map::new();
            for k in keys {
                out.insert(k.clone(), canonical(&m[k]));
            }
            Value::Object(out)
        }
        Value::Array(a) => Value::Array(a.iter().map(canonical).collect()),
        other => other.clone(),
    }
}

/// SHA-256 of the canonical JSON `{"args", "command", "seed"}`.
pub fn config_hash(command: &str, seed: u64, args: &Value) -> String {
    let doc = canonical(&serde_json::json!({ "command": command, "seed": seed, "args": args }));
    let bytes = serde_json::to_vec(&doc).expect("json values serialize");
    hex::encode(Sha256::digest(&bytes))
}
