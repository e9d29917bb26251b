use std::path::Path;

use serde::de::{DeserializeOwned, Deserializer};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::args::{parse_threads, Invocation};
use crate::{CliError, CliResult};

pub const THREADS_ENV: &str = "HANKELX_THREADS";

/// Config file object with command-line overrides applied on top.
pub fn assemble(inv: &Invocation) -> CliResult<Value> {
    let mut doc = match &inv.config {
        Some(path) => load_file(path)?,
        None => Map::new(),
    };
    for (k, v) in &inv.overrides {
        doc.insert(k.clone(), v.clone());
    }
    Ok(Value::Object(doc))
}

fn load_file(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Config(format!("{}: expected a JSON object", path.display()))),
        Err(e) => Err(CliError::Config(format!("{}: {e}", path.display()))),
    }
}

/// Flag, then environment, then config file, then the logical core count.
pub fn resolve_threads(flag: Option<usize>, doc: &Value) -> CliResult<usize> {
    if let Some(t) = flag {
        return Ok(t);
    }
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        return parse_threads(&raw);
    }
    match doc.get("threads") {
        None | Some(Value::Null) => {}
        Some(Value::Number(n)) => match n.as_u64() {
            Some(t) if t > 0 => return Ok(t as usize),
            _ => return Err(CliError::Config(format!("threads = {n} must be a positive integer"))),
        },
        Some(other) => {
            return Err(CliError::Config(format!("threads = {other} must be a positive integer")))
        }
    }
    Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Deserializes a command config, rejecting unknown keys.
pub fn parse<T: DeserializeOwned>(doc: Value) -> CliResult<T> {
    serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))
}

/// Accepts a scalar where a list is expected.
pub fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}
