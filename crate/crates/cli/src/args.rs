use std::path::PathBuf;

use serde_json::{Map, Value};

use crate::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Recover,
    Converge,
    Phase,
    Doa,
}

impl Command {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gen" => Command::Gen,
            "recover" => Command::Recover,
            "converge" => Command::Converge,
            "phase" => Command::Phase,
            "doa" => Command::Doa,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Invocation {
    pub command: Command,
    pub help: bool,
    pub config: Option<PathBuf>,
    /// Thread count from the command line.
    pub threads: Option<usize>,
    /// Key overrides in command-line order, later entries win.
    pub overrides: Map<String, Value>,
}

/// Parses `argv` without the program name.
pub fn parse(argv: &[String]) -> CliResult<Invocation> {
    let Some(first) = argv.first() else {
        return Err(CliError::Usage("missing command".into()));
    };
    if first == "--help" || first == "-h" || first == "help" {
        return Ok(Invocation {
            command: Command::Gen,
            help: true,
            config: None,
            threads: None,
            overrides: Map::new(),
        });
    }
    let command =
        Command::parse(first).ok_or_else(|| CliError::Usage(format!("unknown command `{first}`")))?;
    let mut inv =
        Invocation { command, help: false, config: None, threads: None, overrides: Map::new() };

    let mut rest = argv[1..].iter();
    while let Some(arg) = rest.next() {
        if arg == "--help" || arg == "-h" {
            inv.help = true;
            continue;
        }
        let (key, raw) = if let Some(flag) = arg.strip_prefix("--") {
            match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = rest
                        .next()
                        .ok_or_else(|| CliError::Usage(format!("--{flag} needs a value")))?;
                    (flag.to_string(), v.clone())
                }
            }
        } else if let Some((k, v)) = arg.split_once('=') {
            (k.to_string(), v.to_string())
        } else {
            return Err(CliError::Usage(format!("unexpected argument `{arg}`")));
        };
        let key = key.replace('-', "_");
        if key.is_empty() {
            return Err(CliError::Usage(format!("empty key in `{arg}`")));
        }
        match key.as_str() {
            "config" => inv.config = Some(PathBuf::from(raw)),
            "threads" => inv.threads = Some(parse_threads(&raw)?),
            "out" => {
                inv.overrides.insert(key, Value::String(raw));
            }
            _ => {
                inv.overrides.insert(key, parse_value(&raw));
            }
        }
    }
    Ok(inv)
}

pub(crate) fn parse_threads(raw: &str) -> CliResult<usize> {
    match raw.trim().parse::<usize>() {
        Ok(t) if t > 0 => Ok(t),
        _ => Err(CliError::Usage(format!("thread count `{raw}` must be a positive integer"))),
    }
}

/// JSON if it parses, a list if it has commas, a string otherwise.
pub fn parse_value(raw: &str) -> Value {
    if let Ok(v) = serde_json::from_str::<Value>(raw) {
        return v;
    }
    if raw.contains(',') {
        let items = raw
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| parse_value(s.trim()))
            .collect();
        return Value::Array(items);
    }
    Value::String(raw.to_string())
}
