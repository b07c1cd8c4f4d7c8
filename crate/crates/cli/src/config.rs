//! Flat key-value config files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! ```
//!
//! Keys are long flag names without the leading dashes (`tau`, `k-min`,
//! `t-end`). Blank lines and lines starting with `#` are skipped; whitespace
//! around keys and values is trimmed. A repeated key keeps its last value.
//! Flags given on the command line override file values.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || !k.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(ConfigError(format!("config line {}: bad key '{k}'", i + 1)));
        }
        let k = k.replace('_', "-");
        if k == "config" {
            return Err(ConfigError(format!("config line {}: nested config files are not supported", i + 1)));
        }
        out.retain(|(old, _)| *old != k);
        out.push((k, v.to_string()));
    }
    Ok(out)
}

/// Path given with `--config` after the subcommand, if any.
fn find_config(args: &[String]) -> Result<Option<(usize, usize, String)>, ConfigError> {
    let mut found = None;
    let mut i = 0;
    while i < args.len() {
        let a = &args[i];
        if a == "--" {
            break;
        }
        if a == "--config" {
            let p = args
                .get(i + 1)
                .ok_or_else(|| ConfigError("--config needs a path".into()))?;
            found = Some((i, 2, p.clone()));
            i += 2;
            continue;
        }
        if let Some(p) = a.strip_prefix("--config=") {
            found = Some((i, 1, p.to_string()));
        }
        i += 1;
    }
    Ok(found)
}

/// Rewrites `bin sub [flags]` so file entries come first as flags and the
/// command line follows; later occurrences win when clap parses.
pub fn expand(args: Vec<String>, read: impl Fn(&str) -> std::io::Result<String>) -> Result<Vec<String>, ConfigError> {
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let rest = &args[sub + 1..];
    let Some((at, len, path)) = find_config(rest)? else {
        return Ok(args);
    };
    let text = read(&path).map_err(|e| ConfigError(format!("cannot read config file '{path}': {e}")))?;
    let entries = parse(&text)?;
    let mut out: Vec<String> = args[..=sub].to_vec();
    for (k, v) in entries {
        out.push(format!("--{k}={v}"));
    }
    out.extend(rest[..at].iter().cloned());
    out.extend(rest[at + len..].iter().cloned());
    Ok(out)
}
