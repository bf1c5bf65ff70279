//! `key = value` run files merged underneath command-line flags.

use std::ffi::OsString;

use crate::error::{Error, Result};

/// Keys accepted in a run file, spelled like the long flags.
pub const KEYS: &[&str] = &[
    "command",
    "model",
    "d",
    "L",
    "kernel",
    "nmax",
    "tol",
    "epsilon",
    "Ls",
    "alpha",
    "seed",
    "trials",
    "horizon",
    "workers",
    "format",
    "output",
    "strict",
    "no-meta",
    "override-gate",
    "suite",
    "mode",
    "p",
    "n",
    "bracket",
    "threshold",
    "ghost",
    "max-active",
    "rational",
];

const SWITCHES: &[&str] = &["strict", "no-meta", "override-gate", "ghost", "rational"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            reason: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("unknown key `{key}`"),
            });
        }
        if out.iter().any(|(k, _): &(String, String)| k == key) {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("duplicate key `{key}`"),
            });
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Finds `--config PATH` or `--config=PATH` among raw arguments.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn flag_given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_eq = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_eq)
    })
}

/// Returns the argument list with run-file entries inserted before the
/// user's flags, skipping any key the user set explicitly.
pub fn merge(args: &[OsString], entries: &[(String, String)]) -> Result<Vec<OsString>> {
    let mut out: Vec<OsString> = args.iter().take(1).cloned().collect();
    let user = &args[1.min(args.len())..];
    let has_command = user
        .first()
        .is_some_and(|a| !a.to_string_lossy().starts_with('-'));
    for (key, value) in entries {
        if key == "command" {
            if !has_command {
                out.push(value.into());
            }
            continue;
        }
        if flag_given(user, key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                other => {
                    return Err(Error::invalid_argument(key.clone(), format!("expected true or false, got `{other}`")))
                }
            }
        } else {
            out.push(format!("--{key}={value}").into());
        }
    }
    // a positional command from the user must come first
    if has_command {
        out.insert(1, user[0].clone());
        out.extend(user[1..].iter().cloned());
    } else {
        out.extend(user.iter().cloned());
    }
    Ok(out)
}
