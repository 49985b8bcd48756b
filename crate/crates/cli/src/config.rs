//! Flat `key = value` config files.
//!
//! Keys are long flag names (`queue-depth` or `queue_depth`). Entries are
//! spliced into the command line right after the subcommand, so anything
//! given explicitly on the command line takes precedence. A key belonging to
//! a different subcommand is ignored, which lets one file serve them all.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgAction, CommandFactory};

use crate::args::Cli;
use crate::error::{CliError, CliResult};

/// Parses config text. Blank lines and lines starting with `#` are skipped;
/// a repeated key replaces the earlier value.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut entries: Vec<(String, String)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(CliError::usage(format!("config line {}: empty key", i + 1)));
        }
        match entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => entries.push((key, value)),
        }
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| carfac::Error::file(path, e))?;
    parse_config(&text)
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::usage(format!("config key {key}: expected a boolean, got {v:?}"))),
    }
}

/// Returns `argv` with config entries for subcommand `sub` inserted.
pub fn splice(argv: &[OsString], sub: &str, entries: &[(String, String)]) -> CliResult<Vec<OsString>> {
    let root = Cli::command();
    let cmd = root
        .find_subcommand(sub)
        .ok_or_else(|| CliError::usage(format!("unknown subcommand {sub}")))?;

    // Position of the subcommand token, skipping a leading `--config PATH`.
    let mut at = None;
    let mut i = 1;
    while i < argv.len() {
        let tok = argv[i].to_string_lossy();
        if tok == "--config" {
            i += 2;
            continue;
        }
        if tok == sub {
            at = Some(i);
            break;
        }
        i += 1;
    }
    let at = at.ok_or_else(|| CliError::usage(format!("subcommand {sub} not found on the command line")))?;
    let given: Vec<String> = argv[at + 1..].iter().map(|a| a.to_string_lossy().into_owned()).collect();

    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            return Err(CliError::usage("a config file cannot name another config file"));
        }
        let Some(arg) = cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            let elsewhere = root
                .get_subcommands()
                .any(|c| c.get_arguments().any(|a| a.get_long() == Some(key.as_str())));
            if elsewhere {
                continue;
            }
            return Err(CliError::usage(format!("unknown config key {key}")));
        };
        let long = format!("--{key}");
        let short = arg.get_short().map(|c| format!("-{c}"));
        let on_command_line = given.iter().any(|t| {
            *t == long || t.starts_with(&format!("{long}=")) || short.as_deref().is_some_and(|s| t.starts_with(s))
        });
        if on_command_line {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => {
                if parse_bool(key, value)? {
                    extra.push(long.into());
                }
            }
            ArgAction::Append => {
                for v in value.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                    extra.push(format!("{long}={v}").into());
                }
            }
            _ => extra.push(format!("{long}={value}").into()),
        }
    }

    let mut out = argv[..=at].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}
