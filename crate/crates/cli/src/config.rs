//! Plain `key = value` presets. Each entry becomes a `--key=value` flag
//! placed right after the subcommand name, so flags typed on the command
//! line come later and win.

use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Command};

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value, got {line:?}", k + 1);
        };
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", k + 1);
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

/// Returns `argv` with the presets spliced in after the subcommand token.
/// Keys that the chosen subcommand does not take are skipped, unless no
/// subcommand takes them at all.
pub fn overlay(
    cmd: &Command,
    argv: &[String],
    entries: &[(String, String)],
) -> Result<Vec<String>> {
    let Some(pos) = argv
        .iter()
        .skip(1)
        .position(|a| cmd.find_subcommand(a).is_some())
        .map(|p| p + 1)
    else {
        return Ok(argv.to_vec());
    };
    let sub = cmd.find_subcommand(&argv[pos]).expect("found above");
    let mut injected = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            bail!("config files cannot include other config files");
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        let Some(arg) = arg else {
            let known = cmd.get_subcommands().any(|s| {
                s.get_arguments()
                    .any(|a| a.get_long() == Some(key.as_str()))
            });
            if known {
                continue;
            }
            bail!("unknown config key {key:?}");
        };
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                other => bail!("config key {key:?} expects a boolean, got {other:?}"),
            },
            _ => injected.push(format!("--{key}={value}")),
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_underscores() {
        let e = parse("# preset\n p = 4\n\nt_final=1.5\n").unwrap();
        assert_eq!(
            e,
            vec![("p".into(), "4".into()), ("t-final".into(), "1.5".into())]
        );
        assert!(parse("no equals sign").is_err());
    }
}
