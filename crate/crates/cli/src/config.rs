//! `--config` handling: values from a `key = value` file or a previous run
//! manifest are spliced into argv right after the subcommand name, so any
//! flag given on the command line overrides them.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use clap::ArgMatches;

use crate::manifest::RunManifest;
use crate::UsageError;

const NOT_CONFIGURABLE: [&str; 3] = ["config", "manifest", "help"];

pub fn read_config(path: &Path) -> anyhow::Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("{} looks like JSON but is not a run manifest", path.display()))?;
        return Ok(manifest.config);
    }
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            UsageError(format!("{}:{}: expected key = value, found {line:?}", path.display(), i + 1))
        })?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Value of `--config` in raw argv, if any.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
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

/// Argv with the config file's values inserted after the subcommand.
pub fn expand_argv(cmd: &clap::Command, argv: Vec<OsString>) -> anyhow::Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(pos) = argv
        .iter()
        .position(|a| cmd.get_subcommands().any(|s| s.get_name() == a.to_string_lossy()))
    else {
        return Ok(argv);
    };
    let sub = cmd
        .find_subcommand(argv[pos].to_string_lossy().as_ref())
        .expect("position matched a subcommand");
    let values = read_config(Path::new(&path))?;
    let mut injected = Vec::new();
    for (key, value) in &values {
        if NOT_CONFIGURABLE.contains(&key.as_str()) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| UsageError(format!("config key '{key}' is not an option of '{}'", sub.get_name())))?;
        if arg.get_action().takes_values() {
            injected.push(OsString::from(format!("--{key}")));
            injected.push(OsString::from(value));
        } else {
            let on: bool = value
                .parse()
                .map_err(|_| anyhow!(UsageError(format!("config key '{key}' expects true or false, got '{value}'"))))?;
            if on {
                injected.push(OsString::from(format!("--{key}")));
            }
        }
    }
    let mut out = argv;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

/// Every option of the subcommand as it was finally resolved, defaults
/// included, keyed by long flag name.
pub fn resolved(cmd: &clap::Command, matches: &ArgMatches) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    let Some((name, sub_matches)) = matches.subcommand() else {
        return map;
    };
    let sub = cmd.find_subcommand(name).expect("matched subcommand exists");
    for arg in sub.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if NOT_CONFIGURABLE.contains(&long) {
            continue;
        }
        if let Some(raw) = sub_matches.get_raw(arg.get_id().as_str()) {
            let joined: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
            map.insert(long.to_string(), joined.join(","));
        }
    }
    if let Some(t) = matches.get_one::<usize>("threads") {
        map.insert("threads".into(), t.to_string());
    }
    map
}
