//! Experiment config files.
//!
//! A config is a JSON object naming the experiment plus flag values:
//!
//! ```json
//! {"schema": 1, "experiment": "dynamics", "lattice": "l2_pi.json",
//!  "init": "A,2", "tmax": "4pi", "out": "out/fig2"}
//! ```
//!
//! Keys become long flags (`_` is read as `-`, in sorted key order) placed
//! right after the subcommand, so flags typed on the command line still
//! win. Relative file paths are resolved against the config file's
//! directory.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

pub const SUBCOMMANDS: [&str; 9] = [
    "dynamics",
    "detuning-sweep",
    "spectroscopy",
    "adiabatic",
    "bands",
    "zak",
    "coupler-calibrate",
    "crosstalk-fit",
    "verify",
];

const PATH_KEYS: [&str; 6] = ["lattice", "schedule", "device", "matrix", "trace", "out"];

/// Maps experiment names (either spelling) to subcommands.
pub fn subcommand_for(experiment: &str) -> Option<&'static str> {
    let norm = experiment.replace('_', "-");
    let name = match norm.as_str() {
        "coupler" => "coupler-calibrate",
        "crosstalk" => "crosstalk-fit",
        other => other,
    };
    SUBCOMMANDS.iter().copied().find(|s| *s == name)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Flags for one config file.
pub fn config_flags(path: &Path) -> Result<(Option<&'static str>, Vec<OsString>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config(format!(
            "{}: config must be a JSON object",
            path.display()
        )));
    };
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut experiment = None;
    let mut flags = Vec::new();
    for (key, v) in &map {
        match key.as_str() {
            "schema" => {
                if v.as_u64() != Some(1) {
                    return Err(CliError::Config(format!("unsupported config schema {v}")));
                }
                continue;
            }
            "experiment" => {
                let name = v.as_str().unwrap_or_default();
                experiment = Some(
                    subcommand_for(name)
                        .ok_or_else(|| CliError::Config(format!("unknown experiment {name:?}")))?,
                );
                continue;
            }
            _ => {}
        }
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match v {
            Value::Null | Value::Bool(false) => continue,
            Value::Bool(true) => {
                flags.push(OsString::from(flag));
                continue;
            }
            Value::Array(items) => items
                .iter()
                .map(|x| scalar(x).ok_or_else(|| CliError::Config(format!("bad list entry for {key}"))))
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            Value::Object(_) => {
                return Err(CliError::Config(format!(
                    "nested object for {key:?} not supported"
                )))
            }
            other => scalar(other).expect("string or number"),
        };
        let text = if PATH_KEYS.contains(&key.as_str()) && Path::new(&text).is_relative() {
            base.join(&text).display().to_string()
        } else {
            text
        };
        // `--flag=value` keeps negative values from reading as flags.
        flags.push(OsString::from(format!("{flag}={text}")));
    }
    Ok((experiment, flags))
}

/// Rewrites `argv`, replacing `--config FILE` by the flags it holds.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut args = args;
    let pos = args
        .iter()
        .position(|a| a == "--config" || a.to_str().is_some_and(|s| s.starts_with("--config=")));
    let Some(pos) = pos else {
        return Ok(args);
    };
    let token = args.remove(pos).to_string_lossy().into_owned();
    let path = match token.strip_prefix("--config=") {
        Some(p) => p.to_string(),
        None => {
            if pos >= args.len() {
                return Err(CliError::Config("--config needs a file".into()));
            }
            args.remove(pos).to_string_lossy().into_owned()
        }
    };
    let (experiment, flags) = config_flags(Path::new(&path))?;
    let sub = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| SUBCOMMANDS.iter().any(|s| *a == *s))
        .map(|(i, a)| (i, a.to_string_lossy().into_owned()));
    match (sub, experiment) {
        (Some((_, given)), Some(exp)) if given != exp => Err(CliError::Config(format!(
            "config is for {exp:?} but the command is {given:?}"
        ))),
        (Some((i, _)), _) => {
            args.splice(i + 1..i + 1, flags);
            Ok(args)
        }
        (None, Some(exp)) => {
            let at = args.len().min(1);
            let mut insert = vec![OsString::from(exp)];
            insert.extend(flags);
            // Anything the user typed after the program name stays after
            // the generated flags so it can override them.
            let rest: Vec<OsString> = args.drain(at..).collect();
            args.extend(insert);
            args.extend(rest);
            Ok(args)
        }
        (None, None) => Err(CliError::Config(
            "config has no \"experiment\" and no subcommand was given".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn config_flags_inserted_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.json");
        fs::write(
            &cfg,
            r#"{"schema": 1, "experiment": "dynamics", "lattice": "l.json", "tmax": "4pi", "points": 11}"#,
        )
        .unwrap();
        let out = expand(os(&[
            "fl",
            "dynamics",
            "--config",
            cfg.to_str().unwrap(),
            "--points",
            "5",
        ]))
        .unwrap();
        let lattice = dir.path().join("l.json").display().to_string();
        assert_eq!(
            out,
            os(&[
                "fl",
                "dynamics",
                &format!("--lattice={lattice}"),
                "--points=11",
                "--tmax=4pi",
                "--points",
                "5"
            ])
        );
    }

    #[test]
    fn experiment_supplies_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.json");
        fs::write(
            &cfg,
            r#"{"experiment": "detuning_sweep", "delta": ["0", "sqrt2", 10]}"#,
        )
        .unwrap();
        let out = expand(os(&["fl", &format!("--config={}", cfg.display())])).unwrap();
        assert_eq!(out, os(&["fl", "detuning-sweep", "--delta=0,sqrt2,10"]));
    }

    #[test]
    fn mismatched_experiment_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("exp.json");
        fs::write(&cfg, r#"{"experiment": "zak"}"#).unwrap();
        assert!(expand(os(&["fl", "bands", "--config", cfg.to_str().unwrap()])).is_err());
        fs::write(&cfg, r#"{"experiment": "zak", "schema": 2}"#).unwrap();
        assert!(expand(os(&["fl", "--config", cfg.to_str().unwrap()])).is_err());
    }

    #[test]
    fn experiment_aliases() {
        assert_eq!(subcommand_for("coupler"), Some("coupler-calibrate"));
        assert_eq!(subcommand_for("crosstalk"), Some("crosstalk-fit"));
        assert_eq!(subcommand_for("detuning_sweep"), Some("detuning-sweep"));
        assert_eq!(subcommand_for("plot"), None);
    }
}
