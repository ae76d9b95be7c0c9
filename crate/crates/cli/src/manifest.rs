//! Plain-text key=value run manifests. Keys are the long flag names of the
//! recorded command, so a manifest can be replayed by rebuilding the argv.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::CliError;

pub struct Manifest {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &'static str, reproducible: bool) -> Self {
        let timestamp = if reproducible {
            "1970-01-01T00:00:00Z".to_string()
        } else {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            format!("unix:{secs}")
        };
        Self {
            command,
            entries: vec![("timestamp".into(), timestamp)],
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn set_flag(&mut self, key: &str, on: bool) {
        self.set(key, if on { "true" } else { "false" });
    }

    pub fn set_opt(&mut self, key: &str, value: Option<impl ToString>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut out = String::new();
        out.push_str(&format!("command={}\n", self.command));
        for (k, v) in &self.entries {
            out.push_str(&format!("{k}={v}\n"));
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

/// Rebuild the argv of the recorded command from a manifest file.
pub fn to_argv(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let mut command = None;
    let mut args: Vec<String> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Format(format!(
                "manifest line {} is not key=value",
                lineno + 1
            )));
        };
        match key {
            "command" => command = Some(value.to_string()),
            "timestamp" => {}
            _ => match value {
                "true" => args.push(format!("--{key}")),
                "false" => {}
                v => {
                    args.push(format!("--{key}"));
                    args.push(v.to_string());
                }
            },
        }
    }
    let command = command.ok_or_else(|| CliError::Format("manifest lacks command".into()))?;
    let mut argv = vec!["tuckit".to_string(), command];
    argv.extend(args);
    Ok(argv)
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.txt")
}
