//! Effective run configuration, the key=value file format and the metadata
//! block written into every output file.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::args::{Common, Format};
use crate::{CliError, Result};

/// Per-subcommand fallbacks for unset common flags.
#[derive(Debug, Clone, Copy)]
pub struct Defaults {
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub r: f64,
    pub samples: usize,
    pub sweeps: usize,
    pub grid: usize,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            theta: 1.0,
            n: 16,
            k: 1,
            t: 10,
            r: 1.0,
            samples: 100,
            sweeps: 100,
            grid: 4096,
        }
    }
}

/// The common flags after layering and defaulting. The default seed is 0,
/// so a run without `--seed` is still reproducible. `workers` and `out` are
/// left out of the metadata: they never change the emitted values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub theta: f64,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub r: f64,
    pub samples: usize,
    pub sweeps: usize,
    pub grid: usize,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub out: PathBuf,
    pub format: Format,
}

impl RunConfig {
    pub fn resolve(command: &str, c: &Common, d: Defaults) -> Result<Self> {
        let cfg = Self {
            command: command.to_string(),
            theta: c.theta.unwrap_or(d.theta),
            n: c.n.unwrap_or(d.n),
            k: c.k.unwrap_or(d.k),
            t: c.t.unwrap_or(d.t),
            r: c.r.unwrap_or(d.r),
            samples: c.samples.unwrap_or(d.samples),
            sweeps: c.sweeps.unwrap_or(d.sweeps),
            grid: c.grid.unwrap_or(d.grid),
            seed: c.seed.unwrap_or(0),
            workers: c.workers.unwrap_or(1),
            out: c
                .out
                .clone()
                .unwrap_or_else(|| PathBuf::from("gibbsline-out")),
            format: c.format.unwrap_or_default(),
        };
        if !(cfg.theta > 0.0 && cfg.theta.is_finite()) {
            return Err(CliError::usage(format!(
                "--theta must be positive, got {}",
                cfg.theta
            )));
        }
        if cfg.workers == 0 {
            return Err(CliError::usage("--workers must be at least 1"));
        }
        if cfg.samples == 0 {
            return Err(CliError::usage("--samples must be at least 1"));
        }
        if !(cfg.r > 0.0 && cfg.r.is_finite()) {
            return Err(CliError::usage(format!(
                "--r must be positive, got {}",
                cfg.r
            )));
        }
        Ok(cfg)
    }
}

/// Reads `key = value` lines; `#` starts a comment, `_` in keys means `-`.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading config {}", path.display()), e))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::usage(format!(
                "config line {}: expected key=value, got {raw:?}",
                no + 1
            ))
        })?;
        let key = k.trim().replace('_', "-");
        if key.is_empty()
            || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
            || key == "config"
        {
            return Err(CliError::usage(format!(
                "config line {}: bad key {:?}",
                no + 1,
                k.trim()
            )));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flatten(value: &Value, out: &mut Vec<(String, String)>) {
    if let Value::Object(map) = value {
        for (k, v) in map {
            let s = match v {
                Value::Null => continue,
                Value::String(s) => s.clone(),
                Value::Array(items) => items.iter().map(scalar).collect::<Vec<_>>().join(","),
                other => scalar(other),
            };
            out.push((k.replace('_', "-"), s));
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".to_string(),
        other => other.to_string(),
    }
}

/// Flat `key=value` pairs describing `cfg` and the subcommand settings.
pub fn metadata<S: Serialize>(cfg: &RunConfig, settings: &S) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    flatten(&serde_json::to_value(cfg)?, &mut out);
    flatten(&serde_json::to_value(settings)?, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines() {
        let kv = parse_config("# comment\ntheta = 2.5\nprofile_n=3 # trailing\n\n").unwrap();
        assert_eq!(
            kv,
            vec![
                ("theta".into(), "2.5".into()),
                ("profile-n".into(), "3".into())
            ]
        );
        assert!(parse_config("theta 2").is_err());
        assert!(parse_config("con fig=1").is_err());
    }

    #[test]
    fn defaults_and_validation() {
        let c = Common {
            seed: Some(7),
            ..Default::default()
        };
        let cfg = RunConfig::resolve("bridge", &c, Defaults::default()).unwrap();
        assert_eq!((cfg.seed, cfg.workers, cfg.theta), (7, 1, 1.0));
        let bad = Common {
            workers: Some(0),
            ..Default::default()
        };
        assert!(RunConfig::resolve("bridge", &bad, Defaults::default()).is_err());
    }
}
