//! Flat `key=value` parameters with layered overrides.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use adashift_core::harness::Manifest;

use crate::CliError;

/// Manifest cell holding the parameters shared by every cell of an experiment.
pub const ALL_CELLS: &str = "all";

/// Effective parameters of one command.
///
/// Starts from the command's defaults; every later layer may only set keys the defaults
/// already define, so typos surface as usage errors instead of being ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    command: String,
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn new(command: &str, defaults: &[(&str, &str)]) -> Self {
        let values = defaults.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { command: command.to_string(), values }
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Sets `key`, which must be one of the command's parameters.
    /// `alpha-grid` and `alpha_grid` name the same key.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), CliError> {
        let key = key.trim().replace('-', "_");
        let key = key.as_str();
        if key == "command" {
            if value.trim() != self.command {
                return Err(CliError::Usage(format!(
                    "{origin}: parameters are for `{}`, not `{}`",
                    value.trim(),
                    self.command
                )));
            }
            return Ok(());
        }
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Usage(format!(
                "{origin}: unknown parameter `{key}` for `{}` (known: {})",
                self.command,
                self.values.keys().cloned().collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Applies a `key=value` assignment.
    pub fn assign(&mut self, assignment: &str, origin: &str) -> Result<(), CliError> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}: expected key=value, got `{assignment}`")))?;
        self.set(key, value, origin)
    }

    /// Applies a config file: `key=value` lines with `#` comments, or a `manifest.csv`
    /// written by an earlier run (only its shared cell is read).
    pub fn load_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        if text.lines().next().map(str::trim) == Some("cell,key,value") {
            let manifest = Manifest::read(path).map_err(|e| CliError::Usage(e.to_string()))?;
            for (key, value) in manifest.cell(ALL_CELLS) {
                self.set(key, value, &path.display().to_string())?;
            }
            return Ok(());
        }
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            self.assign(line, &format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("`{key}` has no default"))
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let raw = self.str(key);
        raw.parse().map_err(|e| CliError::Usage(format!("parameter `{key}`: cannot parse `{raw}`: {e}")))
    }

    /// Real parameter checked against `[lo, hi]`, or `[lo, hi)` when `open_hi`.
    pub fn real_in(&self, key: &str, lo: f64, hi: f64, open_hi: bool) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        let inside = x >= lo && if open_hi { x < hi } else { x <= hi };
        if inside {
            Ok(x)
        } else {
            let close = if open_hi { ')' } else { ']' };
            Err(CliError::Usage(format!("parameter `{key}` = {x} outside [{lo}, {hi}{close}")))
        }
    }

    pub fn positive(&self, key: &str) -> Result<f64, CliError> {
        let x: f64 = self.parse(key)?;
        if x > 0.0 && x.is_finite() {
            Ok(x)
        } else {
            Err(CliError::Usage(format!("parameter `{key}` must be positive, got {x}")))
        }
    }

    pub fn count(&self, key: &str) -> Result<u64, CliError> {
        let n: u64 = self.parse(key)?;
        if n == 0 {
            return Err(CliError::Usage(format!("parameter `{key}` must be at least 1")));
        }
        Ok(n)
    }

    /// Comma-separated list; empty string gives an empty list.
    pub fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let raw = self.str(key);
        raw.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e| CliError::Usage(format!("parameter `{key}`: cannot parse `{s}`: {e}"))))
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Manifest rows for the shared cell: the command name then every parameter.
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::default();
        m.push(ALL_CELLS, "command", &self.command);
        for (k, v) in self.iter() {
            m.push(ALL_CELLS, k, v);
        }
        m
    }
}
