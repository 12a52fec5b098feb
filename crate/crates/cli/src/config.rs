//! Flat `key = value` config files. Command-line flags win over file values.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

pub fn parse(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(CliError::Usage(format!("config line {}: duplicate key `{key}`", i + 1)));
        }
    }
    Ok(out)
}

/// Resolves settings from flags, then the config file, then defaults, and
/// records every resolved value for the run manifest.
#[derive(Debug, Default)]
pub struct Settings {
    file: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
    resolved: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let file = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", p.display())))?;
                parse(&text)?
            }
            None => BTreeMap::new(),
        };
        Ok(Settings { file, ..Default::default() })
    }

    fn from_file<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        match self.file.get(key) {
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config `{key}`: {e}"))),
            None => Ok(None),
        }
    }

    fn record(&self, key: &str, value: String) {
        self.resolved.borrow_mut().insert(key.to_string(), value);
    }

    pub fn get<T: FromStr + Display>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.used.borrow_mut().insert(key.to_string());
                v
            }
            None => self.from_file(key)?.unwrap_or(default),
        };
        self.record(key, v.to_string());
        Ok(v)
    }

    pub fn opt<T: FromStr + Display>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = match flag {
            Some(v) => {
                self.used.borrow_mut().insert(key.to_string());
                Some(v)
            }
            None => self.from_file(key)?,
        };
        if let Some(v) = &v {
            self.record(key, v.to_string());
        }
        Ok(v)
    }

    pub fn flag(&self, key: &str, set: bool) -> Result<bool, CliError> {
        let v = set || self.from_file::<bool>(key)?.unwrap_or(false);
        self.record(key, v.to_string());
        Ok(v)
    }

    /// Comma-separated list of floats.
    pub fn list(&self, key: &str, flag: Option<&str>, default: &[f64]) -> Result<Vec<f64>, CliError> {
        let raw = match flag {
            Some(s) => {
                self.used.borrow_mut().insert(key.to_string());
                Some(s.to_string())
            }
            None => self.from_file::<String>(key)?,
        };
        let v = match raw {
            Some(s) => parse_list(&s).map_err(|e| CliError::Usage(format!("`{key}`: {e}")))?,
            None => default.to_vec(),
        };
        self.record(key, v.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        Ok(v)
    }

    /// Rejects config keys that no setting consumed.
    pub fn finish(&self) -> Result<(), CliError> {
        let used = self.used.borrow();
        let unused: Vec<&str> = self.file.keys().filter(|k| !used.contains(*k)).map(String::as_str).collect();
        if unused.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("unknown config keys for this subcommand: {}", unused.join(", "))))
        }
    }

    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.resolved.borrow().clone()
    }
}

pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect()
}
