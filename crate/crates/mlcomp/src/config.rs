//! Flat `key = value` run configuration. Every CLI flag has an equivalent
//! key; explicit flags win over file values, and the `MLCOMP_SEED`
//! environment variable sits between the file and the built-in default for
//! seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("config key '{key}': cannot parse '{value}'")]
    BadValue { key: String, value: String },
    #[error("missing required setting '{key}' (flag --{flag} or config key)")]
    Missing { key: String, flag: String },
}

/// Parsed configuration file; empty when no file was given.
#[derive(Debug, Clone, Default)]
pub struct FileConfig {
    pairs: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        let mut pairs = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            pairs.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(FileConfig { pairs })
    }

    pub fn load_opt(path: Option<&Path>) -> Result<FileConfig, ConfigError> {
        match path {
            Some(p) => FileConfig::load(p),
            None => Ok(FileConfig::default()),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(raw) => raw.parse().map(Some).map_err(|_| ConfigError::BadValue {
                key: key.to_string(),
                value: raw.to_string(),
            }),
        }
    }

    /// CLI flag if given, else the file value, else the default.
    pub fn resolve<T: FromStr>(
        &self,
        cli: Option<T>,
        key: &str,
        default: T,
    ) -> Result<T, ConfigError> {
        match cli {
            Some(v) => Ok(v),
            None => Ok(self.parsed(key)?.unwrap_or(default)),
        }
    }

    /// Like `resolve` but the setting has no default and must come from
    /// somewhere.
    pub fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T, ConfigError> {
        match cli {
            Some(v) => Ok(v),
            None => self.parsed(key)?.ok_or_else(|| ConfigError::Missing {
                key: key.to_string(),
                flag: key.replace('_', "-"),
            }),
        }
    }

    pub fn require_path(&self, cli: Option<PathBuf>, key: &str) -> Result<PathBuf, ConfigError> {
        self.require(cli, key)
    }

    /// Seed precedence: flag, then file, then `MLCOMP_SEED`, then 0.
    pub fn resolve_seed(&self, cli: Option<u64>) -> Result<u64, ConfigError> {
        if let Some(s) = cli {
            return Ok(s);
        }
        if let Some(s) = self.parsed("seed")? {
            return Ok(s);
        }
        match std::env::var("MLCOMP_SEED") {
            Ok(raw) => raw.parse().map_err(|_| ConfigError::BadValue {
                key: "MLCOMP_SEED".to_string(),
                value: raw,
            }),
            Err(_) => Ok(0),
        }
    }
}

/// Comma-separated objective weights, e.g. `0.4,0.4,0.2`.
pub fn parse_weights(raw: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected three comma-separated weights, got '{raw}'"));
    }
    let mut w = [0.0; 3];
    for (i, p) in parts.iter().enumerate() {
        w[i] = p
            .trim()
            .parse()
            .map_err(|_| format!("bad weight '{p}' in '{raw}'"))?;
    }
    Ok(w)
}
