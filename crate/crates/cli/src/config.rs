//! Flat `key = value` configuration. Flags given on the command line win over
//! file values, which win over built-in defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::CliError;

/// Keys a config file may set; anything else is rejected as a likely typo.
pub const KNOWN_KEYS: &[&str] = &[
    "alpha",
    "n",
    "L",
    "tol",
    "max-iter",
    "seed",
    "trials",
    "out",
    "mc-n",
    "estimator",
    "iid",
    "markov",
    "x",
    "y",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("config line {}: expected key=value", no + 1))
            })?;
            let key = key.trim().trim_start_matches("--").replace('_', "-");
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!(
                    "config line {}: unknown key `{key}`",
                    no + 1
                )));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// CLI value, else the file value, else `None`.
    pub fn opt<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if cli.is_some() {
            return Ok(cli);
        }
        self.raw(key)
            .map(|s| {
                s.parse()
                    .map_err(|_| CliError::Usage(format!("config key `{key}`: cannot parse `{s}`")))
            })
            .transpose()
    }

    pub fn get<T: FromStr>(&self, cli: Option<T>, key: &str, default: T) -> Result<T, CliError> {
        Ok(self.opt(cli, key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, cli: Option<T>, key: &str) -> Result<T, CliError> {
        self.opt(cli, key)?
            .ok_or_else(|| CliError::Usage(format!("missing required value --{key}")))
    }

    /// Comma-separated list; a non-empty CLI list wins.
    pub fn list<T: FromStr>(&self, cli: Vec<T>, key: &str) -> Result<Vec<T>, CliError> {
        if !cli.is_empty() {
            return Ok(cli);
        }
        match self.raw(key) {
            None => Ok(Vec::new()),
            Some(s) => s
                .split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse().map_err(|_| {
                        CliError::Usage(format!("config key `{key}`: cannot parse `{t}`"))
                    })
                })
                .collect(),
        }
    }
}
