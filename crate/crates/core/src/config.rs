//! Flat key-value configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment. Lists are
//! comma-separated and tables are rows of lists separated by `;`, e.g.
//!
//! ```text
//! E = 2
//! n = 2,2,2,0; 1,1,1,3
//! g_ref = 1,1
//! a.kappa = 0
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValueConfig {
    entries: BTreeMap<String, String>,
}

impl KeyValueConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: key `{key}` given twice",
                    lineno + 1
                )));
            }
        }
        Ok(KeyValueConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string()).map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.insert(key.into(), value.to_string());
    }

    pub fn set_list<T: fmt::Display>(&mut self, key: impl Into<String>, values: &[T]) {
        let joined = values
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",");
        self.entries.insert(key.into(), joined);
    }

    pub fn set_table<T: fmt::Display>(&mut self, key: impl Into<String>, rows: &[Vec<T>]) {
        let joined = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
            .join("; ");
        self.entries.insert(key.into(), joined);
    }

    /// Copies every entry of `other` over this config.
    pub fn merge(&mut self, other: &KeyValueConfig) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => parse_value(key, v).map(Some),
        }
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => parse_list(key, v).map(Some),
        }
    }

    pub fn get_table<T: FromStr>(&self, key: &str) -> Result<Option<Vec<Vec<T>>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(';')
                .map(|row| parse_list(key, row))
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }
}

impl fmt::Display for KeyValueConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{}`", v.trim())))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let v = v.trim();
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|item| parse_value(key, item)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_scalars_lists_and_tables() {
        let cfg = KeyValueConfig::parse(
            "# design\nE = 2\nn = 2,2,2,0; 1,1,1,3\ng_ref = 1,1  # both control\na.kappa = 0\n",
        )
        .unwrap();
        assert_eq!(cfg.require::<usize>("E").unwrap(), 2);
        assert_eq!(
            cfg.get_table::<usize>("n").unwrap().unwrap(),
            vec![vec![2, 2, 2, 0], vec![1, 1, 1, 3]]
        );
        assert_eq!(cfg.get_list::<usize>("g_ref").unwrap().unwrap(), vec![1, 1]);
        assert_eq!(cfg.get::<f64>("a.kappa").unwrap(), Some(0.0));
        assert_eq!(cfg.get::<f64>("b.kappa").unwrap(), None);
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(KeyValueConfig::parse("E 2").is_err());
        assert!(KeyValueConfig::parse("E = 2\nE = 3").is_err());
        let cfg = KeyValueConfig::parse("E = two").unwrap();
        assert!(cfg.require::<usize>("E").is_err());
        assert!(cfg.require::<usize>("G").is_err());
    }

    #[test]
    fn display_round_trips() {
        let mut cfg = KeyValueConfig::new();
        cfg.set("seed", 7);
        cfg.set_list("m", &[1, 2, 3]);
        cfg.set_table("n", &[vec![1, 2], vec![3, 0]]);
        let back = KeyValueConfig::parse(&cfg.to_string()).unwrap();
        assert_eq!(back, cfg);
    }
}
