//! `ivl-config v1` files: a header line, then `key = value` lines. Blank
//! lines and `#` comments are skipped; unknown or repeated keys are errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ivl_core::{IvlError, Result};

pub const HEADER: &str = "ivl-config v1";

pub const KEYS: &[&str] = &["example", "epsilon", "nmax", "grid", "mode", "jobs", "out", "x", "omega", "notions", "k_min", "k_max", "cache_dir"];

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        match lines.next() {
            Some(HEADER) => {}
            other => return Err(IvlError::InvalidInput(format!("config must start with {HEADER:?}, found {other:?}"))),
        }
        let mut values = BTreeMap::new();
        for line in lines {
            let (k, v) = line.split_once('=').ok_or_else(|| IvlError::InvalidInput(format!("expected key = value, found {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(IvlError::InvalidInput(format!("unknown config key {k:?}")));
            }
            if values.insert(k.to_string(), v.to_string()).is_some() {
                return Err(IvlError::InvalidInput(format!("config key {k:?} given twice")));
            }
        }
        Ok(Config { values })
    }

    pub fn load(path: &Path) -> Result<Config> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Command-line flags override file values.
    pub fn set(&mut self, key: &str, value: Option<String>) {
        debug_assert!(KEYS.contains(&key));
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| v.parse::<T>().map_err(|e| IvlError::InvalidInput(format!("{key}: {e}")))).transpose()
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    /// `IVL_CACHE_DIR`, then `cache_dir`, then `<out>/cache`.
    pub fn cache_dir(&self) -> Option<PathBuf> {
        std::env::var_os("IVL_CACHE_DIR")
            .map(PathBuf::from)
            .or_else(|| self.get("cache_dir").map(PathBuf::from))
            .or_else(|| self.out_dir().map(|o| o.join("cache")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects() {
        let c = Config::parse("ivl-config v1\n# c\nexample = A1\nepsilon=1/10\n").unwrap();
        assert_eq!(c.get("example"), Some("A1"));
        assert_eq!(c.get("epsilon"), Some("1/10"));
        assert!(Config::parse("example = A1").is_err());
        assert!(Config::parse("ivl-config v1\ncolour = red").is_err());
        assert!(Config::parse("ivl-config v1\nnmax = 3\nnmax = 4").is_err());
        assert!(Config::parse("ivl-config v1\nnmax 3").is_err());
    }
}
