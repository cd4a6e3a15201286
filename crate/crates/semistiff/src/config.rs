//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

/// Keys and raw values of a config file. Later assignments win; `#` starts a
/// comment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Config {
    entries: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {}: expected key = value",
                    n + 1
                )));
            };
            let key = normalize_key(key.trim());
            if !valid_key(&key) {
                return Err(CliError::Usage(format!(
                    "config line {}: invalid key {:?}",
                    n + 1,
                    key
                )));
            }
            entries.insert(key, value.trim().to_string());
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Sets `key` unless `value` contains characters the format cannot hold.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) -> Result<(), CliError> {
        let key = normalize_key(key);
        let value = value.to_string();
        if !valid_key(&key) || value.contains(['#', '\n', '\r']) || value.trim() != value {
            return Err(CliError::Usage(format!("cannot store {key} = {value:?}")));
        }
        self.entries.insert(key, value);
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(&normalize_key(key)).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

impl fmt::Display for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

/// Flag value if given, else the config value, else `default`.
pub fn resolve<T: FromStr>(
    flag: Option<T>,
    config: &Config,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(config.get(key)?.unwrap_or(default)),
    }
}

/// Like [`resolve`] without a default.
pub fn require<T: FromStr>(flag: Option<T>, config: &Config, key: &str) -> Result<T, CliError> {
    match flag {
        Some(v) => Ok(v),
        None => config
            .get(key)?
            .ok_or_else(|| CliError::Usage(format!("missing parameter {key}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines() {
        let c = Config::parse("# run\nR = 0.99\n\np=2 # degree\nk-min = -6\n").unwrap();
        assert_eq!(c.raw("R"), Some("0.99"));
        assert_eq!(c.get::<i32>("p").unwrap(), Some(2));
        assert_eq!(c.get::<i64>("k_min").unwrap(), Some(-6));
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn rejects_lines_without_assignment() {
        assert!(matches!(Config::parse("R 0.5"), Err(CliError::Usage(_))));
    }

    #[test]
    fn later_assignment_wins() {
        let c = Config::parse("p = 1\np = 3\n").unwrap();
        assert_eq!(c.get::<u32>("p").unwrap(), Some(3));
    }

    #[test]
    fn flag_beats_config() {
        let c = Config::parse("p = 3").unwrap();
        assert_eq!(resolve(Some(5), &c, "p", 1).unwrap(), 5);
        assert_eq!(resolve(None, &c, "p", 1).unwrap(), 3);
        assert_eq!(resolve(None, &c, "q", 1).unwrap(), 1);
        assert!(require::<u32>(None, &c, "q").is_err());
    }

    #[test]
    fn inf_parses_as_infinity() {
        let c = Config::parse("eps = inf").unwrap();
        assert_eq!(c.get::<f64>("eps").unwrap(), Some(f64::INFINITY));
    }
}
