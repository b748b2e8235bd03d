//! Plain-text `key = value` configuration files. Flags given on the command
//! line always win over values read here.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Failure::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                Self::parse(&text)
            }
        }
    }

    /// Blank lines and lines starting with `#` are ignored; keys may use
    /// either `-` or `_`.
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Failure::Config(format!(
                    "config line {}: expected key = value",
                    lineno + 1
                )));
            };
            values.insert(normalize(k), v.trim().to_string());
        }
        Ok(Self {
            values,
            used: RefCell::default(),
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key).map(String::as_str)
    }

    /// The flag value if present, otherwise the parsed config entry.
    pub fn pick<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        let from_file = self.raw(key);
        if flag.is_some() {
            return Ok(flag);
        }
        from_file
            .map(|s| {
                s.parse::<T>()
                    .map_err(|e| Failure::Config(format!("config key `{key}`: {e}")))
            })
            .transpose()
    }

    /// Like [`pick`](Self::pick) for comma-separated lists.
    pub fn pick_list(&self, flag: Vec<f64>, key: &str) -> Result<Vec<f64>, Failure> {
        let from_file = self.raw(key);
        if !flag.is_empty() {
            return Ok(flag);
        }
        match from_file {
            None => Ok(Vec::new()),
            Some(s) => s
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|e| Failure::Config(format!("config key `{key}`: {e}")))
                })
                .collect(),
        }
    }

    pub fn pick_flag(&self, flag: bool, key: &str) -> Result<bool, Failure> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    /// Rejects keys that no option of the running command consumed.
    pub fn finish(&self) -> Result<(), Failure> {
        let used = self.used.borrow();
        let unknown: Vec<&str> = self
            .values
            .keys()
            .filter(|k| !used.contains(*k))
            .map(String::as_str)
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Failure::Config(format!(
                "unknown config key(s) for this command: {}",
                unknown.join(", ")
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let cfg = ConfigFile::parse("# sweep\nn = 3\nbeta_min=2.0\n\nm = 512\n").unwrap();
        assert_eq!(cfg.pick::<usize>(None, "n").unwrap(), Some(3));
        assert_eq!(cfg.pick(Some(128usize), "m").unwrap(), Some(128));
        assert_eq!(cfg.pick::<f64>(None, "beta-min").unwrap(), Some(2.0));
        assert!(cfg.finish().is_ok());
    }

    #[test]
    fn rejects_garbage() {
        assert!(ConfigFile::parse("n 3").is_err());
        let cfg = ConfigFile::parse("n = three").unwrap();
        assert!(cfg.pick::<usize>(None, "n").is_err());
        let cfg = ConfigFile::parse("colour = red").unwrap();
        assert!(cfg.finish().is_err());
    }

    #[test]
    fn lists() {
        let cfg = ConfigFile::parse("eps-from-limit = 1e-2, 1e-3").unwrap();
        assert_eq!(
            cfg.pick_list(Vec::new(), "eps-from-limit").unwrap(),
            vec![1e-2, 1e-3]
        );
        assert_eq!(
            cfg.pick_list(vec![0.5], "eps-from-limit").unwrap(),
            vec![0.5]
        );
    }
}
