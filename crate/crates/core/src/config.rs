//! Line-oriented `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Keys may appear at
//! most once per file. Which keys are accepted is up to the consumer; see
//! [`crate::training::TrainConfig::apply`].

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Ordered `(key, value)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    entries: Vec<(String, String)>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Format(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                return Err(Error::Format(format!("line {}: empty key", lineno + 1)));
            }
            if s.get(k).is_some() {
                return Err(Error::Format(format!("line {}: duplicate key {k:?}", lineno + 1)));
            }
            s.entries.push((k.to_owned(), v.to_owned()));
        }
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing an earlier value.
    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        let (key, value) = (key.into(), value.into());
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// `other` wins on shared keys.
    pub fn merged(mut self, other: &Settings) -> Settings {
        for (k, v) in &other.entries {
            self.set(k.clone(), v.clone());
        }
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
