//! Flat `key = value` config files. Blank lines and `#` comments are ignored;
//! keys under `param.` become family parameters.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use serde_json::{Map, Value};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(format!("line {}: empty key", lineno + 1));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(format!("line {}: duplicate key {key}", lineno + 1));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, String>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
            .transpose()
    }

    /// `param.<name> = <value>` entries, values read as JSON where possible.
    pub fn params(&self) -> Map<String, Value> {
        self.entries
            .iter()
            .filter_map(|(k, v)| k.strip_prefix("param.").map(|name| (name.to_string(), json_or_string(v))))
            .collect()
    }
}

pub fn json_or_string(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

/// First of flag, config entry, default.
pub fn resolve<T: FromStr>(flag: Option<T>, config: &ConfigFile, key: &str, default: T) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(v),
        None => Ok(config.get_parsed(key)?.unwrap_or(default)),
    }
}
