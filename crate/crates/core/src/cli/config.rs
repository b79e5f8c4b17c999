//! Flat `key = value` configuration with `#` comments.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A key a subcommand accepts, with its default (if any).
#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
    /// File or directory location; identified by content, not by name.
    pub is_path: bool,
}

pub const fn key(name: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { name, default, help, is_path: false }
}

pub const fn path_key(name: &'static str, help: &'static str) -> KeySpec {
    KeySpec { name, default: None, help, is_path: true }
}

/// Parses a config file body. Duplicate keys are an error.
pub fn parse_config(text: &str, source: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let loc = format!("{source}:{}", i + 1);
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::data(&loc, "expected `key = value`"))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::data(&loc, "empty key"));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::data(&loc, format!("key `{k}` given twice")));
        }
    }
    Ok(out)
}

/// Resolved parameters of one subcommand.
#[derive(Debug, Clone)]
pub struct Params {
    command: &'static str,
    values: BTreeMap<String, String>,
}

impl Params {
    /// Defaults, then the file, then flags. Unknown keys are rejected.
    pub fn resolve(
        command: &'static str,
        specs: &[KeySpec],
        file: BTreeMap<String, String>,
        flags: BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut values = BTreeMap::new();
        for s in specs {
            if let Some(d) = s.default {
                values.insert(s.name.to_string(), d.to_string());
            }
        }
        for k in file.keys() {
            if !specs.iter().any(|s| s.name == k) {
                let known: Vec<&str> = specs.iter().map(|s| s.name).collect();
                return Err(Error::param(format!(
                    "unknown key `{k}` for `{command}` (known: {})",
                    known.join(", ")
                )));
            }
        }
        values.extend(file);
        values.extend(flags);
        Ok(Self { command, values })
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.get(key).is_some_and(|v| !v.is_empty())
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::param(format!("`{}` requires `{key}`", self.command)))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.parse()
            .map_err(|_| Error::param(format!("`{key}` = `{raw}` is not a valid {}", type_name::<T>())))
    }

    pub fn get_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.has(key) {
            self.get(key).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn path(&self, key: &str) -> Result<PathBuf> {
        Ok(PathBuf::from(self.raw(key)?))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.raw(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => Err(Error::param(format!("`{key}` = `{other}` is not a boolean"))),
        }
    }

    /// Canonical `key = value` lines, sorted, excluding keys that cannot
    /// change outputs.
    pub fn canonical(&self, ignore: &[&str]) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.values {
            if !ignore.contains(&k.as_str()) {
                s.push_str(&format!("{k} = {v}\n"));
            }
        }
        s
    }

    pub fn hash(&self, ignore: &[&str]) -> String {
        hex(&Sha256::digest(self.canonical(ignore).as_bytes()))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn type_name<T>() -> &'static str {
    let full = std::any::type_name::<T>();
    match full {
        "usize" | "u64" | "u32" => "non-negative integer",
        "f64" => "number",
        _ => full.rsplit("::").next().unwrap_or(full),
    }
}
