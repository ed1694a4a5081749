//! `key=value` job configuration with recorded precedence: flags override
//! the file, the file overrides built-in defaults.

use crate::error::{Error, Result};
use crate::scalar::C64;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Default,
    File,
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub value: String,
    pub source: Source,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct JobConfig {
    pub command: String,
    pub entries: BTreeMap<String, Entry>,
}

/// Parse `key = value` lines; `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("config line {}: expected key=value", k + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::InvalidParams(format!("config line {}: empty key", k + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

/// Complex number as `x`, `x+yi`, `x-yi`, `yi`, `i` or `x,y`.
pub fn parse_complex(s: &str) -> Result<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::InvalidParams(format!("cannot parse complex number {s:?}"));
    if let Some((a, b)) = t.split_once(',') {
        return Ok(C64::new(a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?));
    }
    if !t.ends_with('i') {
        return Ok(C64::new(t.parse().map_err(|_| bad())?, 0.0));
    }
    let body = &t[..t.len() - 1];
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |x: &str| -> Result<f64> {
        match x {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => x.parse().map_err(|_| bad()),
        }
    };
    match split {
        Some(k) => Ok(C64::new(body[..k].parse().map_err(|_| bad())?, imag(&body[k..])?)),
        None => Ok(C64::new(0.0, imag(body)?)),
    }
}

impl JobConfig {
    pub fn new(command: &str, defaults: &[(&str, &str)]) -> Self {
        let entries = defaults
            .iter()
            .map(|(k, v)| (k.to_string(), Entry { value: v.to_string(), source: Source::Default }))
            .collect();
        JobConfig { command: command.to_string(), entries }
    }

    fn set(&mut self, key: &str, value: &str, source: Source) -> Result<()> {
        if !self.entries.contains_key(key) {
            return Err(Error::InvalidParams(format!("unknown key {key:?} for {}", self.command)));
        }
        self.entries.insert(key.to_string(), Entry { value: value.to_string(), source });
        Ok(())
    }

    pub fn apply_file_text(&mut self, text: &str) -> Result<()> {
        for (k, v) in parse_key_values(text)? {
            self.set(&k, &v, Source::File)?;
        }
        Ok(())
    }

    pub fn apply_flags<'a>(&mut self, flags: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in flags {
            self.set(k, v, Source::Flag)?;
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(|e| e.value.as_str())
            .ok_or_else(|| Error::InvalidParams(format!("missing key {key}")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Error::InvalidParams(format!("{key}: not a number: {v}")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let v = self.get(key)?;
        v.parse().map_err(|_| Error::InvalidParams(format!("{key}: not a non-negative integer: {v}")))
    }

    pub fn complex(&self, key: &str) -> Result<C64> {
        parse_complex(self.get(key)?).map_err(|e| Error::InvalidParams(format!("{key}: {e}")))
    }

    pub fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        self.get(key)?
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse().map_err(|_| Error::InvalidParams(format!("{key}: bad list entry {s}"))))
            .collect()
    }

    /// Fully resolved config with the source of every value.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}
