//! Line-oriented `key: value` text format.
//!
//! All structured-text artifacts (camera files, dataset manifests, model
//! configs, run-config snapshots, metrics reports) use this format. Values
//! are written with Rust's shortest round-trip float formatting, so a file
//! written twice from the same state is byte-identical.

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// An ordered list of `key: value` pairs. Keys may repeat.
#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    pairs: Vec<(String, String)>,
}

impl KvDoc {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn push_floats(&mut self, key: &str, values: &[f64]) {
        let mut s = String::new();
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            write!(s, "{v}").unwrap();
        }
        self.pairs.push((key.to_string(), s));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_all<'a>(&'a self, key: &'a str) -> impl Iterator<Item = &'a str> {
        self.pairs
            .iter()
            .filter(move |(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.require(key)?;
        raw.parse()
            .map_err(|_| Error::Config(format!("key `{key}`: cannot parse `{raw}`")))
    }

    pub fn parse_floats(&self, key: &str, expect: usize) -> Result<Vec<f64>> {
        let raw = self.require(key)?;
        let vals: Vec<f64> = raw
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| Error::Config(format!("key `{key}`: bad float `{t}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != expect {
            return Err(Error::Config(format!(
                "key `{key}`: expected {expect} floats, found {}",
                vals.len()
            )));
        }
        Ok(vals)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            writeln!(out, "{k}: {v}").unwrap();
        }
        out
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(path, idx + 1, "expected `key: value`"))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Self { pairs })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(path, &text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    #[test]
    fn round_trip_preserves_floats_exactly() {
        let mut doc = KvDoc::new();
        doc.push("name", "demo");
        doc.push_floats("t", &[0.1, -3.5e-7, 2.0]);
        let text = doc.to_text();
        let back = KvDoc::from_text(&PathBuf::from("<mem>"), &text).unwrap();
        assert_eq!(back.get("name"), Some("demo"));
        assert_eq!(back.parse_floats("t", 3).unwrap(), vec![0.1, -3.5e-7, 2.0]);
    }

    #[test]
    fn bad_line_reports_line_number() {
        let err = KvDoc::from_text(&PathBuf::from("x.txt"), "a: 1\nnocolon\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
