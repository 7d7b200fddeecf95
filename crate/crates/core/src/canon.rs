//! The shared `key=value` line grammar.
//!
//! Every textual artifact in the toolchain (manifests, trust lists, rig and
//! correspondence files, experiment configs, machine-readable CLI output)
//! uses the same encoding: one `key=value` pair per line, lines sorted
//! lexicographically by key, each line terminated by `\n`. Values escape
//! `%`, `=` and newline as `%25`, `%3D` and `%0A`. Keys may not contain any
//! of those three characters.
//!
//! A [`Record`] serializes to exactly one byte sequence, so canonical bytes
//! can be signed and compared directly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonError {
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("line {0}: missing `=`")]
    MissingSeparator(usize),
    #[error("line {0}: empty or invalid key")]
    InvalidKey(usize),
    #[error("line {0}: bad percent escape")]
    BadEscape(usize),
    #[error("duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("input does not end with a newline")]
    MissingTrailingNewline,
    #[error("input is not in canonical form")]
    NotCanonical,
    #[error("missing key `{0}`")]
    MissingKey(String),
    #[error("key `{key}`: {reason}")]
    BadValue { key: String, reason: String },
}

/// An ordered set of `key=value` pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Record {
    fields: BTreeMap<String, String>,
}

pub fn is_valid_key(key: &str) -> bool {
    !key.is_empty() && !key.contains(['=', '\n', '%'])
}

pub fn escape_value(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '%' => out.push_str("%25"),
            '=' => out.push_str("%3D"),
            '\n' => out.push_str("%0A"),
            c => out.push(c),
        }
    }
    out
}

/// Decodes `%XX` escapes. Any hex pair is accepted here; strict parsing
/// rejects non-canonical escapes by re-encoding.
pub fn unescape_value(value: &str) -> Option<String> {
    let bytes = value.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hi = bytes.get(i + 1).and_then(|b| (*b as char).to_digit(16))?;
            let lo = bytes.get(i + 2).and_then(|b| (*b as char).to_digit(16))?;
            out.push((hi * 16 + lo) as u8);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

impl Record {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a field. Panics on an invalid key: keys are program constants.
    pub fn insert(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        let key = key.into();
        assert!(is_valid_key(&key), "invalid record key {key:?}");
        self.fields.insert(key, value.to_string());
        self
    }

    pub fn with(mut self, key: impl Into<String>, value: impl fmt::Display) -> Self {
        self.insert(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(String::as_str)
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.fields.remove(key)
    }

    pub fn contains_key(&self, key: &str) -> bool {
        self.fields.contains_key(key)
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.fields.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.fields.keys().map(String::as_str)
    }

    /// Keys starting with `prefix`, with the prefix stripped.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a str)> {
        self.fields
            .range(prefix.to_string()..)
            .take_while(move |(k, _)| k.starts_with(prefix))
            .map(move |(k, v)| (&k[prefix.len()..], v.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<&str, CanonError> {
        self.get(key)
            .ok_or_else(|| CanonError::MissingKey(key.to_string()))
    }

    /// Parses a required field with [`FromStr`].
    pub fn parse_field<T: FromStr>(&self, key: &str) -> Result<T, CanonError>
    where
        T::Err: fmt::Display,
    {
        let raw = self.require(key)?;
        raw.parse().map_err(|e: T::Err| CanonError::BadValue {
            key: key.to_string(),
            reason: e.to_string(),
        })
    }

    /// Like [`Record::parse_field`] but falls back to `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CanonError>
    where
        T::Err: fmt::Display,
    {
        if self.contains_key(key) {
            self.parse_field(key)
        } else {
            Ok(default)
        }
    }

    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            out.push_str(k);
            out.push('=');
            out.push_str(&escape_value(v));
            out.push('\n');
        }
        out
    }

    pub fn to_canonical_bytes(&self) -> Vec<u8> {
        self.to_canonical_string().into_bytes()
    }

    /// Lenient parse: any line order, optional trailing newline, blank lines
    /// and `#` comments skipped. Used for hand-written config files.
    pub fn parse_lenient(text: &str) -> Result<Self, CanonError> {
        let mut record = Record::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (key, value) = split_line(line, idx + 1)?;
            let key = key.trim();
            if !is_valid_key(key) {
                return Err(CanonError::InvalidKey(idx + 1));
            }
            if record.fields.insert(key.to_string(), value).is_some() {
                return Err(CanonError::DuplicateKey(key.to_string()));
            }
        }
        Ok(record)
    }

    /// Strict parse: the input must be byte-identical to the canonical
    /// serialization of the record it describes.
    pub fn parse_canonical(bytes: &[u8]) -> Result<Self, CanonError> {
        let text = std::str::from_utf8(bytes).map_err(|_| CanonError::NotUtf8)?;
        if text.is_empty() {
            return Ok(Record::new());
        }
        let body = text
            .strip_suffix('\n')
            .ok_or(CanonError::MissingTrailingNewline)?;
        let mut record = Record::new();
        for (idx, line) in body.split('\n').enumerate() {
            let (key, value) = split_line(line, idx + 1)?;
            if !is_valid_key(key) {
                return Err(CanonError::InvalidKey(idx + 1));
            }
            if record.fields.insert(key.to_string(), value).is_some() {
                return Err(CanonError::DuplicateKey(key.to_string()));
            }
        }
        if record.to_canonical_string() != text {
            return Err(CanonError::NotCanonical);
        }
        Ok(record)
    }
}

fn split_line(line: &str, lineno: usize) -> Result<(&str, String), CanonError> {
    let (key, raw) = line
        .split_once('=')
        .ok_or(CanonError::MissingSeparator(lineno))?;
    let value = unescape_value(raw).ok_or(CanonError::BadEscape(lineno))?;
    Ok((key, value))
}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}
