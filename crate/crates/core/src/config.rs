//! `key = value` configuration files.
//!
//! One entry per line; `#` starts a comment; blank lines are ignored. Keys
//! are case-sensitive and may use `-` or `_` interchangeably (they are
//! normalized to `_`). A key given twice is an error.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    source: String,
}

impl KeyValues {
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(source, format!("line {line_no}: expected key = value")))?;
            let key = k.trim().replace('-', "_");
            if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::parse(source, format!("line {line_no}: bad key {:?}", k.trim())));
            }
            let value = v.trim().trim_matches('"').to_string();
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return Err(Error::parse(source, format!("line {line_no}: duplicate key {key}")));
            }
        }
        Ok(Self {
            entries,
            source: source.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Parse the value of `key` with `FromStr`; `Ok(None)` when absent.
    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::parse(&self.source, format!("line {line}: cannot parse {key} = {v:?}"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Error naming the first key not in `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for (k, (_, line)) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(Error::parse(&self.source, format!("line {line}: unknown key {k}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let kv = KeyValues::parse("# city\ncity = beijing\n\nn-matches=100 # more\nq_match = 0.75\n", "t").unwrap();
        assert_eq!(kv.get_str("city"), Some("beijing"));
        assert_eq!(kv.get::<usize>("n_matches").unwrap(), Some(100));
        assert_eq!(kv.get::<f64>("q_match").unwrap(), Some(0.75));
        assert_eq!(kv.get::<f64>("missing").unwrap(), None);
        assert!(kv.get::<u32>("city").is_err());
        assert!(kv.reject_unknown(&["city", "n_matches"]).is_err());
        assert!(kv.reject_unknown(&["city", "n_matches", "q_match"]).is_ok());
    }

    #[test]
    fn rejects_malformed() {
        assert!(KeyValues::parse("no equals sign", "t").is_err());
        assert!(KeyValues::parse("a = 1\na = 2", "t").is_err());
        assert!(KeyValues::parse("bad key = 1", "t").is_err());
        assert!(KeyValues::parse(" = 1", "t").is_err());
    }
}
