//! Parsing of `name:key=value,...` descriptors used by the CLI and the web demo.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A parsed descriptor: family name plus its key/value parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub name: String,
    params: BTreeMap<String, String>,
    source: String,
}

impl Descriptor {
    /// Splits `name:k=v,...`. Commas inside a value (e.g. an embedded tree spec)
    /// are kept when the following token does not start with one of `keys`.
    pub fn parse(text: &str, keys: &[&str]) -> Result<Self> {
        let text = text.trim();
        let (name, body) = match text.split_once(':') {
            Some((n, b)) => (n.trim(), b.trim()),
            None => (text, ""),
        };
        let mut params = BTreeMap::new();
        let mut current: Option<(String, String)> = None;
        if !body.is_empty() {
            for token in body.split(',') {
                let starts_key = token.split_once('=').map(|(k, _)| keys.contains(&k.trim())).unwrap_or(false);
                if starts_key {
                    if let Some((k, v)) = current.take() {
                        params.insert(k, v);
                    }
                    let (k, v) = token.split_once('=').expect("checked above");
                    current = Some((k.trim().to_string(), v.trim().to_string()));
                } else if let Some((_, v)) = current.as_mut() {
                    v.push(',');
                    v.push_str(token.trim());
                } else {
                    return Err(Error::Parse(format!("`{text}`: unexpected token `{token}`")));
                }
            }
        }
        if let Some((k, v)) = current.take() {
            params.insert(k, v);
        }
        Ok(Self { name: name.to_string(), params, source: text.to_string() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.params.get(key).map(String::as_str)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("`{}`: {key}={v}: {e}", self.source))))
            .transpose()
    }

    pub fn required_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| Error::Parse(format!("`{}`: missing {key}=", self.source)))
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.get(key)
            .map(|v| v.parse::<u64>().map_err(|e| Error::Parse(format!("`{}`: {key}={v}: {e}", self.source))))
            .transpose()
    }

    pub fn required_u64(&self, key: &str) -> Result<u64> {
        self.u64(key)?.ok_or_else(|| Error::Parse(format!("`{}`: missing {key}=", self.source)))
    }
}
