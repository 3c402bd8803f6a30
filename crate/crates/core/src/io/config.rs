use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::{parse_err, read_text};
use crate::error::{Error, Result};

/// Flat `key = value` text with `#` comments.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    origin: String,
    entries: BTreeMap<String, (String, usize)>,
}

impl KeyValues {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(origin, line_no, "expected `key = value`"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(parse_err(origin, line_no, "empty key"));
            }
            if entries.insert(k.to_string(), (v.trim().to_string(), line_no)).is_some() {
                return Err(parse_err(origin, line_no, format!("duplicate key {k:?}")));
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
        })
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    /// Typed lookup; a present but unparsable value is an error naming its line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| parse_err(&self.origin, *line, format!("bad value {v:?} for {key}"))),
        }
    }

    /// Errors on the first key not in `known`.
    pub fn reject_unknown(&self, known: &[&str]) -> Result<()> {
        for (k, (_, line)) in &self.entries {
            if !known.contains(&k.as_str()) {
                return Err(parse_err(&self.origin, *line, format!("unknown key {k:?}")));
            }
        }
        Ok(())
    }

    /// `key = a,b` as a pair of numbers.
    pub fn get_pair(&self, key: &str) -> Result<Option<(f64, f64)>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => parse_pair(v)
                .map(Some)
                .map_err(|_| parse_err(&self.origin, *line, format!("bad pair {v:?} for {key}, expected `lo,hi`"))),
        }
    }
}

/// Parses `lo,hi`.
pub fn parse_pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::invalid(format!("expected `lo,hi`, got {s:?}")))?;
    let p = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("malformed number {t:?}")))
    };
    Ok((p(a)?, p(b)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_comments() {
        let kv = KeyValues::parse("# model\nfwhm_270 = 42 # wider\n\nband=680, 760\nrefine=true\n", "cfg").unwrap();
        assert_eq!(kv.get::<f64>("fwhm_270").unwrap(), Some(42.0));
        assert_eq!(kv.get_pair("band").unwrap(), Some((680.0, 760.0)));
        assert_eq!(kv.get::<bool>("refine").unwrap(), Some(true));
        assert_eq!(kv.get::<f64>("missing").unwrap(), None);
        assert!(kv.reject_unknown(&["fwhm_270", "band"]).is_err());
        assert!(kv.reject_unknown(&["fwhm_270", "band", "refine"]).is_ok());
    }

    #[test]
    fn errors_carry_lines() {
        let e = KeyValues::parse("a = 1\na = 2\n", "cfg").unwrap_err().to_string();
        assert!(e.starts_with("cfg:2"), "{e}");
        assert!(KeyValues::parse("novalue\n", "cfg").is_err());
        let kv = KeyValues::parse("\nx = abc\n", "cfg").unwrap();
        assert!(kv.get::<f64>("x").unwrap_err().to_string().starts_with("cfg:2"));
    }
}
