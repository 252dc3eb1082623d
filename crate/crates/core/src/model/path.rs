use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Segment {
    Key(String),
    Index(usize),
}

/// Address of a value inside a (possibly nested) record.
///
/// Rendered as dot-separated keys with `[i]` list indices; `.`, `[` and `\`
/// inside keys are backslash-escaped so every path round-trips through text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributePath(Vec<Segment>);

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PathError {
    #[error("attribute path is empty")]
    Empty,
    #[error("malformed attribute path `{0}`")]
    Malformed(String),
}

impl AttributePath {
    pub fn new(segments: Vec<Segment>) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Empty);
        }
        Ok(AttributePath(segments))
    }

    /// Single-key path.
    pub fn key(name: impl Into<String>) -> Self {
        AttributePath(vec![Segment::Key(name.into())])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.0
    }

    pub fn child(&self, key: impl Into<String>) -> Self {
        let mut segs = self.0.clone();
        segs.push(Segment::Key(key.into()));
        AttributePath(segs)
    }

    pub fn parent(&self) -> Option<AttributePath> {
        if self.0.len() <= 1 {
            None
        } else {
            Some(AttributePath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Last key segment, used as the human-facing attribute name.
    pub fn leaf_name(&self) -> &str {
        self.0
            .iter()
            .rev()
            .find_map(|s| match s {
                Segment::Key(k) => Some(k.as_str()),
                Segment::Index(_) => None,
            })
            .unwrap_or("")
    }

    pub fn with_leaf_name(&self, name: impl Into<String>) -> Self {
        let mut segs = self.0.clone();
        *segs.last_mut().expect("non-empty") = Segment::Key(name.into());
        AttributePath(segs)
    }

    pub fn prefixed(&self, head: impl Into<String>) -> Self {
        let mut segs = vec![Segment::Key(head.into())];
        segs.extend(self.0.iter().cloned());
        AttributePath(segs)
    }

    pub fn starts_with(&self, other: &AttributePath) -> bool {
        self.0.len() >= other.0.len() && self.0[..other.0.len()] == other.0[..]
    }
}

impl fmt::Display for AttributePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, seg) in self.0.iter().enumerate() {
            match seg {
                Segment::Key(k) => {
                    if i > 0 {
                        f.write_str(".")?;
                    }
                    for c in k.chars() {
                        if matches!(c, '.' | '[' | '\\') {
                            f.write_str("\\")?;
                        }
                        write!(f, "{c}")?;
                    }
                }
                Segment::Index(n) => write!(f, "[{n}]")?,
            }
        }
        Ok(())
    }
}

impl FromStr for AttributePath {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || PathError::Malformed(s.to_string());
        let mut segs = Vec::new();
        let mut key = String::new();
        let mut pending = true;
        let mut chars = s.chars();
        while let Some(c) = chars.next() {
            match c {
                '\\' => {
                    key.push(chars.next().ok_or_else(malformed)?);
                    pending = true;
                }
                '.' => {
                    if pending {
                        segs.push(Segment::Key(std::mem::take(&mut key)));
                    }
                    pending = true;
                }
                '[' => {
                    if pending {
                        segs.push(Segment::Key(std::mem::take(&mut key)));
                    }
                    let mut digits = String::new();
                    loop {
                        match chars.next() {
                            Some(']') => break,
                            Some(d) if d.is_ascii_digit() => digits.push(d),
                            _ => return Err(malformed()),
                        }
                    }
                    segs.push(Segment::Index(digits.parse().map_err(|_| malformed())?));
                    pending = false;
                }
                other => {
                    key.push(other);
                    pending = true;
                }
            }
        }
        if pending {
            segs.push(Segment::Key(key));
        }
        AttributePath::new(segs)
    }
}

impl Serialize for AttributePath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for AttributePath {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
