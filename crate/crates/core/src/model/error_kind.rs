use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Error classes a source can inject into its records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Typo,
    Phonetic,
    Format,
    Missing,
    Swap,
    Merge,
    Split,
    ListOrder,
    Outdated,
    WrongReference,
}

impl ErrorKind {
    pub const ALL: [ErrorKind; 10] = [
        ErrorKind::Typo,
        ErrorKind::Phonetic,
        ErrorKind::Format,
        ErrorKind::Missing,
        ErrorKind::Swap,
        ErrorKind::Merge,
        ErrorKind::Split,
        ErrorKind::ListOrder,
        ErrorKind::Outdated,
        ErrorKind::WrongReference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Typo => "typo",
            ErrorKind::Phonetic => "phonetic",
            ErrorKind::Format => "format",
            ErrorKind::Missing => "missing",
            ErrorKind::Swap => "swap",
            ErrorKind::Merge => "merge",
            ErrorKind::Split => "split",
            ErrorKind::ListOrder => "list_order",
            ErrorKind::Outdated => "outdated",
            ErrorKind::WrongReference => "wrong_reference",
        }
    }

    /// Classes that change two cells of one record.
    pub fn is_record_level(self) -> bool {
        matches!(self, ErrorKind::Swap | ErrorKind::Merge | ErrorKind::Split)
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown error class `{0}`")]
pub struct UnknownErrorKind(pub String);

impl FromStr for ErrorKind {
    type Err = UnknownErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorKind::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| UnknownErrorKind(s.to_string()))
    }
}
