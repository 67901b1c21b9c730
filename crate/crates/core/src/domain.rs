//! Shared identifiers: domain names, AS numbers and country codes.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

const MAX_NAME_LEN: usize = 253;
const MAX_LABEL_LEN: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("empty domain name")]
    Empty,
    #[error("domain name is {0} octets, limit is 253")]
    TooLong(usize),
    #[error("label `{0}` is empty or longer than 63 octets")]
    BadLabel(String),
    #[error("domain name `{0}` has no dot")]
    NoDot(String),
    #[error("domain name `{0}` contains whitespace or control characters")]
    BadCharacter(String),
}

/// A normalized DNS name: ASCII-lowercased, no trailing dot, at least two labels.
///
/// Non-ASCII octets are kept verbatim; IDN handling is left to the data source.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DomainName(String);

impl DomainName {
    pub fn parse(raw: &str) -> Result<Self, NameError> {
        let trimmed = raw.trim();
        let name = trimmed.strip_suffix('.').unwrap_or(trimmed);
        if name.is_empty() {
            return Err(NameError::Empty);
        }
        if name.len() > MAX_NAME_LEN {
            return Err(NameError::TooLong(name.len()));
        }
        if name.chars().any(|c| c.is_whitespace() || c.is_control() || c == ',') {
            return Err(NameError::BadCharacter(name.to_string()));
        }
        for label in name.split('.') {
            if label.is_empty() || label.len() > MAX_LABEL_LEN {
                return Err(NameError::BadLabel(label.to_string()));
            }
        }
        if !name.contains('.') {
            return Err(NameError::NoDot(name.to_string()));
        }
        Ok(DomainName(name.to_ascii_lowercase()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Literal suffix match on label boundaries, e.g. `.br` or `.gov.br`.
    /// A bare `gov.br` domain does not match `.gov.br`.
    pub fn has_suffix(&self, suffix: &str) -> bool {
        let core = suffix.trim_start_matches('.').trim_end_matches('.');
        if core.is_empty() {
            return false;
        }
        let dotted = format!(".{}", core.to_ascii_lowercase());
        self.0.ends_with(&dotted)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.0.split('.')
    }
}

impl fmt::Display for DomainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for DomainName {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DomainName::parse(s)
    }
}

impl AsRef<str> for DomainName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl Serialize for DomainName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for DomainName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        DomainName::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// Autonomous System number. Zero is reserved and rejected by the parsers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Asn(pub u32);

impl Asn {
    pub fn new(value: u32) -> Option<Self> {
        (value != 0).then_some(Asn(value))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for Asn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AS{}", self.0)
    }
}

impl FromStr for Asn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let digits = s.trim();
        let digits = digits.strip_prefix("AS").or_else(|| digits.strip_prefix("as")).unwrap_or(digits);
        let value: u32 = digits.parse().map_err(|_| format!("invalid AS number `{s}`"))?;
        Asn::new(value).ok_or_else(|| format!("AS number 0 is reserved (`{s}`)"))
    }
}

/// ISO 3166-1 alpha-2 code, or `??` when the source does not name a country.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CountryCode([u8; 2]);

impl CountryCode {
    pub const UNKNOWN: CountryCode = CountryCode(*b"??");

    /// Accepts two ASCII letters in any case; anything else maps to `??`.
    pub fn normalize(raw: &str) -> Self {
        let raw = raw.trim();
        match raw.as_bytes() {
            [a, b] if a.is_ascii_alphabetic() && b.is_ascii_alphabetic() => {
                CountryCode([a.to_ascii_uppercase(), b.to_ascii_uppercase()])
            }
            _ => Self::UNKNOWN,
        }
    }

    pub fn is_unknown(self) -> bool {
        self == Self::UNKNOWN
    }

    pub fn as_str(&self) -> &str {
        // both bytes are ASCII by construction
        std::str::from_utf8(&self.0).unwrap_or("??")
    }
}

impl fmt::Display for CountryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for CountryCode {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CountryCode {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(CountryCode::normalize(&raw))
    }
}
