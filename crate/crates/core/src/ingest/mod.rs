//! Parsers for the three input datasets and version diffing.
//!
//! All parsers are lossy-tolerant: a malformed record is skipped and counted,
//! never fatal. Only I/O failures and a structurally unusable file (an as2org
//! dump without any `#format:` header) abort a parse.

mod as2org;
mod diff;
mod prefix2as;
mod tranco;

use std::io;

use thiserror::Error;

pub use as2org::{parse_as2org, write_as2org, As2OrgParse, AsOrg, OrgMap};
pub use diff::{diff_tranco, DatasetDiff, RankChange};
pub use prefix2as::{parse_prefix2as, AddressFamily, MoasKind, Prefix2AsParse, PrefixOrigin};
pub use tranco::{parse_tranco, TrancoEntry, TrancoParse};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
    #[error("format error: {0}")]
    Format(String),
}

/// Strips a trailing `\r` so CRLF input parses like LF input.
fn trim_line(line: &str) -> &str {
    line.strip_suffix('\r').unwrap_or(line)
}
