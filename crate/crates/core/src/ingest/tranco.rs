use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::{trim_line, IngestError};
use crate::domain::DomainName;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrancoEntry {
    pub rank: u32,
    pub domain: DomainName,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TrancoParse {
    pub entries: Vec<TrancoEntry>,
    pub skipped: usize,
}

/// Parses a `rank,domain` list.
///
/// A first line whose rank field is not numeric is taken as a header and
/// dropped silently. Later lines with a bad rank, a bad domain or a rank that
/// does not strictly increase are counted in `skipped`. Blank lines are ignored.
pub fn parse_tranco<R: BufRead>(reader: R) -> Result<TrancoParse, IngestError> {
    let mut out = TrancoParse::default();
    let mut last_rank = 0u32;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = trim_line(&line);
        if line.trim().is_empty() {
            continue;
        }
        let (rank_field, domain_field) = match line.split_once(',') {
            Some(fields) => fields,
            None => (line, ""),
        };
        let rank = match rank_field.trim().parse::<u32>() {
            Ok(rank) => rank,
            Err(_) if idx == 0 => continue,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        if rank == 0 || rank <= last_rank {
            out.skipped += 1;
            continue;
        }
        match DomainName::parse(domain_field) {
            Ok(domain) => {
                last_rank = rank;
                out.entries.push(TrancoEntry { rank, domain });
            }
            Err(_) => out.skipped += 1,
        }
    }
    Ok(out)
}
