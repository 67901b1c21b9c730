//! Offline backend answering from a recorded snapshot file.
//!
//! The file is JSON Lines, one object per domain:
//!
//! ```text
//! {"domain":"dns.br","ns_hosts":["a.dns.br"],"ns_addresses":{"a.dns.br":["200.160.0.10"]},"status":"ok"}
//! ```
//!
//! `ns_addresses` may omit hosts; `error_detail` is optional. Extra fields
//! (for example the attribution fields of an exported snapshot) are ignored.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::net::IpAddr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Answer, Backend, NsRecordSet, QueryError, RData, Record, RecordType, ResolutionStatus};
use crate::domain::DomainName;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureRecord {
    pub domain: DomainName,
    #[serde(default)]
    pub ns_hosts: BTreeSet<DomainName>,
    #[serde(default)]
    pub ns_addresses: BTreeMap<DomainName, BTreeSet<IpAddr>>,
    pub status: ResolutionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_detail: Option<String>,
}

impl From<&NsRecordSet> for FixtureRecord {
    fn from(rs: &NsRecordSet) -> Self {
        FixtureRecord {
            domain: rs.domain.clone(),
            ns_hosts: rs.ns_hosts.clone(),
            ns_addresses: rs.ns_addresses.clone(),
            status: rs.status,
            error_detail: rs.error_detail.clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("fixture line {line}: {message}")]
    Invalid { line: usize, message: String },
}

impl FixtureRecord {
    fn check(&self) -> Result<(), String> {
        if self.status == ResolutionStatus::Ok && self.ns_hosts.is_empty() {
            return Err(format!("{}: status ok without ns_hosts", self.domain));
        }
        if let Some(host) = self.ns_addresses.keys().find(|h| !self.ns_hosts.contains(*h)) {
            return Err(format!("{}: address key {host} is not an NS host", self.domain));
        }
        Ok(())
    }
}

pub fn read_fixture<R: BufRead>(reader: R) -> Result<Vec<FixtureRecord>, FixtureError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let invalid = |message: String| FixtureError::Invalid { line: idx + 1, message };
        let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| invalid(e.to_string()))?;
        record.check().map_err(invalid)?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_fixture<'a, W, I>(records: I, mut out: W) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a FixtureRecord>,
{
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
enum NsBehavior {
    Hosts(Vec<String>),
    Empty,
    Fail,
    Timeout,
}

/// Answers `NS` queries from each record's host list and status, and
/// `A`/`AAAA` queries from the union of all recorded host addresses.
#[derive(Debug, Clone, Default)]
pub struct FixtureBackend {
    domains: HashMap<String, NsBehavior>,
    hosts: HashMap<String, BTreeSet<IpAddr>>,
}

impl FixtureBackend {
    pub fn from_records<'a, I>(records: I) -> Self
    where
        I: IntoIterator<Item = &'a FixtureRecord>,
    {
        let mut backend = FixtureBackend::default();
        for record in records {
            let behavior = match record.status {
                ResolutionStatus::Ok => NsBehavior::Hosts(record.ns_hosts.iter().map(|h| h.to_string()).collect()),
                ResolutionStatus::NoNsRecords => NsBehavior::Empty,
                ResolutionStatus::ResolutionFailed => NsBehavior::Fail,
                ResolutionStatus::TimedOut => NsBehavior::Timeout,
            };
            backend.domains.insert(record.domain.to_string(), behavior);
            for host in &record.ns_hosts {
                let entry = backend.hosts.entry(host.to_string()).or_default();
                if let Some(addrs) = record.ns_addresses.get(host) {
                    entry.extend(addrs.iter().copied());
                }
            }
        }
        backend
    }

    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FixtureError> {
        let records = read_fixture(reader)?;
        Ok(Self::from_records(&records))
    }

    pub fn domain_count(&self) -> usize {
        self.domains.len()
    }
}

impl Backend for FixtureBackend {
    fn query(&self, name: &str, rtype: RecordType, _timeout: Duration) -> Result<Answer, QueryError> {
        let owner = name.to_ascii_lowercase();
        match rtype {
            RecordType::Ns => match self.domains.get(&owner) {
                None => Err(QueryError::NxDomain),
                Some(NsBehavior::Fail) => Err(QueryError::ServFail),
                Some(NsBehavior::Timeout) => Err(QueryError::Timeout),
                Some(NsBehavior::Empty) => Ok(Answer::default()),
                Some(NsBehavior::Hosts(hosts)) => Ok(Answer {
                    records: hosts
                        .iter()
                        .map(|h| Record { owner: owner.clone(), data: RData::Ns(h.clone()) })
                        .collect(),
                }),
            },
            RecordType::A | RecordType::Aaaa => {
                let addrs = self.hosts.get(&owner).ok_or(QueryError::NxDomain)?;
                let records = addrs
                    .iter()
                    .filter_map(|ip| match (ip, rtype) {
                        (IpAddr::V4(a), RecordType::A) => Some(RData::A(*a)),
                        (IpAddr::V6(a), RecordType::Aaaa) => Some(RData::Aaaa(*a)),
                        _ => None,
                    })
                    .map(|data| Record { owner: owner.clone(), data })
                    .collect();
                Ok(Answer { records })
            }
        }
    }
}
