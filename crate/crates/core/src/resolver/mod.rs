//! Nameserver record retrieval.
//!
//! For each measured domain the resolver asks for its `NS` set and then for
//! the `A` and `AAAA` addresses of every nameserver host. Queries go through
//! a [`Backend`]: [`StubBackend`] talks to a recursive resolver over UDP/TCP,
//! [`FixtureBackend`] answers from a recorded snapshot file.

mod batch;
mod fixture;
mod live;
mod wire;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr, SocketAddr};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::DomainName;

pub use batch::{resolve_batch, BatchAborted, BatchItem, BatchStream, Progress, ProgressSink, RateLimiter};
pub use fixture::{read_fixture, write_fixture, FixtureBackend, FixtureError, FixtureRecord};
pub use live::StubBackend;

/// CNAME hops followed for a nameserver host before giving up.
pub const MAX_CNAME_DEPTH: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordType {
    Ns,
    A,
    Aaaa,
}

impl RecordType {
    pub fn code(self) -> u16 {
        match self {
            RecordType::A => 1,
            RecordType::Ns => 2,
            RecordType::Aaaa => 28,
        }
    }
}

impl fmt::Display for RecordType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordType::Ns => "NS",
            RecordType::A => "A",
            RecordType::Aaaa => "AAAA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RData {
    Ns(String),
    Cname(String),
    A(Ipv4Addr),
    Aaaa(Ipv6Addr),
}

/// One answer-section record. Owner names are lowercase without trailing dot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub owner: String,
    pub data: RData,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Answer {
    pub records: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("NXDOMAIN")]
    NxDomain,
    #[error("SERVFAIL")]
    ServFail,
    #[error("REFUSED")]
    Refused,
    #[error("timed out")]
    Timeout,
    #[error("upstream unreachable: {0}")]
    Unreachable(String),
    #[error("bad response: {0}")]
    Malformed(String),
}

impl QueryError {
    fn is_transient(&self) -> bool {
        matches!(self, QueryError::Timeout | QueryError::Unreachable(_))
    }
}

/// A source of DNS answers. Implementations must tolerate concurrent calls.
pub trait Backend: Send + Sync {
    fn query(&self, name: &str, rtype: RecordType, timeout: Duration) -> Result<Answer, QueryError>;
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn query(&self, name: &str, rtype: RecordType, timeout: Duration) -> Result<Answer, QueryError> {
        (**self).query(name, rtype, timeout)
    }
}

impl<B: Backend + ?Sized> Backend for &B {
    fn query(&self, name: &str, rtype: RecordType, timeout: Duration) -> Result<Answer, QueryError> {
        (**self).query(name, rtype, timeout)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResolutionStatus {
    Ok,
    NoNsRecords,
    ResolutionFailed,
    TimedOut,
}

impl ResolutionStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ResolutionStatus::Ok => "ok",
            ResolutionStatus::NoNsRecords => "no_ns_records",
            ResolutionStatus::ResolutionFailed => "resolution_failed",
            ResolutionStatus::TimedOut => "timed_out",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ok" => ResolutionStatus::Ok,
            "no_ns_records" => ResolutionStatus::NoNsRecords,
            "resolution_failed" => ResolutionStatus::ResolutionFailed,
            "timed_out" => ResolutionStatus::TimedOut,
            _ => return None,
        })
    }
}

impl fmt::Display for ResolutionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything retrieved for one domain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NsRecordSet {
    pub domain: DomainName,
    pub ns_hosts: BTreeSet<DomainName>,
    /// Every host in `ns_hosts` has a key here, possibly with an empty set.
    pub ns_addresses: BTreeMap<DomainName, BTreeSet<IpAddr>>,
    pub status: ResolutionStatus,
    pub queried_at: DateTime<Utc>,
    pub error_detail: Option<String>,
}

impl NsRecordSet {
    pub fn failed(domain: DomainName, status: ResolutionStatus, detail: Option<String>) -> Self {
        NsRecordSet {
            domain,
            ns_hosts: BTreeSet::new(),
            ns_addresses: BTreeMap::new(),
            status,
            queried_at: Utc::now(),
            error_detail: detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("timeout must be positive")]
    ZeroTimeout,
    #[error("max_in_flight must be at least 1")]
    ZeroInFlight,
    #[error("query budget must be a positive number")]
    BadBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolverPolicy {
    /// First-attempt timeout; each retry doubles it.
    pub timeout: Duration,
    pub retries: u32,
    pub max_in_flight: usize,
    pub queries_per_second: f64,
    pub upstreams: Vec<SocketAddr>,
    /// Consecutive unreachable-upstream outcomes that abort a batch ...
    pub abort_after_domains: usize,
    /// ... or the wall-clock span of such a streak that does.
    pub abort_after: Duration,
}

impl Default for ResolverPolicy {
    fn default() -> Self {
        ResolverPolicy {
            timeout: Duration::from_secs(2),
            retries: 2,
            max_in_flight: 64,
            queries_per_second: 500.0,
            upstreams: vec![SocketAddr::from(([1, 1, 1, 1], 53))],
            abort_after_domains: 256,
            abort_after: Duration::from_secs(30),
        }
    }
}

impl ResolverPolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.timeout.is_zero() {
            return Err(PolicyError::ZeroTimeout);
        }
        if self.max_in_flight == 0 {
            return Err(PolicyError::ZeroInFlight);
        }
        if !(self.queries_per_second.is_finite() && self.queries_per_second > 0.0) {
            return Err(PolicyError::BadBudget);
        }
        Ok(())
    }
}

/// Issues one query with retries. Transient failures are retried with the
/// timeout doubled each attempt; other outcomes are final.
fn query_with_retries(
    backend: &dyn Backend,
    name: &str,
    rtype: RecordType,
    policy: &ResolverPolicy,
) -> Result<Answer, QueryError> {
    let mut timeout = policy.timeout;
    let mut attempt = 0;
    loop {
        match backend.query(name, rtype, timeout) {
            Err(e) if e.is_transient() && attempt < policy.retries => {
                attempt += 1;
                timeout = timeout.saturating_mul(2);
            }
            other => return other,
        }
    }
}

/// Outcome of one domain plus whether the NS query failed because no
/// upstream could be reached (used by the batch driver's abort logic).
pub(crate) struct DomainOutcome {
    pub records: NsRecordSet,
    pub unreachable: bool,
}

/// Resolves the NS set of `domain` and the addresses of each NS host.
pub fn resolve_domain(domain: &DomainName, policy: &ResolverPolicy, backend: &dyn Backend) -> NsRecordSet {
    resolve_domain_outcome(domain, policy, backend).records
}

pub(crate) fn resolve_domain_outcome(
    domain: &DomainName,
    policy: &ResolverPolicy,
    backend: &dyn Backend,
) -> DomainOutcome {
    let queried_at = Utc::now();
    let answer = match query_with_retries(backend, domain.as_str(), RecordType::Ns, policy) {
        Ok(answer) => answer,
        Err(err) => {
            let (status, detail) = match &err {
                QueryError::NxDomain => (ResolutionStatus::NoNsRecords, Some("NXDOMAIN".to_string())),
                QueryError::Timeout => (ResolutionStatus::TimedOut, Some(format!("NS: {err}"))),
                _ => (ResolutionStatus::ResolutionFailed, Some(format!("NS: {err}"))),
            };
            let mut records = NsRecordSet::failed(domain.clone(), status, detail);
            records.queried_at = queried_at;
            return DomainOutcome { records, unreachable: matches!(err, QueryError::Unreachable(_)) };
        }
    };

    let mut notes: Vec<String> = Vec::new();
    let mut ns_hosts = BTreeSet::new();
    for record in &answer.records {
        if let RData::Ns(target) = &record.data {
            match DomainName::parse(target) {
                Ok(host) => {
                    ns_hosts.insert(host);
                }
                Err(e) => notes.push(format!("ignored NS target `{target}`: {e}")),
            }
        }
    }
    if ns_hosts.is_empty() {
        let mut records = NsRecordSet::failed(domain.clone(), ResolutionStatus::NoNsRecords, None);
        records.queried_at = queried_at;
        records.error_detail = (!notes.is_empty()).then(|| notes.join("; "));
        return DomainOutcome { records, unreachable: false };
    }

    let mut ns_addresses = BTreeMap::new();
    for host in &ns_hosts {
        let mut addrs = BTreeSet::new();
        for rtype in [RecordType::A, RecordType::Aaaa] {
            match host_addresses(backend, host.as_str(), rtype, policy) {
                Ok(found) => addrs.extend(found),
                Err(note) => notes.push(format!("{host} {rtype}: {note}")),
            }
        }
        ns_addresses.insert(host.clone(), addrs);
    }

    DomainOutcome {
        records: NsRecordSet {
            domain: domain.clone(),
            ns_hosts,
            ns_addresses,
            status: ResolutionStatus::Ok,
            queried_at,
            error_detail: (!notes.is_empty()).then(|| notes.join("; ")),
        },
        unreachable: false,
    }
}

/// Addresses of `host` for one record type, following CNAMEs both inside a
/// single answer and across re-queries. Missing data is an empty result;
/// only hard failures and over-long chains are reported.
fn host_addresses(
    backend: &dyn Backend,
    host: &str,
    rtype: RecordType,
    policy: &ResolverPolicy,
) -> Result<Vec<IpAddr>, String> {
    let mut name = host.to_ascii_lowercase();
    let mut hops = 0usize;
    loop {
        let answer = match query_with_retries(backend, &name, rtype, policy) {
            Ok(a) => a,
            Err(QueryError::NxDomain) => return Ok(Vec::new()),
            Err(e) => return Err(e.to_string()),
        };
        // walk the chain inside this answer
        let mut advanced = false;
        loop {
            let addrs: Vec<IpAddr> = answer
                .records
                .iter()
                .filter(|r| r.owner == name)
                .filter_map(|r| match (&r.data, rtype) {
                    (RData::A(a), RecordType::A) => Some(IpAddr::V4(*a)),
                    (RData::Aaaa(a), RecordType::Aaaa) => Some(IpAddr::V6(*a)),
                    _ => None,
                })
                .collect();
            if !addrs.is_empty() {
                return Ok(addrs);
            }
            let next = answer.records.iter().find_map(|r| match &r.data {
                RData::Cname(target) if r.owner == name => Some(target.clone()),
                _ => None,
            });
            match next {
                Some(target) => {
                    hops += 1;
                    if hops > MAX_CNAME_DEPTH {
                        return Err(format!("CNAME chain longer than {MAX_CNAME_DEPTH}, cut"));
                    }
                    name = target;
                    advanced = true;
                }
                None if advanced => break,
                None => return Ok(Vec::new()),
            }
        }
    }
}
