//! Per-domain resolution flows and dated measurement snapshots.
//!
//! A [`ResolutionFlow`] is the layered graph domain → NS host → IP →
//! AS/organization/country for one domain. Flows from one run are persisted
//! together as a [`MeasurementSnapshot`] in a [`Store`].

mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;

use chrono::NaiveDate;
use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::domain::{Asn, CountryCode, DomainName};
use crate::ingest::OrgMap;
use crate::ip2as::{lookup, LpmIndex};
use crate::resolver::{FixtureRecord, NsRecordSet, ResolutionStatus};

pub use store::{DatasetRecord, ExportRecord, PersistReport, SnapshotSummary, Store, StoreError, SCHEMA_VERSION};

/// The AS edge of one NS address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IpAttribution {
    pub prefix: IpNet,
    pub asn: Asn,
    pub as_name: Option<String>,
    pub org_id: Option<String>,
    pub org_name: Option<String>,
    pub country: Option<CountryCode>,
}

impl IpAttribution {
    /// Organization key used for provider identity: the org id when the AS is
    /// known to the organization dataset, otherwise the AS itself.
    pub fn provider_id(&self) -> String {
        self.org_id.clone().unwrap_or_else(|| self.asn.to_string())
    }

    pub fn display_name(&self) -> String {
        self.as_name.clone().unwrap_or_else(|| self.asn.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionFlow {
    pub domain: DomainName,
    pub status: ResolutionStatus,
    pub error_detail: Option<String>,
    /// NS host → its addresses. Hosts without addresses map to an empty set.
    pub ns_hosts: BTreeMap<DomainName, BTreeSet<IpAddr>>,
    pub attributions: BTreeMap<IpAddr, IpAttribution>,
    pub unmapped_ips: BTreeSet<IpAddr>,
}

impl ResolutionFlow {
    pub fn ips(&self) -> BTreeSet<IpAddr> {
        self.ns_hosts.values().flatten().copied().collect()
    }

    pub fn is_ok(&self) -> bool {
        self.status == ResolutionStatus::Ok
    }

    pub fn to_fixture_record(&self) -> FixtureRecord {
        FixtureRecord {
            domain: self.domain.clone(),
            ns_hosts: self.ns_hosts.keys().cloned().collect(),
            ns_addresses: self.ns_hosts.clone(),
            status: self.status,
            error_detail: self.error_detail.clone(),
        }
    }
}

/// Attributes every NS address of `records` through `index`.
pub fn map_flow(records: &NsRecordSet, index: &LpmIndex, orgs: &OrgMap) -> ResolutionFlow {
    let mut ns_hosts: BTreeMap<DomainName, BTreeSet<IpAddr>> =
        records.ns_hosts.iter().map(|h| (h.clone(), BTreeSet::new())).collect();
    for (host, ips) in &records.ns_addresses {
        ns_hosts.entry(host.clone()).or_default().extend(ips.iter().copied());
    }

    let mut attributions = BTreeMap::new();
    let mut unmapped_ips = BTreeSet::new();
    for ip in ns_hosts.values().flatten() {
        let a = lookup(index, *ip, orgs);
        match (a.matched_prefix, a.asn) {
            (Some(prefix), Some(asn)) => {
                attributions.insert(
                    *ip,
                    IpAttribution {
                        prefix,
                        asn,
                        as_name: a.as_name,
                        org_id: a.org_id,
                        org_name: a.org_name,
                        country: a.country,
                    },
                );
            }
            _ => {
                unmapped_ips.insert(*ip);
            }
        }
    }

    ResolutionFlow {
        domain: records.domain.clone(),
        status: records.status,
        error_detail: records.error_detail.clone(),
        ns_hosts,
        attributions,
        unmapped_ips,
    }
}

/// Dataset versions and run date pinned by a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub run_date: NaiveDate,
    pub tranco_label: String,
    pub prefix2as_v4_label: String,
    pub prefix2as_v6_label: String,
    pub as2org_label: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub input: u64,
    pub ok: u64,
    pub no_ns: u64,
    pub failed: u64,
    pub timed_out: u64,
    pub unmapped_ip: u64,
    /// Flows rejected while persisting, such as repeated domains.
    pub data_errors: u64,
}

impl Counters {
    pub fn record(&mut self, flow: &ResolutionFlow) {
        self.input += 1;
        match flow.status {
            ResolutionStatus::Ok => self.ok += 1,
            ResolutionStatus::NoNsRecords => self.no_ns += 1,
            ResolutionStatus::ResolutionFailed => self.failed += 1,
            ResolutionStatus::TimedOut => self.timed_out += 1,
        }
        self.unmapped_ip += flow.unmapped_ips.len() as u64;
    }

    pub fn is_consistent(&self) -> bool {
        self.input == self.ok + self.no_ns + self.failed + self.timed_out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSnapshot {
    pub snapshot_id: String,
    pub meta: SnapshotMeta,
    pub counters: Counters,
    pub flows: Vec<ResolutionFlow>,
}

impl MeasurementSnapshot {
    pub fn flow(&self, domain: &DomainName) -> Option<&ResolutionFlow> {
        self.flows.iter().find(|f| &f.domain == domain)
    }
}
