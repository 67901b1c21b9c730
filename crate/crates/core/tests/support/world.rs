//! Synthetic measurement worlds: providers with address space and an AS/org
//! record, and domains delegated to them. A world renders the four input
//! datasets plus a resolver fixture, and can run the in-process pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::sync::Arc;

use chrono::NaiveDate;
use ipnet::{IpNet, Ipv4Net, Ipv6Net};

use nsflow_core::flowmap::{map_flow, MeasurementSnapshot, SnapshotMeta, Store};
use nsflow_core::ingest::{parse_as2org, parse_prefix2as, AddressFamily, OrgMap};
use nsflow_core::ip2as::LpmIndex;
use nsflow_core::resolver::{resolve_batch, FixtureBackend, FixtureRecord, Progress, ResolutionStatus, ResolverPolicy};
use nsflow_core::DomainName;

#[derive(Debug, Clone)]
pub struct Provider {
    pub asn: u32,
    pub as_name: String,
    pub org_id: String,
    pub org_name: String,
    pub country: String,
    pub v4: Ipv4Net,
    pub v6: Ipv6Net,
}

#[derive(Debug, Clone)]
pub struct DomainSpec {
    pub name: String,
    pub status: ResolutionStatus,
    pub providers: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct World {
    pub providers: Vec<Provider>,
    pub domains: Vec<DomainSpec>,
}

impl World {
    pub fn provider(&mut self, as_name: &str, org_name: &str, country: &str) -> usize {
        let asn = 64512 + self.providers.len() as u32;
        self.provider_with_asn(asn, as_name, org_name, country)
    }

    pub fn provider_with_asn(&mut self, asn: u32, as_name: &str, org_name: &str, country: &str) -> usize {
        let i = self.providers.len() as u32;
        assert!(i < 4096);
        self.providers.push(Provider {
            asn,
            as_name: as_name.into(),
            org_id: format!("ORG-{asn}"),
            org_name: org_name.into(),
            country: country.into(),
            v4: Ipv4Net::new(Ipv4Addr::from(0x0B00_0000 + (i << 12)), 20).unwrap(),
            v6: Ipv6Net::new(Ipv6Addr::new(0x2001, 0xdb8, i as u16, 0, 0, 0, 0, 0), 48).unwrap(),
        });
        self.providers.len() - 1
    }

    pub fn add_domain(&mut self, name: &str, providers: &[usize]) {
        self.domains.push(DomainSpec {
            name: name.into(),
            status: ResolutionStatus::Ok,
            providers: providers.to_vec(),
        });
    }

    pub fn add_unresolved(&mut self, name: &str, status: ResolutionStatus) {
        self.domains.push(DomainSpec { name: name.into(), status, providers: Vec::new() });
    }

    /// `count` single-provider domains named `{stem}{n}{suffix}`.
    pub fn add_many(&mut self, stem: &str, suffix: &str, count: usize, provider: usize) {
        let start = self.domains.len();
        for n in 0..count {
            self.add_domain(&format!("{stem}{}{suffix}", start + n), &[provider]);
        }
    }

    pub fn host(&self, p: usize) -> DomainName {
        let slug: String = self.providers[p]
            .as_name
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() { c } else { '-' })
            .collect();
        DomainName::parse(&format!("ns1.p{p}-{slug}.net")).unwrap()
    }

    pub fn host_ips(&self, p: usize) -> BTreeSet<IpAddr> {
        let pr = &self.providers[p];
        let v4 = Ipv4Addr::from(u32::from(pr.v4.network()) + 53);
        let v6 = Ipv6Addr::from(u128::from(pr.v6.network()) + 0x53);
        BTreeSet::from([IpAddr::V4(v4), IpAddr::V6(v6)])
    }

    pub fn prefix2as_v4(&self) -> String {
        self.providers.iter().map(|p| format!("{}\t{}\t{}\n", p.v4.network(), p.v4.prefix_len(), p.asn)).collect()
    }

    pub fn prefix2as_v6(&self) -> String {
        self.providers.iter().map(|p| format!("{}\t{}\t{}\n", p.v6.network(), p.v6.prefix_len(), p.asn)).collect()
    }

    pub fn as2org(&self) -> String {
        let mut out = String::from("# format:org_id|changed|org_name|country|source\n");
        let mut seen = BTreeSet::new();
        for p in &self.providers {
            if seen.insert(&p.org_id) {
                out.push_str(&format!("{}|20230101|{}|{}|ARIN\n", p.org_id, p.org_name, p.country));
            }
        }
        out.push_str("# format:aut|changed|aut_name|org_id|opaque_id|source\n");
        for p in &self.providers {
            out.push_str(&format!("{}|20230101|{}|{}||ARIN\n", p.asn, p.as_name, p.org_id));
        }
        out
    }

    pub fn tranco(&self) -> String {
        self.domains.iter().enumerate().map(|(i, d)| format!("{},{}\n", i + 1, d.name)).collect()
    }

    pub fn fixture_records(&self) -> Vec<FixtureRecord> {
        self.domains
            .iter()
            .map(|d| {
                let hosts: BTreeMap<DomainName, BTreeSet<IpAddr>> =
                    d.providers.iter().map(|&p| (self.host(p), self.host_ips(p))).collect();
                FixtureRecord {
                    domain: DomainName::parse(&d.name).unwrap(),
                    ns_hosts: hosts.keys().cloned().collect(),
                    ns_addresses: hosts,
                    status: d.status,
                    error_detail: None,
                }
            })
            .collect()
    }

    pub fn fixture_jsonl(&self) -> String {
        let mut buf = Vec::new();
        nsflow_core::resolver::write_fixture(&self.fixture_records(), &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    pub fn index(&self) -> (LpmIndex, OrgMap) {
        let mut routes = parse_prefix2as(self.prefix2as_v4().as_bytes(), AddressFamily::V4).unwrap().records;
        routes.extend(parse_prefix2as(self.prefix2as_v6().as_bytes(), AddressFamily::V6).unwrap().records);
        let orgs = parse_as2org(self.as2org().as_bytes()).unwrap().orgs;
        (LpmIndex::build(routes, "world"), orgs)
    }

    /// Resolves every domain against the world's fixture, maps and persists
    /// the flows, and loads the stored snapshot back.
    pub fn measure(&self, run_date: NaiveDate) -> MeasurementSnapshot {
        let (index, orgs) = self.index();
        let backend = Arc::new(FixtureBackend::from_records(&self.fixture_records()));
        let policy = ResolverPolicy { queries_per_second: 1e9, max_in_flight: 8, ..ResolverPolicy::default() };
        let domains = self.domains.iter().map(|d| DomainName::parse(&d.name).unwrap()).collect();
        let records = resolve_batch(domains, &policy, backend, |_: &Progress| {}).collect_ordered().unwrap();
        let flows = records.iter().map(|r| map_flow(r, &index, &orgs));
        let meta = SnapshotMeta {
            run_date,
            tranco_label: "tranco@world".into(),
            prefix2as_v4_label: "v4@world".into(),
            prefix2as_v6_label: "v6@world".into(),
            as2org_label: "as2org@world".into(),
        };
        let mut store = Store::open_in_memory().unwrap();
        let report = store.persist_snapshot(flows, &meta).unwrap();
        store.load_snapshot(&report.snapshot_id).unwrap()
    }

    pub fn provider_id(&self, p: usize) -> String {
        self.providers[p].org_id.clone()
    }

    pub fn prefixes(&self) -> Vec<IpNet> {
        self.providers.iter().flat_map(|p| [IpNet::V4(p.v4), IpNet::V6(p.v6)]).collect()
    }
}

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}
