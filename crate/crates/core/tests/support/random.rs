//! Random flows and snapshots for property tests.

use std::collections::{BTreeMap, BTreeSet};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::Rng;

use nsflow_core::flowmap::{Counters, IpAttribution, MeasurementSnapshot, ResolutionFlow, SnapshotMeta};
use nsflow_core::resolver::ResolutionStatus;
use nsflow_core::{Asn, CountryCode, DomainName};

pub const SUFFIXES: [&str; 7] = [".br", ".ru", ".gov.br", ".com", ".eu", ".cn", ".gov.in"];
const COUNTRIES: [&str; 6] = ["US", "BR", "RU", "DE", "NL", "CN"];

/// One of a small pool of providers: some orgs span two ASes with different
/// names, some ASes have no org record, some have no country.
fn attribution<R: Rng>(rng: &mut R, ip: IpAddr) -> IpAttribution {
    let asn: u32 = rng.gen_range(1..=12);
    let org = match asn {
        1 | 2 => Some("ORG-A"),
        3 | 4 => Some("ORG-B"),
        11 | 12 => None,
        _ => Some(["ORG-C", "ORG-D", "ORG-E", "ORG-F", "ORG-G", "ORG-H"][(asn - 5) as usize]),
    };
    IpAttribution {
        prefix: match ip {
            IpAddr::V4(_) => "198.18.0.0/15".parse().unwrap(),
            IpAddr::V6(_) => "2001:db8::/32".parse().unwrap(),
        },
        asn: Asn(asn),
        as_name: org.map(|_| format!("NET-{asn}")),
        org_id: org.map(str::to_string),
        org_name: org.map(|o| format!("{o} Inc")),
        country: if asn == 10 {
            None
        } else {
            Some(CountryCode::normalize(COUNTRIES[(asn as usize) % COUNTRIES.len()]))
        },
    }
}

pub fn flow<R: Rng>(rng: &mut R, domain: DomainName) -> ResolutionFlow {
    let status = match rng.gen_range(0..10) {
        0 => ResolutionStatus::NoNsRecords,
        1 => ResolutionStatus::ResolutionFailed,
        2 => ResolutionStatus::TimedOut,
        _ => ResolutionStatus::Ok,
    };
    let mut ns_hosts = BTreeMap::new();
    let mut attributions = BTreeMap::new();
    let mut unmapped_ips = BTreeSet::new();
    if status == ResolutionStatus::Ok {
        for h in 0..rng.gen_range(1..=4) {
            let host = DomainName::parse(&format!("ns{h}.{domain}")).unwrap();
            let mut ips = BTreeSet::new();
            for _ in 0..rng.gen_range(0..=3) {
                let ip = if rng.gen_bool(0.7) {
                    IpAddr::V4(Ipv4Addr::new(198, 18, rng.gen(), rng.gen()))
                } else {
                    IpAddr::V6(Ipv6Addr::new(0x2001, 0xdb8, 0, 0, 0, 0, rng.gen(), rng.gen()))
                };
                if !ips.insert(ip) || attributions.contains_key(&ip) || unmapped_ips.contains(&ip) {
                    continue;
                }
                if rng.gen_bool(0.1) {
                    unmapped_ips.insert(ip);
                } else {
                    attributions.insert(ip, attribution(rng, ip));
                }
            }
            ns_hosts.insert(host, ips);
        }
    }
    ResolutionFlow {
        domain,
        error_detail: (status != ResolutionStatus::Ok).then(|| "random".to_string()),
        status,
        ns_hosts,
        attributions,
        unmapped_ips,
    }
}

pub fn flows<R: Rng>(rng: &mut R, max_domains: usize) -> Vec<ResolutionFlow> {
    let n = rng.gen_range(0..=max_domains);
    (0..n)
        .map(|i| {
            let suffix = SUFFIXES.choose(rng).unwrap();
            flow(rng, DomainName::parse(&format!("d{i}{suffix}")).unwrap())
        })
        .collect()
}

pub fn snapshot(id: &str, run_date: NaiveDate, flows: Vec<ResolutionFlow>) -> MeasurementSnapshot {
    let mut counters = Counters::default();
    flows.iter().for_each(|f| counters.record(f));
    MeasurementSnapshot {
        snapshot_id: id.into(),
        meta: SnapshotMeta {
            run_date,
            tranco_label: "tranco@rand".into(),
            prefix2as_v4_label: "v4@rand".into(),
            prefix2as_v6_label: "v6@rand".into(),
            as2org_label: "as2org@rand".into(),
        },
        counters,
        flows,
    }
}
