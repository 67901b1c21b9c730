//! Longest-prefix-match attribution of IP addresses to origin ASes.
//!
//! [`LpmIndex`] holds one trie per address family. It is built once per
//! dataset version and never mutated afterwards, so a shared reference can
//! serve any number of reader threads.

mod cache;
mod trie;

use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use crate::domain::{Asn, CountryCode};
use crate::ingest::{AddressFamily, OrgMap, PrefixOrigin};
use trie::BitTrie;

pub use cache::{read_index_cache, write_index_cache, CacheError};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub v4_entries: usize,
    pub v6_entries: usize,
    /// Input rows that repeated an already indexed prefix.
    pub collapsed: usize,
}

#[derive(Debug, Clone, Default)]
pub struct LpmIndex {
    v4: BitTrie<u32>,
    v6: BitTrie<u128>,
    routes: Vec<PrefixOrigin>,
    label: String,
    stats: BuildStats,
}

impl LpmIndex {
    /// Builds an index from normalized prefixes. A prefix listed more than
    /// once keeps its last row.
    pub fn build<I>(prefixes: I, label: impl Into<String>) -> LpmIndex
    where
        I: IntoIterator<Item = PrefixOrigin>,
    {
        let mut index = LpmIndex { label: label.into(), ..LpmIndex::default() };
        for record in prefixes {
            index.insert(record);
        }
        index.stats.v4_entries = index.v4.len();
        index.stats.v6_entries = index.v6.len();
        index
    }

    fn insert(&mut self, mut record: PrefixOrigin) {
        record.prefix = record.prefix.trunc();
        let next = self.routes.len() as u32;
        let (slot, fresh) = match record.prefix {
            IpNet::V4(net) => self.v4.get_or_insert(u32::from(net.network()), net.prefix_len(), next),
            IpNet::V6(net) => self.v6.get_or_insert(u128::from(net.network()), net.prefix_len(), next),
        };
        if fresh {
            self.routes.push(record);
        } else {
            self.routes[slot as usize] = record;
            self.stats.collapsed += 1;
        }
    }

    /// The longest indexed prefix covering `ip`, if any.
    pub fn longest_match(&self, ip: IpAddr) -> Option<&PrefixOrigin> {
        let slot = match ip {
            IpAddr::V4(a) => self.v4.longest_match(u32::from(a)),
            IpAddr::V6(a) => self.v6.longest_match(u128::from(a)),
        }?;
        Some(&self.routes[slot as usize])
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn stats(&self) -> &BuildStats {
        &self.stats
    }

    pub fn entry_count(&self, family: AddressFamily) -> usize {
        match family {
            AddressFamily::V4 => self.stats.v4_entries,
            AddressFamily::V6 => self.stats.v6_entries,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    /// Indexed rows in first-insertion order.
    pub fn routes(&self) -> &[PrefixOrigin] {
        &self.routes
    }
}

/// Result of attributing one address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribution {
    pub ip: IpAddr,
    pub matched_prefix: Option<IpNet>,
    pub asn: Option<Asn>,
    pub as_name: Option<String>,
    pub org_id: Option<String>,
    pub org_name: Option<String>,
    pub country: Option<CountryCode>,
}

impl Attribution {
    fn miss(ip: IpAddr) -> Self {
        Attribution { ip, matched_prefix: None, asn: None, as_name: None, org_id: None, org_name: None, country: None }
    }
}

/// Maps `ip` to the first-listed origin of its longest covering prefix and
/// joins that AS to its organization record.
pub fn lookup(index: &LpmIndex, ip: IpAddr, orgs: &OrgMap) -> Attribution {
    let Some(route) = index.longest_match(ip) else {
        return Attribution::miss(ip);
    };
    let asn = route.primary_origin();
    let org = orgs.get(&asn);
    Attribution {
        ip,
        matched_prefix: Some(route.prefix),
        asn: Some(asn),
        as_name: org.map(|o| o.as_name.clone()),
        org_id: org.map(|o| o.org_id.clone()),
        org_name: org.map(|o| o.org_name.clone()),
        country: org.map(|o| o.country),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AsOrg, MoasKind};

    fn net(s: &str) -> IpNet {
        s.parse().unwrap()
    }

    fn wikimedia_orgs() -> OrgMap {
        OrgMap::from([(
            Asn(14907),
            AsOrg {
                asn: Asn(14907),
                as_name: "WIKIMEDIA".into(),
                org_id: "WF-ARIN".into(),
                org_name: "Wikimedia Foundation Inc.".into(),
                country: CountryCode::normalize("US"),
            },
        )])
    }

    #[test]
    fn empty_index_misses() {
        let index = LpmIndex::build(Vec::new(), "empty");
        let a = lookup(&index, "1.2.3.4".parse().unwrap(), &OrgMap::new());
        assert_eq!(a, Attribution::miss("1.2.3.4".parse().unwrap()));
        assert!(index.is_empty());
    }

    #[test]
    fn wikipedia_a_record() {
        let index = LpmIndex::build(vec![PrefixOrigin::single(net("208.80.152.0/22"), Asn(14907))], "fixture");
        assert_eq!(index.entry_count(AddressFamily::V4), 1);
        assert_eq!(index.entry_count(AddressFamily::V6), 0);
        let a = lookup(&index, "208.80.154.224".parse().unwrap(), &wikimedia_orgs());
        assert_eq!(a.matched_prefix, Some(net("208.80.152.0/22")));
        assert_eq!(a.asn, Some(Asn(14907)));
        assert_eq!(a.org_name.as_deref(), Some("Wikimedia Foundation Inc."));
        assert_eq!(a.country.map(|c| c.to_string()).as_deref(), Some("US"));
    }

    #[test]
    fn asn_without_org_keeps_asn() {
        let index = LpmIndex::build(vec![PrefixOrigin::single(net("10.0.0.0/8"), Asn(64512))], "x");
        let a = lookup(&index, "10.1.1.1".parse().unwrap(), &wikimedia_orgs());
        assert_eq!(a.asn, Some(Asn(64512)));
        assert!(a.as_name.is_none() && a.org_name.is_none() && a.country.is_none());
    }

    #[test]
    fn families_are_separate() {
        let index = LpmIndex::build(
            vec![
                PrefixOrigin::single(net("0.0.0.0/0"), Asn(1)),
                PrefixOrigin::single(net("2620:0:860::/46"), Asn(14907)),
            ],
            "x",
        );
        let v6 = lookup(&index, "2620:0:861:ed1a::1".parse().unwrap(), &OrgMap::new());
        assert_eq!(v6.asn, Some(Asn(14907)));
        let other_v6 = lookup(&index, "2001:db8::1".parse().unwrap(), &OrgMap::new());
        assert_eq!(other_v6.asn, None);
        let v4 = lookup(&index, "8.8.8.8".parse().unwrap(), &OrgMap::new());
        assert_eq!(v4.matched_prefix, Some(net("0.0.0.0/0")));
    }

    #[test]
    fn duplicates_collapse_last_wins() {
        let index = LpmIndex::build(
            vec![
                PrefixOrigin::single(net("10.0.0.0/8"), Asn(1)),
                PrefixOrigin::single(net("11.0.0.0/8"), Asn(3)),
                PrefixOrigin::single(net("10.0.0.0/8"), Asn(2)),
            ],
            "x",
        );
        assert_eq!(index.stats().collapsed, 1);
        assert_eq!(index.entry_count(AddressFamily::V4), 2);
        assert_eq!(index.routes().len(), 2);
        assert_eq!(lookup(&index, "10.0.0.1".parse().unwrap(), &OrgMap::new()).asn, Some(Asn(2)));
        assert_eq!(lookup(&index, "11.0.0.1".parse().unwrap(), &OrgMap::new()).asn, Some(Asn(3)));
    }

    #[test]
    fn moas_attributes_first_origin() {
        let record = PrefixOrigin::new(net("10.0.0.0/8"), vec![Asn(64513), Asn(64512)], MoasKind::MultiOrigin);
        let index = LpmIndex::build(vec![record.clone()], "x");
        let a = lookup(&index, "10.9.9.9".parse().unwrap(), &OrgMap::new());
        assert_eq!(a.asn, Some(Asn(64513)));
        assert_eq!(index.longest_match("10.9.9.9".parse().unwrap()), Some(&record));
    }
}
