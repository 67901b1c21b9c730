//! Centralization and sovereignty analytics over persisted snapshots.
//!
//! A provider is an organization (its org id, or the origin AS when the AS is
//! missing from the organization dataset). Only domains whose resolution
//! status is `ok` take part in any count.

mod concentration;
mod ranking;
mod sovereignty;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flowmap::ResolutionFlow;

pub use concentration::{concentration, ConcentrationPoint, ConcentrationSeries, TopSetSource};
pub use ranking::{
    diff_rankings, provider_counts, rank_period, rank_providers, self_hosting, ProviderRanking, RankingChange,
    RankingEntry, SelfHostingRow,
};
pub use sovereignty::{
    governmental, sovereignty, sovereignty_aggregate, CountingMode, GovernmentalBreakdown, ShareRow,
    SovereigntyBreakdown, DEFAULT_OTHERS_THRESHOLD,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("K must be at least 1")]
    ZeroK,
    #[error("rankings are not comparable: {0}")]
    Mismatch(String),
    #[error("no domains match {0}")]
    EmptyScope(String),
    #[error("no snapshots selected")]
    NoSnapshots,
    #[error("snapshot {0} has no resolved domains")]
    NoResolvedDomains(String),
    #[error("threshold {0} is outside [0, 1)")]
    InvalidThreshold(f64),
}

/// How a domain served by several organizations counts toward each.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributionPolicy {
    /// Once for every distinct organization among its NS addresses.
    #[default]
    #[serde(alias = "any")]
    AnyNs,
    /// Only when every attributed NS address belongs to one organization.
    #[serde(alias = "all")]
    AllNs,
    /// For the organization holding a strict majority of attributed NS addresses.
    #[serde(alias = "majority")]
    MajorityNs,
}

impl AttributionPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            AttributionPolicy::AnyNs => "any_ns",
            AttributionPolicy::AllNs => "all_ns",
            AttributionPolicy::MajorityNs => "majority_ns",
        }
    }
}

impl fmt::Display for AttributionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AttributionPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" | "any_ns" => Ok(AttributionPolicy::AnyNs),
            "all" | "all_ns" => Ok(AttributionPolicy::AllNs),
            "majority" | "majority_ns" => Ok(AttributionPolicy::MajorityNs),
            other => Err(format!("unknown attribution policy {other:?} (any, all, majority)")),
        }
    }
}

/// Providers a domain counts toward under `policy`. Empty for unresolved
/// domains and domains without attributed addresses.
pub fn domain_providers(flow: &ResolutionFlow, policy: AttributionPolicy) -> BTreeSet<String> {
    if !flow.is_ok() {
        return BTreeSet::new();
    }
    let mut per_provider: BTreeMap<String, usize> = BTreeMap::new();
    for a in flow.attributions.values() {
        *per_provider.entry(a.provider_id()).or_default() += 1;
    }
    let attributed = flow.attributions.len();
    match policy {
        AttributionPolicy::AnyNs => per_provider.into_keys().collect(),
        AttributionPolicy::AllNs if per_provider.len() == 1 => per_provider.into_keys().collect(),
        AttributionPolicy::AllNs => BTreeSet::new(),
        AttributionPolicy::MajorityNs => {
            per_provider.into_iter().filter(|(_, n)| 2 * n > attributed).map(|(p, _)| p).collect()
        }
    }
}

/// Display names of a provider.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ProviderLabel {
    pub as_name: String,
    pub org_name: String,
}

/// Picks, per provider, the AS name and organization name seen on the most
/// attributed addresses of resolved domains (ties to the smaller string).
pub fn provider_labels<'a, I>(flows: I) -> HashMap<String, ProviderLabel>
where
    I: IntoIterator<Item = &'a ResolutionFlow>,
{
    let mut as_names: HashMap<String, BTreeMap<String, usize>> = HashMap::new();
    let mut org_names: HashMap<String, BTreeMap<String, usize>> = HashMap::new();
    for flow in flows.into_iter().filter(|f| f.is_ok()) {
        for a in flow.attributions.values() {
            let id = a.provider_id();
            *as_names.entry(id.clone()).or_default().entry(a.display_name()).or_default() += 1;
            let org = a.org_name.clone().unwrap_or_else(|| a.display_name());
            *org_names.entry(id).or_default().entry(org).or_default() += 1;
        }
    }
    let most_common = |m: &BTreeMap<String, usize>| {
        m.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))).map(|(k, _)| k.clone()).unwrap_or_default()
    };
    as_names
        .into_iter()
        .map(|(id, names)| {
            let label = ProviderLabel {
                as_name: most_common(&names),
                org_name: org_names.get(&id).map(most_common).unwrap_or_default(),
            };
            (id, label)
        })
        .collect()
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn policies_on_a_split_domain() {
        let f = flow("x.com", &[("A", "US"), ("A", "US"), ("B", "DE")]);
        let any = domain_providers(&f, AttributionPolicy::AnyNs);
        assert_eq!(any, BTreeSet::from(["A".to_string(), "B".to_string()]));
        assert_eq!(domain_providers(&f, AttributionPolicy::MajorityNs), BTreeSet::from(["A".to_string()]));
        assert!(domain_providers(&f, AttributionPolicy::AllNs).is_empty());

        let even = flow("y.com", &[("A", "US"), ("B", "DE")]);
        assert!(domain_providers(&even, AttributionPolicy::MajorityNs).is_empty());
        assert!(domain_providers(&failed("z.com"), AttributionPolicy::AnyNs).is_empty());
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("majority".parse(), Ok(AttributionPolicy::MajorityNs));
        assert_eq!("all_ns".parse(), Ok(AttributionPolicy::AllNs));
        assert!("most".parse::<AttributionPolicy>().is_err());
    }

    #[test]
    fn labels_prefer_the_common_name() {
        let mut f = flow("x.com", &[("A", "US"), ("A", "US"), ("A", "US")]);
        let mut names = ["AS-ONE", "AS-TWO", "AS-TWO"].into_iter();
        for a in f.attributions.values_mut() {
            a.as_name = Some(names.next().unwrap().into());
        }
        let labels = provider_labels([&f]);
        assert_eq!(labels["A"].as_name, "AS-TWO");
    }
}
