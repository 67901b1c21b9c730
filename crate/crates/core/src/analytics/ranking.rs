use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;

use super::{domain_providers, provider_labels, AnalyticsError, AttributionPolicy, ProviderLabel};
use crate::domain::{CountryCode, DomainName};
use crate::flowmap::{MeasurementSnapshot, ResolutionFlow};
use crate::resolver::ResolutionStatus;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankingEntry {
    pub position: usize,
    pub provider_id: String,
    pub as_name: String,
    pub org_name: String,
    pub domain_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderRanking {
    /// Snapshot id, or the period name for a multi-snapshot ranking.
    pub label: String,
    pub snapshot_ids: Vec<String>,
    pub k: usize,
    pub policy: AttributionPolicy,
    pub entries: Vec<RankingEntry>,
}

/// Domains counted per provider.
pub fn provider_counts<'a, I>(flows: I, policy: AttributionPolicy) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = &'a ResolutionFlow>,
{
    let mut counts = BTreeMap::new();
    for flow in flows {
        for provider in domain_providers(flow, policy) {
            *counts.entry(provider).or_default() += 1;
        }
    }
    counts
}

fn build(
    label: String,
    snapshot_ids: Vec<String>,
    counts: BTreeMap<String, u64>,
    labels: &HashMap<String, ProviderLabel>,
    k: usize,
    policy: AttributionPolicy,
) -> ProviderRanking {
    let mut rows: Vec<(String, ProviderLabel, u64)> = counts
        .into_iter()
        .map(|(id, n)| {
            let label =
                labels.get(&id).cloned().unwrap_or_else(|| ProviderLabel { as_name: id.clone(), org_name: id.clone() });
            (id, label, n)
        })
        .collect();
    rows.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.1.as_name.cmp(&b.1.as_name)).then_with(|| a.0.cmp(&b.0)));
    let entries = rows
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(i, (provider_id, label, domain_count))| RankingEntry {
            position: i + 1,
            provider_id,
            as_name: label.as_name,
            org_name: label.org_name,
            domain_count,
        })
        .collect();
    ProviderRanking { label, snapshot_ids, k, policy, entries }
}

/// Top-`k` providers by number of resolved domains relying on them. Ties go
/// to the alphabetically smaller AS name.
pub fn rank_providers(
    snapshot: &MeasurementSnapshot,
    k: usize,
    policy: AttributionPolicy,
) -> Result<ProviderRanking, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::ZeroK);
    }
    let counts = provider_counts(&snapshot.flows, policy);
    let labels = provider_labels(&snapshot.flows);
    Ok(build(snapshot.snapshot_id.clone(), vec![snapshot.snapshot_id.clone()], counts, &labels, k, policy))
}

/// Ranking over a period: per-provider counts summed across its snapshots.
pub fn rank_period(
    snapshots: &[&MeasurementSnapshot],
    label: &str,
    k: usize,
    policy: AttributionPolicy,
) -> Result<ProviderRanking, AnalyticsError> {
    if k == 0 {
        return Err(AnalyticsError::ZeroK);
    }
    if snapshots.is_empty() {
        return Err(AnalyticsError::NoSnapshots);
    }
    let all_flows = || snapshots.iter().flat_map(|s| s.flows.iter());
    let counts = provider_counts(all_flows(), policy);
    let labels = provider_labels(all_flows());
    let ids = snapshots.iter().map(|s| s.snapshot_id.clone()).collect();
    Ok(build(label.to_string(), ids, counts, &labels, k, policy))
}

/// A provider whose position differs between two rankings. `None` means
/// outside the top K.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct RankingChange {
    pub as_name: String,
    pub provider_id: String,
    pub old_position: Option<usize>,
    pub new_position: Option<usize>,
}

pub fn diff_rankings(old: &ProviderRanking, new: &ProviderRanking) -> Result<Vec<RankingChange>, AnalyticsError> {
    if old.k != new.k {
        return Err(AnalyticsError::Mismatch(format!("K differs ({} vs {})", old.k, new.k)));
    }
    if old.policy != new.policy {
        return Err(AnalyticsError::Mismatch(format!("policy differs ({} vs {})", old.policy, new.policy)));
    }
    let mut by_id: BTreeMap<&str, (String, Option<usize>, Option<usize>)> = BTreeMap::new();
    for e in &old.entries {
        by_id.insert(&e.provider_id, (e.as_name.clone(), Some(e.position), None));
    }
    for e in &new.entries {
        let slot = by_id.entry(&e.provider_id).or_insert((e.as_name.clone(), None, None));
        slot.0 = e.as_name.clone();
        slot.2 = Some(e.position);
    }
    let mut changes: Vec<RankingChange> = by_id
        .into_iter()
        .filter(|(_, (_, o, n))| o != n)
        .map(|(id, (as_name, old_position, new_position))| RankingChange {
            as_name,
            provider_id: id.to_string(),
            old_position,
            new_position,
        })
        .collect();
    changes.sort_by_key(|c| (c.old_position.unwrap_or(usize::MAX), c.new_position.unwrap_or(usize::MAX)));
    Ok(changes)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelfHostingRow {
    pub domain: DomainName,
    /// False when the domain is missing from the snapshot or did not resolve.
    pub resolved: bool,
    pub status: Option<ResolutionStatus>,
    pub as_names: BTreeSet<String>,
    pub countries: BTreeSet<CountryCode>,
}

/// Which AS names and countries host each provider's own domain.
pub fn self_hosting(snapshot: &MeasurementSnapshot, domains: &[DomainName]) -> Vec<SelfHostingRow> {
    let index: HashMap<&DomainName, &ResolutionFlow> = snapshot.flows.iter().map(|f| (&f.domain, f)).collect();
    domains
        .iter()
        .map(|d| match index.get(d) {
            Some(flow) => SelfHostingRow {
                domain: d.clone(),
                resolved: flow.is_ok(),
                status: Some(flow.status),
                as_names: flow.attributions.values().map(|a| a.display_name()).collect(),
                countries: flow.attributions.values().map(|a| a.country.unwrap_or(CountryCode::UNKNOWN)).collect(),
            },
            None => SelfHostingRow {
                domain: d.clone(),
                resolved: false,
                status: None,
                as_names: BTreeSet::new(),
                countries: BTreeSet::new(),
            },
        })
        .collect()
}
