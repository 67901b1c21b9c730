use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{provider_labels, AnalyticsError};
use crate::domain::CountryCode;
use crate::flowmap::{MeasurementSnapshot, ResolutionFlow};

pub const DEFAULT_OTHERS_THRESHOLD: f64 = 0.04;

/// How a domain hosted in several countries is split between them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// `1/n` to each of its `n` countries.
    #[default]
    Fractional,
    /// One unit to each of its countries, normalized by the total units.
    AnyCountry,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShareRow {
    pub key: String,
    /// Domain weight; fractional under [`CountingMode::Fractional`].
    pub weight: f64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SovereigntyBreakdown {
    pub scope: String,
    pub suffixes: Vec<String>,
    pub mode: CountingMode,
    pub threshold: f64,
    /// Resolved domains in scope.
    pub resolved_domains: u64,
    /// Resolved domains left out because no NS address was attributed.
    pub unattributed_domains: u64,
    /// Countries at or above the threshold, largest share first.
    pub shares: Vec<ShareRow>,
    pub others: f64,
    /// Countries folded into `others`.
    pub others_members: Vec<ShareRow>,
}

impl SovereigntyBreakdown {
    pub fn share(&self, country: &str) -> Option<f64> {
        self.shares.iter().find(|r| r.key == country).map(|r| r.share)
    }

    /// Share before folding, whether listed or in others.
    pub fn raw_share(&self, country: &str) -> f64 {
        self.shares.iter().chain(&self.others_members).find(|r| r.key == country).map_or(0.0, |r| r.share)
    }
}

/// Accumulates `1/n` or unit weights as exact per-`n` counts so the result
/// does not depend on the order domains are visited.
#[derive(Default)]
struct Tally(BTreeMap<String, BTreeMap<usize, u64>>);

impl Tally {
    fn add(&mut self, key: String, split: usize) {
        *self.0.entry(key).or_default().entry(split).or_default() += 1;
    }

    fn weights(self) -> BTreeMap<String, f64> {
        self.0.into_iter().map(|(k, parts)| (k, parts.into_iter().map(|(n, c)| c as f64 / n as f64).sum())).collect()
    }
}

fn countries(flow: &ResolutionFlow) -> BTreeSet<CountryCode> {
    flow.attributions.values().map(|a| a.country.unwrap_or(CountryCode::UNKNOWN)).collect()
}

fn in_scope(flow: &ResolutionFlow, suffixes: &[String]) -> bool {
    suffixes.iter().any(|s| flow.domain.has_suffix(s))
}

fn sorted_rows(weights: BTreeMap<String, f64>, total: f64) -> Vec<ShareRow> {
    let mut rows: Vec<ShareRow> =
        weights.into_iter().map(|(key, weight)| ShareRow { share: weight / total, key, weight }).collect();
    rows.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.key.cmp(&b.key)));
    rows
}

fn breakdown(
    snapshot: &MeasurementSnapshot,
    scope: &str,
    suffixes: &[String],
    threshold: f64,
    mode: CountingMode,
) -> Result<SovereigntyBreakdown, AnalyticsError> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(AnalyticsError::InvalidThreshold(threshold));
    }
    let mut tally = Tally::default();
    let mut resolved = 0u64;
    let mut unattributed = 0u64;
    for flow in snapshot.flows.iter().filter(|f| f.is_ok() && in_scope(f, suffixes)) {
        resolved += 1;
        let cs = countries(flow);
        if cs.is_empty() {
            unattributed += 1;
            continue;
        }
        let split = match mode {
            CountingMode::Fractional => cs.len(),
            CountingMode::AnyCountry => 1,
        };
        for c in cs {
            tally.add(c.to_string(), split);
        }
    }
    let weights = tally.weights();
    if weights.is_empty() {
        return Err(AnalyticsError::EmptyScope(scope.to_string()));
    }
    let total: f64 = weights.values().sum();
    let (shares, others_members): (Vec<_>, Vec<_>) =
        sorted_rows(weights, total).into_iter().partition(|r| r.share >= threshold);
    // summing weights keeps shares + others = 1 up to one rounding per row
    let others = others_members.iter().map(|r| r.weight).sum::<f64>() / total;
    Ok(SovereigntyBreakdown {
        scope: scope.to_string(),
        suffixes: suffixes.to_vec(),
        mode,
        threshold,
        resolved_domains: resolved,
        unattributed_domains: unattributed,
        shares,
        others,
        others_members,
    })
}

/// Hosting-country shares of the resolved domains under one ccTLD suffix.
pub fn sovereignty(
    snapshot: &MeasurementSnapshot,
    cctld: &str,
    threshold: f64,
    mode: CountingMode,
) -> Result<SovereigntyBreakdown, AnalyticsError> {
    breakdown(snapshot, cctld, &[cctld.to_string()], threshold, mode)
}

/// As [`sovereignty`] over the union of several suffixes.
pub fn sovereignty_aggregate(
    snapshot: &MeasurementSnapshot,
    group: &str,
    cctlds: &[String],
    threshold: f64,
    mode: CountingMode,
) -> Result<SovereigntyBreakdown, AnalyticsError> {
    breakdown(snapshot, group, cctlds, threshold, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GovernmentalBreakdown {
    pub suffix: String,
    /// False when no domain in the snapshot carries the suffix.
    pub present: bool,
    pub domains: u64,
    pub resolved_domains: u64,
    /// Keyed by organization name; each domain splits `1/n` over its `n` organizations.
    pub organizations: Vec<ShareRow>,
    /// Keyed by country; each domain splits `1/n` over its `n` countries.
    pub countries: Vec<ShareRow>,
}

/// Hosting organizations and countries of governmental domains, per suffix.
pub fn governmental(snapshot: &MeasurementSnapshot, gov_suffixes: &[String]) -> Vec<GovernmentalBreakdown> {
    let labels = provider_labels(&snapshot.flows);
    gov_suffixes
        .iter()
        .map(|suffix| {
            let matching: Vec<&ResolutionFlow> =
                snapshot.flows.iter().filter(|f| f.domain.has_suffix(suffix)).collect();
            let mut orgs = Tally::default();
            let mut places = Tally::default();
            let mut resolved = 0;
            for flow in matching.iter().filter(|f| f.is_ok()) {
                resolved += 1;
                let providers: BTreeSet<String> = flow
                    .attributions
                    .values()
                    .map(|a| labels.get(&a.provider_id()).map_or_else(|| a.display_name(), |l| l.org_name.clone()))
                    .collect();
                for p in &providers {
                    orgs.add(p.clone(), providers.len());
                }
                let cs = countries(flow);
                for c in &cs {
                    places.add(c.to_string(), cs.len());
                }
            }
            let (orgs, places) = (orgs.weights(), places.weights());
            let org_total: f64 = orgs.values().sum();
            let place_total: f64 = places.values().sum();
            GovernmentalBreakdown {
                suffix: suffix.clone(),
                present: !matching.is_empty(),
                domains: matching.len() as u64,
                resolved_domains: resolved,
                organizations: sorted_rows(orgs, org_total),
                countries: sorted_rows(places, place_total),
            }
        })
        .collect()
}
