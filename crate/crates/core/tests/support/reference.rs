//! Naive reference analytics: plain loops over flows, no shared helpers
//! with the library beyond the data types.

use std::collections::{BTreeMap, BTreeSet};

use nsflow_core::analytics::AttributionPolicy;
use nsflow_core::flowmap::{IpAttribution, ResolutionFlow};
use nsflow_core::resolver::ResolutionStatus;

pub fn provider_of(a: &IpAttribution) -> String {
    match &a.org_id {
        Some(o) => o.clone(),
        None => format!("AS{}", a.asn.0),
    }
}

fn as_label(a: &IpAttribution) -> String {
    match &a.as_name {
        Some(n) => n.clone(),
        None => format!("AS{}", a.asn.0),
    }
}

fn org_label(a: &IpAttribution) -> String {
    match &a.org_name {
        Some(n) => n.clone(),
        None => as_label(a),
    }
}

fn ok(f: &ResolutionFlow) -> bool {
    f.status == ResolutionStatus::Ok
}

/// Providers of one domain under `policy`.
pub fn providers(f: &ResolutionFlow, policy: AttributionPolicy) -> Vec<String> {
    if !ok(f) {
        return Vec::new();
    }
    let owners: Vec<String> = f.attributions.values().map(provider_of).collect();
    let mut distinct: Vec<String> = Vec::new();
    for o in &owners {
        if !distinct.contains(o) {
            distinct.push(o.clone());
        }
    }
    match policy {
        AttributionPolicy::AnyNs => distinct,
        AttributionPolicy::AllNs => {
            if distinct.len() == 1 {
                distinct
            } else {
                Vec::new()
            }
        }
        AttributionPolicy::MajorityNs => {
            let mut winners = Vec::new();
            for d in &distinct {
                let mut held = 0;
                for o in &owners {
                    if o == d {
                        held += 1;
                    }
                }
                if held * 2 > owners.len() {
                    winners.push(d.clone());
                }
            }
            winners
        }
    }
}

pub fn counts(flows: &[ResolutionFlow], policy: AttributionPolicy) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for f in flows {
        for p in providers(f, policy) {
            *out.entry(p).or_insert(0) += 1;
        }
    }
    out
}

fn most_frequent(tally: &BTreeMap<String, u64>) -> String {
    let mut best: Option<(&String, u64)> = None;
    for (name, n) in tally {
        // BTreeMap order visits smaller names first, so only a strictly larger count replaces
        if best.is_none_or(|(_, b)| *n > b) {
            best = Some((name, *n));
        }
    }
    best.map(|(s, _)| s.clone()).unwrap_or_default()
}

/// Provider → (AS name, org name), each the most frequent over resolved flows.
pub fn labels(flows: &[ResolutionFlow]) -> BTreeMap<String, (String, String)> {
    let mut as_tally: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    let mut org_tally: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for f in flows.iter().filter(|f| ok(f)) {
        for a in f.attributions.values() {
            *as_tally.entry(provider_of(a)).or_default().entry(as_label(a)).or_insert(0) += 1;
            *org_tally.entry(provider_of(a)).or_default().entry(org_label(a)).or_insert(0) += 1;
        }
    }
    as_tally.iter().map(|(p, t)| (p.clone(), (most_frequent(t), most_frequent(&org_tally[p])))).collect()
}

/// `(position, provider, as_name, count)` by selection over the counts.
pub fn ranking(flows: &[ResolutionFlow], k: usize, policy: AttributionPolicy) -> Vec<(usize, String, String, u64)> {
    let names = labels(flows);
    let mut left: Vec<(String, String, u64)> = counts(flows, policy)
        .into_iter()
        .map(|(p, n)| {
            let name = names.get(&p).map(|l| l.0.clone()).unwrap_or_else(|| p.clone());
            (p, name, n)
        })
        .collect();
    let mut out = Vec::new();
    while out.len() < k && !left.is_empty() {
        let mut best = 0;
        for i in 1..left.len() {
            let (a, b) = (&left[i], &left[best]);
            let better = a.2 > b.2 || (a.2 == b.2 && (a.1 < b.1 || (a.1 == b.1 && a.0 < b.0)));
            if better {
                best = i;
            }
        }
        let (p, name, n) = left.remove(best);
        out.push((out.len() + 1, p, name, n));
    }
    out
}

/// `(concentrated, resolved)` for one snapshot against a provider set.
pub fn concentration(flows: &[ResolutionFlow], top: &BTreeSet<String>) -> (u64, u64) {
    let mut concentrated = 0;
    let mut resolved = 0;
    for f in flows.iter().filter(|f| ok(f)) {
        resolved += 1;
        if providers(f, AttributionPolicy::AnyNs).iter().any(|p| top.contains(p)) {
            concentrated += 1;
        }
    }
    (concentrated, resolved)
}

fn matches(domain: &str, suffix: &str) -> bool {
    let tail = format!(".{}", suffix.trim_start_matches('.'));
    domain.ends_with(&tail)
}

fn country_set(f: &ResolutionFlow) -> BTreeSet<String> {
    f.attributions.values().map(|a| a.country.map_or("??".to_string(), |c| c.to_string())).collect()
}

/// Listed shares, others share, and resolved-in-scope count; `None` for an
/// empty scope.
pub fn sovereignty(
    flows: &[ResolutionFlow],
    suffixes: &[String],
    threshold: f64,
    any_country: bool,
) -> Option<(BTreeMap<String, f64>, f64, u64)> {
    let mut weight: BTreeMap<String, f64> = BTreeMap::new();
    let mut resolved = 0;
    for f in flows {
        if !ok(f) || !suffixes.iter().any(|s| matches(f.domain.as_str(), s)) {
            continue;
        }
        resolved += 1;
        let cs = country_set(f);
        for c in &cs {
            let unit = if any_country { 1.0 } else { 1.0 / cs.len() as f64 };
            *weight.entry(c.clone()).or_insert(0.0) += unit;
        }
    }
    if weight.is_empty() {
        return None;
    }
    let total: f64 = weight.values().sum();
    let mut listed = BTreeMap::new();
    let mut others = 0.0;
    for (c, w) in weight {
        if w / total >= threshold {
            listed.insert(c, w / total);
        } else {
            others += w / total;
        }
    }
    Some((listed, others, resolved))
}

/// `(present, domains, org weights, country weights)` for one suffix.
pub fn governmental(
    flows: &[ResolutionFlow],
    suffix: &str,
) -> (bool, u64, BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let names = labels(flows);
    let mut domains = 0;
    let mut orgs = BTreeMap::new();
    let mut countries = BTreeMap::new();
    for f in flows.iter().filter(|f| matches(f.domain.as_str(), suffix)) {
        domains += 1;
        if !ok(f) {
            continue;
        }
        let os: BTreeSet<String> = f.attributions.values().map(|a| names[&provider_of(a)].1.clone()).collect();
        for o in &os {
            *orgs.entry(o.clone()).or_insert(0.0) += 1.0 / os.len() as f64;
        }
        let cs = country_set(f);
        for c in &cs {
            *countries.entry(c.clone()).or_insert(0.0) += 1.0 / cs.len() as f64;
        }
    }
    (domains > 0, domains, orgs, countries)
}

/// `(resolved, as names, countries)` of one domain.
pub fn self_hosting(flows: &[ResolutionFlow], domain: &str) -> (bool, BTreeSet<String>, BTreeSet<String>) {
    for f in flows {
        if f.domain.as_str() == domain {
            return (ok(f), f.attributions.values().map(as_label).collect(), country_set(f));
        }
    }
    (false, BTreeSet::new(), BTreeSet::new())
}
