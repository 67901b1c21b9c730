use std::collections::BTreeSet;

use chrono::NaiveDate;
use serde::Serialize;

use super::{domain_providers, rank_providers, AnalyticsError, AttributionPolicy};
use crate::flowmap::MeasurementSnapshot;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopSetSource {
    /// Recompute the top K within each snapshot.
    PerSnapshotTopK(usize),
    /// One provider-id set for the whole series.
    FixedSet(BTreeSet<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationPoint {
    pub date: NaiveDate,
    pub snapshot_id: String,
    pub top_set: Vec<String>,
    pub concentrated_domains: u64,
    pub resolved_domains: u64,
    pub fraction: f64,
    /// The top set covers every provider in the snapshot.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationSeries {
    pub points: Vec<ConcentrationPoint>,
    pub mean: f64,
    pub max: f64,
    pub max_date: NaiveDate,
}

/// Per snapshot, the fraction of resolved domains relying (any NS) on a
/// provider in the top set.
pub fn concentration(
    snapshots: &[&MeasurementSnapshot],
    source: &TopSetSource,
) -> Result<ConcentrationSeries, AnalyticsError> {
    if snapshots.is_empty() {
        return Err(AnalyticsError::NoSnapshots);
    }
    if source == &TopSetSource::PerSnapshotTopK(0) {
        return Err(AnalyticsError::ZeroK);
    }
    let mut points = Vec::with_capacity(snapshots.len());
    for snapshot in snapshots {
        let per_domain: Vec<BTreeSet<String>> = snapshot
            .flows
            .iter()
            .filter(|f| f.is_ok())
            .map(|f| domain_providers(f, AttributionPolicy::AnyNs))
            .collect();
        let resolved = per_domain.len() as u64;
        if resolved == 0 {
            return Err(AnalyticsError::NoResolvedDomains(snapshot.snapshot_id.clone()));
        }
        let all: BTreeSet<&String> = per_domain.iter().flatten().collect();
        let top: BTreeSet<String> = match source {
            TopSetSource::PerSnapshotTopK(k) => rank_providers(snapshot, *k, AttributionPolicy::AnyNs)?
                .entries
                .into_iter()
                .map(|e| e.provider_id)
                .collect(),
            TopSetSource::FixedSet(set) => set.clone(),
        };
        let degenerate = all.iter().all(|p| top.contains(*p));
        let concentrated = per_domain.iter().filter(|ps| ps.iter().any(|p| top.contains(p))).count() as u64;
        points.push(ConcentrationPoint {
            date: snapshot.meta.run_date,
            snapshot_id: snapshot.snapshot_id.clone(),
            top_set: top.into_iter().collect(),
            concentrated_domains: concentrated,
            resolved_domains: resolved,
            fraction: concentrated as f64 / resolved as f64,
            degenerate,
        });
    }
    let mean = points.iter().map(|p| p.fraction).sum::<f64>() / points.len() as f64;
    let peak = points.iter().fold(&points[0], |best, p| if p.fraction > best.fraction { p } else { best });
    Ok(ConcentrationSeries { mean, max: peak.fraction, max_date: peak.date, points })
}
