//! Report row types. Multi-valued cells are joined with `;`.

use serde::{Deserialize, Serialize};

use nsflow_core::analytics::{
    ConcentrationPoint, GovernmentalBreakdown, ProviderRanking, RankingChange, SelfHostingRow, SovereigntyBreakdown,
};
use nsflow_core::flowmap::SnapshotSummary;
use nsflow_core::ingest::DatasetDiff;

use crate::report::Row;

macro_rules! row {
    ($ty:ty, [$($col:literal),* $(,)?]) => {
        impl Row for $ty {
            const COLUMNS: &'static [&'static str] = &[$($col),*];
        }
    };
}

pub fn join<I, S>(items: I) -> String
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items.into_iter().map(|s| s.as_ref().to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankRow {
    pub label: String,
    pub position: usize,
    pub provider_id: String,
    pub as_name: String,
    pub org_name: String,
    pub domain_count: u64,
    pub k: usize,
    pub policy: String,
    pub snapshot_ids: String,
}
row!(
    RankRow,
    ["label", "position", "provider_id", "as_name", "org_name", "domain_count", "k", "policy", "snapshot_ids"]
);

impl RankRow {
    pub fn from_ranking(r: &ProviderRanking) -> Vec<RankRow> {
        r.entries
            .iter()
            .map(|e| RankRow {
                label: r.label.clone(),
                position: e.position,
                provider_id: e.provider_id.clone(),
                as_name: e.as_name.clone(),
                org_name: e.org_name.clone(),
                domain_count: e.domain_count,
                k: r.k,
                policy: r.policy.as_str().to_string(),
                snapshot_ids: join(&r.snapshot_ids),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HostingRow {
    pub snapshot_id: String,
    pub domain: String,
    pub resolved: bool,
    pub status: String,
    pub as_names: String,
    pub countries: String,
}
row!(HostingRow, ["snapshot_id", "domain", "resolved", "status", "as_names", "countries"]);

impl HostingRow {
    pub fn new(snapshot_id: &str, r: &SelfHostingRow) -> Self {
        HostingRow {
            snapshot_id: snapshot_id.to_string(),
            domain: r.domain.to_string(),
            resolved: r.resolved,
            status: r.status.map_or_else(|| "absent".to_string(), |s| s.as_str().to_string()),
            as_names: join(&r.as_names),
            countries: join(r.countries.iter().map(|c| c.as_str())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationRow {
    pub date: String,
    pub value: f64,
    pub snapshot_id: String,
    pub concentrated_domains: u64,
    pub resolved_domains: u64,
    pub degenerate: bool,
    pub top_set: String,
}
row!(
    ConcentrationRow,
    ["date", "value", "snapshot_id", "concentrated_domains", "resolved_domains", "degenerate", "top_set"]
);

impl From<&ConcentrationPoint> for ConcentrationRow {
    fn from(p: &ConcentrationPoint) -> Self {
        ConcentrationRow {
            date: p.date.to_string(),
            value: p.fraction,
            snapshot_id: p.snapshot_id.clone(),
            concentrated_domains: p.concentrated_domains,
            resolved_domains: p.resolved_domains,
            degenerate: p.degenerate,
            top_set: join(&p.top_set),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationSummaryRow {
    pub points: usize,
    pub mean: f64,
    pub max: f64,
    pub max_date: String,
    pub top_set_source: String,
}
row!(ConcentrationSummaryRow, ["points", "mean", "max", "max_date", "top_set_source"]);

/// One country of a sovereignty breakdown. `row` is `country` for a listed
/// country, `others` for the folded remainder and `folded` for a country
/// inside it; plotting uses the first two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SovereigntyRow {
    pub snapshot_id: String,
    pub scope: String,
    pub kind: String,
    pub row: String,
    pub country: String,
    pub weight: f64,
    pub share: f64,
}
row!(SovereigntyRow, ["snapshot_id", "scope", "kind", "row", "country", "weight", "share"]);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScopeRow {
    pub snapshot_id: String,
    pub scope: String,
    pub kind: String,
    pub suffixes: String,
    pub mode: String,
    pub threshold: f64,
    pub resolved_domains: u64,
    pub unattributed_domains: u64,
    pub listed: usize,
    pub others: f64,
}
row!(
    ScopeRow,
    [
        "snapshot_id",
        "scope",
        "kind",
        "suffixes",
        "mode",
        "threshold",
        "resolved_domains",
        "unattributed_domains",
        "listed",
        "others"
    ]
);

pub fn sovereignty_rows(snapshot_id: &str, kind: &str, b: &SovereigntyBreakdown) -> (ScopeRow, Vec<SovereigntyRow>) {
    let row = |label: &str, country: &str, weight: f64, share: f64| SovereigntyRow {
        snapshot_id: snapshot_id.to_string(),
        scope: b.scope.clone(),
        kind: kind.to_string(),
        row: label.to_string(),
        country: country.to_string(),
        weight,
        share,
    };
    let mut rows: Vec<SovereigntyRow> = b.shares.iter().map(|r| row("country", &r.key, r.weight, r.share)).collect();
    if !b.others_members.is_empty() {
        rows.push(row("others", "Others", b.others_members.iter().map(|r| r.weight).sum(), b.others));
        rows.extend(b.others_members.iter().map(|r| row("folded", &r.key, r.weight, r.share)));
    }
    let scope = ScopeRow {
        snapshot_id: snapshot_id.to_string(),
        scope: b.scope.clone(),
        kind: kind.to_string(),
        suffixes: join(&b.suffixes),
        mode: match b.mode {
            nsflow_core::analytics::CountingMode::Fractional => "fractional",
            nsflow_core::analytics::CountingMode::AnyCountry => "any_country",
        }
        .to_string(),
        threshold: b.threshold,
        resolved_domains: b.resolved_domains,
        unattributed_domains: b.unattributed_domains,
        listed: b.shares.len(),
        others: b.others,
    };
    (scope, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GovernmentalRow {
    pub snapshot_id: String,
    pub suffix: String,
    pub present: bool,
    pub domains: u64,
    pub resolved_domains: u64,
    pub dimension: String,
    pub key: String,
    pub weight: f64,
    pub share: f64,
}
row!(
    GovernmentalRow,
    ["snapshot_id", "suffix", "present", "domains", "resolved_domains", "dimension", "key", "weight", "share"]
);

/// Rows for one suffix; an absent or unresolved suffix yields a single row
/// with an empty key.
pub fn governmental_rows(snapshot_id: &str, g: &GovernmentalBreakdown) -> Vec<GovernmentalRow> {
    let row = |dimension: &str, key: &str, weight: f64, share: f64| GovernmentalRow {
        snapshot_id: snapshot_id.to_string(),
        suffix: g.suffix.clone(),
        present: g.present,
        domains: g.domains,
        resolved_domains: g.resolved_domains,
        dimension: dimension.to_string(),
        key: key.to_string(),
        weight,
        share,
    };
    let mut rows: Vec<GovernmentalRow> =
        g.organizations.iter().map(|r| row("organization", &r.key, r.weight, r.share)).collect();
    rows.extend(g.countries.iter().map(|r| row("country", &r.key, r.weight, r.share)));
    if rows.is_empty() {
        rows.push(row(if g.present { "unresolved" } else { "absent" }, "", 0.0, 0.0));
    }
    rows
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotRow {
    pub snapshot_id: String,
    pub run_date: String,
    pub tranco_label: String,
    pub prefix2as_v4_label: String,
    pub prefix2as_v6_label: String,
    pub as2org_label: String,
    pub input: u64,
    pub ok: u64,
    pub no_ns: u64,
    pub failed: u64,
    pub timed_out: u64,
    pub unmapped_ip: u64,
    pub data_errors: u64,
    pub created_at: String,
}
row!(
    SnapshotRow,
    [
        "snapshot_id",
        "run_date",
        "tranco_label",
        "prefix2as_v4_label",
        "prefix2as_v6_label",
        "as2org_label",
        "input",
        "ok",
        "no_ns",
        "failed",
        "timed_out",
        "unmapped_ip",
        "data_errors",
        "created_at"
    ]
);

impl From<&SnapshotSummary> for SnapshotRow {
    fn from(s: &SnapshotSummary) -> Self {
        let c = s.counters;
        SnapshotRow {
            snapshot_id: s.snapshot_id.clone(),
            run_date: s.meta.run_date.to_string(),
            tranco_label: s.meta.tranco_label.clone(),
            prefix2as_v4_label: s.meta.prefix2as_v4_label.clone(),
            prefix2as_v6_label: s.meta.prefix2as_v6_label.clone(),
            as2org_label: s.meta.as2org_label.clone(),
            input: c.input,
            ok: c.ok,
            no_ns: c.no_ns,
            failed: c.failed,
            timed_out: c.timed_out,
            unmapped_ip: c.unmapped_ip,
            data_errors: c.data_errors,
            created_at: s.created_at.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrancoDiffRow {
    pub change: String,
    pub domain: String,
    pub old_rank: Option<u32>,
    pub new_rank: Option<u32>,
}
row!(TrancoDiffRow, ["change", "domain", "old_rank", "new_rank"]);

impl TrancoDiffRow {
    /// Removed, then added, then moved; each part in domain order.
    pub fn from_diff(
        d: &DatasetDiff,
        old_ranks: impl Fn(&str) -> Option<u32>,
        new_ranks: impl Fn(&str) -> Option<u32>,
    ) -> Vec<Self> {
        let mut rows: Vec<Self> = d
            .removed
            .iter()
            .map(|x| TrancoDiffRow {
                change: "removed".into(),
                domain: x.to_string(),
                old_rank: old_ranks(x.as_str()),
                new_rank: None,
            })
            .collect();
        rows.extend(d.added.iter().map(|x| TrancoDiffRow {
            change: "added".into(),
            domain: x.to_string(),
            old_rank: None,
            new_rank: new_ranks(x.as_str()),
        }));
        rows.extend(d.rank_changed.iter().map(|c| TrancoDiffRow {
            change: "rank_changed".into(),
            domain: c.domain.to_string(),
            old_rank: Some(c.old_rank),
            new_rank: Some(c.new_rank),
        }));
        rows
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankingDiffRow {
    pub as_name: String,
    pub provider_id: String,
    pub old_position: Option<usize>,
    pub new_position: Option<usize>,
}
row!(RankingDiffRow, ["as_name", "provider_id", "old_position", "new_position"]);

impl From<&RankingChange> for RankingDiffRow {
    fn from(c: &RankingChange) -> Self {
        RankingDiffRow {
            as_name: c.as_name.clone(),
            provider_id: c.provider_id.clone(),
            old_position: c.old_position,
            new_position: c.new_position,
        }
    }
}
