use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use clap::{Args, Subcommand, ValueEnum};
use log::warn;
use serde::Serialize;
use serde_json::json;

use nsflow_core::analytics::{
    concentration, governmental, rank_period, rank_providers, self_hosting, sovereignty, sovereignty_aggregate,
    AnalyticsError, AttributionPolicy, CountingMode, SovereigntyBreakdown, TopSetSource,
};
use nsflow_core::flowmap::{MeasurementSnapshot, SnapshotSummary, Store};
use nsflow_core::DomainName;

use crate::config::Loaded;
use crate::error::{CliError, CliResult};
use crate::report::{Provenance, ReportWriter, SnapshotRef};
use crate::tables::{
    governmental_rows, sovereignty_rows, ConcentrationRow, ConcentrationSummaryRow, HostingRow, RankRow, ScopeRow,
    SnapshotRow,
};

/// `LABEL=ID[,ID...]`: snapshots pooled into one measurement period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Period {
    pub label: String,
    pub snapshot_ids: Vec<String>,
}

impl FromStr for Period {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (label, ids) = s.split_once('=').ok_or_else(|| format!("period `{s}` is not LABEL=ID[,ID...]"))?;
        let snapshot_ids: Vec<String> =
            ids.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect();
        if label.is_empty() || snapshot_ids.is_empty() {
            return Err(format!("period `{s}` is not LABEL=ID[,ID...]"));
        }
        Ok(Period { label: label.to_string(), snapshot_ids })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fractional,
    AnyCountry,
}

impl From<Mode> for CountingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Fractional => CountingMode::Fractional,
            Mode::AnyCountry => CountingMode::AnyCountry,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    pub analysis: Analysis,
    /// Output directory; defaults to the configured one.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Lists stored snapshots and their counters.
    List,
    /// Top-K providers by number of dependent domains.
    Rank {
        /// Rank one snapshot; repeatable. Defaults to the latest snapshot.
        #[arg(long = "snapshot", value_name = "ID")]
        snapshots: Vec<String>,
        /// Rank a period pooling several snapshots; repeatable.
        #[arg(long = "period", value_name = "LABEL=ID,ID")]
        periods: Vec<Period>,
        /// Ranking size; defaults to the configured one.
        #[arg(long)]
        k: Option<usize>,
        /// any_ns, all_ns or majority_ns; defaults to the configured one.
        #[arg(long, value_parser = AttributionPolicy::from_str)]
        policy: Option<AttributionPolicy>,
    },
    /// Hosting ASes and countries of named domains.
    SelfHosting {
        /// Snapshot to read; defaults to the latest.
        #[arg(long, value_name = "ID")]
        snapshot: Option<String>,
        /// Domain to report; repeatable.
        #[arg(long = "domain", value_name = "NAME", required = true)]
        domains: Vec<String>,
    },
    /// Fraction of resolved domains served by the top-K providers, per snapshot.
    Concentration {
        /// First run date included.
        #[arg(long, value_name = "DATE")]
        from: Option<NaiveDate>,
        /// Last run date included.
        #[arg(long, value_name = "DATE")]
        to: Option<NaiveDate>,
        /// Explicit snapshots, in addition to the date range.
        #[arg(long = "snapshot", value_name = "ID")]
        snapshots: Vec<String>,
        /// Size of the top set; defaults to the configured one.
        #[arg(long)]
        k: Option<usize>,
        /// Fix the provider set to the top-K of these pooled snapshots instead
        /// of each snapshot's own top-K.
        #[arg(long = "top-from", value_name = "ID")]
        top_from: Vec<String>,
    },
    /// Hosting-country shares per ccTLD and per group.
    Sovereignty {
        /// Snapshot to read; defaults to the latest.
        #[arg(long, value_name = "ID")]
        snapshot: Option<String>,
        /// Configured group name; repeatable. Defaults to every group.
        #[arg(long = "group", value_name = "NAME")]
        groups: Vec<String>,
        /// Single ccTLD suffix such as `.br`; repeatable.
        #[arg(long = "cctld", value_name = "SUFFIX")]
        cctlds: Vec<String>,
        /// Listing threshold; smaller shares fold into Others.
        #[arg(long)]
        threshold: Option<f64>,
        /// fractional splits a domain across its countries; any-country counts it once in each.
        #[arg(long, value_enum, default_value = "fractional")]
        mode: Mode,
    },
    /// Hosting organizations and countries of governmental domains.
    Governmental {
        /// Snapshot to read; defaults to the latest.
        #[arg(long, value_name = "ID")]
        snapshot: Option<String>,
        /// Suffix such as `.gov.br`; repeatable.
        #[arg(long = "suffix", value_name = "SUFFIX")]
        suffixes: Vec<String>,
        /// Without --suffix, use `.gov` + each member of this group.
        #[arg(long, default_value = "BRICS")]
        group: String,
    },
}

struct Session {
    loaded: Loaded,
    store: Store,
    out: PathBuf,
}

impl Session {
    fn open(config: &Path, out: Option<&Path>) -> CliResult<Session> {
        let loaded = Loaded::read(config)?;
        loaded.validate_groups()?;
        let path = loaded.store_path();
        if !path.is_file() {
            return Err(CliError::usage(format!("{}: no store; run measure first", path.display())));
        }
        let store = Store::open(&path)?;
        let out = loaded.out_dir(out);
        Ok(Session { loaded, store, out })
    }

    fn summary(&self, id: &str) -> CliResult<SnapshotSummary> {
        Ok(self.store.summary(id)?)
    }

    /// The named snapshot, or the latest one.
    fn one(&self, id: Option<&str>) -> CliResult<MeasurementSnapshot> {
        match id {
            Some(id) => Ok(self.store.load_snapshot(id)?),
            None => {
                let latest =
                    self.store.list_snapshots()?.pop().ok_or_else(|| CliError::runtime("store holds no snapshots"))?;
                Ok(self.store.load_snapshot(&latest.snapshot_id)?)
            }
        }
    }

    fn provenance(&self, command: &str, parameters: serde_json::Value, ids: &[&str]) -> CliResult<Provenance> {
        let mut p = Provenance::new(command, parameters);
        p.config = Some(self.loaded.config.clone());
        let mut seen = BTreeSet::new();
        for id in ids {
            if seen.insert(*id) {
                p.snapshots.push(SnapshotRef::from(&self.summary(id)?));
            }
        }
        Ok(p)
    }

    fn write(
        &self,
        name: &str,
        p: &Provenance,
        tables: impl FnOnce(&mut ReportWriter, &mut Provenance) -> CliResult<()>,
    ) -> CliResult<()> {
        let mut writer = ReportWriter::create(&self.out)?;
        let mut p = p.clone();
        tables(&mut writer, &mut p)?;
        for path in writer.finish(name, &p)? {
            println!("{}", path.display());
        }
        Ok(())
    }
}

fn check_suffix(s: &str) -> CliResult<()> {
    if s.starts_with('.') && s.len() > 1 {
        Ok(())
    } else {
        Err(CliError::usage(format!("suffix `{s}` must start with `.`")))
    }
}

pub fn run(config: &Path, args: AnalyzeArgs) -> CliResult<()> {
    let mut s = Session::open(config, args.out.as_deref())?;
    match args.analysis {
        Analysis::List => {
            let rows: Vec<SnapshotRow> = s.store.list_snapshots()?.iter().map(SnapshotRow::from).collect();
            let ids: Vec<&str> = rows.iter().map(|r| r.snapshot_id.as_str()).collect();
            let p = s.provenance("analyze list", json!({}), &ids)?;
            s.write("snapshots", &p, |w, p| w.table("snapshots", &rows, p))
        }
        Analysis::Rank { snapshots, periods, k, policy } => {
            let k = k.unwrap_or(s.loaded.config.analysis.k);
            let policy = policy.unwrap_or(s.loaded.config.analysis.policy);
            s.loaded.config.analysis.k = k;
            s.loaded.config.analysis.policy = policy;
            let mut snapshots = snapshots;
            if snapshots.is_empty() && periods.is_empty() {
                snapshots.push(s.one(None)?.snapshot_id);
            }
            let mut rankings = Vec::new();
            for id in &snapshots {
                rankings.push(rank_providers(&s.store.load_snapshot(id)?, k, policy)?);
            }
            for period in &periods {
                let loaded: Vec<MeasurementSnapshot> =
                    period.snapshot_ids.iter().map(|id| s.store.load_snapshot(id)).collect::<Result<_, _>>()?;
                let refs: Vec<&MeasurementSnapshot> = loaded.iter().collect();
                rankings.push(rank_period(&refs, &period.label, k, policy)?);
            }
            let rows: Vec<RankRow> = rankings.iter().flat_map(RankRow::from_ranking).collect();
            let ids: Vec<&str> =
                snapshots.iter().chain(periods.iter().flat_map(|p| &p.snapshot_ids)).map(String::as_str).collect();
            let mut p =
                s.provenance("analyze rank", json!({ "k": k, "snapshots": snapshots, "periods": periods }), &ids)?;
            p.policy = Some(policy.as_str().to_string());
            s.write("rank", &p, |w, p| w.table("rank", &rows, p))
        }
        Analysis::SelfHosting { snapshot, domains } => {
            let names: Vec<DomainName> = domains
                .iter()
                .map(|d| DomainName::parse(d).map_err(|e| CliError::usage(format!("domain `{d}`: {e}"))))
                .collect::<Result<_, _>>()?;
            let snap = s.one(snapshot.as_deref())?;
            let rows: Vec<HostingRow> =
                self_hosting(&snap, &names).iter().map(|r| HostingRow::new(&snap.snapshot_id, r)).collect();
            let p = s.provenance("analyze self-hosting", json!({ "domains": domains }), &[&snap.snapshot_id])?;
            s.write("self_hosting", &p, |w, p| w.table("self_hosting", &rows, p))
        }
        Analysis::Concentration { from, to, snapshots, k, top_from } => {
            let k = k.unwrap_or(s.loaded.config.analysis.k);
            s.loaded.config.analysis.k = k;
            if k == 0 {
                return Err(AnalyticsError::ZeroK.into());
            }
            let mut ids: Vec<String> = Vec::new();
            if from.is_some() || to.is_some() || snapshots.is_empty() {
                for summary in s.store.list_snapshots()? {
                    let d = summary.meta.run_date;
                    if from.is_none_or(|f| d >= f) && to.is_none_or(|t| d <= t) {
                        ids.push(summary.snapshot_id);
                    }
                }
            }
            for id in &snapshots {
                if !ids.contains(id) {
                    s.summary(id)?;
                    ids.push(id.clone());
                }
            }
            let loaded: Vec<MeasurementSnapshot> =
                ids.iter().map(|id| s.store.load_snapshot(id)).collect::<Result<_, _>>()?;
            let refs: Vec<&MeasurementSnapshot> = loaded.iter().collect();
            let (source, source_label) = if top_from.is_empty() {
                (TopSetSource::PerSnapshotTopK(k), format!("top_{k}_per_snapshot"))
            } else {
                let pool: Vec<MeasurementSnapshot> =
                    top_from.iter().map(|id| s.store.load_snapshot(id)).collect::<Result<_, _>>()?;
                let pool_refs: Vec<&MeasurementSnapshot> = pool.iter().collect();
                let ranking = rank_period(&pool_refs, "top-from", k, AttributionPolicy::AnyNs)?;
                let set: BTreeSet<String> = ranking.entries.into_iter().map(|e| e.provider_id).collect();
                (TopSetSource::FixedSet(set), format!("top_{k}_of:{}", top_from.join(";")))
            };
            let series = concentration(&refs, &source)?;
            let points: Vec<ConcentrationRow> = series.points.iter().map(ConcentrationRow::from).collect();
            let summary = [ConcentrationSummaryRow {
                points: points.len(),
                mean: series.mean,
                max: series.max,
                max_date: series.max_date.to_string(),
                top_set_source: source_label,
            }];
            let all: Vec<&str> = ids.iter().chain(&top_from).map(String::as_str).collect();
            let mut p = s.provenance(
                "analyze concentration",
                json!({ "from": from, "to": to, "k": k, "snapshots": snapshots, "top_from": top_from }),
                &all,
            )?;
            p.policy = Some(AttributionPolicy::AnyNs.as_str().to_string());
            s.write("concentration", &p, |w, p| {
                w.table("concentration", &points, p)?;
                w.table("concentration_summary", &summary, p)
            })
        }
        Analysis::Sovereignty { snapshot, groups, cctlds, threshold, mode } => {
            let threshold = threshold.unwrap_or(s.loaded.config.analysis.threshold);
            s.loaded.config.analysis.threshold = threshold;
            let snap = s.one(snapshot.as_deref())?;
            let groups: Vec<String> = if groups.is_empty() && cctlds.is_empty() {
                s.loaded.config.groups.keys().cloned().collect()
            } else {
                groups
            };
            let mut scopes: Vec<(&str, SovereigntyBreakdown)> = Vec::new();
            let mut done: BTreeSet<String> = BTreeSet::new();
            let mut single = |suffix: &str, scopes: &mut Vec<(&str, SovereigntyBreakdown)>| -> CliResult<()> {
                check_suffix(suffix)?;
                if done.insert(suffix.to_string()) {
                    match sovereignty(&snap, suffix, threshold, mode.into()) {
                        Ok(b) => scopes.push(("cctld", b)),
                        Err(AnalyticsError::EmptyScope(_)) => warn!("no attributed domains under {suffix}"),
                        Err(e) => return Err(e.into()),
                    }
                }
                Ok(())
            };
            for c in &cctlds {
                single(c, &mut scopes)?;
            }
            for g in &groups {
                let members = s.loaded.group(g)?.to_vec();
                for m in &members {
                    single(m, &mut scopes)?;
                }
                match sovereignty_aggregate(&snap, g, &members, threshold, mode.into()) {
                    Ok(b) => scopes.push(("group", b)),
                    Err(AnalyticsError::EmptyScope(_)) => warn!("no attributed domains in group {g}"),
                    Err(e) => return Err(e.into()),
                }
            }
            if scopes.is_empty() {
                return Err(AnalyticsError::EmptyScope(join_scopes(&cctlds, &groups)).into());
            }
            let mut scope_rows: Vec<ScopeRow> = Vec::new();
            let mut share_rows = Vec::new();
            for (kind, b) in &scopes {
                let (scope, rows) = sovereignty_rows(&snap.snapshot_id, kind, b);
                scope_rows.push(scope);
                share_rows.extend(rows);
            }
            let p = s.provenance(
                "analyze sovereignty",
                json!({ "groups": groups, "cctlds": cctlds, "threshold": threshold, "mode": mode }),
                &[&snap.snapshot_id],
            )?;
            s.write("sovereignty", &p, |w, p| {
                w.table("sovereignty", &share_rows, p)?;
                w.table("sovereignty_scopes", &scope_rows, p)
            })
        }
        Analysis::Governmental { snapshot, suffixes, group } => {
            let suffixes: Vec<String> = if suffixes.is_empty() {
                s.loaded.group(&group)?.iter().map(|m| format!(".gov{m}")).collect()
            } else {
                suffixes
            };
            for x in &suffixes {
                check_suffix(x)?;
            }
            let snap = s.one(snapshot.as_deref())?;
            let rows: Vec<_> =
                governmental(&snap, &suffixes).iter().flat_map(|g| governmental_rows(&snap.snapshot_id, g)).collect();
            let p = s.provenance("analyze governmental", json!({ "suffixes": suffixes }), &[&snap.snapshot_id])?;
            s.write("governmental", &p, |w, p| w.table("governmental", &rows, p))
        }
    }
}

fn join_scopes(cctlds: &[String], groups: &[String]) -> String {
    cctlds.iter().chain(groups).cloned().collect::<Vec<_>>().join(",")
}
