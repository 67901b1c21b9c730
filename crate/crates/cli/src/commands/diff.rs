use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use clap::Args;
use serde_json::json;

use nsflow_core::analytics::{diff_rankings, AttributionPolicy, ProviderRanking, RankingEntry};
use nsflow_core::ingest::{diff_tranco, parse_tranco, TrancoEntry};

use crate::error::{CliError, CliResult};
use crate::report::{Provenance, ReportWriter, Row};
use crate::tables::{RankRow, RankingDiffRow, TrancoDiffRow};

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("kind").required(true).args(["old_list", "old_ranking"]))]
pub struct DiffArgs {
    /// Older rank,domain list.
    #[arg(long, value_name = "PATH", requires = "new_list")]
    pub old_list: Option<PathBuf>,
    /// Newer rank,domain list.
    #[arg(long, value_name = "PATH", requires = "old_list")]
    pub new_list: Option<PathBuf>,
    /// Older ranking table (`rank.csv` or `rank.jsonl`), optionally `PATH#LABEL`.
    #[arg(long, value_name = "PATH[#LABEL]", requires = "new_ranking", conflicts_with = "old_list")]
    pub old_ranking: Option<String>,
    /// Newer ranking table, same form as --old-ranking.
    #[arg(long, value_name = "PATH[#LABEL]", requires = "old_ranking")]
    pub new_ranking: Option<String>,
    /// Also write the diff as a report under this directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

fn read_list(path: &Path) -> CliResult<Vec<TrancoEntry>> {
    let file = File::open(path).map_err(|e| CliError::open(path, e))?;
    let parsed = parse_tranco(BufReader::new(file)).map_err(|e| CliError::ingest(path, e))?;
    if parsed.entries.is_empty() {
        return Err(CliError::format(format!("{}: no valid rank,domain rows", path.display())));
    }
    Ok(parsed.entries)
}

fn read_rank_rows(path: &Path) -> CliResult<Vec<RankRow>> {
    let file = File::open(path).map_err(|e| CliError::open(path, e))?;
    let bad = |e: String| CliError::format(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|x| x == "csv") {
        csv::Reader::from_reader(file).deserialize().collect::<Result<_, _>>().map_err(|e| bad(e.to_string()))
    } else {
        let mut rows = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line?;
            if !line.trim().is_empty() {
                rows.push(serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?);
            }
        }
        Ok(rows)
    }
}

/// Rebuilds one ranking from a rank table. `spec` is `PATH` or `PATH#LABEL`;
/// the label may be omitted when the table holds a single ranking.
pub fn read_ranking(spec: &str) -> CliResult<ProviderRanking> {
    let (path, label) = match spec.rsplit_once('#') {
        Some((p, l)) if !l.is_empty() => (p, Some(l)),
        _ => (spec, None),
    };
    let path = Path::new(path);
    let rows = read_rank_rows(path)?;
    let mut by_label: BTreeMap<String, Vec<RankRow>> = BTreeMap::new();
    for r in rows {
        by_label.entry(r.label.clone()).or_default().push(r);
    }
    let rows = match label {
        Some(l) => {
            by_label.remove(l).ok_or_else(|| CliError::usage(format!("{}: no ranking labelled {l}", path.display())))?
        }
        None if by_label.len() == 1 => by_label.into_values().next().unwrap_or_default(),
        None if by_label.is_empty() => return Err(CliError::format(format!("{}: no ranking rows", path.display()))),
        None => {
            let labels: Vec<String> = by_label.into_keys().collect();
            return Err(CliError::usage(format!(
                "{} holds several rankings ({}); select one with PATH#LABEL",
                path.display(),
                labels.join(", ")
            )));
        }
    };
    let first = &rows[0];
    let policy: AttributionPolicy = first.policy.parse().map_err(|e: String| CliError::format(e))?;
    if rows.iter().any(|r| r.k != first.k || r.policy != first.policy) {
        return Err(CliError::format(format!("{}: ranking {} mixes K or policy values", path.display(), first.label)));
    }
    let mut entries: Vec<RankingEntry> = rows
        .iter()
        .map(|r| RankingEntry {
            position: r.position,
            provider_id: r.provider_id.clone(),
            as_name: r.as_name.clone(),
            org_name: r.org_name.clone(),
            domain_count: r.domain_count,
        })
        .collect();
    entries.sort_by_key(|e| e.position);
    Ok(ProviderRanking {
        label: first.label.clone(),
        snapshot_ids: first.snapshot_ids.split(';').filter(|s| !s.is_empty()).map(String::from).collect(),
        k: first.k,
        policy,
        entries,
    })
}

fn print_rows<T: Row>(rows: &[T]) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(io::stdout().lock());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn emit<T: Row>(name: &str, rows: &[T], out: Option<&Path>, mut provenance: Provenance) -> CliResult<()> {
    if rows.is_empty() {
        println!("no changes");
    } else {
        print_rows(rows)?;
    }
    if let Some(dir) = out {
        let mut w = ReportWriter::create(dir)?;
        w.table(name, rows, &mut provenance)?;
        for p in w.finish(name, &provenance)? {
            eprintln!("wrote {}", p.display());
        }
    }
    Ok(())
}

pub fn run(args: DiffArgs) -> CliResult<()> {
    if let (Some(old), Some(new)) = (&args.old_list, &args.new_list) {
        let (a, b) = (read_list(old)?, read_list(new)?);
        let diff = diff_tranco(&a, &b);
        let ranks = |list: &[TrancoEntry]| -> HashMap<String, u32> {
            let mut m = HashMap::new();
            for e in list {
                m.entry(e.domain.to_string()).or_insert(e.rank);
            }
            m
        };
        let (ra, rb) = (ranks(&a), ranks(&b));
        let rows = TrancoDiffRow::from_diff(&diff, |d| ra.get(d).copied(), |d| rb.get(d).copied());
        let name_of = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let provenance = Provenance::new("diff", json!({ "old_list": name_of(old), "new_list": name_of(new) }));
        return emit("tranco_diff", &rows, args.out.as_deref(), provenance);
    }
    if let (Some(old), Some(new)) = (&args.old_ranking, &args.new_ranking) {
        let (a, b) = (read_ranking(old)?, read_ranking(new)?);
        let changes = diff_rankings(&a, &b)?;
        let rows: Vec<RankingDiffRow> = changes.iter().map(RankingDiffRow::from).collect();
        let mut provenance =
            Provenance::new("diff", json!({ "old_ranking": a.label, "new_ranking": b.label, "k": a.k }));
        provenance.policy = Some(a.policy.as_str().to_string());
        return emit("ranking_diff", &rows, args.out.as_deref(), provenance);
    }
    Err(CliError::usage("give --old-list/--new-list or --old-ranking/--new-ranking"))
}
