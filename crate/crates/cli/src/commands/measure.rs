use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{NaiveDate, Utc};
use log::{info, warn};

use nsflow_core::flowmap::{map_flow, SnapshotMeta, Store};
use nsflow_core::resolver::{
    resolve_batch, write_fixture, Backend, FixtureBackend, FixtureRecord, NsRecordSet, Progress, StubBackend,
};
use nsflow_core::DomainName;

use crate::config::{BackendChoice, Loaded};
use crate::datasets;
use crate::error::{CliError, CliResult};

pub struct MeasureArgs {
    pub limit: Option<usize>,
    pub backend: Option<BackendChoice>,
    pub date: Option<NaiveDate>,
}

fn open_backend(loaded: &Loaded, upstreams: Vec<std::net::SocketAddr>) -> CliResult<Arc<dyn Backend>> {
    Ok(match &loaded.config.backend {
        BackendChoice::Live => Arc::new(StubBackend::new(upstreams)),
        BackendChoice::Fixture(p) => {
            let path = loaded.resolve(p);
            let file = File::open(&path).map_err(|e| CliError::open(&path, e))?;
            let backend = FixtureBackend::from_reader(BufReader::new(file)).map_err(|e| CliError::fixture(&path, e))?;
            info!("fixture backend {} with {} domains", path.display(), backend.domain_count());
            Arc::new(backend)
        }
    })
}

fn checkpoint_path(store: &Path, date: NaiveDate) -> PathBuf {
    let mut name = store.as_os_str().to_owned();
    name.push(format!(".partial-{date}.jsonl"));
    PathBuf::from(name)
}

/// Resolves the (optionally truncated) list, maps every flow and persists
/// the snapshot. Prints the snapshot id and its counters.
pub fn run(config: &Path, args: MeasureArgs) -> CliResult<String> {
    let mut loaded = Loaded::read(config)?;
    if let Some(b) = args.backend {
        loaded.config.backend = b;
    }
    if let Some(d) = args.date {
        loaded.config.run_date = Some(d);
    }
    if args.limit == Some(0) {
        return Err(CliError::usage("--limit must be at least 1"));
    }
    loaded.validate()?;
    let policy = loaded.config.resolver.policy()?;
    let run_date = loaded.config.run_date.unwrap_or_else(|| Utc::now().date_naive());
    let store_path = loaded.store_path();
    let mut store = Store::open(&store_path)?;
    let inputs = datasets::load(&loaded, &store, true)?;
    let backend = open_backend(&loaded, policy.upstreams.clone())?;

    let mut entries = inputs.tranco.clone();
    entries.sort_by_key(|e| e.rank);
    if let Some(n) = args.limit {
        entries.truncate(n);
    }
    let domains: Vec<DomainName> = entries.into_iter().map(|e| e.domain).collect();
    let total = domains.len();
    let step = (total / 10).max(1);
    let mut last = 0;
    let sink = move |p: &Progress| {
        if p.done == p.total || p.done >= last + step {
            last = p.done;
            info!("resolved {}/{} ({} ok, {} not ok)", p.done, p.total, p.ok, p.failed);
        }
    };

    let mut slots: Vec<Option<NsRecordSet>> = vec![None; total];
    for item in resolve_batch(domains, &policy, backend, sink) {
        match item {
            Ok(item) => slots[item.index] = Some(item.records),
            Err(aborted) => {
                let done: Vec<FixtureRecord> = slots.iter().flatten().map(FixtureRecord::from).collect();
                let path = checkpoint_path(&store_path, run_date);
                let saved = File::create(&path)
                    .map_err(CliError::from)
                    .and_then(|f| write_fixture(&done, std::io::BufWriter::new(f)).map_err(CliError::from));
                let note = match saved {
                    Ok(()) => format!("completed records written to {}", path.display()),
                    Err(e) => format!("checkpoint not written: {e}"),
                };
                return Err(CliError::runtime(format!(
                    "resolution aborted after {} domains, {} pending: {}; {note}",
                    aborted.completed.len(),
                    aborted.pending,
                    aborted.reason
                )));
            }
        }
    }
    let flows = slots.into_iter().flatten().map(|r| map_flow(&r, &inputs.index, &inputs.orgs));
    let meta = SnapshotMeta {
        run_date,
        tranco_label: inputs.tranco_label.clone(),
        prefix2as_v4_label: inputs.v4_label.clone(),
        prefix2as_v6_label: inputs.v6_label.clone(),
        as2org_label: inputs.as2org_label.clone(),
    };
    let report = store.persist_snapshot(flows, &meta)?;
    if report.existing {
        warn!("identical snapshot already stored");
    }
    for d in &report.rejected {
        warn!("repeated domain {d} left out");
    }
    let c = report.counters;
    println!("snapshot_id\t{}", report.snapshot_id);
    println!("input\t{}", c.input);
    println!("ok\t{}", c.ok);
    println!("no_ns\t{}", c.no_ns);
    println!("failed\t{}", c.failed);
    println!("timed_out\t{}", c.timed_out);
    println!("unmapped_ip\t{}", c.unmapped_ip);
    println!("data_errors\t{}", c.data_errors);
    Ok(report.snapshot_id)
}
