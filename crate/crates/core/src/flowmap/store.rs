//! Single-file snapshot store backed by SQLite.
//!
//! Tables (schema version 1):
//!
//! ```text
//! meta          key, value
//! datasets      label, kind, path, sha256, entries, skipped, recorded_at
//! snapshots     sid, snapshot_id, run_date, tranco_label, prefix2as_v4_label,
//!               prefix2as_v6_label, as2org_label, created_at,
//!               input, ok, no_ns, failed, timed_out, unmapped_ip, data_errors
//! domains       sid, seq, domain, status, error_detail
//! ns_hosts      sid, domain, host
//! ns_ips        sid, domain, host, ip
//! attributions  sid, domain, ip, prefix, asn, as_name, org_id, org_name, country
//! ```
//!
//! An attribution row with a null `asn` marks an unmapped address.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::net::IpAddr;
use std::path::Path;

use chrono::{NaiveDate, Utc};
use rusqlite::{params, Connection, OptionalExtension, Transaction};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{Counters, IpAttribution, MeasurementSnapshot, ResolutionFlow, SnapshotMeta};
use crate::domain::{Asn, CountryCode, DomainName};
use crate::resolver::{FixtureRecord, ResolutionStatus};

pub const SCHEMA_VERSION: u32 = 1;

const SCHEMA: &str = "
CREATE TABLE IF NOT EXISTS meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS datasets (
    label TEXT PRIMARY KEY,
    kind TEXT NOT NULL,
    path TEXT NOT NULL,
    sha256 TEXT NOT NULL,
    entries INTEGER NOT NULL,
    skipped INTEGER NOT NULL,
    recorded_at TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS snapshots (
    sid INTEGER PRIMARY KEY,
    snapshot_id TEXT NOT NULL UNIQUE,
    run_date TEXT NOT NULL,
    tranco_label TEXT NOT NULL,
    prefix2as_v4_label TEXT NOT NULL,
    prefix2as_v6_label TEXT NOT NULL,
    as2org_label TEXT NOT NULL,
    created_at TEXT NOT NULL,
    input INTEGER NOT NULL,
    ok INTEGER NOT NULL,
    no_ns INTEGER NOT NULL,
    failed INTEGER NOT NULL,
    timed_out INTEGER NOT NULL,
    unmapped_ip INTEGER NOT NULL,
    data_errors INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS domains (
    sid INTEGER NOT NULL REFERENCES snapshots(sid),
    seq INTEGER NOT NULL,
    domain TEXT NOT NULL,
    status TEXT NOT NULL,
    error_detail TEXT,
    PRIMARY KEY (sid, domain)
);
CREATE TABLE IF NOT EXISTS ns_hosts (
    sid INTEGER NOT NULL,
    domain TEXT NOT NULL,
    host TEXT NOT NULL,
    PRIMARY KEY (sid, domain, host)
);
CREATE TABLE IF NOT EXISTS ns_ips (
    sid INTEGER NOT NULL,
    domain TEXT NOT NULL,
    host TEXT NOT NULL,
    ip TEXT NOT NULL,
    PRIMARY KEY (sid, domain, host, ip)
);
CREATE TABLE IF NOT EXISTS attributions (
    sid INTEGER NOT NULL,
    domain TEXT NOT NULL,
    ip TEXT NOT NULL,
    prefix TEXT,
    asn INTEGER,
    as_name TEXT,
    org_id TEXT,
    org_name TEXT,
    country TEXT,
    PRIMARY KEY (sid, domain, ip)
);
";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store: {0}")]
    Sqlite(#[from] rusqlite::Error),
    #[error("snapshot {0} not found")]
    NotFound(String),
    #[error("store schema version {found} is not supported (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: String },
    #[error("store holds an invalid value: {0}")]
    Corrupt(String),
    #[error("export failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistReport {
    pub snapshot_id: String,
    pub counters: Counters,
    /// True when an identical snapshot was already stored.
    pub existing: bool,
    pub rejected: Vec<DomainName>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotSummary {
    pub snapshot_id: String,
    pub meta: SnapshotMeta,
    pub counters: Counters,
    pub created_at: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub label: String,
    pub kind: String,
    pub path: String,
    pub sha256: String,
    pub entries: u64,
    pub skipped: u64,
}

/// One exported flow: the resolver fixture fields plus attribution edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRecord {
    #[serde(flatten)]
    pub record: FixtureRecord,
    pub attributions: BTreeMap<IpAddr, IpAttribution>,
    pub unmapped_ips: BTreeSet<IpAddr>,
}

impl From<&ResolutionFlow> for ExportRecord {
    fn from(flow: &ResolutionFlow) -> Self {
        ExportRecord {
            record: flow.to_fixture_record(),
            attributions: flow.attributions.clone(),
            unmapped_ips: flow.unmapped_ips.clone(),
        }
    }
}

/// sid, snapshot id, run date and labels, created_at, counters.
type SummaryRow = (i64, String, [String; 5], String, [u64; 7]);

pub struct Store {
    conn: Connection,
}

fn corrupt(what: impl std::fmt::Display) -> StoreError {
    StoreError::Corrupt(what.to_string())
}

impl Store {
    pub fn open(path: &Path) -> Result<Store, StoreError> {
        let conn = Connection::open(path)?;
        conn.pragma_update(None, "journal_mode", "WAL")?;
        Self::init(conn)
    }

    pub fn open_in_memory() -> Result<Store, StoreError> {
        Self::init(Connection::open_in_memory()?)
    }

    fn init(conn: Connection) -> Result<Store, StoreError> {
        conn.busy_timeout(std::time::Duration::from_secs(10))?;
        conn.execute_batch(SCHEMA)?;
        let found: Option<String> =
            conn.query_row("SELECT value FROM meta WHERE key = 'schema_version'", [], |r| r.get(0)).optional()?;
        match found {
            None => {
                conn.execute(
                    "INSERT INTO meta (key, value) VALUES ('schema_version', ?1)",
                    [SCHEMA_VERSION.to_string()],
                )?;
            }
            Some(v) if v == SCHEMA_VERSION.to_string() => {}
            Some(found) => return Err(StoreError::SchemaVersion { found }),
        }
        Ok(Store { conn })
    }

    pub fn connection(&self) -> &Connection {
        &self.conn
    }

    pub fn record_dataset(&self, d: &DatasetRecord) -> Result<(), StoreError> {
        self.conn.execute(
            "INSERT OR REPLACE INTO datasets (label, kind, path, sha256, entries, skipped, recorded_at)
             VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)",
            params![d.label, d.kind, d.path, d.sha256, d.entries, d.skipped, Utc::now().to_rfc3339()],
        )?;
        Ok(())
    }

    pub fn dataset(&self, label: &str) -> Result<Option<DatasetRecord>, StoreError> {
        Ok(self
            .conn
            .query_row(
                "SELECT label, kind, path, sha256, entries, skipped FROM datasets WHERE label = ?1",
                [label],
                |r| {
                    Ok(DatasetRecord {
                        label: r.get(0)?,
                        kind: r.get(1)?,
                        path: r.get(2)?,
                        sha256: r.get(3)?,
                        entries: r.get(4)?,
                        skipped: r.get(5)?,
                    })
                },
            )
            .optional()?)
    }

    /// Writes all flows of one run in a single transaction and returns the
    /// content-derived snapshot id. Repeated domains are rejected and counted
    /// as data errors. Persisting identical content twice stores it once.
    pub fn persist_snapshot<I>(&mut self, flows: I, meta: &SnapshotMeta) -> Result<PersistReport, StoreError>
    where
        I: IntoIterator<Item = ResolutionFlow>,
    {
        let tx = self.conn.transaction()?;
        tx.execute(
            "INSERT INTO snapshots (snapshot_id, run_date, tranco_label, prefix2as_v4_label,
                 prefix2as_v6_label, as2org_label, created_at,
                 input, ok, no_ns, failed, timed_out, unmapped_ip, data_errors)
             VALUES ('pending', ?1, ?2, ?3, ?4, ?5, ?6, 0, 0, 0, 0, 0, 0, 0)",
            params![
                meta.run_date.to_string(),
                meta.tranco_label,
                meta.prefix2as_v4_label,
                meta.prefix2as_v6_label,
                meta.as2org_label,
                Utc::now().to_rfc3339(),
            ],
        )?;
        let sid = tx.last_insert_rowid();

        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(meta).map_err(corrupt)?);
        let mut counters = Counters::default();
        let mut seen = HashSet::new();
        let mut rejected = Vec::new();
        for (seq, flow) in flows.into_iter().enumerate() {
            if !seen.insert(flow.domain.clone()) {
                log::warn!("duplicate domain {} rejected", flow.domain);
                counters.data_errors += 1;
                rejected.push(flow.domain);
                continue;
            }
            insert_flow(&tx, sid, seq as i64, &flow)?;
            hasher.update(serde_json::to_vec(&flow).map_err(corrupt)?);
            hasher.update(b"\n");
            counters.record(&flow);
        }
        hasher.update(serde_json::to_vec(&counters).map_err(corrupt)?);
        let digest = hex::encode(hasher.finalize());
        let snapshot_id = format!("{}-{}", meta.run_date, &digest[..12]);

        let existing: Option<i64> = tx
            .query_row("SELECT sid FROM snapshots WHERE snapshot_id = ?1", [&snapshot_id], |r| r.get(0))
            .optional()?;
        if existing.is_some() {
            tx.rollback()?;
            return Ok(PersistReport { snapshot_id, counters, existing: true, rejected });
        }
        tx.execute(
            "UPDATE snapshots SET snapshot_id = ?1, input = ?2, ok = ?3, no_ns = ?4, failed = ?5,
                 timed_out = ?6, unmapped_ip = ?7, data_errors = ?8
             WHERE sid = ?9",
            params![
                snapshot_id,
                counters.input,
                counters.ok,
                counters.no_ns,
                counters.failed,
                counters.timed_out,
                counters.unmapped_ip,
                counters.data_errors,
                sid
            ],
        )?;
        tx.commit()?;
        Ok(PersistReport { snapshot_id, counters, existing: false, rejected })
    }

    fn summary_row(r: &rusqlite::Row<'_>) -> rusqlite::Result<SummaryRow> {
        Ok((
            r.get(0)?,
            r.get(1)?,
            [r.get(2)?, r.get(3)?, r.get(4)?, r.get(5)?, r.get(6)?],
            r.get(7)?,
            [r.get(8)?, r.get(9)?, r.get(10)?, r.get(11)?, r.get(12)?, r.get(13)?, r.get(14)?],
        ))
    }

    fn to_summary(row: (i64, String, [String; 5], String, [u64; 7])) -> Result<(i64, SnapshotSummary), StoreError> {
        let (sid, snapshot_id, [date, tranco, v4, v6, org], created_at, c) = row;
        let run_date: NaiveDate = date.parse().map_err(|e| corrupt(format!("run_date {date}: {e}")))?;
        Ok((
            sid,
            SnapshotSummary {
                snapshot_id,
                meta: SnapshotMeta {
                    run_date,
                    tranco_label: tranco,
                    prefix2as_v4_label: v4,
                    prefix2as_v6_label: v6,
                    as2org_label: org,
                },
                counters: Counters {
                    input: c[0],
                    ok: c[1],
                    no_ns: c[2],
                    failed: c[3],
                    timed_out: c[4],
                    unmapped_ip: c[5],
                    data_errors: c[6],
                },
                created_at,
            },
        ))
    }

    const SUMMARY_COLUMNS: &'static str = "sid, snapshot_id, run_date, tranco_label, prefix2as_v4_label,
        prefix2as_v6_label, as2org_label, created_at, input, ok, no_ns, failed, timed_out, unmapped_ip, data_errors";

    /// Committed snapshots ordered by run date, then id.
    pub fn list_snapshots(&self) -> Result<Vec<SnapshotSummary>, StoreError> {
        let sql = format!(
            "SELECT {} FROM snapshots WHERE snapshot_id <> 'pending' ORDER BY run_date, snapshot_id",
            Self::SUMMARY_COLUMNS
        );
        let mut stmt = self.conn.prepare(&sql)?;
        let rows = stmt.query_map([], Self::summary_row)?;
        rows.map(|r| Ok(Self::to_summary(r?)?.1)).collect()
    }

    fn find(&self, snapshot_id: &str) -> Result<(i64, SnapshotSummary), StoreError> {
        let sql = format!("SELECT {} FROM snapshots WHERE snapshot_id = ?1", Self::SUMMARY_COLUMNS);
        let row = self
            .conn
            .query_row(&sql, [snapshot_id], Self::summary_row)
            .optional()?
            .ok_or_else(|| StoreError::NotFound(snapshot_id.to_string()))?;
        Self::to_summary(row)
    }

    pub fn summary(&self, snapshot_id: &str) -> Result<SnapshotSummary, StoreError> {
        Ok(self.find(snapshot_id)?.1)
    }

    pub fn load_snapshot(&self, snapshot_id: &str) -> Result<MeasurementSnapshot, StoreError> {
        let (sid, summary) = self.find(snapshot_id)?;

        let mut flows = Vec::new();
        let mut by_domain: HashMap<String, usize> = HashMap::new();
        let mut stmt =
            self.conn.prepare("SELECT domain, status, error_detail FROM domains WHERE sid = ?1 ORDER BY seq")?;
        let mut rows = stmt.query([sid])?;
        while let Some(r) = rows.next()? {
            let domain: String = r.get(0)?;
            let status: String = r.get(1)?;
            by_domain.insert(domain.clone(), flows.len());
            flows.push(ResolutionFlow {
                domain: DomainName::parse(&domain).map_err(|e| corrupt(format!("{domain}: {e}")))?,
                status: ResolutionStatus::parse(&status).ok_or_else(|| corrupt(format!("status {status}")))?,
                error_detail: r.get(2)?,
                ns_hosts: BTreeMap::new(),
                attributions: BTreeMap::new(),
                unmapped_ips: BTreeSet::new(),
            });
        }

        let flow_of = |domain: &str| -> Result<usize, StoreError> {
            by_domain.get(domain).copied().ok_or_else(|| corrupt(format!("orphan row for {domain}")))
        };
        let parse_name = |s: &str| DomainName::parse(s).map_err(|e| corrupt(format!("{s}: {e}")));
        let parse_ip = |s: &str| s.parse::<IpAddr>().map_err(|e| corrupt(format!("{s}: {e}")));

        let mut stmt = self.conn.prepare("SELECT domain, host FROM ns_hosts WHERE sid = ?1")?;
        let mut rows = stmt.query([sid])?;
        while let Some(r) = rows.next()? {
            let (domain, host): (String, String) = (r.get(0)?, r.get(1)?);
            let i = flow_of(&domain)?;
            flows[i].ns_hosts.entry(parse_name(&host)?).or_default();
        }

        let mut stmt = self.conn.prepare("SELECT domain, host, ip FROM ns_ips WHERE sid = ?1")?;
        let mut rows = stmt.query([sid])?;
        while let Some(r) = rows.next()? {
            let (domain, host, ip): (String, String, String) = (r.get(0)?, r.get(1)?, r.get(2)?);
            let i = flow_of(&domain)?;
            flows[i].ns_hosts.entry(parse_name(&host)?).or_default().insert(parse_ip(&ip)?);
        }

        let mut stmt = self.conn.prepare(
            "SELECT domain, ip, prefix, asn, as_name, org_id, org_name, country FROM attributions WHERE sid = ?1",
        )?;
        let mut rows = stmt.query([sid])?;
        while let Some(r) = rows.next()? {
            let (domain, ip): (String, String) = (r.get(0)?, r.get(1)?);
            let i = flow_of(&domain)?;
            let ip = parse_ip(&ip)?;
            let prefix: Option<String> = r.get(2)?;
            let asn: Option<u32> = r.get(3)?;
            match (prefix, asn) {
                (Some(prefix), Some(asn)) => {
                    let country: Option<String> = r.get(7)?;
                    flows[i].attributions.insert(
                        ip,
                        IpAttribution {
                            prefix: prefix.parse().map_err(|e| corrupt(format!("{prefix}: {e}")))?,
                            asn: Asn(asn),
                            as_name: r.get(4)?,
                            org_id: r.get(5)?,
                            org_name: r.get(6)?,
                            country: country.map(|c| CountryCode::normalize(&c)),
                        },
                    );
                }
                _ => {
                    flows[i].unmapped_ips.insert(ip);
                }
            }
        }

        Ok(MeasurementSnapshot {
            snapshot_id: summary.snapshot_id,
            meta: summary.meta,
            counters: summary.counters,
            flows,
        })
    }

    /// Snapshot ids whose stored counters break `input = ok + no_ns + failed
    /// + timed_out` or disagree with the stored domain rows.
    pub fn audit(&self) -> Result<Vec<String>, StoreError> {
        let mut stmt = self.conn.prepare(
            "SELECT s.snapshot_id FROM snapshots s
             WHERE s.snapshot_id <> 'pending' AND (
                s.input <> s.ok + s.no_ns + s.failed + s.timed_out
                OR s.input <> (SELECT COUNT(*) FROM domains d WHERE d.sid = s.sid)
                OR s.ok <> (SELECT COUNT(*) FROM domains d WHERE d.sid = s.sid AND d.status = 'ok')
                OR s.unmapped_ip <> (SELECT COUNT(*) FROM attributions a WHERE a.sid = s.sid AND a.asn IS NULL))
             ORDER BY s.snapshot_id",
        )?;
        let ids = stmt.query_map([], |r| r.get(0))?.collect::<Result<Vec<String>, _>>()?;
        Ok(ids)
    }

    /// Writes one JSON line per flow, in persisted order.
    pub fn export_snapshot<W: Write>(&self, snapshot_id: &str, mut out: W) -> Result<usize, StoreError> {
        let snapshot = self.load_snapshot(snapshot_id)?;
        for flow in &snapshot.flows {
            serde_json::to_writer(&mut out, &ExportRecord::from(flow)).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(snapshot.flows.len())
    }
}

fn insert_flow(tx: &Transaction<'_>, sid: i64, seq: i64, flow: &ResolutionFlow) -> Result<(), StoreError> {
    let domain = flow.domain.as_str();
    tx.prepare_cached("INSERT INTO domains (sid, seq, domain, status, error_detail) VALUES (?1, ?2, ?3, ?4, ?5)")?
        .execute(params![sid, seq, domain, flow.status.as_str(), flow.error_detail])?;
    let mut host_stmt = tx.prepare_cached("INSERT INTO ns_hosts (sid, domain, host) VALUES (?1, ?2, ?3)")?;
    let mut ip_stmt = tx.prepare_cached("INSERT INTO ns_ips (sid, domain, host, ip) VALUES (?1, ?2, ?3, ?4)")?;
    for (host, ips) in &flow.ns_hosts {
        host_stmt.execute(params![sid, domain, host.as_str()])?;
        for ip in ips {
            ip_stmt.execute(params![sid, domain, host.as_str(), ip.to_string()])?;
        }
    }
    let mut attr_stmt = tx.prepare_cached(
        "INSERT INTO attributions (sid, domain, ip, prefix, asn, as_name, org_id, org_name, country)
         VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9)",
    )?;
    for (ip, a) in &flow.attributions {
        attr_stmt.execute(params![
            sid,
            domain,
            ip.to_string(),
            a.prefix.to_string(),
            a.asn.0,
            a.as_name,
            a.org_id,
            a.org_name,
            a.country.map(|c| c.to_string()),
        ])?;
    }
    for ip in &flow.unmapped_ips {
        attr_stmt.execute(params![
            sid,
            domain,
            ip.to_string(),
            None::<String>,
            None::<u32>,
            None::<String>,
            None::<String>,
            None::<String>,
            None::<String>
        ])?;
    }
    Ok(())
}
