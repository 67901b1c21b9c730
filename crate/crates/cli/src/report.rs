//! Report emission.
//!
//! Every table is written twice with identical field names: `{name}.csv`
//! (header row, UTF-8, LF) and `{name}.jsonl` (one object per row). A
//! `{name}.provenance.json` sidecar records the command, its parameters, the
//! effective configuration, the snapshots and dataset labels involved, and
//! `generated_at`, the only field that differs between identical runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;

use nsflow_core::flowmap::SnapshotSummary;

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SnapshotRef {
    pub snapshot_id: String,
    pub run_date: String,
    pub tranco_label: String,
    pub prefix2as_v4_label: String,
    pub prefix2as_v6_label: String,
    pub as2org_label: String,
}

impl From<&SnapshotSummary> for SnapshotRef {
    fn from(s: &SnapshotSummary) -> Self {
        SnapshotRef {
            snapshot_id: s.snapshot_id.clone(),
            run_date: s.meta.run_date.to_string(),
            tranco_label: s.meta.tranco_label.clone(),
            prefix2as_v4_label: s.meta.prefix2as_v4_label.clone(),
            prefix2as_v6_label: s.meta.prefix2as_v6_label.clone(),
            as2org_label: s.meta.as2org_label.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub snapshots: Vec<SnapshotRef>,
    pub outputs: Vec<String>,
    pub generated_at: String,
}

impl Provenance {
    pub fn new(command: &str, parameters: serde_json::Value) -> Self {
        Provenance {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            parameters,
            policy: None,
            config: None,
            snapshots: Vec::new(),
            outputs: Vec::new(),
            generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
        }
    }
}

/// A flat table row. `COLUMNS` names the serialized fields in order and
/// heads the CSV of an empty table.
pub trait Row: Serialize {
    const COLUMNS: &'static [&'static str];
}

/// Collects the tables of one report and writes them under `dir`.
pub struct ReportWriter {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ReportWriter {
    pub fn create(dir: &Path) -> CliResult<ReportWriter> {
        fs::create_dir_all(dir)?;
        Ok(ReportWriter { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn table<T: Row>(&mut self, name: &str, rows: &[T], provenance: &mut Provenance) -> CliResult<()> {
        let csv_path = self.dir.join(format!("{name}.csv"));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&csv_path)?;
        for row in rows {
            w.serialize(row)?;
        }
        if rows.is_empty() {
            w.write_record(T::COLUMNS)?;
        }
        w.flush()?;

        let jsonl_path = self.dir.join(format!("{name}.jsonl"));
        let mut out = BufWriter::new(File::create(&jsonl_path)?);
        for row in rows {
            serde_json::to_writer(&mut out, row)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;

        for p in [&csv_path, &jsonl_path] {
            provenance.outputs.push(p.file_name().unwrap().to_string_lossy().into_owned());
        }
        self.written.push(csv_path);
        self.written.push(jsonl_path);
        Ok(())
    }

    pub fn finish(mut self, name: &str, provenance: &Provenance) -> CliResult<Vec<PathBuf>> {
        let path = self.dir.join(format!("{name}.provenance.json"));
        let mut text = serde_json::to_string_pretty(provenance)?;
        text.push('\n');
        fs::write(&path, text)?;
        self.written.push(path);
        Ok(self.written)
    }
}
