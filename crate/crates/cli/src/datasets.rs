//! Loading the pinned input datasets.
//!
//! Every dataset is labelled `{file name}@{first 12 hex digits of its
//! sha256}`, so a label names exact content. The prefix index is cached next
//! to the store under the combined v4/v6 label and rebuilt only when either
//! file changes.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use sha2::{Digest, Sha256};

use nsflow_core::flowmap::{DatasetRecord, Store};
use nsflow_core::ingest::{
    parse_as2org, parse_prefix2as, parse_tranco, AddressFamily, OrgMap, PrefixOrigin, TrancoEntry,
};
use nsflow_core::ip2as::{read_index_cache, write_index_cache, LpmIndex};

use crate::config::Loaded;
use crate::error::{CliError, CliResult};

/// Label used for an absent IPv6 routing file.
pub const NO_DATASET: &str = "none";

struct RawFile {
    path: PathBuf,
    bytes: Vec<u8>,
    label: String,
    sha256: String,
}

impl RawFile {
    fn read(path: PathBuf) -> CliResult<RawFile> {
        let bytes = fs::read(&path).map_err(|e| CliError::open(&path, e))?;
        let sha256 = hex::encode(Sha256::digest(&bytes));
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let label = format!("{name}@{}", &sha256[..12]);
        Ok(RawFile { path, bytes, label, sha256 })
    }

    fn record(&self, kind: &str, entries: usize, skipped: usize) -> DatasetRecord {
        DatasetRecord {
            label: self.label.clone(),
            kind: kind.to_string(),
            path: self.path.display().to_string(),
            sha256: self.sha256.clone(),
            entries: entries as u64,
            skipped: skipped as u64,
        }
    }
}

#[derive(Debug)]
pub struct Inputs {
    pub tranco: Vec<TrancoEntry>,
    pub orgs: OrgMap,
    pub index: LpmIndex,
    /// One record per dataset read, in the order tranco, v4, v6, as2org.
    /// Prefix files served from the cache are not re-parsed and not listed.
    pub records: Vec<DatasetRecord>,
    pub tranco_label: String,
    pub v4_label: String,
    pub v6_label: String,
    pub as2org_label: String,
}

pub fn cache_path(store: &Path) -> PathBuf {
    let mut name = store.as_os_str().to_owned();
    name.push(".lpm");
    PathBuf::from(name)
}

fn parse_routes(raw: &RawFile, family: AddressFamily, kind: &str) -> CliResult<(Vec<PrefixOrigin>, DatasetRecord)> {
    let parsed = parse_prefix2as(raw.bytes.as_slice(), family).map_err(|e| CliError::ingest(&raw.path, e))?;
    if parsed.records.is_empty() && family == AddressFamily::V4 {
        return Err(CliError::format(format!("{}: no valid {kind} rows", raw.path.display())));
    }
    let record = raw.record(kind, parsed.records.len(), parsed.skipped);
    Ok((parsed.records, record))
}

/// Reads, labels and parses the configured datasets and records them in the
/// store. With `use_cache`, the prefix index is taken from the cache when
/// its label matches.
pub fn load(loaded: &Loaded, store: &Store, use_cache: bool) -> CliResult<Inputs> {
    let d = &loaded.config.datasets;
    let mut records = Vec::new();

    let tranco_raw = RawFile::read(loaded.resolve(&d.tranco))?;
    let tranco = parse_tranco(tranco_raw.bytes.as_slice()).map_err(|e| CliError::ingest(&tranco_raw.path, e))?;
    if tranco.entries.is_empty() {
        return Err(CliError::format(format!("{}: no valid rank,domain rows", tranco_raw.path.display())));
    }
    records.push(tranco_raw.record("tranco", tranco.entries.len(), tranco.skipped));

    let v4_raw = RawFile::read(loaded.resolve(&d.prefix2as_v4))?;
    let v6_raw = d.prefix2as_v6.as_ref().map(|p| RawFile::read(loaded.resolve(p))).transpose()?;
    let v6_label = v6_raw.as_ref().map_or_else(|| NO_DATASET.to_string(), |r| r.label.clone());
    let index_label = format!("{}+{}", v4_raw.label, v6_label);
    let cache = cache_path(&loaded.store_path());
    let cached = if use_cache { read_index_cache(&cache, &index_label)? } else { None };
    let index = match cached {
        Some(index) => {
            info!("prefix index {index_label} loaded from {}", cache.display());
            index
        }
        None => {
            let (mut routes, v4_record) = parse_routes(&v4_raw, AddressFamily::V4, "prefix2as_v4")?;
            records.push(v4_record);
            if let Some(raw) = &v6_raw {
                let (v6_routes, v6_record) = parse_routes(raw, AddressFamily::V6, "prefix2as_v6")?;
                routes.extend(v6_routes);
                records.push(v6_record);
            }
            let index = LpmIndex::build(routes, index_label.clone());
            if let Err(e) = write_index_cache(&index, &cache) {
                warn!("could not write prefix index cache {}: {e}", cache.display());
            }
            index
        }
    };

    let as2org_raw = RawFile::read(loaded.resolve(&d.as2org))?;
    let as2org = parse_as2org(as2org_raw.bytes.as_slice()).map_err(|e| CliError::ingest(&as2org_raw.path, e))?;
    if as2org.duplicate_asns > 0 {
        warn!("{}: {} repeated ASNs, last row kept", as2org_raw.path.display(), as2org.duplicate_asns);
    }
    records.push(as2org_raw.record("as2org", as2org.orgs.len(), as2org.malformed + as2org.skipped_joins));

    for r in &records {
        store.record_dataset(r)?;
    }
    Ok(Inputs {
        tranco: tranco.entries,
        orgs: as2org.orgs,
        index,
        records,
        tranco_label: tranco_raw.label,
        v4_label: v4_raw.label,
        v6_label,
        as2org_label: as2org_raw.label,
    })
}
