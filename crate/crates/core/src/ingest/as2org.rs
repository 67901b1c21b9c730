use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{trim_line, IngestError};
use crate::domain::{Asn, CountryCode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AsOrg {
    pub asn: Asn,
    pub as_name: String,
    pub org_id: String,
    pub org_name: String,
    pub country: CountryCode,
}

pub type OrgMap = HashMap<Asn, AsOrg>;

#[derive(Debug, Clone, Default)]
pub struct As2OrgParse {
    pub orgs: OrgMap,
    /// AS rows whose `org_id` had no organization row.
    pub skipped_joins: usize,
    /// AS numbers seen more than once; the last row wins.
    pub duplicate_asns: usize,
    /// Rows with too few fields, a bad AS number, or data before any header.
    pub malformed: usize,
}

#[derive(Debug, Clone, Copy)]
enum Section {
    Org { org_id: usize, name: usize, country: usize },
    Aut { aut: usize, aut_name: usize, org_id: usize },
}

impl Section {
    fn from_header(columns: &str) -> Option<Section> {
        let cols: Vec<&str> = columns.split('|').map(str::trim).collect();
        let find = |name: &str| cols.iter().position(|c| *c == name);
        if let Some(aut) = find("aut") {
            return Some(Section::Aut { aut, aut_name: find("aut_name")?, org_id: find("org_id")? });
        }
        Some(Section::Org {
            org_id: find("org_id")?,
            name: find("org_name").or_else(|| find("name"))?,
            country: find("country")?,
        })
    }
}

struct OrgRow {
    name: String,
    country: CountryCode,
}

/// Parses a CAIDA as-org2info text dump.
///
/// The file interleaves organization and AS sections, each announced by a
/// `# format:` line naming its columns. Rows are joined after the whole
/// stream is read, so an AS row may precede its organization.
pub fn parse_as2org<R: BufRead>(reader: R) -> Result<As2OrgParse, IngestError> {
    let mut out = As2OrgParse::default();
    let mut section: Option<Section> = None;
    let mut saw_header = false;
    let mut org_rows: HashMap<String, OrgRow> = HashMap::new();
    let mut aut_rows: Vec<(Asn, String, String)> = Vec::new();

    for line in reader.lines() {
        let line = line?;
        let line = trim_line(&line);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(columns) = comment.trim_start().strip_prefix("format:") {
                saw_header = true;
                section = Section::from_header(columns);
                if section.is_none() {
                    return Err(IngestError::Format(format!("unrecognized as2org header `{line}`")));
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        match section {
            None => out.malformed += 1,
            Some(Section::Org { org_id, name, country }) => {
                let (Some(id), Some(n), Some(c)) = (fields.get(org_id), fields.get(name), fields.get(country)) else {
                    out.malformed += 1;
                    continue;
                };
                org_rows.insert(id.to_string(), OrgRow { name: n.to_string(), country: CountryCode::normalize(c) });
            }
            Some(Section::Aut { aut, aut_name, org_id }) => {
                let (Some(a), Some(n), Some(o)) = (fields.get(aut), fields.get(aut_name), fields.get(org_id)) else {
                    out.malformed += 1;
                    continue;
                };
                match a.parse::<Asn>() {
                    Ok(asn) => aut_rows.push((asn, n.to_string(), o.to_string())),
                    Err(_) => out.malformed += 1,
                }
            }
        }
    }

    if !saw_header {
        return Err(IngestError::Format("no `#format:` header lines found".to_string()));
    }

    for (asn, as_name, org_id) in aut_rows {
        let record = match org_rows.get(&org_id) {
            Some(org) => AsOrg { asn, as_name, org_id, org_name: org.name.clone(), country: org.country },
            None => {
                out.skipped_joins += 1;
                AsOrg { asn, org_name: as_name.clone(), as_name, org_id, country: CountryCode::UNKNOWN }
            }
        };
        if out.orgs.insert(asn, record).is_some() {
            out.duplicate_asns += 1;
        }
    }
    Ok(out)
}

/// Writes an org map back out in as-org2info layout: one organization
/// section followed by one AS section, both sorted for stable output.
pub fn write_as2org<W: Write>(orgs: &OrgMap, mut out: W) -> std::io::Result<()> {
    let mut by_org: BTreeMap<&str, &AsOrg> = BTreeMap::new();
    for record in orgs.values() {
        by_org.entry(record.org_id.as_str()).or_insert(record);
    }
    writeln!(out, "# format:org_id|changed|org_name|country|source")?;
    for (org_id, record) in &by_org {
        writeln!(out, "{}||{}|{}|", org_id, record.org_name, record.country)?;
    }
    writeln!(out, "# format:aut|changed|aut_name|org_id|opaque_id|source")?;
    let mut asns: Vec<&AsOrg> = orgs.values().collect();
    asns.sort_by_key(|r| r.asn);
    for record in asns {
        writeln!(out, "{}||{}|{}||", record.asn.get(), record.as_name, record.org_id)?;
    }
    Ok(())
}
