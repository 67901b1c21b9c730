use std::io::BufRead;
use std::net::IpAddr;

use ipnet::IpNet;
use serde::{Deserialize, Serialize};

use super::{trim_line, IngestError};
use crate::domain::Asn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AddressFamily {
    V4,
    V6,
}

impl AddressFamily {
    pub fn max_len(self) -> u8 {
        match self {
            AddressFamily::V4 => 32,
            AddressFamily::V6 => 128,
        }
    }

    pub fn of(ip: &IpAddr) -> Self {
        match ip {
            IpAddr::V4(_) => AddressFamily::V4,
            IpAddr::V6(_) => AddressFamily::V6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoasKind {
    Single,
    MultiOrigin,
    AsSet,
}

/// One prefix2as row. The prefix is always stored with host bits cleared.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixOrigin {
    pub prefix: IpNet,
    pub origins: Vec<Asn>,
    pub moas_kind: MoasKind,
}

impl PrefixOrigin {
    pub fn new(prefix: IpNet, origins: Vec<Asn>, moas_kind: MoasKind) -> Self {
        PrefixOrigin { prefix: prefix.trunc(), origins, moas_kind }
    }

    pub fn single(prefix: IpNet, asn: Asn) -> Self {
        Self::new(prefix, vec![asn], MoasKind::Single)
    }

    /// The origin used for attribution.
    pub fn primary_origin(&self) -> Asn {
        self.origins[0]
    }

    pub fn family(&self) -> AddressFamily {
        AddressFamily::of(&self.prefix.addr())
    }

    /// Renders the row back into the tab-separated prefix2as layout.
    pub fn to_prefix2as_line(&self) -> String {
        let sep = match self.moas_kind {
            MoasKind::AsSet => ",",
            _ => "_",
        };
        let spec = self.origins.iter().map(|a| a.get().to_string()).collect::<Vec<_>>().join(sep);
        format!("{}\t{}\t{}", self.prefix.addr(), self.prefix.prefix_len(), spec)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Prefix2AsParse {
    pub records: Vec<PrefixOrigin>,
    pub skipped: usize,
}

/// Parses a CAIDA routeviews prefix2as file for one address family.
///
/// Rows whose address is of the other family, whose mask length is out of
/// range, or whose AS field contains a non-numeric or zero token are skipped
/// and counted. `#` lines and blank lines are ignored.
pub fn parse_prefix2as<R: BufRead>(reader: R, family: AddressFamily) -> Result<Prefix2AsParse, IngestError> {
    let mut out = Prefix2AsParse::default();
    for line in reader.lines() {
        let line = line?;
        let line = trim_line(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_line(line, family) {
            Some(record) => out.records.push(record),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

fn parse_line(line: &str, family: AddressFamily) -> Option<PrefixOrigin> {
    let mut fields = line.split('\t');
    let addr: IpAddr = fields.next()?.trim().parse().ok()?;
    let len: u8 = fields.next()?.trim().parse().ok()?;
    let spec = fields.next()?.trim();
    if fields.next().is_some() || AddressFamily::of(&addr) != family || len > family.max_len() {
        return None;
    }
    let prefix = IpNet::new(addr, len).ok()?;
    let (origins, moas_kind) = parse_asn_spec(spec)?;
    Some(PrefixOrigin::new(prefix, origins, moas_kind))
}

/// `N`, `N_M` (multi-origin), `N,M` (AS set), or a mix split on `_` first.
fn parse_asn_spec(spec: &str) -> Option<(Vec<Asn>, MoasKind)> {
    if spec.is_empty() {
        return None;
    }
    let kind = if spec.contains('_') {
        MoasKind::MultiOrigin
    } else if spec.contains(',') {
        MoasKind::AsSet
    } else {
        MoasKind::Single
    };
    let mut origins: Vec<Asn> = Vec::new();
    for group in spec.split('_') {
        for token in group.split(',') {
            let value: u32 = token.trim().parse().ok()?;
            let asn = Asn::new(value)?;
            if !origins.contains(&asn) {
                origins.push(asn);
            }
        }
    }
    let kind = if origins.len() == 1 { MoasKind::Single } else { kind };
    Some((origins, kind))
}
