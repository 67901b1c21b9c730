//! Versioned binary cache of the rows behind an [`LpmIndex`].
//!
//! Layout (little-endian): 8-byte magic, u32 label length, label bytes,
//! u64 row count, then per row: family byte (4 or 6), address octets,
//! prefix length, moas kind byte, u16 origin count, u32 origins.
//! The trie itself is rebuilt on load.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::path::Path;

use ipnet::IpNet;
use thiserror::Error;

use super::LpmIndex;
use crate::domain::Asn;
use crate::ingest::{MoasKind, PrefixOrigin};

const MAGIC: &[u8; 8] = b"NSFLPM\x00\x01";

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache I/O: {0}")]
    Io(#[from] io::Error),
    #[error("cache file is corrupt: {0}")]
    Corrupt(&'static str),
}

pub fn write_index_cache(index: &LpmIndex, path: &Path) -> Result<(), CacheError> {
    let tmp = path.with_extension("tmp");
    {
        let mut out = BufWriter::new(File::create(&tmp)?);
        out.write_all(MAGIC)?;
        let label = index.label().as_bytes();
        out.write_all(&(label.len() as u32).to_le_bytes())?;
        out.write_all(label)?;
        out.write_all(&(index.routes().len() as u64).to_le_bytes())?;
        for route in index.routes() {
            match route.prefix.addr() {
                IpAddr::V4(a) => {
                    out.write_all(&[4])?;
                    out.write_all(&a.octets())?;
                }
                IpAddr::V6(a) => {
                    out.write_all(&[6])?;
                    out.write_all(&a.octets())?;
                }
            }
            let kind = match route.moas_kind {
                MoasKind::Single => 0u8,
                MoasKind::MultiOrigin => 1,
                MoasKind::AsSet => 2,
            };
            out.write_all(&[route.prefix.prefix_len(), kind])?;
            out.write_all(&(route.origins.len() as u16).to_le_bytes())?;
            for asn in &route.origins {
                out.write_all(&asn.get().to_le_bytes())?;
            }
        }
        out.flush()?;
    }
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// Loads a cached index. Returns `Ok(None)` when the file is missing, was
/// written by another format version, or carries a different dataset label.
pub fn read_index_cache(path: &Path, expected_label: &str) -> Result<Option<LpmIndex>, CacheError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut input = BufReader::new(file);
    let mut magic = [0u8; 8];
    if input.read_exact(&mut magic).is_err() || &magic != MAGIC {
        return Ok(None);
    }
    let label_len = read_u32(&mut input)? as usize;
    let mut label = vec![0u8; label_len];
    input.read_exact(&mut label)?;
    if label != expected_label.as_bytes() {
        return Ok(None);
    }
    let count = read_u64(&mut input)?;
    let mut rows = Vec::with_capacity(count.min(1 << 24) as usize);
    for _ in 0..count {
        let addr = match read_u8(&mut input)? {
            4 => {
                let mut o = [0u8; 4];
                input.read_exact(&mut o)?;
                IpAddr::V4(Ipv4Addr::from(o))
            }
            6 => {
                let mut o = [0u8; 16];
                input.read_exact(&mut o)?;
                IpAddr::V6(Ipv6Addr::from(o))
            }
            _ => return Err(CacheError::Corrupt("bad address family")),
        };
        let len = read_u8(&mut input)?;
        let kind = match read_u8(&mut input)? {
            0 => MoasKind::Single,
            1 => MoasKind::MultiOrigin,
            2 => MoasKind::AsSet,
            _ => return Err(CacheError::Corrupt("bad moas kind")),
        };
        let n = u16::from_le_bytes(read_array(&mut input)?);
        if n == 0 {
            return Err(CacheError::Corrupt("row without origins"));
        }
        let mut origins = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let asn = Asn::new(read_u32(&mut input)?).ok_or(CacheError::Corrupt("AS 0"))?;
            origins.push(asn);
        }
        let prefix = IpNet::new(addr, len).map_err(|_| CacheError::Corrupt("bad prefix length"))?;
        rows.push(PrefixOrigin::new(prefix, origins, kind));
    }
    Ok(Some(LpmIndex::build(rows, expected_label)))
}

fn read_array<const N: usize>(input: &mut impl Read) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u8(input: &mut impl Read) -> io::Result<u8> {
    Ok(read_array::<1>(input)?[0])
}

fn read_u32(input: &mut impl Read) -> io::Result<u32> {
    Ok(u32::from_le_bytes(read_array(input)?))
}

fn read_u64(input: &mut impl Read) -> io::Result<u64> {
    Ok(u64::from_le_bytes(read_array(input)?))
}
