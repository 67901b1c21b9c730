//! Minimal DNS message codec: one-question queries out, answer sections in.

use std::net::{Ipv4Addr, Ipv6Addr};

use super::{RData, Record, RecordType};

pub(crate) const CLASS_IN: u16 = 1;
const TYPE_OPT: u16 = 41;
const EDNS_PAYLOAD: u16 = 1232;
const MAX_POINTER_HOPS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Response {
    pub id: u16,
    pub truncated: bool,
    pub rcode: u8,
    pub answers: Vec<Record>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct WireError(pub &'static str);

/// Encodes a recursive query for `name` with an EDNS0 OPT record.
pub(crate) fn encode_query(id: u16, name: &str, rtype: RecordType) -> Vec<u8> {
    let mut msg = Vec::with_capacity(64);
    msg.extend_from_slice(&id.to_be_bytes());
    msg.extend_from_slice(&0x0100u16.to_be_bytes()); // RD
    msg.extend_from_slice(&1u16.to_be_bytes()); // QDCOUNT
    msg.extend_from_slice(&0u16.to_be_bytes());
    msg.extend_from_slice(&0u16.to_be_bytes());
    msg.extend_from_slice(&1u16.to_be_bytes()); // ARCOUNT (OPT)
    encode_name(&mut msg, name);
    msg.extend_from_slice(&rtype.code().to_be_bytes());
    msg.extend_from_slice(&CLASS_IN.to_be_bytes());
    // OPT pseudo-record: root owner, type, payload size, ext-rcode/flags, rdlen
    msg.push(0);
    msg.extend_from_slice(&TYPE_OPT.to_be_bytes());
    msg.extend_from_slice(&EDNS_PAYLOAD.to_be_bytes());
    msg.extend_from_slice(&0u32.to_be_bytes());
    msg.extend_from_slice(&0u16.to_be_bytes());
    msg
}

pub(crate) fn encode_name(msg: &mut Vec<u8>, name: &str) {
    for label in name.trim_end_matches('.').split('.').filter(|l| !l.is_empty()) {
        let bytes = label.as_bytes();
        msg.push(bytes.len().min(63) as u8);
        msg.extend_from_slice(&bytes[..bytes.len().min(63)]);
    }
    msg.push(0);
}

struct Cursor<'a> {
    msg: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError("length overflow"))?;
        let slice = self.msg.get(self.pos..end).ok_or(WireError("message truncated"))?;
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16, WireError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn name(&mut self) -> Result<String, WireError> {
        let (name, end) = read_name(self.msg, self.pos)?;
        self.pos = end;
        Ok(name)
    }
}

/// Reads a possibly compressed name at `start`. Returns the lowercased name
/// without trailing dot and the offset just past its in-place encoding.
fn read_name(msg: &[u8], start: usize) -> Result<(String, usize), WireError> {
    let mut labels: Vec<String> = Vec::new();
    let mut pos = start;
    let mut end = None;
    let mut hops = 0;
    loop {
        let len = *msg.get(pos).ok_or(WireError("name runs past message"))? as usize;
        match len & 0xC0 {
            0x00 => {
                if len == 0 {
                    end.get_or_insert(pos + 1);
                    break;
                }
                let label = msg.get(pos + 1..pos + 1 + len).ok_or(WireError("label runs past message"))?;
                labels.push(String::from_utf8_lossy(label).to_ascii_lowercase());
                pos += 1 + len;
            }
            0xC0 => {
                let lo = *msg.get(pos + 1).ok_or(WireError("pointer runs past message"))? as usize;
                end.get_or_insert(pos + 2);
                hops += 1;
                if hops > MAX_POINTER_HOPS {
                    return Err(WireError("compression loop"));
                }
                pos = ((len & 0x3F) << 8) | lo;
            }
            _ => return Err(WireError("unsupported label type")),
        }
    }
    Ok((labels.join("."), end.unwrap_or(pos + 1)))
}

pub(crate) fn decode_response(msg: &[u8]) -> Result<Response, WireError> {
    let mut c = Cursor { msg, pos: 0 };
    let id = c.u16()?;
    let flags = c.u16()?;
    if flags & 0x8000 == 0 {
        return Err(WireError("not a response"));
    }
    let qdcount = c.u16()?;
    let ancount = c.u16()?;
    c.u16()?;
    c.u16()?;
    let truncated = flags & 0x0200 != 0;
    let rcode = (flags & 0x000F) as u8;
    for _ in 0..qdcount {
        c.name()?;
        c.take(4)?;
    }
    let mut answers = Vec::new();
    for _ in 0..ancount {
        let owner = match c.name() {
            Ok(n) => n,
            Err(_) if truncated => break,
            Err(e) => return Err(e),
        };
        let rtype = c.u16()?;
        let class = c.u16()?;
        let _ttl = c.u32()?;
        let rdlen = c.u16()? as usize;
        let rdata_start = c.pos;
        let rdata = c.take(rdlen)?;
        if class != CLASS_IN {
            continue;
        }
        let data = match rtype {
            1 if rdlen == 4 => RData::A(Ipv4Addr::new(rdata[0], rdata[1], rdata[2], rdata[3])),
            28 if rdlen == 16 => {
                let mut o = [0u8; 16];
                o.copy_from_slice(rdata);
                RData::Aaaa(Ipv6Addr::from(o))
            }
            2 => RData::Ns(read_name(msg, rdata_start)?.0),
            5 => RData::Cname(read_name(msg, rdata_start)?.0),
            _ => continue,
        };
        answers.push(Record { owner, data });
    }
    Ok(Response { id, truncated, rcode, answers })
}
