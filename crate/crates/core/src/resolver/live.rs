//! Stub resolver client: sends recursive queries to configured upstreams
//! over UDP and retries over TCP when the answer is truncated.

use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpStream, UdpSocket};
use std::time::{Duration, Instant};

use super::wire::{decode_response, encode_query, Response};
use super::{Answer, Backend, QueryError, RecordType};

#[derive(Debug, Clone)]
pub struct StubBackend {
    upstreams: Vec<SocketAddr>,
}

impl StubBackend {
    pub fn new(upstreams: Vec<SocketAddr>) -> Self {
        StubBackend { upstreams }
    }

    fn exchange(
        &self,
        upstream: SocketAddr,
        name: &str,
        rtype: RecordType,
        timeout: Duration,
    ) -> Result<Response, QueryError> {
        let id: u16 = rand::random();
        let query = encode_query(id, name, rtype);
        let response = udp_exchange(upstream, &query, id, timeout)?;
        if response.truncated {
            return tcp_exchange(upstream, &query, id, timeout);
        }
        Ok(response)
    }
}

fn io_to_query_error(e: io::Error) -> QueryError {
    match e.kind() {
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => QueryError::Timeout,
        _ => QueryError::Unreachable(e.to_string()),
    }
}

fn udp_exchange(upstream: SocketAddr, query: &[u8], id: u16, timeout: Duration) -> Result<Response, QueryError> {
    let bind: SocketAddr = if upstream.is_ipv4() { ([0, 0, 0, 0], 0).into() } else { ([0u16; 8], 0).into() };
    let socket = UdpSocket::bind(bind).map_err(io_to_query_error)?;
    socket.connect(upstream).map_err(io_to_query_error)?;
    socket.send(query).map_err(io_to_query_error)?;
    let deadline = Instant::now() + timeout;
    let mut buf = [0u8; 4096];
    loop {
        let left = deadline.saturating_duration_since(Instant::now());
        if left.is_zero() {
            return Err(QueryError::Timeout);
        }
        socket.set_read_timeout(Some(left)).map_err(io_to_query_error)?;
        let n = socket.recv(&mut buf).map_err(io_to_query_error)?;
        // stray or spoofed datagrams with another id are dropped
        match decode_response(&buf[..n]) {
            Ok(r) if r.id == id => return Ok(r),
            Ok(_) => continue,
            Err(e) if n >= 2 && u16::from_be_bytes([buf[0], buf[1]]) == id => {
                return Err(QueryError::Malformed(e.0.to_string()))
            }
            Err(_) => continue,
        }
    }
}

fn tcp_exchange(upstream: SocketAddr, query: &[u8], id: u16, timeout: Duration) -> Result<Response, QueryError> {
    let mut stream = TcpStream::connect_timeout(&upstream, timeout).map_err(io_to_query_error)?;
    stream.set_read_timeout(Some(timeout)).map_err(io_to_query_error)?;
    stream.set_write_timeout(Some(timeout)).map_err(io_to_query_error)?;
    let mut framed = Vec::with_capacity(query.len() + 2);
    framed.extend_from_slice(&(query.len() as u16).to_be_bytes());
    framed.extend_from_slice(query);
    stream.write_all(&framed).map_err(io_to_query_error)?;
    let mut len = [0u8; 2];
    stream.read_exact(&mut len).map_err(io_to_query_error)?;
    let mut msg = vec![0u8; u16::from_be_bytes(len) as usize];
    stream.read_exact(&mut msg).map_err(io_to_query_error)?;
    let response = decode_response(&msg).map_err(|e| QueryError::Malformed(e.0.to_string()))?;
    if response.id != id {
        return Err(QueryError::Malformed("TCP answer id mismatch".into()));
    }
    Ok(response)
}

impl Backend for StubBackend {
    fn query(&self, name: &str, rtype: RecordType, timeout: Duration) -> Result<Answer, QueryError> {
        let mut last = QueryError::Unreachable("no upstream configured".into());
        for &upstream in &self.upstreams {
            match self.exchange(upstream, name, rtype, timeout) {
                Ok(response) => {
                    return match response.rcode {
                        0 => Ok(Answer { records: response.answers }),
                        3 => Err(QueryError::NxDomain),
                        5 => Err(QueryError::Refused),
                        2 => Err(QueryError::ServFail),
                        other => Err(QueryError::Malformed(format!("rcode {other}"))),
                    };
                }
                Err(e @ (QueryError::Timeout | QueryError::Unreachable(_))) => last = e,
                Err(e) => return Err(e),
            }
        }
        Err(last)
    }
}
