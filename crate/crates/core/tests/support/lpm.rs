//! Random prefix sets and a linear-scan longest-prefix oracle.

use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use ipnet::{IpNet, Ipv4Net, Ipv6Net};
use rand::Rng;

use nsflow_core::ingest::{AddressFamily, PrefixOrigin};
use nsflow_core::ip2as::LpmIndex;
use nsflow_core::Asn;

/// The covering prefix with the longest mask; among equal prefixes the last
/// listed wins.
pub fn oracle(routes: &[PrefixOrigin], ip: IpAddr) -> Option<(IpNet, Asn)> {
    let mut best: Option<&PrefixOrigin> = None;
    for r in routes {
        if r.prefix.contains(&ip) && best.is_none_or(|b| r.prefix.prefix_len() >= b.prefix.prefix_len()) {
            best = Some(r);
        }
    }
    best.map(|r| (r.prefix, r.primary_origin()))
}

fn random_bits<R: Rng>(rng: &mut R, family: AddressFamily) -> u128 {
    match family {
        AddressFamily::V4 => rng.gen::<u32>() as u128,
        AddressFamily::V6 => rng.gen::<u128>(),
    }
}

fn to_ip(bits: u128, family: AddressFamily) -> IpAddr {
    match family {
        AddressFamily::V4 => IpAddr::V4(Ipv4Addr::from(bits as u32)),
        AddressFamily::V6 => IpAddr::V6(Ipv6Addr::from(bits)),
    }
}

fn width(family: AddressFamily) -> u32 {
    match family {
        AddressFamily::V4 => 32,
        AddressFamily::V6 => 128,
    }
}

/// Flips a few low-order bits so the address stays near `anchor`.
fn near<R: Rng>(rng: &mut R, anchor: u128, family: AddressFamily) -> u128 {
    let w = width(family);
    let keep = rng.gen_range(0..=w);
    let mask = if keep == 0 { 0 } else { (u128::MAX >> (128 - w)) << (w - keep) & (u128::MAX >> (128 - w)) };
    (anchor & mask) | (random_bits(rng, family) & !mask & (u128::MAX >> (128 - w)))
}

/// A prefix set clustered around a few anchors so that prefixes nest and
/// repeat; queries mix addresses near anchors with uniform ones.
pub fn case<R: Rng>(rng: &mut R, family: AddressFamily, queries: usize) -> (Vec<PrefixOrigin>, Vec<IpAddr>) {
    let anchors: Vec<u128> = (0..rng.gen_range(1..=4)).map(|_| random_bits(rng, family)).collect();
    let w = width(family);
    let n = rng.gen_range(0..=40);
    let routes: Vec<PrefixOrigin> = (0..n)
        .map(|_| {
            let anchor = anchors[rng.gen_range(0..anchors.len())];
            let len = if rng.gen_bool(0.05) { 0 } else { rng.gen_range(1..=w) as u8 };
            let addr = near(rng, anchor, family);
            let net = match family {
                AddressFamily::V4 => IpNet::V4(Ipv4Net::new(Ipv4Addr::from(addr as u32), len).unwrap()),
                AddressFamily::V6 => IpNet::V6(Ipv6Net::new(Ipv6Addr::from(addr), len).unwrap()),
            };
            PrefixOrigin::single(net.trunc(), Asn(rng.gen_range(1..=u32::MAX)))
        })
        .collect();
    let ips = (0..queries)
        .map(|_| {
            if rng.gen_bool(0.8) {
                let anchor = anchors[rng.gen_range(0..anchors.len())];
                to_ip(near(rng, anchor, family), family)
            } else {
                to_ip(random_bits(rng, family), family)
            }
        })
        .collect();
    (routes, ips)
}

/// Runs `sets` random cases of `queries` lookups each; returns the number of
/// checked pairs or the first mismatch.
pub fn check_family<R: Rng>(rng: &mut R, family: AddressFamily, sets: usize, queries: usize) -> Result<usize, String> {
    let mut checked = 0;
    for _ in 0..sets {
        let (routes, ips) = case(rng, family, queries);
        let index = LpmIndex::build(routes.clone(), "oracle");
        for ip in ips {
            let got = index.longest_match(ip).map(|r| (r.prefix, r.primary_origin()));
            let want = oracle(&routes, ip);
            if got != want {
                return Err(format!("{ip}: index {got:?} oracle {want:?} routes {routes:?}"));
            }
            checked += 1;
        }
    }
    Ok(checked)
}
