//! Measurement pipeline for authoritative DNS hosting.
//!
//! Domains from a popularity list are resolved to their authoritative
//! nameservers, each nameserver address is attributed to an origin AS,
//! organization and country, and the resulting resolution flows are stored
//! as dated snapshots for centralization and sovereignty analytics.

pub mod analytics;
pub mod domain;
pub mod flowmap;
pub mod ingest;
pub mod ip2as;
pub mod resolver;

pub use domain::{Asn, CountryCode, DomainName};
