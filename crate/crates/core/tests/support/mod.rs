//! Shared test fixtures and reference implementations.
#![allow(dead_code)]

pub mod lpm;
pub mod random;
pub mod reference;
pub mod targets;
pub mod world;
