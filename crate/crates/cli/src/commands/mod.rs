pub mod analyze;
pub mod diff;
pub mod ingest;
pub mod measure;
