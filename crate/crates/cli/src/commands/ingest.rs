use std::path::Path;

use nsflow_core::flowmap::Store;

use crate::config::Loaded;
use crate::datasets;
use crate::error::CliResult;

/// Parses every dataset, rebuilds the prefix index cache and prints one line
/// per dataset: kind, label, parsed entries, skipped lines.
pub fn run(config: &Path) -> CliResult<()> {
    let loaded = Loaded::read(config)?;
    loaded.validate()?;
    let store = Store::open(&loaded.store_path())?;
    let inputs = datasets::load(&loaded, &store, false)?;
    println!("kind\tlabel\tentries\tskipped");
    for r in &inputs.records {
        println!("{}\t{}\t{}\t{}", r.kind, r.label, r.entries, r.skipped);
    }
    let stats = inputs.index.stats();
    println!(
        "prefix index {}: {} v4, {} v6, {} repeated prefixes collapsed",
        inputs.index.label(),
        stats.v4_entries,
        stats.v6_entries,
        stats.collapsed
    );
    Ok(())
}
