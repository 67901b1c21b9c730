use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::TrancoEntry;
use crate::domain::DomainName;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RankChange {
    pub domain: DomainName,
    pub old_rank: u32,
    pub new_rank: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetDiff {
    pub added: BTreeSet<DomainName>,
    pub removed: BTreeSet<DomainName>,
    pub rank_changed: BTreeSet<RankChange>,
}

impl DatasetDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.rank_changed.is_empty()
    }
}

fn rank_index(list: &[TrancoEntry]) -> HashMap<&DomainName, u32> {
    let mut index = HashMap::with_capacity(list.len());
    for entry in list {
        index.entry(&entry.domain).or_insert(entry.rank);
    }
    index
}

/// Set difference on domain names plus rank moves for domains in both lists.
/// A domain listed twice keeps its first rank.
pub fn diff_tranco(old: &[TrancoEntry], new: &[TrancoEntry]) -> DatasetDiff {
    let old_ranks = rank_index(old);
    let new_ranks = rank_index(new);
    let mut diff = DatasetDiff::default();
    for (domain, &new_rank) in &new_ranks {
        match old_ranks.get(domain) {
            None => {
                diff.added.insert((*domain).clone());
            }
            Some(&old_rank) if old_rank != new_rank => {
                diff.rank_changed.insert(RankChange { domain: (*domain).clone(), old_rank, new_rank });
            }
            Some(_) => {}
        }
    }
    for domain in old_ranks.keys() {
        if !new_ranks.contains_key(domain) {
            diff.removed.insert((*domain).clone());
        }
    }
    diff
}
