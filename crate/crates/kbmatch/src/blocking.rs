//! Name and token blocking with Block Purging.
//!
//! Token blocking places two entities in a common block when they share a
//! word in any of their values; name blocking when they share a name string.
//! Only cross-KB blocks are kept (clean-clean resolution never compares
//! entities of the same KB), and oversized token blocks, which correspond to
//! highly frequent tokens, are purged under a global comparison budget.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kb::{AttrId, GroundTruth, KnowledgeBase};
use crate::stats::names_of;

/// One block: the entities of each KB indexed under a common key.
#[derive(Debug, Clone)]
pub struct Block {
    pub key: String,
    /// Sorted KB1 entity indices.
    pub sub1: Vec<u32>,
    /// Sorted KB2 entity indices.
    pub sub2: Vec<u32>,
}

impl Block {
    /// Cross-KB comparisons suggested by this block.
    pub fn comparisons(&self) -> u64 {
        self.sub1.len() as u64 * self.sub2.len() as u64
    }
}

/// Name blocks, purged token blocks, and the purged keys.
#[derive(Debug)]
pub struct BlockCollection {
    pub name_blocks: Vec<Block>,
    pub token_blocks: Vec<Block>,
    pub purged_keys: Vec<String>,
}

impl BlockCollection {
    pub fn blocks(&self) -> impl Iterator<Item = &Block> {
        self.name_blocks.iter().chain(self.token_blocks.iter())
    }
}

/// One block per token appearing in both KBs; sub-block sizes equal the
/// per-KB Entity Frequency of the token, so value similarity can later be
/// recovered from block sizes alone. Blocks are sorted by key.
pub fn token_blocking(kb1: &KnowledgeBase, kb2: &KnowledgeBase) -> Vec<Block> {
    let mut blocks = Vec::new();
    // Token ids are lex-ordered, so walking KB1's tokens yields sorted keys.
    for t1 in 0..kb1.token_count() as u32 {
        let key = kb1.token_str(t1);
        let Some(t2) = kb2.token_id(key) else {
            continue;
        };
        blocks.push(Block {
            key: key.to_string(),
            sub1: kb1.posting(t1).to_vec(),
            sub2: kb2.posting(t2).to_vec(),
        });
    }
    blocks
}

/// One block per name string shared by both KBs, keyed by exact equality.
pub fn name_blocking(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    name_attrs1: &[AttrId],
    name_attrs2: &[AttrId],
) -> Vec<Block> {
    let mut by_name: BTreeMap<String, (Vec<u32>, Vec<u32>)> = BTreeMap::new();
    for e in 0..kb1.len() as u32 {
        for name in names_of(kb1, e, name_attrs1) {
            by_name.entry(name).or_default().0.push(e);
        }
    }
    for e in 0..kb2.len() as u32 {
        for name in names_of(kb2, e, name_attrs2) {
            // Only names already seen in KB1 can form a cross-KB block.
            if let Some(entry) = by_name.get_mut(&name) {
                entry.1.push(e);
            }
        }
    }
    by_name
        .into_iter()
        .filter(|(_, (s1, s2))| !s1.is_empty() && !s2.is_empty())
        .map(|(key, (sub1, sub2))| Block { key, sub1, sub2 })
        .collect()
}

/// Removes the largest token blocks until the retained comparisons fit the
/// budget `max_fraction * |E1| * |E2|`. Returns the retained blocks (sorted
/// by key) and the purged keys.
///
/// Removal order is by descending comparison count, ties by key, which makes
/// purging monotone: a lower fraction never retains more blocks.
pub fn purge_blocks(
    mut token_blocks: Vec<Block>,
    max_fraction: f64,
    kb1_len: usize,
    kb2_len: usize,
) -> Result<(Vec<Block>, Vec<String>)> {
    if !(max_fraction > 0.0 && max_fraction <= 1.0) {
        return Err(Error::Parameter {
            name: "purge-fraction",
            reason: format!("{max_fraction} is outside (0, 1]"),
        });
    }
    let budget = (max_fraction * kb1_len as f64 * kb2_len as f64).floor() as u64;
    let mut total: u64 = token_blocks.iter().map(Block::comparisons).sum();
    token_blocks.sort_by(|a, b| b.comparisons().cmp(&a.comparisons()).then(a.key.cmp(&b.key)));

    let mut purged = Vec::new();
    let mut retained_from = 0usize;
    while total > budget && retained_from < token_blocks.len() {
        total -= token_blocks[retained_from].comparisons();
        purged.push(token_blocks[retained_from].key.clone());
        retained_from += 1;
    }
    let mut retained = token_blocks.split_off(retained_from);
    retained.sort_by(|a, b| a.key.cmp(&b.key));
    purged.sort_unstable();
    Ok((retained, purged))
}

/// Builds the full block collection: name blocks plus purged token blocks.
pub fn build_blocks(
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    name_attrs1: &[AttrId],
    name_attrs2: &[AttrId],
    purge_fraction: f64,
) -> Result<BlockCollection> {
    let name_blocks = name_blocking(kb1, kb2, name_attrs1, name_attrs2);
    let raw_tokens = token_blocking(kb1, kb2);
    let (token_blocks, purged_keys) =
        purge_blocks(raw_tokens, purge_fraction, kb1.len(), kb2.len())?;
    Ok(BlockCollection {
        name_blocks,
        token_blocks,
        purged_keys,
    })
}

/// Pair-level statistics of a block collection against ground truth.
#[derive(Debug, Clone, Serialize)]
pub struct BlockStats {
    pub name_blocks: usize,
    pub token_blocks: usize,
    pub name_comparisons: u64,
    pub token_comparisons: u64,
    pub cartesian: u64,
    pub purged_tokens: usize,
    /// Ground-truth pairs co-occurring in at least one retained block.
    pub covered_matches: usize,
    pub total_matches: usize,
    /// Percentages, following the convention that a comparison suggested by
    /// several blocks counts once per block.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Computes Table-style block statistics: block counts, aggregate
/// comparisons, and pair-level precision/recall/F1 where a ground-truth pair
/// is covered when it co-occurs in at least one retained block.
pub fn block_stats(
    collection: &BlockCollection,
    kb1: &KnowledgeBase,
    kb2: &KnowledgeBase,
    truth: &GroundTruth,
) -> BlockStats {
    let name_comparisons: u64 = collection.name_blocks.iter().map(Block::comparisons).sum();
    let token_comparisons: u64 = collection.token_blocks.iter().map(Block::comparisons).sum();

    let covered = truth
        .pairs()
        .iter()
        .filter(|&&(i, j)| pair_co_occurs(collection, i, j))
        .count();

    let total_comparisons = name_comparisons + token_comparisons;
    let precision = if total_comparisons > 0 {
        100.0 * covered as f64 / total_comparisons as f64
    } else {
        0.0
    };
    let recall = if !truth.is_empty() {
        100.0 * covered as f64 / truth.len() as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    BlockStats {
        name_blocks: collection.name_blocks.len(),
        token_blocks: collection.token_blocks.len(),
        name_comparisons,
        token_comparisons,
        cartesian: kb1.len() as u64 * kb2.len() as u64,
        purged_tokens: collection.purged_keys.len(),
        covered_matches: covered,
        total_matches: truth.len(),
        precision,
        recall,
        f1,
    }
}

fn pair_co_occurs(collection: &BlockCollection, i: u32, j: u32) -> bool {
    collection.blocks().any(|b| {
        b.sub1.binary_search(&i).is_ok() && b.sub2.binary_search(&j).is_ok()
    })
}
