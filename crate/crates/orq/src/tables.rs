//! Universal-table registry.
//!
//! Universal tables depend only on global parameters, so a table for a given
//! key is built at most once and shared by every structure instance. The
//! registry enforces a total bit budget; a table whose projected size exceeds
//! the remaining budget is recorded as denied and callers fall back to a
//! per-element computation with identical results.

use crate::counters;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableKey {
    /// Bit-field extraction over blocks of packed elements.
    Extract { width: u32, s: u32, f: u32, block: u32 },
    /// Minimum value of a block of packed elements.
    BlockMin { width: u32, block: u32 },
    /// In-block rank (number of strictly smaller elements) per element.
    BlockRanks { width: u32, block: u32 },
    /// Patricia trie skeleton for a sorted distinct block.
    TrieBlock { width: u32, block: u32 },
    /// First-occurrence bit mask for a sorted block, keyed with a carry flag.
    FirstOcc { width: u32, block: u32 },
    /// Partial-rank answers for each prefix position of a block.
    PartialRank { width: u32, block: u32 },
    /// Split of a block into elements with a given bit clear/set, boundary
    /// elements (LSB flag 0) going to both sides.
    BoundarySplit { width: u32, bit: u32, block: u32 },
}

#[derive(Debug)]
pub struct Table {
    pub data: Vec<u64>,
    /// Bits per table entry (entries are stored entry-per-u64-group).
    pub entry_words: usize,
}

impl Table {
    #[inline]
    pub fn entry(&self, idx: usize) -> &[u64] {
        counters::bump_table_lookup();
        &self.data[idx * self.entry_words..(idx + 1) * self.entry_words]
    }
}

#[derive(Debug)]
pub struct TableRegistry {
    cap_bits: u64,
    used_bits: AtomicU64,
    entries: RwLock<HashMap<TableKey, Option<Arc<Table>>>>,
}

impl TableRegistry {
    pub fn new(cap_bits: u64) -> Self {
        TableRegistry {
            cap_bits,
            used_bits: AtomicU64::new(0),
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn used_bits(&self) -> u64 {
        self.used_bits.load(Ordering::Relaxed)
    }

    /// Fetch the table for `key`, building it with `build` if this is the
    /// first request and the budget allows. Returns `None` when the table is
    /// denied; callers must then compute per element.
    pub fn get_or_build(
        &self,
        key: TableKey,
        size_bits: u64,
        build: impl FnOnce() -> Table,
    ) -> Option<Arc<Table>> {
        if let Some(hit) = self.entries.read().unwrap().get(&key) {
            return hit.clone();
        }
        let mut map = self.entries.write().unwrap();
        if let Some(hit) = map.get(&key) {
            return hit.clone();
        }
        let used = self.used_bits.load(Ordering::Relaxed);
        let slot = if size_bits.checked_add(used).is_some_and(|t| t <= self.cap_bits) {
            self.used_bits.fetch_add(size_bits, Ordering::Relaxed);
            Some(Arc::new(build()))
        } else {
            None
        };
        map.insert(key, slot.clone());
        slot
    }
}
