//! Thread-local operation counters.
//!
//! Three quantities are tracked: `word_ops` (machine-word steps taken by
//! packed-data algorithms), `table_lookups` (universal-table reads), and
//! `element_probes` (calls that materialize a point or read an element of a
//! sequence that is not stored inside the querying structure, i.e. accessor
//! invocations and `point` calls). Builds and queries accumulate into the
//! counters of the calling thread, so concurrent queries on separate threads
//! are counted independently.

use std::cell::Cell;

thread_local! {
    static WORD_OPS: Cell<u64> = const { Cell::new(0) };
    static TABLE_LOOKUPS: Cell<u64> = const { Cell::new(0) };
    static ELEMENT_PROBES: Cell<u64> = const { Cell::new(0) };
}

/// A snapshot of the counters, also usable as a delta.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    pub word_ops: u64,
    pub table_lookups: u64,
    pub element_probes: u64,
}

#[inline(always)]
pub fn bump_word_ops(n: u64) {
    WORD_OPS.with(|c| c.set(c.get().wrapping_add(n)));
}

#[inline(always)]
pub fn bump_table_lookup() {
    TABLE_LOOKUPS.with(|c| c.set(c.get().wrapping_add(1)));
}

#[inline(always)]
pub fn bump_element_probe() {
    ELEMENT_PROBES.with(|c| c.set(c.get().wrapping_add(1)));
}

pub fn snapshot() -> OpCounters {
    OpCounters {
        word_ops: WORD_OPS.with(Cell::get),
        table_lookups: TABLE_LOOKUPS.with(Cell::get),
        element_probes: ELEMENT_PROBES.with(Cell::get),
    }
}

/// Counter movement since `since` on this thread.
pub fn delta(since: &OpCounters) -> OpCounters {
    let now = snapshot();
    OpCounters {
        word_ops: now.word_ops.wrapping_sub(since.word_ops),
        table_lookups: now.table_lookups.wrapping_sub(since.table_lookups),
        element_probes: now.element_probes.wrapping_sub(since.element_probes),
    }
}

impl OpCounters {
    pub fn total(&self) -> u64 {
        self.word_ops + self.table_lookups + self.element_probes
    }
}
