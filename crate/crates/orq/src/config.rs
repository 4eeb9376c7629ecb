//! Build configuration.
//!
//! The asymptotic parameters of the structures (fanouts, block sizes,
//! sampling thresholds) are functions of the machine word model. Here they
//! are derived from a single capacity parameter `n_cap`, defaulting to 2^32,
//! with small-input floors so every regime stays well-defined. Each derived
//! field can be overridden so tests can force a particular structural branch
//! at small input sizes.

use crate::error::{Error, Result};
use crate::tables::TableRegistry;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    /// Capacity parameter the word-model block sizes derive from. Default 2^32.
    pub n_cap: u64,
    /// Total budget for universal tables, in bits. 0 disables tables.
    pub table_cap_bits: u64,
    /// Fanout of the top-level wavelet tree (2^ceil(sqrt(lg n_cap))).
    pub large_fanout: usize,
    /// Fanout of medium-narrow-grid wavelet trees (~lg^{1/4} n_cap).
    pub small_fanout: usize,
    /// Fanout used internally by small-alphabet rank indexes.
    pub seq_fanout: usize,
    /// Narrow-grid block height, 2^{2 ceil(sqrt(lg n_cap))}.
    pub narrow_block: usize,
    /// Three-sided structure block length (~lg^3 n_cap).
    pub three_block: usize,
    /// Three-sided structure sub-block length (~lg^{3/4} n_cap).
    pub three_subblock: usize,
    /// Below this point count a small-narrow grid degenerates to tables/scans.
    pub tiny_cut: usize,
    /// Patricia block length for packed predecessor structures.
    pub pred_block: usize,
    /// Patricia block length for the general-universe indexing predecessor
    /// structure.
    pub index_pred_block: usize,
    /// Alphabet bound below which rank delegates to small-alphabet indexes,
    /// pinned to (lg n_cap)^3.
    pub polylog_sigma: u64,
    /// Alphabet bound for the chunked partial-rank structure,
    /// 2^ceil(sqrt(lg n_cap)).
    pub chunked_sigma_max: u64,
    /// Width bound (bits) for packed-regime structures, ceil(sqrt(lg n_cap)).
    pub packed_width_max: u32,
    /// Consecutive sampled hits before a sorted query escalates to a
    /// per-block structure; ceil(lg lg n_cap), floored at 2.
    pub escalation: usize,
    /// 1/epsilon for constant-time-point level coloring.
    pub ball_epsilon_inv: usize,
    /// Force the chunked partial-rank structure even for small alphabets.
    pub force_chunked_partial_rank: bool,
    /// Answer engine-internal three-sided reporting with the rmq recursion
    /// instead of canonical tree descent.
    pub rmq_three_sided: bool,
}

fn ceil_log2(x: u64) -> u32 {
    debug_assert!(x >= 1);
    64 - (x - 1).leading_zeros()
}

impl Config {
    pub fn with_n_cap(n_cap: u64) -> Self {
        let n_cap = n_cap.max(4);
        let lg = ceil_log2(n_cap).max(2) as u64;
        let lglg = ceil_log2(lg).max(1);
        let sqrt_lg = (lg as f64).sqrt().ceil() as u32;
        let quarter = (lg as f64).powf(0.25).ceil() as usize;
        let large_fanout = 1usize << sqrt_lg.min(16);
        Config {
            n_cap,
            table_cap_bits: 1 << 25,
            large_fanout: large_fanout.max(2),
            small_fanout: quarter.next_power_of_two().max(2),
            seq_fanout: (1usize << lglg.div_ceil(4)).max(2),
            narrow_block: (1usize << (2 * sqrt_lg).min(30)).max(4),
            three_block: ((lg * lg * lg) as usize).max(4),
            three_subblock: ((lg as f64).powf(0.75).ceil() as usize).max(2),
            tiny_cut: (lg as usize).max(2),
            pred_block: ((sqrt_lg as usize) / 4).max(2),
            index_pred_block: (lg as usize).max(2),
            polylog_sigma: (lg * lg * lg).max(4),
            chunked_sigma_max: 1 << sqrt_lg.min(20),
            packed_width_max: sqrt_lg.max(2),
            escalation: (lglg as usize).max(2),
            ball_epsilon_inv: 2,
            force_chunked_partial_rank: false,
            rmq_three_sided: false,
        }
    }

    /// Apply a `key=value` override as accepted by the CLI.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let uval = || -> Result<u64> {
            value
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("bad value for {key}: {value}")))
        };
        let bval = || -> Result<bool> {
            value
                .parse::<bool>()
                .map_err(|_| Error::Format(format!("bad value for {key}: {value}")))
        };
        match key {
            "n_cap" => *self = Config::with_n_cap(uval()?),
            "table_cap_bits" => self.table_cap_bits = uval()?,
            "large_fanout" => self.large_fanout = (uval()? as usize).next_power_of_two().max(2),
            "small_fanout" => self.small_fanout = (uval()? as usize).next_power_of_two().max(2),
            "seq_fanout" => self.seq_fanout = (uval()? as usize).next_power_of_two().max(2),
            "narrow_block" => self.narrow_block = (uval()? as usize).max(4),
            "three_block" => self.three_block = (uval()? as usize).max(4),
            "three_subblock" => self.three_subblock = (uval()? as usize).max(2),
            "tiny_cut" => self.tiny_cut = (uval()? as usize).max(2),
            "pred_block" => self.pred_block = (uval()? as usize).max(2),
            "index_pred_block" => self.index_pred_block = (uval()? as usize).max(2),
            "polylog_sigma" => self.polylog_sigma = uval()?,
            "chunked_sigma_max" => self.chunked_sigma_max = uval()?,
            "packed_width_max" => self.packed_width_max = uval()?.min(63) as u32,
            "escalation" => self.escalation = (uval()? as usize).max(2),
            "ball_epsilon_inv" => self.ball_epsilon_inv = (uval()? as usize).max(1),
            "force_chunked_partial_rank" => self.force_chunked_partial_rank = bval()?,
            "rmq_three_sided" => self.rmq_three_sided = bval()?,
            _ => return Err(Error::Format(format!("unknown config key: {key}"))),
        }
        Ok(())
    }

    pub fn lg_cap(&self) -> u32 {
        ceil_log2(self.n_cap).max(2)
    }
}

impl Default for Config {
    fn default() -> Self {
        Config::with_n_cap(1 << 32)
    }
}

/// Shared build/query context: the configuration plus the universal-table
/// registry. Tables are rebuilt on load rather than serialized.
#[derive(Debug)]
pub struct Ctx {
    pub config: Config,
    pub registry: TableRegistry,
}

impl Ctx {
    pub fn new(config: Config) -> Arc<Self> {
        let registry = TableRegistry::new(config.table_cap_bits);
        Arc::new(Ctx { config, registry })
    }
}

impl Default for Ctx {
    fn default() -> Self {
        let config = Config::default();
        let registry = TableRegistry::new(config.table_cap_bits);
        Ctx { config, registry }
    }
}

// --- serialization ---

crate::codec::impl_codec!(Config {
    n_cap,
    table_cap_bits,
    large_fanout,
    small_fanout,
    seq_fanout,
    narrow_block,
    three_block,
    three_subblock,
    tiny_cut,
    pred_block,
    index_pred_block,
    polylog_sigma,
    chunked_sigma_max,
    packed_width_max,
    escalation,
    ball_epsilon_inv,
    force_chunked_partial_rank,
    rmq_three_sided,
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_derivations() {
        let c = Config::default();
        assert_eq!(c.lg_cap(), 32);
        assert_eq!(c.large_fanout, 64);
        assert_eq!(c.small_fanout, 4);
        assert_eq!(c.seq_fanout, 4);
        assert_eq!(c.narrow_block, 4096);
        assert_eq!(c.three_block, 32768);
        assert_eq!(c.three_subblock, 14);
        assert_eq!(c.tiny_cut, 32);
        assert_eq!(c.polylog_sigma, 32768);
        assert_eq!(c.chunked_sigma_max, 64);
        assert_eq!(c.escalation, 5);
    }

    #[test]
    fn small_cap_floors() {
        let c = Config::with_n_cap(16);
        assert!(c.large_fanout >= 2);
        assert!(c.small_fanout >= 2);
        assert!(c.escalation >= 2);
        assert!(c.three_subblock >= 2);
    }
}
