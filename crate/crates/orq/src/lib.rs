//! Succinct 2-D orthogonal range query structures over points in rank space:
//! range reporting, range successor, and online sorted range reporting, with
//! the bit-packed substrate (wavelet trees, ball inheritance, partial rank,
//! rank/select, rmq, predecessor) they are assembled from.

pub mod ball_inheritance;
pub mod bitvec;
pub mod codec;
pub mod config;
pub mod counters;
pub mod error;
pub mod index_file;
pub mod oracle;
pub mod packed;
pub mod partial_rank;
pub mod pred_succ;
pub mod range_report;
pub mod range_successor;
pub mod rmq;
pub mod seq_index;
pub mod sorted_report;
pub mod tables;
pub mod wavelet;

pub use config::{Config, Ctx};
pub use counters::OpCounters;
pub use error::{Error, Result};
pub use packed::PackedSequence;

/// A point on the grid. Engines normalize arbitrary coordinates to rank
/// space internally and map answers back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: u64,
    pub y: u64,
}

impl Point {
    pub fn new(x: u64, y: u64) -> Self {
        Point { x, y }
    }
}

/// A query rectangle `[x1,x2] x [y1,y2]`, both ranges inclusive. Inverted
/// ranges are legal and empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x1: u64,
    pub x2: u64,
    pub y1: u64,
    pub y2: u64,
}

impl Rect {
    pub fn new(x1: u64, x2: u64, y1: u64, y2: u64) -> Self {
        Rect { x1, x2, y1, y2 }
    }

    pub fn is_empty(&self) -> bool {
        self.x1 > self.x2 || self.y1 > self.y2
    }
}

#[cfg(test)]
mod tests {
    /// Built indexes are immutable and shared across threads.
    #[test]
    fn indexes_are_send_sync() {
        fn check<T: Send + Sync>() {}
        check::<crate::range_report::GeneralReportIndex>();
        check::<crate::range_successor::GeneralSuccIndex>();
        check::<crate::sorted_report::SortedReportIndex>();
        check::<crate::index_file::LoadedIndex>();
        check::<crate::packed::PackedSequence>();
        check::<crate::bitvec::RankSelectBitVector>();
    }

    #[test]
    fn concurrent_queries_agree() {
        use crate::{Point, Rect};
        let ctx = crate::config::Ctx::new(crate::config::Config::default());
        let pts: Vec<Point> = (0..256u64).map(|i| Point { x: (i * 97) % 256, y: i }).collect();
        let idx = std::sync::Arc::new(crate::range_successor::build_successor(&pts, &ctx).unwrap());
        let expected: Vec<_> = (0..64u64)
            .map(|i| idx.successor(&Rect::new(i, i + 50, 0, 255)))
            .collect();
        let handles: Vec<_> = (0..4)
            .map(|_| {
                let idx = idx.clone();
                let expected = expected.clone();
                std::thread::spawn(move || {
                    for (i, want) in expected.iter().enumerate() {
                        let got = idx.successor(&Rect::new(i as u64, i as u64 + 50, 0, 255));
                        assert_eq!(got, *want);
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
    }
}
