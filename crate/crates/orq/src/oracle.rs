//! Brute-force reference implementations.
//!
//! Every function here implements its operation's definition literally with
//! linear scans, independently of the index structures, so property tests and
//! the CLI `verify` command have a trusted baseline to compare against.

use crate::Point;

/// Explicit point list, the input form all brute-force queries take.
pub type PlainPointSet = Vec<Point>;

/// Bits `s..=f` (0 = most significant) of a `width`-bit value.
pub fn brute_extract_bits(v: u64, width: u32, s: u32, f: u32) -> u64 {
    let mut out = 0u64;
    for b in s..=f {
        let bit = (v >> (width - 1 - b)) & 1;
        out = (out << 1) | bit;
    }
    out
}

/// Inclusive rank: number of elements equal to `c` in `a[0..=i]`.
pub fn brute_rank(a: &[u64], c: u64, i: usize) -> usize {
    a[..=i].iter().filter(|&&v| v == c).count()
}

/// Number of elements `<= c` in `a[0..=i]`.
pub fn brute_count_le(a: &[u64], c: u64, i: usize) -> usize {
    a[..=i].iter().filter(|&&v| v <= c).count()
}

/// 0-based position of the k-th (1-based) occurrence of `c`, if any.
pub fn brute_select(a: &[u64], c: u64, k: usize) -> Option<usize> {
    if k == 0 {
        return None;
    }
    let mut seen = 0;
    for (i, &v) in a.iter().enumerate() {
        if v == c {
            seen += 1;
            if seen == k {
                return Some(i);
            }
        }
    }
    None
}

/// Partial rank: occurrences of `a[j]` in `a[0..=j]`.
pub fn brute_partial_rank(a: &[u64], j: usize) -> usize {
    brute_rank(a, a[j], j)
}

/// Leftmost position of the minimum of `a[i..=j]`.
pub fn brute_rmq(a: &[u64], i: usize, j: usize) -> usize {
    let mut best = i;
    for p in i + 1..=j {
        if a[p] < a[best] {
            best = p;
        }
    }
    best
}

/// Leftmost position of the maximum of `a[i..=j]`.
pub fn brute_rmq_max(a: &[u64], i: usize, j: usize) -> usize {
    let mut best = i;
    for p in i + 1..=j {
        if a[p] > a[best] {
            best = p;
        }
    }
    best
}

/// `pred(x) = max{ j : a[j] <= x }`, over a sorted sequence.
pub fn brute_pred(a: &[u64], x: u64) -> Option<usize> {
    let mut ans = None;
    for (j, &v) in a.iter().enumerate() {
        if v <= x {
            ans = Some(j);
        }
    }
    ans
}

/// `succ(x) = min{ j : x <= a[j] }`, over a sorted sequence.
pub fn brute_succ(a: &[u64], x: u64) -> Option<usize> {
    a.iter().position(|&v| v >= x)
}

/// First-occurrence variants used by the duplicate-aware structures: the
/// returned index is the first position holding the answer's value.
pub fn brute_pred_first_occ(a: &[u64], x: u64) -> Option<usize> {
    let j = brute_pred(a, x)?;
    a.iter().position(|&v| v == a[j])
}

pub fn brute_succ_first_occ(a: &[u64], x: u64) -> Option<usize> {
    let j = brute_succ(a, x)?;
    a.iter().position(|&v| v == a[j])
}

fn in_rect(p: &Point, x1: u64, x2: u64, y1: u64, y2: u64) -> bool {
    p.x >= x1 && p.x <= x2 && p.y >= y1 && p.y <= y2
}

/// All points inside `[x1,x2] x [y1,y2]`, in input order.
pub fn brute_report(points: &[Point], x1: u64, x2: u64, y1: u64, y2: u64) -> Vec<Point> {
    points
        .iter()
        .filter(|p| in_rect(p, x1, x2, y1, y2))
        .copied()
        .collect()
}

/// The lowest point (minimum y) inside the rectangle.
pub fn brute_successor(points: &[Point], x1: u64, x2: u64, y1: u64, y2: u64) -> Option<Point> {
    points
        .iter()
        .filter(|p| in_rect(p, x1, x2, y1, y2))
        .min_by_key(|p| (p.y, p.x))
        .copied()
}

/// Points inside the rectangle sorted by y, truncated to `k` when given.
pub fn brute_sorted(
    points: &[Point],
    x1: u64,
    x2: u64,
    y1: u64,
    y2: u64,
    k: Option<usize>,
) -> Vec<Point> {
    let mut hits = brute_report(points, x1, x2, y1, y2);
    hits.sort_by_key(|p| (p.y, p.x));
    if let Some(k) = k {
        hits.truncate(k);
    }
    hits
}

/// Minimum-y point with x >= a (or x <= a for `ge = false`) among
/// `points[c..=d]` of a y-ordered list.
pub fn brute_three_sided_next(
    points: &[Point],
    bound: u64,
    ge: bool,
    c: usize,
    d: usize,
) -> Option<Point> {
    points[c..=d]
        .iter()
        .filter(|p| if ge { p.x >= bound } else { p.x <= bound })
        .min_by_key(|p| p.y)
        .copied()
}
