//! The ORQ1 index file: magic, version, index-type tag, then little-endian
//! length-prefixed sections, each carrying a CRC32 of its payload. Known
//! sections are the configuration block, the rank-space map, and the engine
//! body; unknown section tags are skipped so future additions stay readable.

use crate::codec::{Codec, Reader, Writer};
use crate::config::{Config, Ctx};
use crate::error::{Error, Result};
use crate::range_report::{GeneralReportIndex, RankSpaceMap};
use crate::range_successor::GeneralSuccIndex;
use crate::sorted_report::SortedReportIndex;
use std::path::Path;

pub const MAGIC: [u8; 4] = *b"ORQ1";
pub const VERSION: u32 = 1;

const TAG_CONF: [u8; 4] = *b"CONF";
const TAG_RMAP: [u8; 4] = *b"RMAP";
const TAG_CORE: [u8; 4] = *b"CORE";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexKind {
    Report,
    Succ,
    Sorted,
}

impl IndexKind {
    pub fn tag(&self) -> u8 {
        match self {
            IndexKind::Report => 0,
            IndexKind::Succ => 1,
            IndexKind::Sorted => 2,
        }
    }

    pub fn from_tag(t: u8) -> Result<IndexKind> {
        Ok(match t {
            0 => IndexKind::Report,
            1 => IndexKind::Succ,
            2 => IndexKind::Sorted,
            _ => return Err(Error::Format(format!("unknown index kind {t}"))),
        })
    }

    pub fn parse(s: &str) -> Result<IndexKind> {
        Ok(match s {
            "report" => IndexKind::Report,
            "succ" => IndexKind::Succ,
            "sorted" => IndexKind::Sorted,
            _ => return Err(Error::Format(format!("unknown index type: {s}"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            IndexKind::Report => "report",
            IndexKind::Succ => "succ",
            IndexKind::Sorted => "sorted",
        }
    }
}

#[derive(Debug)]
pub enum LoadedIndex {
    Report(GeneralReportIndex),
    Succ(GeneralSuccIndex),
    Sorted(SortedReportIndex),
}

impl LoadedIndex {
    pub fn kind(&self) -> IndexKind {
        match self {
            LoadedIndex::Report(_) => IndexKind::Report,
            LoadedIndex::Succ(_) => IndexKind::Succ,
            LoadedIndex::Sorted(_) => IndexKind::Sorted,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LoadedIndex::Report(i) => i.len(),
            LoadedIndex::Succ(i) => i.len(),
            LoadedIndex::Sorted(i) => i.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn config(&self) -> &Config {
        match self {
            LoadedIndex::Report(i) => &i.ctx.config,
            LoadedIndex::Succ(i) => &i.ctx.config,
            LoadedIndex::Sorted(i) => &i.ctx.config,
        }
    }

    fn map(&self) -> &RankSpaceMap {
        match self {
            LoadedIndex::Report(i) => &i.map,
            LoadedIndex::Succ(i) => &i.map,
            LoadedIndex::Sorted(i) => &i.map,
        }
    }
}

fn put_section(out: &mut Vec<u8>, tag: [u8; 4], payload: &[u8]) {
    out.extend_from_slice(&tag);
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
    out.extend_from_slice(payload);
}

pub fn to_bytes(index: &LoadedIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(index.kind().tag());

    let mut w = Writer::new();
    index.config().encode(&mut w);
    put_section(&mut out, TAG_CONF, &w.buf);

    let mut w = Writer::new();
    index.map().encode(&mut w);
    put_section(&mut out, TAG_RMAP, &w.buf);

    let mut w = Writer::new();
    match index {
        LoadedIndex::Report(i) => i.encode_body(&mut w),
        LoadedIndex::Succ(i) => i.encode_body(&mut w),
        LoadedIndex::Sorted(i) => i.encode_body(&mut w),
    }
    put_section(&mut out, TAG_CORE, &w.buf);
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<LoadedIndex> {
    if bytes.len() < 9 || bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = IndexKind::from_tag(bytes[8])?;
    let mut pos = 9usize;
    let mut conf: Option<&[u8]> = None;
    let mut rmap: Option<&[u8]> = None;
    let mut core: Option<&[u8]> = None;
    while pos < bytes.len() {
        if pos + 16 > bytes.len() {
            return Err(Error::Format("truncated section header".into()));
        }
        let tag: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
        let len = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().unwrap()) as usize;
        let crc = u32::from_le_bytes(bytes[pos + 12..pos + 16].try_into().unwrap());
        pos += 16;
        if pos + len > bytes.len() {
            return Err(Error::Format("truncated section payload".into()));
        }
        let payload = &bytes[pos..pos + len];
        pos += len;
        if crc32fast::hash(payload) != crc {
            return Err(Error::Format(format!(
                "checksum mismatch in section {}",
                String::from_utf8_lossy(&tag)
            )));
        }
        match tag {
            TAG_CONF => conf = Some(payload),
            TAG_RMAP => rmap = Some(payload),
            TAG_CORE => core = Some(payload),
            // Unknown future sections are skipped by tag.
            _ => {}
        }
    }
    let conf = conf.ok_or_else(|| Error::Format("missing CONF section".into()))?;
    let rmap = rmap.ok_or_else(|| Error::Format("missing RMAP section".into()))?;
    let core = core.ok_or_else(|| Error::Format("missing CORE section".into()))?;

    let boot = Ctx::new(Config::default());
    let config = Config::decode(&mut Reader::new(conf), &boot)?;
    let ctx = Ctx::new(config);
    let map = RankSpaceMap::decode(&mut Reader::new(rmap), &ctx)?;
    let mut r = Reader::new(core);
    Ok(match kind {
        IndexKind::Report => LoadedIndex::Report(GeneralReportIndex::decode_body(&mut r, &ctx, map)?),
        IndexKind::Succ => LoadedIndex::Succ(GeneralSuccIndex::decode_body(&mut r, &ctx, map)?),
        IndexKind::Sorted => LoadedIndex::Sorted(SortedReportIndex::decode_body(&mut r, &ctx, map)?),
    })
}

pub fn store(index: &LoadedIndex, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(index))
        .map_err(|e| Error::Format(format!("write {}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<LoadedIndex> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Format(format!("read {}: {e}", path.display())))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::range_report::build_report;
    use crate::range_successor::build_successor;
    use crate::sorted_report::build_sorted_report;
    use crate::{Point, Rect};

    fn sample_points(n: usize, seed: u64) -> Vec<Point> {
        let mut s = seed;
        let mut rand = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            s >> 33
        };
        let mut used = std::collections::HashSet::new();
        let mut out = Vec::new();
        while out.len() < n {
            let p = (rand() % (3 * n as u64 + 1), rand() % (3 * n as u64 + 1));
            if used.insert(p) {
                out.push(Point { x: p.0, y: p.1 });
            }
        }
        out
    }

    #[test]
    fn round_trip_preserves_answers() {
        let ctx = Ctx::new(Config::default());
        let points = sample_points(120, 9);
        let rects: Vec<Rect> = (0..50)
            .map(|i| {
                let m = 361;
                Rect::new(
                    (i * 37) % m,
                    (i * 37) % m + i,
                    (i * 53) % m,
                    (i * 53) % m + 2 * i,
                )
            })
            .collect();

        let report = build_report(&points, &ctx).unwrap();
        let loaded = from_bytes(&to_bytes(&LoadedIndex::Report(report))).unwrap();
        let LoadedIndex::Report(report2) = &loaded else { panic!() };
        let report = build_report(&points, &ctx).unwrap();
        for r in &rects {
            let mut a = report.report(r);
            let mut b = report2.report(r);
            a.sort();
            b.sort();
            assert_eq!(a, b);
        }

        let succ = build_successor(&points, &ctx).unwrap();
        let loaded = from_bytes(&to_bytes(&LoadedIndex::Succ(succ))).unwrap();
        let LoadedIndex::Succ(succ2) = &loaded else { panic!() };
        let succ = build_successor(&points, &ctx).unwrap();
        for r in &rects {
            assert_eq!(succ.successor(r), succ2.successor(r));
        }

        let sorted = build_sorted_report(&points, &ctx).unwrap();
        let loaded = from_bytes(&to_bytes(&LoadedIndex::Sorted(sorted))).unwrap();
        let LoadedIndex::Sorted(sorted2) = &loaded else { panic!() };
        let sorted = build_sorted_report(&points, &ctx).unwrap();
        for r in &rects {
            assert_eq!(sorted.sorted_report(r, None), sorted2.sorted_report(r, None));
        }
    }

    #[test]
    fn corrupted_checksum_rejected() {
        let ctx = Ctx::new(Config::default());
        let points = sample_points(20, 4);
        let idx = build_report(&points, &ctx).unwrap();
        let mut bytes = to_bytes(&LoadedIndex::Report(idx));
        let flip = bytes.len() / 2;
        bytes[flip] ^= 0xff;
        let err = from_bytes(&bytes).unwrap_err();
        assert!(
            matches!(err, Error::Format(ref m) if m.contains("checksum") || m.contains("truncated")),
            "{err:?}"
        );
    }

    #[test]
    fn unknown_sections_skipped() {
        let ctx = Ctx::new(Config::default());
        let points = sample_points(12, 8);
        let idx = build_report(&points, &ctx).unwrap();
        let mut bytes = to_bytes(&LoadedIndex::Report(idx));
        // Append a future section; loading must ignore it.
        let payload = b"future data";
        bytes.extend_from_slice(b"XTRA");
        bytes.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        bytes.extend_from_slice(&crc32fast::hash(payload).to_le_bytes());
        bytes.extend_from_slice(payload);
        assert!(from_bytes(&bytes).is_ok());
    }

    #[test]
    fn bad_magic_rejected() {
        assert!(from_bytes(b"NOPE\x01\x00\x00\x00\x00").is_err());
    }
}
