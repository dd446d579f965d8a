//! Binary cover files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! header   "HTMC" | version u16 | index_level u8 | maxlevel u8 | flags u16
//!          | region_count u32 | region_count × (region_id u32, row_count u64)
//!          | rows_crc u32 | header_crc u32
//! rows     per region, sorted by start: start u64 | end u64 | partial u8 | trixel_id u64
//! geometry (flags bit 0) entry_count u64 | entries | section_crc u32
//!          entry = region_id u32 | trixel_id u64 | polygon_count u32 | polygons
//!          polygon = ring_count u32 | rings (exterior first)
//!          ring = vertex_count u32 | vertex_count × xyz f64 | vertex_count × support xyz f64
//! ```
//!
//! `header_crc` covers every header byte before it, `rows_crc` the whole row
//! section. Ring supports are stored next to the vertices so clips reload with
//! the exact planes they were built with.

use std::fs;
use std::path::Path;

use crate::cover::{CoverRow, CoverStats, GeometryStore, RegionCover};
use crate::error::{Error, Result};
use crate::geom::{Ring, SphericalPolygon, UnitVec};
use crate::htm::{decompose_range, trixel_of, HtmId, IdRange, MAX_LEVEL};

pub const MAGIC: &[u8; 4] = b"HTMC";
pub const VERSION: u16 = 1;
pub const ROW_BYTES: usize = 25;
const FLAG_GEOMETRY: u16 = 1;

/// Contents of a cover file.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverFile {
    pub index_level: u32,
    pub maxlevel: u32,
    pub covers: Vec<RegionCover>,
    pub store: Option<GeometryStore>,
}

pub fn header_len(region_count: usize) -> usize {
    4 + 2 + 1 + 1 + 2 + 4 + 12 * region_count + 4 + 4
}

fn level_byte(level: u32) -> Result<u8> {
    if level > MAX_LEVEL {
        return Err(Error::LevelOverflow {
            level,
            limit: MAX_LEVEL,
        });
    }
    Ok(level as u8)
}

fn put_row(buf: &mut Vec<u8>, row: &CoverRow) {
    buf.extend_from_slice(&row.range.start.to_le_bytes());
    buf.extend_from_slice(&row.range.end.to_le_bytes());
    buf.push(u8::from(row.partial));
    buf.extend_from_slice(&row.trixel_id.value().to_le_bytes());
}

fn put_vec(buf: &mut Vec<u8>, v: UnitVec) {
    for c in v.to_array() {
        buf.extend_from_slice(&c.to_le_bytes());
    }
}

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::input(format!("count {v} exceeds u32")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

/// Serializes covers (and optionally their clips) to bytes.
///
/// All covers must share `index_level`; an empty slice needs it passed in.
pub fn encode_cover(
    covers: &[RegionCover],
    store: Option<&GeometryStore>,
    index_level: u32,
    maxlevel: u32,
) -> Result<Vec<u8>> {
    for c in covers {
        if c.index_level != index_level {
            return Err(Error::DepthMismatch {
                expected: index_level,
                found: c.index_level,
            });
        }
    }
    let total_rows: usize = covers.iter().map(|c| c.rows.len()).sum();
    let mut rows = Vec::with_capacity(total_rows * ROW_BYTES);
    for c in covers {
        for r in &c.rows {
            put_row(&mut rows, r);
        }
    }

    let mut buf = Vec::with_capacity(header_len(covers.len()) + rows.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(level_byte(index_level)?);
    buf.push(level_byte(maxlevel)?);
    let flags = if store.is_some() { FLAG_GEOMETRY } else { 0 };
    buf.extend_from_slice(&flags.to_le_bytes());
    put_u32(&mut buf, covers.len())?;
    for c in covers {
        buf.extend_from_slice(&c.region_id.to_le_bytes());
        buf.extend_from_slice(&(c.rows.len() as u64).to_le_bytes());
    }
    buf.extend_from_slice(&crc32fast::hash(&rows).to_le_bytes());
    let header_crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&header_crc.to_le_bytes());
    buf.extend_from_slice(&rows);

    if let Some(store) = store {
        let start = buf.len();
        buf.extend_from_slice(&(store.len() as u64).to_le_bytes());
        for (region_id, trixel_id, clip) in store.iter() {
            buf.extend_from_slice(&region_id.to_le_bytes());
            buf.extend_from_slice(&trixel_id.value().to_le_bytes());
            put_u32(&mut buf, clip.len())?;
            for poly in clip {
                put_u32(&mut buf, 1 + poly.holes.len())?;
                for ring in poly.rings() {
                    put_u32(&mut buf, ring.len())?;
                    for &v in ring.vertices() {
                        put_vec(&mut buf, v);
                    }
                    for &n in ring.normals() {
                        put_vec(&mut buf, n);
                    }
                }
            }
        }
        let crc = crc32fast::hash(&buf[start..]);
        buf.extend_from_slice(&crc.to_le_bytes());
    }
    Ok(buf)
}

pub fn write_cover(
    path: &Path,
    covers: &[RegionCover],
    store: Option<&GeometryStore>,
    index_level: u32,
    maxlevel: u32,
) -> Result<u64> {
    let bytes = encode_cover(covers, store, index_level, maxlevel)?;
    fs::write(path, &bytes)?;
    Ok(bytes.len() as u64)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("len 2")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("len 4")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("len 8")))
    }

    fn unit(&mut self) -> Result<UnitVec> {
        let mut c = [0.0; 3];
        for x in &mut c {
            *x = f64::from_le_bytes(self.take(8)?.try_into().expect("len 8"));
        }
        let v = UnitVec::from_raw(c[0], c[1], c[2]);
        if !c.iter().all(|x| x.is_finite()) || (v.vec().norm() - 1.0).abs() > 1e-9 {
            return Err(Error::Format(format!("non-unit vector {c:?}")));
        }
        Ok(v)
    }

    /// Guards allocations sized from file counts.
    fn count(&mut self, min_item_bytes: usize) -> Result<usize> {
        let n = self.u32()? as usize;
        if n.saturating_mul(min_item_bytes) > self.buf.len() - self.pos {
            return Err(Error::Format(format!("count {n} runs past end of file")));
        }
        Ok(n)
    }
}

fn stats_of(rows: &[CoverRow], index_level: u32) -> Result<CoverStats> {
    let mut s = CoverStats::default();
    for r in rows {
        if r.partial {
            s.partial_rows += 1;
            s.partial_area += trixel_of(r.trixel_id)?.area();
        } else {
            s.full_rows += 1;
            for id in decompose_range(r.range, index_level)? {
                s.full_area += trixel_of(id)?.area();
            }
        }
    }
    Ok(s)
}

/// Parses and verifies a cover file image.
pub fn decode_cover(bytes: &[u8]) -> Result<CoverFile> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let index_level = u32::from(cur.u8()?);
    let maxlevel = u32::from(cur.u8()?);
    if index_level > MAX_LEVEL || maxlevel > index_level {
        return Err(Error::Format(format!(
            "bad levels: index {index_level}, max {maxlevel}"
        )));
    }
    let flags = cur.u16()?;
    if flags & !FLAG_GEOMETRY != 0 {
        return Err(Error::Format(format!("unknown flags {flags:#x}")));
    }
    let region_count = cur.count(12)?;
    let mut regions = Vec::with_capacity(region_count);
    for _ in 0..region_count {
        regions.push((cur.u32()?, cur.u64()?));
    }
    let rows_crc = cur.u32()?;
    let header_end = cur.pos;
    let header_crc = cur.u32()?;
    if crc32fast::hash(&bytes[..header_end]) != header_crc {
        return Err(Error::Format("header checksum mismatch".into()));
    }

    let total: u64 = regions.iter().map(|r| r.1).sum();
    let row_bytes = usize::try_from(total)
        .ok()
        .and_then(|t| t.checked_mul(ROW_BYTES))
        .filter(|&n| n <= bytes.len() - cur.pos)
        .ok_or_else(|| Error::Format(format!("{total} rows run past end of file")))?;
    let rows_start = cur.pos;
    if crc32fast::hash(&bytes[rows_start..rows_start + row_bytes]) != rows_crc {
        return Err(Error::Format("row checksum mismatch".into()));
    }

    let mut covers = Vec::with_capacity(region_count);
    let mut seen = std::collections::HashSet::new();
    for &(region_id, n) in &regions {
        if !seen.insert(region_id) {
            return Err(Error::CorruptCover(format!("region {region_id} listed twice")));
        }
        let mut rows = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let start = cur.u64()?;
            let end = cur.u64()?;
            let partial = match cur.u8()? {
                0 => false,
                1 => true,
                b => return Err(Error::Format(format!("bad partial flag {b}"))),
            };
            let trixel_id = HtmId::new(cur.u64()?)?;
            if start >= end || trixel_id.level() > maxlevel {
                return Err(Error::CorruptCover(format!(
                    "region {region_id}: bad row [{start}, {end}) for trixel {}",
                    trixel_id.value()
                )));
            }
            if let Some(prev) = rows.last().map(|r: &CoverRow| r.range.end) {
                if start < prev {
                    return Err(Error::CorruptCover(format!(
                        "region {region_id}: rows overlap or are unsorted at {start}"
                    )));
                }
            }
            rows.push(CoverRow {
                region_id,
                range: IdRange { start, end },
                partial,
                trixel_id,
            });
        }
        let stats = stats_of(&rows, index_level)?;
        covers.push(RegionCover {
            region_id,
            maxlevel,
            index_level,
            rows,
            stats,
        });
    }

    let store = if flags & FLAG_GEOMETRY != 0 {
        let start = cur.pos;
        let entries = cur.u64()?;
        if entries.saturating_mul(16) > (bytes.len() - cur.pos) as u64 {
            return Err(Error::Format(format!("{entries} clips run past end of file")));
        }
        let mut store = GeometryStore::new();
        for _ in 0..entries {
            let region_id = cur.u32()?;
            let trixel_id = HtmId::new(cur.u64()?)?;
            let npoly = cur.count(4)?;
            let mut clip = Vec::with_capacity(npoly);
            for _ in 0..npoly {
                let nrings = cur.count(4)?;
                let mut rings = Vec::with_capacity(nrings);
                for _ in 0..nrings {
                    let nv = cur.count(48)?;
                    let verts = (0..nv).map(|_| cur.unit()).collect::<Result<Vec<_>>>()?;
                    let normals = (0..nv).map(|_| cur.unit()).collect::<Result<Vec<_>>>()?;
                    rings.push(Ring::from_parts(verts, normals).map_err(|e| {
                        Error::Format(format!(
                            "clip ({region_id}, {}): {e}",
                            trixel_id.value()
                        ))
                    })?);
                }
                let mut rings = rings.into_iter();
                let exterior = rings
                    .next()
                    .ok_or_else(|| Error::Format("clip polygon without rings".into()))?;
                clip.push(SphericalPolygon::from_rings_unchecked(exterior, rings.collect()));
            }
            store.insert(region_id, trixel_id, clip);
        }
        let end = cur.pos;
        if crc32fast::hash(&bytes[start..end]) != cur.u32()? {
            return Err(Error::Format("geometry checksum mismatch".into()));
        }
        Some(store)
    } else {
        None
    };
    if cur.pos != bytes.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            bytes.len() - cur.pos
        )));
    }
    Ok(CoverFile {
        index_level,
        maxlevel,
        covers,
        store,
    })
}

pub fn read_cover(path: &Path) -> Result<CoverFile> {
    decode_cover(&fs::read(path)?)
}
