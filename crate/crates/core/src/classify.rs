//! Spatial join of points against region covers.
//!
//! The pre-filter stabs each point's index-level id into a sorted table of
//! cover rows. Candidates from full rows are final; candidates from partial
//! rows are tested against the region clipped to that trixel.

use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{CoverRow, GeometryStore, RegionCover};
use crate::error::{Error, Result};
use crate::geom::{Region, UnitVec};
use crate::htm::{encode, HtmId};

/// One input point with its id at the index depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub point_id: i64,
    pub lon: f64,
    pub lat: f64,
    pub pos: UnitVec,
    pub htm_id: HtmId,
}

impl PointRecord {
    pub fn new(point_id: i64, lon: f64, lat: f64, index_level: u32) -> Result<Self> {
        let pos = UnitVec::from_lonlat(lon, lat)?;
        Ok(PointRecord {
            point_id,
            lon,
            lat,
            pos,
            htm_id: encode(pos, index_level)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateMatch {
    pub point_id: i64,
    pub region_id: u32,
    pub partial: bool,
    pub trixel_id: HtmId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Full,
    Partial,
}

impl MatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchKind::Full => "full",
            MatchKind::Partial => "partial",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub point_id: i64,
    pub region_id: u32,
    pub kind: MatchKind,
}

/// Cover rows of all regions sorted by range start.
#[derive(Debug, Clone)]
pub struct IntervalTable {
    rows: Vec<CoverRow>,
    /// `prefix_max_end[i]` is the largest `end` among `rows[..=i]`.
    prefix_max_end: Vec<u64>,
    max_len: u64,
    index_level: u32,
    by_region: BTreeMap<u32, Vec<usize>>,
}

impl IntervalTable {
    pub fn rows(&self) -> &[CoverRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_level(&self) -> u32 {
        self.index_level
    }

    pub fn region_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.by_region.keys().copied()
    }

    pub fn region_rows(&self, region_id: u32) -> impl Iterator<Item = &CoverRow> {
        self.by_region
            .get(&region_id)
            .into_iter()
            .flatten()
            .map(|&i| &self.rows[i])
    }

    /// Approximate resident size in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.rows.len() * (std::mem::size_of::<CoverRow>() + 8 + std::mem::size_of::<usize>())
    }

    /// Calls `f` for every row whose range contains `id`.
    #[inline]
    pub fn stab(&self, id: u64, mut f: impl FnMut(&CoverRow)) {
        let mut j = self.rows.partition_point(|r| r.range.start <= id);
        while j > 0 {
            j -= 1;
            if self.prefix_max_end[j] <= id {
                break;
            }
            let row = &self.rows[j];
            if row.range.start.saturating_add(self.max_len) <= id {
                break;
            }
            if row.range.end > id {
                f(row);
            }
        }
    }
}

/// Merges covers into one sorted table, validating depth and per-region
/// disjointness.
pub fn build_interval_table(covers: &[RegionCover]) -> Result<IntervalTable> {
    let index_level = covers.first().map_or(crate::htm::DEFAULT_INDEX_LEVEL, |c| c.index_level);
    let mut rows = Vec::new();
    for c in covers {
        if c.index_level != index_level {
            return Err(Error::DepthMismatch {
                expected: index_level,
                found: c.index_level,
            });
        }
        rows.extend_from_slice(&c.rows);
    }
    table_from_rows(rows, index_level)
}

pub fn table_from_rows(mut rows: Vec<CoverRow>, index_level: u32) -> Result<IntervalTable> {
    rows.sort_by_key(|r| (r.range.start, r.region_id, r.range.end));
    let mut by_region: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut prefix_max_end = Vec::with_capacity(rows.len());
    let mut max_len = 0;
    let mut running = 0;
    for (i, row) in rows.iter().enumerate() {
        if row.range.is_empty() {
            return Err(Error::CorruptCover(format!(
                "empty range [{}, {}) in region {}",
                row.range.start, row.range.end, row.region_id
            )));
        }
        let idx = by_region.entry(row.region_id).or_default();
        if let Some(&prev) = idx.last() {
            if rows[prev].range.end > row.range.start {
                return Err(Error::CorruptCover(format!(
                    "region {} has overlapping rows at {}",
                    row.region_id, row.range.start
                )));
            }
        }
        idx.push(i);
        running = running.max(row.range.end);
        prefix_max_end.push(running);
        max_len = max_len.max(row.range.len());
    }
    Ok(IntervalTable {
        rows,
        prefix_max_end,
        max_len,
        index_level,
        by_region,
    })
}

fn check_depth(p: &PointRecord, table: &IntervalTable) -> Result<()> {
    let found = p.htm_id.level();
    if found != table.index_level {
        return Err(Error::DepthMismatch {
            expected: table.index_level,
            found,
        });
    }
    Ok(())
}

/// Range-join pre-filter: one candidate per (point, containing row).
pub fn prefilter<'a>(
    points: impl IntoIterator<Item = &'a PointRecord>,
    table: &IntervalTable,
) -> Result<Vec<CandidateMatch>> {
    let mut out = Vec::new();
    for p in points {
        check_depth(p, table)?;
        table.stab(p.htm_id.value(), |row| {
            out.push(CandidateMatch {
                point_id: p.point_id,
                region_id: row.region_id,
                partial: row.partial,
                trixel_id: row.trixel_id,
            })
        });
    }
    Ok(out)
}

/// Geometry used to confirm partial candidates.
pub trait ContainmentOracle: Sync {
    fn contains(&self, region_id: u32, trixel_id: HtmId, p: UnitVec) -> Result<bool>;
}

impl ContainmentOracle for GeometryStore {
    fn contains(&self, region_id: u32, trixel_id: HtmId, p: UnitVec) -> Result<bool> {
        GeometryStore::contains(self, region_id, trixel_id, p)
    }
}

/// Whole-region geometry, ignoring the trixel.
pub struct RegionGeometry<'a> {
    regions: HashMap<u32, &'a Region>,
}

impl<'a> RegionGeometry<'a> {
    pub fn new(regions: &'a [Region]) -> Self {
        RegionGeometry {
            regions: regions.iter().map(|r| (r.id, r)).collect(),
        }
    }
}

impl ContainmentOracle for RegionGeometry<'_> {
    fn contains(&self, region_id: u32, _trixel_id: HtmId, p: UnitVec) -> Result<bool> {
        self.regions
            .get(&region_id)
            .map(|r| r.contains(p))
            .ok_or_else(|| Error::CorruptCover(format!("unknown region {region_id}")))
    }
}

/// Exact phase: full candidates pass untouched, partial candidates are
/// tested against `oracle`.
pub fn exact_classify<'a, O: ContainmentOracle + ?Sized>(
    candidates: impl IntoIterator<Item = &'a CandidateMatch>,
    oracle: &O,
    lookup: impl Fn(i64) -> Option<UnitVec>,
) -> Result<Vec<Match>> {
    let mut out = Vec::new();
    for c in candidates {
        if let Some(m) = confirm(c, oracle, &lookup)? {
            out.push(m);
        }
    }
    Ok(out)
}

#[inline]
fn confirm<O: ContainmentOracle + ?Sized>(
    c: &CandidateMatch,
    oracle: &O,
    lookup: impl Fn(i64) -> Option<UnitVec>,
) -> Result<Option<Match>> {
    if !c.partial {
        return Ok(Some(Match {
            point_id: c.point_id,
            region_id: c.region_id,
            kind: MatchKind::Full,
        }));
    }
    let p = lookup(c.point_id)
        .ok_or_else(|| Error::input(format!("candidate refers to unknown point {}", c.point_id)))?;
    Ok(oracle
        .contains(c.region_id, c.trixel_id, p)?
        .then_some(Match {
            point_id: c.point_id,
            region_id: c.region_id,
            kind: MatchKind::Partial,
        }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionJoinStats {
    pub candidates: u64,
    pub partial_candidates: u64,
    pub matches: u64,
    pub rejected: u64,
}

impl RegionJoinStats {
    pub fn false_positive_rate(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.rejected as f64 / self.candidates as f64
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct JoinStats {
    pub points: u64,
    pub candidates: u64,
    pub full_candidates: u64,
    pub partial_candidates: u64,
    pub matches: u64,
    pub rejected: u64,
    pub false_positive_rate: f64,
    pub prefilter_secs: f64,
    pub exact_secs: f64,
    pub per_region: BTreeMap<u32, RegionJoinStats>,
}

impl JoinStats {
    pub fn merge(&mut self, other: &JoinStats) {
        self.points += other.points;
        self.candidates += other.candidates;
        self.full_candidates += other.full_candidates;
        self.partial_candidates += other.partial_candidates;
        self.matches += other.matches;
        self.rejected += other.rejected;
        self.prefilter_secs += other.prefilter_secs;
        self.exact_secs += other.exact_secs;
        for (id, r) in &other.per_region {
            let e = self.per_region.entry(*id).or_default();
            e.candidates += r.candidates;
            e.partial_candidates += r.partial_candidates;
            e.matches += r.matches;
            e.rejected += r.rejected;
        }
        self.finish();
    }

    fn finish(&mut self) {
        self.false_positive_rate = if self.candidates == 0 {
            0.0
        } else {
            self.rejected as f64 / self.candidates as f64
        };
    }

    pub fn total_secs(&self) -> f64 {
        self.prefilter_secs + self.exact_secs
    }

    /// Stats for candidates alone, before any exact test.
    pub fn from_candidates<'a>(
        points: u64,
        candidates: impl IntoIterator<Item = &'a CandidateMatch>,
        secs: f64,
    ) -> JoinStats {
        let mut s = JoinStats {
            points,
            prefilter_secs: secs,
            ..Default::default()
        };
        for c in candidates {
            s.candidates += 1;
            let r = s.per_region.entry(c.region_id).or_default();
            r.candidates += 1;
            if c.partial {
                s.partial_candidates += 1;
                r.partial_candidates += 1;
            } else {
                s.full_candidates += 1;
            }
        }
        s.finish();
        s
    }
}

/// Points per independently processed chunk.
pub const CHUNK: usize = 1 << 16;

fn classify_chunk<O: ContainmentOracle + ?Sized>(
    points: &[PointRecord],
    table: &IntervalTable,
    oracle: &O,
) -> Result<(Vec<Match>, JoinStats)> {
    let t0 = Instant::now();
    let mut candidates: Vec<(usize, CandidateMatch)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        check_depth(p, table)?;
        table.stab(p.htm_id.value(), |row| {
            candidates.push((
                i,
                CandidateMatch {
                    point_id: p.point_id,
                    region_id: row.region_id,
                    partial: row.partial,
                    trixel_id: row.trixel_id,
                },
            ))
        });
    }
    let prefilter_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut matches = Vec::with_capacity(candidates.len());
    let mut stats = JoinStats::from_candidates(
        points.len() as u64,
        candidates.iter().map(|(_, c)| c),
        prefilter_secs,
    );
    for (i, c) in &candidates {
        match confirm(c, oracle, |_| Some(points[*i].pos))? {
            Some(m) => matches.push(m),
            None => {
                stats.rejected += 1;
                stats.per_region.entry(c.region_id).or_default().rejected += 1;
            }
        }
    }
    stats.exact_secs = t1.elapsed().as_secs_f64();
    stats.matches = matches.len() as u64;
    for m in &matches {
        stats.per_region.entry(m.region_id).or_default().matches += 1;
    }
    stats.finish();
    Ok((matches, stats))
}

/// Pre-filter followed by the exact phase, chunked across threads.
///
/// Matches come back in input point order.
pub fn classify<O: ContainmentOracle + ?Sized>(
    points: &[PointRecord],
    table: &IntervalTable,
    oracle: &O,
) -> Result<(Vec<Match>, JoinStats)> {
    let parts: Vec<(Vec<Match>, JoinStats)> = points
        .par_chunks(CHUNK)
        .map(|chunk| classify_chunk(chunk, table, oracle))
        .collect::<Result<_>>()?;
    let mut matches = Vec::new();
    let mut stats = JoinStats::default();
    for (m, s) in parts {
        matches.extend(m);
        stats.merge(&s);
    }
    Ok((matches, stats))
}

/// Pre-filter only, chunked like [`classify`].
pub fn prefilter_parallel(
    points: &[PointRecord],
    table: &IntervalTable,
) -> Result<(Vec<CandidateMatch>, JoinStats)> {
    let parts: Vec<(Vec<CandidateMatch>, JoinStats)> = points
        .par_chunks(CHUNK)
        .map(|chunk| {
            let t0 = Instant::now();
            let c = prefilter(chunk, table)?;
            let secs = t0.elapsed().as_secs_f64();
            let s = JoinStats::from_candidates(chunk.len() as u64, &c, secs);
            Ok((c, s))
        })
        .collect::<Result<_>>()?;
    let mut cands = Vec::new();
    let mut stats = JoinStats::default();
    for (c, s) in parts {
        cands.extend(c);
        stats.merge(&s);
    }
    Ok((cands, stats))
}

/// Brute-force join: every point tested against every region.
pub fn nested_loop_join(points: &[PointRecord], regions: &[Region]) -> Vec<(i64, u32)> {
    points
        .par_chunks(CHUNK)
        .flat_map_iter(|chunk| {
            let mut out = Vec::new();
            for p in chunk {
                for r in regions {
                    if r.contains(p.pos) {
                        out.push((p.point_id, r.id));
                    }
                }
            }
            out
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cover::{build_cover, CoverOptions};
    use crate::geom::{Ring, SphericalPolygon};
    use crate::htm::IdRange;

    fn ll(lon: f64, lat: f64) -> UnitVec {
        UnitVec::from_lonlat(lon, lat).unwrap()
    }

    fn quad_region(id: u32, lon0: f64, lat0: f64, size: f64) -> Region {
        let r = Ring::new(vec![
            ll(lon0, lat0),
            ll(lon0 + size, lat0),
            ll(lon0 + size, lat0 + size),
            ll(lon0, lat0 + size),
        ])
        .unwrap();
        Region::new(id, "quad", vec![SphericalPolygon::new(r, vec![]).unwrap()])
    }

    fn row(region_id: u32, start: u64, end: u64) -> CoverRow {
        CoverRow {
            region_id,
            range: IdRange { start, end },
            partial: false,
            trixel_id: HtmId::from_raw(8),
        }
    }

    #[test]
    fn table_rejects_overlap_and_mixed_depth() {
        assert!(table_from_rows(vec![row(1, 0, 10), row(1, 5, 12)], 20).is_err());
        assert!(table_from_rows(vec![row(1, 0, 10), row(2, 5, 12)], 20).is_ok());
        let region = quad_region(1, 0.0, 0.0, 5.0);
        let (a, _) = build_cover(&region, &CoverOptions::new(6)).unwrap();
        let (b, _) = build_cover(&region, &CoverOptions::new(6).with_index_level(18)).unwrap();
        assert!(matches!(
            build_interval_table(&[a, b]),
            Err(Error::DepthMismatch { .. })
        ));
    }

    #[test]
    fn stab_finds_overlapping_rows() {
        let t = table_from_rows(vec![row(1, 0, 100), row(2, 10, 20), row(3, 50, 60), row(2, 30, 40)], 20).unwrap();
        let hits = |id| {
            let mut v = Vec::new();
            t.stab(id, |r| v.push(r.region_id));
            v.sort();
            v
        };
        assert_eq!(hits(15), vec![1, 2]);
        assert_eq!(hits(45), vec![1]);
        assert_eq!(hits(55), vec![1, 3]);
        assert_eq!(hits(100), Vec::<u32>::new());
    }

    #[test]
    fn lone_region_candidates() {
        let region = quad_region(7, 0.0, 0.0, 10.0);
        let (cover, store) = build_cover(&region, &CoverOptions::new(8)).unwrap();
        let table = build_interval_table(&[cover]).unwrap();
        let inside = PointRecord::new(1, 5.0, 5.0, 20).unwrap();
        let far = PointRecord::new(2, -175.0, -5.0, 20).unwrap();
        let c = prefilter(&[inside, far], &table).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].point_id, 1);
        assert!(!c[0].partial);
        let m = exact_classify(&c, &store, |_| None).unwrap();
        assert_eq!(m[0].kind, MatchKind::Full);
    }

    #[test]
    fn missing_clip_is_an_error() {
        let c = CandidateMatch {
            point_id: 1,
            region_id: 3,
            partial: true,
            trixel_id: HtmId::from_raw(8),
        };
        let store = GeometryStore::new();
        let r = exact_classify(&[c], &store, |_| Some(UnitVec::X));
        assert!(matches!(r, Err(Error::MissingClip { .. })));
    }

    #[test]
    fn depth_mismatch_rejected() {
        let region = quad_region(7, 0.0, 0.0, 10.0);
        let (cover, _) = build_cover(&region, &CoverOptions::new(8)).unwrap();
        let table = build_interval_table(&[cover]).unwrap();
        let p = PointRecord::new(1, 5.0, 5.0, 18).unwrap();
        assert!(prefilter(&[p], &table).is_err());
    }

    #[test]
    fn empty_stream() {
        let table = build_interval_table(&[]).unwrap();
        let (m, s) = classify(&[], &table, &GeometryStore::new()).unwrap();
        assert!(m.is_empty());
        assert_eq!(s, JoinStats::default());
    }
}
