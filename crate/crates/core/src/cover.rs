//! Adaptive HTM tessellation of a region into full and partial trixels.
//!
//! Starting from the root trixels that meet the region's bounding cap, each
//! trixel is classified against the region. Full trixels are emitted as they
//! are, disjoint ones are dropped, and partial ones are split into their four
//! children until the maximum level, where they are emitted as partial rows
//! together with the region clipped to the trixel. When narrowing is on, each
//! recursive call only sees the region clipped to its parent.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{
    canonical_ring, clip_polygon_to_halfspace, crossing, snap_ring, Ring, Region, SphericalPolygon,
    UnitVec, EPS,
};
use crate::htm::{ancestry, root_trixels, HtmId, IdRange, Trixel, DEFAULT_INDEX_LEVEL, MAX_LEVEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrixelClass {
    Full,
    Partial,
    Disjoint,
}

/// One trixel of a region's cover as an id interval at the index depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverRow {
    pub region_id: u32,
    pub range: IdRange,
    pub partial: bool,
    pub trixel_id: HtmId,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CoverStats {
    pub full_rows: usize,
    pub partial_rows: usize,
    /// Solid angle of the full trixels.
    pub full_area: f64,
    /// Solid angle of the partial trixels.
    pub partial_area: f64,
}

impl CoverStats {
    pub fn covered_area(&self) -> f64 {
        self.full_area + self.partial_area
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCover {
    pub region_id: u32,
    pub maxlevel: u32,
    pub index_level: u32,
    /// Sorted by range start; ranges are pairwise disjoint.
    pub rows: Vec<CoverRow>,
    pub stats: CoverStats,
}

impl RegionCover {
    pub fn row_containing(&self, id: u64) -> Option<&CoverRow> {
        let idx = self.rows.partition_point(|r| r.range.start <= id);
        idx.checked_sub(1)
            .map(|i| &self.rows[i])
            .filter(|r| r.range.contains(id))
    }
}

/// Region geometry clipped to each partial trixel, keyed by `(region_id, trixel_id)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeometryStore {
    clips: BTreeMap<(u32, u64), Vec<SphericalPolygon>>,
}

impl GeometryStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, region_id: u32, trixel_id: HtmId, clip: Vec<SphericalPolygon>) {
        self.clips.insert((region_id, trixel_id.value()), clip);
    }

    pub fn get(&self, region_id: u32, trixel_id: HtmId) -> Option<&[SphericalPolygon]> {
        self.clips
            .get(&(region_id, trixel_id.value()))
            .map(Vec::as_slice)
    }

    /// Closed-set membership of `p` in the stored clip.
    pub fn contains(&self, region_id: u32, trixel_id: HtmId, p: UnitVec) -> Result<bool> {
        let clip = self.get(region_id, trixel_id).ok_or(Error::MissingClip {
            region_id,
            trixel_id: trixel_id.value(),
        })?;
        Ok(clip.iter().any(|poly| poly.contains(p)))
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn extend(&mut self, other: GeometryStore) {
        self.clips.extend(other.clips);
    }

    /// Entries in `(region_id, trixel_id)` order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, HtmId, &[SphericalPolygon])> {
        self.clips
            .iter()
            .map(|(&(r, t), c)| (r, HtmId::from_raw(t), c.as_slice()))
    }

    pub fn vertex_count(&self) -> usize {
        self.clips
            .values()
            .flatten()
            .map(SphericalPolygon::vertex_count)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverOptions {
    pub maxlevel: u32,
    /// Depth of the ids that row ranges are expressed in.
    pub index_level: u32,
    /// Coalesce adjacent full rows.
    pub merge: bool,
    /// Recurse with the region clipped to the parent trixel.
    pub narrow: bool,
}

impl CoverOptions {
    pub fn new(maxlevel: u32) -> Self {
        CoverOptions {
            maxlevel,
            index_level: DEFAULT_INDEX_LEVEL.max(maxlevel),
            merge: false,
            narrow: true,
        }
    }

    pub fn with_index_level(mut self, index_level: u32) -> Self {
        self.index_level = index_level;
        self
    }

    pub fn with_merge(mut self, merge: bool) -> Self {
        self.merge = merge;
        self
    }

    pub fn with_narrowing(mut self, narrow: bool) -> Self {
        self.narrow = narrow;
        self
    }

    fn validate(&self) -> Result<()> {
        for level in [self.maxlevel, self.index_level] {
            if level > MAX_LEVEL {
                return Err(Error::LevelOverflow {
                    level,
                    limit: MAX_LEVEL,
                });
            }
        }
        if self.maxlevel > self.index_level {
            return Err(Error::LevelOverflow {
                level: self.maxlevel,
                limit: self.index_level,
            });
        }
        Ok(())
    }
}

/// Clips smaller than this (in steradians) count as empty at `level`.
fn sliver_area(level: u32) -> f64 {
    let trixel = FRAC_PI_2 / 4f64.powi(level as i32);
    1e-15f64.min(1e-6 * trixel)
}

/// Whether the arc `a → b` (support `m`) meets the open interior of `t`.
///
/// The arc is cut to the three half-spaces of `t`; it meets the interior iff
/// the midpoint of what survives lies strictly inside. Pieces of the same arc
/// produced by earlier clipping reach the same cut points, so the answer does
/// not depend on whether the region was narrowed first.
fn edge_meets_interior(t: &Trixel, a: UnitVec, b: UnitVec, m: UnitVec) -> bool {
    let (mut p0, mut p1) = (a, b);
    for n in t.normals {
        let (d0, d1) = (p0.dot(n), p1.dot(n));
        if d0 < -EPS && d1 < -EPS {
            return false;
        }
        if d0 < -EPS {
            p0 = crossing(p0, p1, d0, d1, m, n);
        } else if d1 < -EPS {
            p1 = crossing(p0, p1, d0, d1, m, n);
        }
    }
    match (p0.vec() + p1.vec()).normalize() {
        Some(mid) => t.normals.iter().all(|&n| mid.dot(n) > EPS),
        None => false,
    }
}

/// Full, partial or disjoint: partial when a boundary edge enters the
/// trixel's interior, otherwise decided by the centroid.
fn symbolic(polys: &[SphericalPolygon], t: &Trixel) -> TrixelClass {
    if polys.is_empty() {
        return TrixelClass::Disjoint;
    }
    let tcap = t.cap();
    for ring in polys.iter().flat_map(SphericalPolygon::rings) {
        if !ring.cap().intersects(&tcap) {
            continue;
        }
        for (a, b, m) in ring.edges() {
            if edge_meets_interior(t, a, b, m) {
                return TrixelClass::Partial;
            }
        }
    }
    let c = t.centroid();
    if polys.iter().any(|p| p.contains(c)) {
        TrixelClass::Full
    } else {
        TrixelClass::Disjoint
    }
}

/// Three successive half-space clips, with no clean-up.
fn clip_raw(polys: &[SphericalPolygon], t: &Trixel) -> Vec<SphericalPolygon> {
    let tcap = t.cap();
    let planes = t.planes();
    let mut out = Vec::new();
    for poly in polys {
        if !poly.exterior.cap().intersects(&tcap) {
            continue;
        }
        let mut pieces = vec![poly.clone()];
        for plane in &planes {
            pieces = pieces
                .iter()
                .flat_map(|p| clip_polygon_to_halfspace(p, plane))
                .collect();
            if pieces.is_empty() {
                break;
            }
        }
        out.extend(pieces);
    }
    out
}

/// The region clipped to each trixel from the root down to `t` in turn.
///
/// Clipping order changes where zero-width bridge edges end up, so every
/// stored clip is produced along this one path whether or not the recursion
/// narrows.
fn clip_path(polys: &[SphericalPolygon], t: &Trixel) -> Result<Vec<SphericalPolygon>> {
    let mut pieces = polys.to_vec();
    for step in ancestry(t.id)? {
        if pieces.is_empty() {
            break;
        }
        pieces = clip_raw(&pieces, &step);
    }
    Ok(pieces)
}

/// Snaps vertices onto the trixel corners, rotates rings to a canonical
/// start and drops rings below the sliver area.
fn finish_clip(raw: Vec<SphericalPolygon>, t: &Trixel) -> Vec<SphericalPolygon> {
    let min_area = sliver_area(t.level());
    let tidy = |r: &Ring| {
        snap_ring(r, &t.vertices)
            .map(|r| canonical_ring(&r))
            .filter(|r| r.signed_area().abs() >= min_area)
    };
    raw.iter()
        .filter_map(|piece| {
            let exterior = tidy(&piece.exterior)?;
            let holes = piece.holes.iter().filter_map(tidy).collect();
            Some(SphericalPolygon::from_rings_unchecked(exterior, holes))
        })
        .collect()
}

/// Full, partial or disjoint relation between a trixel and a region.
pub fn classify_trixel(region: &Region, t: &Trixel) -> TrixelClass {
    symbolic(&region.polygons, t)
}

/// The part of `region` inside `t`, without rings thinner than the sliver area.
pub fn clip_region_to_trixel(region: &Region, t: &Trixel) -> Result<Vec<SphericalPolygon>> {
    Ok(finish_clip(clip_path(&region.polygons, t)?, t))
}

struct Collector {
    region_id: u32,
    opts: CoverOptions,
    rows: Vec<CoverRow>,
    store: GeometryStore,
    stats: CoverStats,
}

impl Collector {
    fn emit(&mut self, t: &Trixel, partial: bool) -> Result<()> {
        let area = t.area();
        if partial {
            self.stats.partial_rows += 1;
            self.stats.partial_area += area;
        } else {
            self.stats.full_rows += 1;
            self.stats.full_area += area;
        }
        self.rows.push(CoverRow {
            region_id: self.region_id,
            range: t.range(self.opts.index_level)?,
            partial,
            trixel_id: t.id,
        });
        Ok(())
    }

    fn eval(&mut self, polys: &[SphericalPolygon], t: &Trixel) -> Result<()> {
        let level = t.level();
        if level > self.opts.maxlevel {
            return Err(Error::LevelOverflow {
                level,
                limit: self.opts.maxlevel,
            });
        }
        let leaf = level >= self.opts.maxlevel;
        match symbolic(polys, t) {
            TrixelClass::Full => self.emit(t, false)?,
            TrixelClass::Disjoint => {}
            TrixelClass::Partial if leaf => {
                // a partial leaf whose clip is all sliver is dropped
                let raw = if self.opts.narrow {
                    clip_raw(polys, t)
                } else {
                    clip_path(polys, t)?
                };
                let clip = finish_clip(raw, t);
                if !clip.is_empty() {
                    self.emit(t, true)?;
                    self.store.insert(self.region_id, t.id, clip);
                }
            }
            TrixelClass::Partial => {
                let narrowed = self.opts.narrow.then(|| clip_raw(polys, t));
                let sub = narrowed.as_deref().unwrap_or(polys);
                for child in t.children()? {
                    self.eval(sub, &child)?;
                }
            }
        }
        Ok(())
    }
}

/// Recursive tessellation of `region` starting from `trixels`.
///
/// Rows come back sorted by range start.
pub fn eval_trixels(
    region: &Region,
    trixels: &[Trixel],
    opts: &CoverOptions,
) -> Result<(Vec<CoverRow>, GeometryStore, CoverStats)> {
    opts.validate()?;
    let mut c = Collector {
        region_id: region.id,
        opts: *opts,
        rows: Vec::new(),
        store: GeometryStore::new(),
        stats: CoverStats::default(),
    };
    for t in trixels {
        c.eval(&region.polygons, t)?;
    }
    c.rows.sort_by_key(|r| r.range.start);
    Ok((c.rows, c.store, c.stats))
}

/// Root trixels that can meet the region.
pub fn seed_trixels(region: &Region) -> Vec<Trixel> {
    let roots = root_trixels();
    match region.bounding_cap() {
        Some(cap) if cap.cos_radius > EPS => roots
            .into_iter()
            .filter(|t| t.cap().intersects(&cap))
            .collect(),
        _ => roots.to_vec(),
    }
}

/// Coalesces full rows whose ranges touch. Partial rows are never merged.
pub fn merge_rows(rows: &[CoverRow]) -> Vec<CoverRow> {
    let mut out: Vec<CoverRow> = Vec::with_capacity(rows.len());
    for row in rows {
        if let Some(last) = out.last_mut() {
            if !last.partial && !row.partial && last.range.end == row.range.start {
                last.range.end = row.range.end;
                continue;
            }
        }
        out.push(*row);
    }
    out
}

pub fn build_cover(region: &Region, opts: &CoverOptions) -> Result<(RegionCover, GeometryStore)> {
    let seeds = if region.is_empty() {
        Vec::new()
    } else {
        seed_trixels(region)
    };
    let (mut rows, store, mut stats) = eval_trixels(region, &seeds, opts)?;
    if opts.merge {
        rows = merge_rows(&rows);
        stats.full_rows = rows.iter().filter(|r| !r.partial).count();
    }
    Ok((
        RegionCover {
            region_id: region.id,
            maxlevel: opts.maxlevel,
            index_level: opts.index_level,
            rows,
            stats,
        },
        store,
    ))
}

/// Covers for many regions in parallel; output order follows `regions`.
pub fn build_covers(
    regions: &[Region],
    opts: &CoverOptions,
) -> Result<(Vec<RegionCover>, GeometryStore)> {
    let built: Vec<(RegionCover, GeometryStore)> = regions
        .par_iter()
        .map(|r| build_cover(r, opts))
        .collect::<Result<_>>()?;
    let mut covers = Vec::with_capacity(built.len());
    let mut store = GeometryStore::new();
    for (c, s) in built {
        covers.push(c);
        store.extend(s);
    }
    Ok((covers, store))
}
