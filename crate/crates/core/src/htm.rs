//! Hierarchical Triangular Mesh: octahedral roots, midpoint subdivision,
//! id bit layout and id-interval arithmetic.
//!
//! An id is a leading `1` bit, one hemisphere bit, two root bits and then two
//! bits per subdivision level, so a level-`L` id satisfies
//! `8·4^L ≤ id < 16·4^L`.

use std::fmt;

use crate::error::{Error, Result};
use crate::geom::{edge_normal, Cap, GreatCirclePlane, Ring, UnitVec, EPS};

/// Deepest level an id can address (60-bit ids).
pub const MAX_LEVEL: u32 = 28;

/// Default index depth: 44-bit ids, roughly 10 m trixels on Earth.
pub const DEFAULT_INDEX_LEVEL: u32 = 20;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HtmId(u64);

impl fmt::Debug for HtmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HtmId({})", self.0)
    }
}

impl fmt::Display for HtmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl HtmId {
    pub fn new(value: u64) -> Result<Self> {
        let bits = 64 - value.leading_zeros();
        if bits < 4 || (bits - 4) % 2 != 0 || (bits - 4) / 2 > MAX_LEVEL {
            return Err(Error::InvalidId(value));
        }
        Ok(HtmId(value))
    }

    #[inline]
    pub(crate) const fn from_raw(value: u64) -> Self {
        HtmId(value)
    }

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn level(self) -> u32 {
        (64 - self.0.leading_zeros() - 4) / 2
    }

    pub fn parent(self) -> Result<HtmId> {
        if self.level() == 0 {
            return Err(Error::InvalidId(self.0));
        }
        Ok(HtmId(self.0 >> 2))
    }

    pub fn children(self) -> Result<[HtmId; 4]> {
        if self.level() >= MAX_LEVEL {
            return Err(Error::LevelOverflow {
                level: self.level() + 1,
                limit: MAX_LEVEL,
            });
        }
        let b = self.0 << 2;
        Ok([HtmId(b), HtmId(b + 1), HtmId(b + 2), HtmId(b + 3)])
    }

    /// Half-open range of level-`index_level` ids covered by this trixel.
    pub fn range(self, index_level: u32) -> Result<IdRange> {
        id_range(self, index_level)
    }
}

/// Level of a raw id value.
pub fn level_of(value: u64) -> Result<u32> {
    HtmId::new(value).map(HtmId::level)
}

/// Parent of a raw id value.
pub fn parent(value: u64) -> Result<HtmId> {
    HtmId::new(value)?.parent()
}

/// Half-open id interval `[start, end)` at the index depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdRange {
    pub start: u64,
    pub end: u64,
}

impl IdRange {
    #[inline]
    pub fn contains(&self, id: u64) -> bool {
        self.start <= id && id < self.end
    }

    #[inline]
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn is_subset_of(&self, other: &IdRange) -> bool {
        other.start <= self.start && self.end <= other.end
    }
}

pub fn id_range(id: HtmId, index_level: u32) -> Result<IdRange> {
    if index_level > MAX_LEVEL {
        return Err(Error::LevelOverflow {
            level: index_level,
            limit: MAX_LEVEL,
        });
    }
    let level = id.level();
    if level > index_level {
        return Err(Error::LevelOverflow {
            level,
            limit: index_level,
        });
    }
    let shift = 2 * (index_level - level);
    Ok(IdRange {
        start: id.0 << shift,
        end: (id.0 + 1) << shift,
    })
}

/// Splits an id interval into the fewest aligned trixels that tile it.
pub fn decompose_range(range: IdRange, index_level: u32) -> Result<Vec<HtmId>> {
    let mut out = Vec::new();
    let mut start = range.start;
    while start < range.end {
        let mut k = 0u32;
        while k < index_level {
            let size = 1u64 << (2 * (k + 1));
            if start % size != 0 || start + size > range.end {
                break;
            }
            k += 1;
        }
        let id = HtmId::new(start >> (2 * k))?;
        if id.level() + k != index_level {
            return Err(Error::InvalidId(start));
        }
        out.push(id);
        start += 1u64 << (2 * k);
    }
    Ok(out)
}

/// Spherical triangle of the mesh.
///
/// `normals[i]` bounds the edge `vertices[i] → vertices[(i + 1) % 3]`, with the
/// interior on its positive side. Edges that lie on a parent edge reuse the
/// parent's normal, and shared interior edges of siblings use exactly negated
/// normals, so neighbouring trixels agree bit-for-bit on their common planes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trixel {
    pub id: HtmId,
    pub vertices: [UnitVec; 3],
    pub normals: [UnitVec; 3],
}

const P0: UnitVec = UnitVec::Z;
const P1: UnitVec = UnitVec::X;
const P2: UnitVec = UnitVec::Y;
const P3: UnitVec = UnitVec::from_raw(-1.0, 0.0, 0.0);
const P4: UnitVec = UnitVec::from_raw(0.0, -1.0, 0.0);
const P5: UnitVec = UnitVec::from_raw(0.0, 0.0, -1.0);

const ROOT_VERTICES: [[UnitVec; 3]; 8] = [
    [P1, P5, P2], // S0
    [P2, P5, P3], // S1
    [P3, P5, P4], // S2
    [P4, P5, P1], // S3
    [P1, P0, P4], // N0
    [P4, P0, P3], // N1
    [P3, P0, P2], // N2
    [P2, P0, P1], // N3
];

impl Trixel {
    fn root(index: usize) -> Trixel {
        let v = ROOT_VERTICES[index];
        let n = |a: usize, b: usize| edge_normal(v[a], v[b]).expect("root edges are proper");
        Trixel {
            id: HtmId(8 + index as u64),
            vertices: v,
            normals: [n(0, 1), n(1, 2), n(2, 0)],
        }
    }

    #[inline]
    pub fn level(&self) -> u32 {
        self.id.level()
    }

    pub fn children(&self) -> Result<[Trixel; 4]> {
        let ids = self.id.children()?;
        let [v0, v1, v2] = self.vertices;
        let [n01, n12, n20] = self.normals;
        let w0 = v1.midpoint(v2);
        let w1 = v0.midpoint(v2);
        let w2 = v0.midpoint(v1);
        let (e0, e1, e2) = inner_normals(w0, w1, w2);
        Ok([
            Trixel {
                id: ids[0],
                vertices: [v0, w2, w1],
                normals: [n01, e0, n20],
            },
            Trixel {
                id: ids[1],
                vertices: [v1, w0, w2],
                normals: [n12, e1, n01],
            },
            Trixel {
                id: ids[2],
                vertices: [v2, w1, w0],
                normals: [n20, e2, n12],
            },
            Trixel {
                id: ids[3],
                vertices: [w0, w1, w2],
                normals: [e2.antipode(), e0.antipode(), e1.antipode()],
            },
        ])
    }

    /// Closed containment with plane tolerance `EPS`.
    #[inline]
    pub fn contains(&self, p: UnitVec) -> bool {
        self.normals.iter().all(|n| p.dot(*n) >= -EPS)
    }

    /// Strictly inside every bounding plane by more than `EPS`.
    #[inline]
    pub fn contains_strictly(&self, p: UnitVec) -> bool {
        self.normals.iter().all(|n| p.dot(*n) > EPS)
    }

    pub fn centroid(&self) -> UnitVec {
        let [a, b, c] = self.vertices;
        (a.vec() + b.vec() + c.vec())
            .normalize()
            .expect("trixel vertices span less than a hemisphere")
    }

    pub fn planes(&self) -> [GreatCirclePlane; 3] {
        self.normals.map(GreatCirclePlane::new)
    }

    pub fn to_ring(&self) -> Ring {
        Ring::from_parts(self.vertices.to_vec(), self.normals.to_vec())
            .expect("trixels are valid rings")
    }

    pub fn area(&self) -> f64 {
        self.to_ring().signed_area()
    }

    pub fn cap(&self) -> Cap {
        Cap::around(self.vertices.iter()).expect("trixel cap")
    }

    /// Range of index-level ids covered by this trixel.
    pub fn range(&self, index_level: u32) -> Result<IdRange> {
        id_range(self.id, index_level)
    }
}

/// Normals of the three new interior edges `w2→w1`, `w0→w2`, `w1→w0`.
#[inline]
fn inner_normals(w0: UnitVec, w1: UnitVec, w2: UnitVec) -> (UnitVec, UnitVec, UnitVec) {
    let n = |a, b| edge_normal(a, b).expect("midpoints are distinct");
    (n(w2, w1), n(w0, w2), n(w1, w0))
}

/// The eight octants, ids 8 through 15.
pub fn root_trixels() -> [Trixel; 8] {
    std::array::from_fn(Trixel::root)
}

pub fn children(t: &Trixel) -> Result<[Trixel; 4]> {
    t.children()
}

pub fn point_in_trixel(p: UnitVec, t: &Trixel) -> bool {
    t.contains(p)
}

/// Id of the level-`level` trixel containing `p`.
///
/// Descends into the first child (in index order) whose planes accept `p`
/// within tolerance, so boundary points resolve deterministically.
pub fn encode(p: UnitVec, level: u32) -> Result<HtmId> {
    if level > MAX_LEVEL {
        return Err(Error::LevelOverflow {
            level,
            limit: MAX_LEVEL,
        });
    }
    let roots = root_trixels();
    let root = roots
        .iter()
        .find(|t| t.contains(p))
        .expect("roots cover the sphere");
    let [mut v0, mut v1, mut v2] = root.vertices;
    let mut id = root.id.0;
    for _ in 0..level {
        let w0 = v1.midpoint(v2);
        let w1 = v0.midpoint(v2);
        let w2 = v0.midpoint(v1);
        let (e0, e1, e2) = inner_normals(w0, w1, w2);
        id <<= 2;
        if p.dot(e0) >= -EPS {
            (v1, v2) = (w2, w1);
        } else if p.dot(e1) >= -EPS {
            id += 1;
            (v0, v1, v2) = (v1, w0, w2);
        } else if p.dot(e2) >= -EPS {
            id += 2;
            (v0, v1, v2) = (v2, w1, w0);
        } else {
            id += 3;
            (v0, v1, v2) = (w0, w1, w2);
        }
    }
    Ok(HtmId(id))
}

/// Rebuilds the trixel for an id by replaying its path from the root.
pub fn trixel_of(id: HtmId) -> Result<Trixel> {
    let level = id.level();
    let root_index = (id.0 >> (2 * level)) - 8;
    let mut t = Trixel::root(root_index as usize);
    for depth in (0..level).rev() {
        let child = ((id.0 >> (2 * depth)) & 3) as usize;
        t = t.children()?[child];
    }
    Ok(t)
}

/// Trixels on the path from the root down to `id`, root first.
pub fn ancestry(id: HtmId) -> Result<Vec<Trixel>> {
    let level = id.level();
    let root_index = (id.0 >> (2 * level)) - 8;
    let mut path = Vec::with_capacity(level as usize + 1);
    path.push(Trixel::root(root_index as usize));
    for depth in (0..level).rev() {
        let child = ((id.0 >> (2 * depth)) & 3) as usize;
        let next = path[path.len() - 1].children()?[child];
        path.push(next);
    }
    Ok(path)
}

/// Raw-value convenience wrapper around [`trixel_of`].
pub fn trixel_of_value(value: u64) -> Result<Trixel> {
    trixel_of(HtmId::new(value)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn id_layout() {
        assert_eq!(level_of(15).unwrap(), 0);
        assert_eq!(level_of(63).unwrap(), 1);
        assert_eq!(parent(63).unwrap().value(), 15);
        assert!(level_of(7).is_err());
        assert!(level_of(0).is_err());
        // odd bit length is not a valid id
        assert!(level_of(16).is_err());
        let kids: Vec<u64> = HtmId::new(15).unwrap().children().unwrap().iter().map(|h| h.value()).collect();
        assert_eq!(kids, vec![60, 61, 62, 63]);
        assert!(HtmId::new(8).unwrap().parent().is_err());
    }

    #[test]
    fn roots() {
        let roots = root_trixels();
        let ids: Vec<u64> = roots.iter().map(|t| t.id.value()).collect();
        assert_eq!(ids, (8..16).collect::<Vec<_>>());
        for t in &roots {
            assert!((t.area() - PI / 2.0).abs() < 1e-12);
            // orientation: each remaining vertex on the positive side
            for i in 0..3 {
                assert!(t.vertices[(i + 2) % 3].dot(t.normals[i]) >= -EPS);
            }
        }
        let n3 = trixel_of(HtmId::new(15).unwrap()).unwrap();
        assert_eq!(n3.vertices, [P2, P0, P1]);
    }

    #[test]
    fn encode_diagonal_is_n3() {
        let p = UnitVec::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(encode(p, 0).unwrap().value(), 15);
        let q = UnitVec::from_lonlat(45.0, 35.2643897).unwrap();
        assert_eq!(encode(q, 0).unwrap().value(), 15);
    }

    #[test]
    fn center_child_vertices_are_midpoints() {
        let t = trixel_of(HtmId::new(13).unwrap()).unwrap();
        let c = trixel_of(HtmId::new(13 * 4 + 3).unwrap()).unwrap();
        let [v0, v1, v2] = t.vertices;
        assert_eq!(c.vertices, [v1.midpoint(v2), v0.midpoint(v2), v0.midpoint(v1)]);
    }

    #[test]
    fn ranges() {
        let r = id_range(HtmId::new(15).unwrap(), 20).unwrap();
        assert_eq!(r, IdRange { start: 15 << 40, end: 16 << 40 });
        let leaf = encode(UnitVec::X, 20).unwrap();
        let r = id_range(leaf, 20).unwrap();
        assert_eq!(r.end - r.start, 1);
        assert!(id_range(leaf, 19).is_err());
        assert!(id_range(HtmId::new(15).unwrap(), 29).is_err());
    }

    #[test]
    fn decompose_aligned_and_unaligned() {
        let t = HtmId::new(61).unwrap();
        let r = t.range(5).unwrap();
        assert_eq!(decompose_range(r, 5).unwrap(), vec![t]);
        let kids = t.children().unwrap();
        let r2 = IdRange {
            start: kids[1].range(5).unwrap().start,
            end: r.end,
        };
        let parts = decompose_range(r2, 5).unwrap();
        assert_eq!(parts, vec![kids[1], kids[2], kids[3]]);
    }

    #[test]
    fn children_rejects_overflow() {
        let mut id = 8u64;
        for _ in 0..MAX_LEVEL {
            id <<= 2;
        }
        let deep = HtmId::new(id).unwrap();
        assert_eq!(deep.level(), MAX_LEVEL);
        assert!(deep.children().is_err());
        assert!(encode(UnitVec::X, MAX_LEVEL + 1).is_err());
    }
}
