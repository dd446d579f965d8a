//! Spherical Sutherland–Hodgman clipping against great-circle half-spaces.
//!
//! Every edge of a clipped ring keeps the support plane of the edge it was cut
//! from, and every inserted vertex is the intersection of two support planes.
//! Clipping a ring by a sequence of planes therefore produces the same vertex
//! bits no matter which coarser planes it was clipped by first, as long as the
//! final planes are the same.
//!
//! Non-convex rings may come out with zero-width "bridge" edges running along
//! the clip plane. They enclose no area and cancel under the even-odd rule, so
//! membership and area are unaffected away from the plane itself.

use super::ring::{Ring, SphericalPolygon};
use super::vec::{GreatCirclePlane, UnitVec, EPS};

/// Below this `|support × plane|` the support-plane intersection loses
/// precision and the crossing is interpolated from the edge endpoints instead.
const MIN_PLANE_ANGLE: f64 = 1e-4;

/// Chord length under which consecutive output vertices are merged.
const MERGE_CHORD: f64 = 1e-12;

#[derive(Clone, Copy)]
enum Support {
    Edge(UnitVec),
    ClipPlane,
}

/// Clips one ring to the kept side of `plane`; `None` when fewer than three
/// vertices survive.
pub fn clip_ring(ring: &Ring, plane: &GreatCirclePlane) -> Option<Ring> {
    let n = plane.normal;
    let d: Vec<f64> = ring.vertices().iter().map(|v| v.dot(n)).collect();
    if d.iter().all(|&x| x >= -EPS) {
        return Some(ring.clone());
    }
    if d.iter().all(|&x| x <= EPS) {
        return None;
    }

    let verts = ring.vertices();
    let supports = ring.normals();
    let len = verts.len();
    let mut out: Vec<(UnitVec, Support)> = Vec::with_capacity(len + 4);
    for i in 0..len {
        let j = (i + 1) % len;
        let (a, b, m) = (verts[i], verts[j], supports[i]);
        let (da, db) = (d[i], d[j]);
        if da >= -EPS {
            if db >= -EPS {
                out.push((a, Support::Edge(m)));
            } else if da <= EPS {
                // a sits on the plane and the edge leaves through it
                out.push((a, Support::ClipPlane));
            } else {
                out.push((a, Support::Edge(m)));
                out.push((crossing(a, b, da, db, m, n), Support::ClipPlane));
            }
        } else if db > EPS {
            out.push((crossing(a, b, da, db, m, n), Support::Edge(m)));
        }
    }
    finish(out, n)
}

/// Intersection of edge `a → b` (support `m`) with the plane `n`.
pub(crate) fn crossing(a: UnitVec, b: UnitVec, da: f64, db: f64, m: UnitVec, n: UnitVec) -> UnitVec {
    let line = m.cross(n);
    if line.norm() >= MIN_PLANE_ANGLE {
        let x = line.normalize().expect("nonzero");
        if x.vec().dot(a.vec() + b.vec()) >= 0.0 {
            x
        } else {
            x.antipode()
        }
    } else {
        (a.vec() * db - b.vec() * da)
            .normalize()
            .unwrap_or_else(|| a.midpoint(b))
    }
}

fn finish(raw: Vec<(UnitVec, Support)>, n: UnitVec) -> Option<Ring> {
    if raw.len() < 3 {
        return None;
    }
    let len = raw.len();
    let mut verts = Vec::with_capacity(len);
    let mut normals = Vec::with_capacity(len);
    for i in 0..len {
        let (a, s) = raw[i];
        let b = raw[(i + 1) % len].0;
        let support = match s {
            Support::Edge(m) => m,
            Support::ClipPlane => {
                if a.cross(b).dot(n.vec()) >= 0.0 {
                    n
                } else {
                    n.antipode()
                }
            }
        };
        verts.push(a);
        normals.push(support);
    }
    simplify(&mut verts, &mut normals);
    Ring::from_parts(verts, normals).ok()
}

/// Merges coincident neighbours and drops vertices whose two edges share
/// the identical support.
fn simplify(verts: &mut Vec<UnitVec>, normals: &mut Vec<UnitVec>) {
    loop {
        let len = verts.len();
        if len < 3 {
            return;
        }
        let mut changed = false;
        let mut keep = vec![true; len];
        for i in 0..len {
            let j = (i + 1) % len;
            if !keep[i] {
                continue;
            }
            let close = (verts[i].vec() - verts[j].vec()).norm() <= MERGE_CHORD;
            let collinear = normals[i] == normals[(i + len - 1) % len];
            if close && keep[j] && i != j {
                // drop j, i takes over j's outgoing edge; the smaller point
                // survives so the result does not depend on the ring start
                keep[j] = false;
                normals[i] = normals[j];
                if verts[j].total_cmp(&verts[i]).is_lt() {
                    verts[i] = verts[j];
                }
                changed = true;
            } else if collinear {
                keep[i] = false;
                changed = true;
            }
        }
        if !changed {
            return;
        }
        let mut k = 0;
        verts.retain(|_| {
            k += 1;
            keep[k - 1]
        });
        let mut k = 0;
        normals.retain(|_| {
            k += 1;
            keep[k - 1]
        });
    }
}

/// Moves vertices lying within the merge chord of a target onto it exactly,
/// then merges any neighbours that became coincident. `None` if fewer than
/// three vertices remain.
pub(crate) fn snap_ring(ring: &Ring, targets: &[UnitVec]) -> Option<Ring> {
    let mut verts = ring.vertices().to_vec();
    let mut normals = ring.normals().to_vec();
    let mut moved = false;
    for v in &mut verts {
        if let Some(&t) = targets
            .iter()
            .find(|t| (t.vec() - v.vec()).norm() <= MERGE_CHORD)
        {
            moved |= *v != t;
            *v = t;
        }
    }
    if !moved {
        return Some(ring.clone());
    }
    simplify(&mut verts, &mut normals);
    Ring::from_parts(verts, normals).ok()
}

/// Rotates a ring to start at its smallest vertex so equal point sets
/// built along different clipping paths compare equal.
pub(crate) fn canonical_ring(ring: &Ring) -> Ring {
    let verts = ring.vertices();
    let start = (0..verts.len())
        .min_by(|&a, &b| verts[a].total_cmp(&verts[b]))
        .unwrap_or(0);
    if start == 0 {
        return ring.clone();
    }
    let mut v = verts.to_vec();
    let mut n = ring.normals().to_vec();
    v.rotate_left(start);
    n.rotate_left(start);
    Ring::from_parts(v, n).expect("rotation preserves validity")
}

/// Clips a polygon to `{p : p · normal ≥ 0}`.
///
/// Holes are clipped independently and subtracted from the clipped exterior.
pub fn clip_polygon_to_halfspace(
    poly: &SphericalPolygon,
    plane: &GreatCirclePlane,
) -> Vec<SphericalPolygon> {
    let n = plane.normal;
    if poly.exterior.vertices().iter().all(|v| v.dot(n) >= -EPS) {
        return vec![poly.clone()];
    }
    match clip_ring(&poly.exterior, plane) {
        None => Vec::new(),
        Some(exterior) => {
            let holes = poly
                .holes
                .iter()
                .filter_map(|h| clip_ring(h, plane))
                .collect();
            vec![SphericalPolygon::from_rings_unchecked(exterior, holes)]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ring::Region;

    fn ll(lon: f64, lat: f64) -> UnitVec {
        UnitVec::from_lonlat(lon, lat).unwrap()
    }

    fn quad(lon0: f64, lat0: f64, size: f64) -> SphericalPolygon {
        let r = Ring::new(vec![
            ll(lon0, lat0),
            ll(lon0 + size, lat0),
            ll(lon0 + size, lat0 + size),
            ll(lon0, lat0 + size),
        ])
        .unwrap();
        SphericalPolygon::new(r, vec![]).unwrap()
    }

    fn meridian_plane(lon: f64) -> GreatCirclePlane {
        // kept side: longitudes east of `lon`
        GreatCirclePlane::through(UnitVec::Z, ll(lon, 0.0)).unwrap()
    }

    #[test]
    fn identity_and_annihilation() {
        let p = quad(10.0, 10.0, 5.0);
        let east = meridian_plane(0.0);
        assert!(east.side(ll(12.0, 12.0)) > 0.0);
        assert_eq!(clip_polygon_to_halfspace(&p, &east), vec![p.clone()]);
        assert!(clip_polygon_to_halfspace(&p, &east.flipped()).is_empty());
    }

    #[test]
    fn bisected_quad_halves_area() {
        let p = quad(0.0, 0.0, 10.0);
        let whole = p.area();
        let east = clip_polygon_to_halfspace(&p, &meridian_plane(5.0));
        let west = clip_polygon_to_halfspace(&p, &meridian_plane(5.0).flipped());
        let ea: f64 = east.iter().map(|q| q.area()).sum();
        let wa: f64 = west.iter().map(|q| q.area()).sum();
        assert!(((ea - whole / 2.0) / whole).abs() < 1e-6, "{ea} vs {whole}");
        assert!(((ea + wa - whole) / whole).abs() < 1e-12);
    }

    #[test]
    fn concave_ring_splits_with_bridge() {
        // U shape opening north; clipping away the south bar leaves two prongs
        let pts = [
            (0.0, 0.0),
            (6.0, 0.0),
            (6.0, 6.0),
            (4.0, 6.0),
            (4.0, 2.0),
            (2.0, 2.0),
            (2.0, 6.0),
            (0.0, 6.0),
        ];
        let ring = Ring::new(pts.iter().map(|&(a, b)| ll(a, b)).collect()).unwrap();
        let poly = SphericalPolygon::new(ring, vec![]).unwrap();
        // keep points north of the great circle through (−1, 3) → (7, 3)
        let plane = GreatCirclePlane::through(ll(-1.0, 3.0), ll(7.0, 3.0)).unwrap();
        let out = clip_polygon_to_halfspace(&poly, &plane);
        assert_eq!(out.len(), 1);
        let region = Region::new(1, "u", out);
        assert!(region.contains(ll(1.0, 5.0)));
        assert!(region.contains(ll(5.0, 5.0)));
        assert!(!region.contains(ll(3.0, 5.0)));
        assert!(!region.contains(ll(3.0, 1.0)));
    }

    #[test]
    fn hole_is_clipped_too() {
        let ext = quad(0.0, 0.0, 10.0).exterior;
        let hole = quad(3.0, 3.0, 4.0).exterior;
        let poly = SphericalPolygon::new(ext, vec![hole]).unwrap();
        let out = clip_polygon_to_halfspace(&poly, &meridian_plane(5.0));
        assert_eq!(out[0].holes.len(), 1);
        let region = Region::new(1, "h", out);
        assert!(!region.contains(ll(6.0, 5.0)));
        assert!(region.contains(ll(8.0, 5.0)));
        assert!(!region.contains(ll(4.0, 5.0)));
    }

    #[test]
    fn canonical_rotation_is_stable() {
        let r = quad(1.0, 2.0, 3.0).exterior;
        let c1 = canonical_ring(&r);
        let mut v = r.vertices().to_vec();
        v.rotate_left(2);
        let c2 = canonical_ring(&Ring::new(v).unwrap());
        assert_eq!(c1.vertices(), c2.vertices());
    }
}
