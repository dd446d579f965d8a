//! Reference implementations used only by tests. They work on raw lon/lat
//! arrays with plain vector algebra and share no code with the library's
//! geometry, so agreement is meaningful.

#![allow(dead_code)]

use htmjoin::Region;

pub type V = [f64; 3];

pub fn xyz(lon: f64, lat: f64) -> V {
    let (lo, la) = (lon.to_radians(), lat.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

pub fn dot(a: V, b: V) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: V, b: V) -> V {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm(a: V) -> f64 {
    dot(a, a).sqrt()
}

pub fn unit(a: V) -> V {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

pub fn angle(a: V, b: V) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

/// Winding number of a closed ring around `p`, computed by summing the
/// turning angle of the ring as seen from `p`. Valid when the ring stays
/// away from the antipode of `p`.
pub fn winding(p: V, ring: &[V]) -> i32 {
    let n = ring.len();
    let mut total = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        // directions toward a and b in the tangent plane at p
        let ta = cross(p, a);
        let tb = cross(p, b);
        total += dot(cross(ta, tb), p).atan2(dot(ta, tb));
    }
    (total / std::f64::consts::TAU).round() as i32
}

/// Ring vertices as unit vectors, converted from the source coordinates.
pub fn ring_xyz(ring: &htmjoin::Ring) -> Vec<V> {
    ring.lonlat().into_iter().map(|[lo, la]| xyz(lo, la)).collect()
}

/// Polygons as (exterior, holes) vertex lists.
pub fn region_rings(region: &Region) -> Vec<(Vec<V>, Vec<Vec<V>>)> {
    region
        .polygons
        .iter()
        .map(|p| (ring_xyz(&p.exterior), p.holes.iter().map(ring_xyz).collect()))
        .collect()
}

/// Even-odd membership over exterior and holes; any polygon counts.
pub fn in_region(p: V, rings: &[(Vec<V>, Vec<Vec<V>>)]) -> bool {
    rings.iter().any(|(ext, holes)| {
        winding(p, ext) != 0 && holes.iter().all(|h| winding(p, h) == 0)
    })
}

/// Angular distance from `p` to the arc a→b (minor arc).
pub fn arc_distance(p: V, a: V, b: V) -> f64 {
    let n = cross(a, b);
    if norm(n) < 1e-300 {
        return angle(p, a);
    }
    let n = unit(n);
    // foot of the perpendicular lies on the arc when it is between a and b
    let foot = cross(cross(n, p), n);
    if norm(foot) > 1e-300 {
        let f = unit(foot);
        if dot(cross(a, f), n) >= 0.0 && dot(cross(f, b), n) >= 0.0 {
            return dot(n, p).abs().asin();
        }
    }
    angle(p, a).min(angle(p, b))
}

/// Angular distance from `p` to the nearest boundary edge of the region.
pub fn boundary_distance(p: V, rings: &[(Vec<V>, Vec<Vec<V>>)]) -> f64 {
    let mut best = f64::INFINITY;
    for (ext, holes) in rings {
        for r in std::iter::once(ext).chain(holes) {
            for i in 0..r.len() {
                best = best.min(arc_distance(p, r[i], r[(i + 1) % r.len()]));
            }
        }
    }
    best
}

/// Spherical triangle area by L'Huilier's formula.
pub fn triangle_area(a: V, b: V, c: V) -> f64 {
    let (x, y, z) = (angle(b, c), angle(c, a), angle(a, b));
    let s = 0.5 * (x + y + z);
    let t = (0.5 * s).tan()
        * (0.5 * (s - x)).tan()
        * (0.5 * (s - y)).tan()
        * (0.5 * (s - z)).tan();
    4.0 * t.max(0.0).sqrt().atan()
}

/// Point in a spherical triangle with a small tolerance on every edge.
pub fn in_triangle(p: V, t: [V; 3], tol: f64) -> bool {
    (0..3).all(|i| dot(cross(t[i], t[(i + 1) % 3]), p) >= -tol)
}

/// Distance from `p` to the nearest edge plane of a triangle.
pub fn edge_margin(p: V, t: [V; 3]) -> f64 {
    (0..3)
        .map(|i| dot(unit(cross(t[i], t[(i + 1) % 3])), p).abs().asin())
        .fold(f64::INFINITY, f64::min)
}

/// Uniform point inside a triangle by rejection from its bounding cap.
pub fn point_in(t: [V; 3], r: &mut impl rand::Rng) -> V {
    let c = unit([t[0][0] + t[1][0] + t[2][0], t[0][1] + t[1][1] + t[2][1], t[0][2] + t[1][2] + t[2][2]]);
    let rad = t.iter().map(|&v| angle(c, v)).fold(0.0, f64::max);
    let cu = htmjoin::UnitVec::new(c[0], c[1], c[2]).unwrap();
    loop {
        let cos_d = r.gen_range(rad.cos()..=1.0);
        let p = htmjoin::synth::destination(cu, r.gen_range(0.0..std::f64::consts::TAU), cos_d.acos())
            .to_array();
        if in_triangle(p, t, 0.0) {
            return p;
        }
    }
}

/// Brute-force join over test-side geometry. Points closer than `margin`
/// to any boundary are reported separately instead of being classified.
pub struct OracleJoin {
    pub pairs: Vec<(i64, u32)>,
    pub excluded: Vec<i64>,
}

pub fn oracle_join(points: &[(i64, f64, f64)], regions: &[Region], margin: f64) -> OracleJoin {
    // each region sits inside a cap around its vertex mean; points well
    // outside the cap are outside and far from the boundary
    let geo: Vec<(u32, V, f64, Vec<(Vec<V>, Vec<Vec<V>>)>)> = regions
        .iter()
        .map(|r| {
            let g = region_rings(r);
            let all: Vec<V> = g.iter().flat_map(|(e, h)| e.iter().chain(h.iter().flatten())).copied().collect();
            let c = unit(all.iter().fold([0.0; 3], |s, v| [s[0] + v[0], s[1] + v[1], s[2] + v[2]]));
            let rad = all.iter().map(|&v| angle(c, v)).fold(0.0, f64::max);
            (r.id, c, rad, g)
        })
        .collect();
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for &(id, lon, lat) in points {
        let p = xyz(lon, lat);
        let near: Vec<_> = geo
            .iter()
            .filter(|(_, c, rad, _)| angle(p, *c) <= rad + 2.0 * margin)
            .collect();
        if near.iter().any(|(_, _, _, g)| boundary_distance(p, g) < margin) {
            excluded.push(id);
            continue;
        }
        for (rid, _, _, g) in near {
            if in_region(p, g) {
                pairs.push((id, *rid));
            }
        }
    }
    pairs.sort_unstable();
    excluded.sort_unstable();
    OracleJoin { pairs, excluded }
}
