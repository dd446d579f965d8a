use std::f64::consts::FRAC_PI_2;

use super::vec::{edge_normal, triple, UnitVec, Vec3, EPS};
use crate::error::{Error, Result};

/// Where a point sits relative to a closed ring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

impl Location {
    #[inline]
    pub fn is_covered(self) -> bool {
        self != Location::Outside
    }
}

/// Spherical cap `{p : p · center ≥ cos_radius}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cap {
    pub center: UnitVec,
    pub cos_radius: f64,
}

impl Cap {
    pub fn radius(&self) -> f64 {
        self.cos_radius.clamp(-1.0, 1.0).acos()
    }

    #[inline]
    pub fn contains(&self, p: UnitVec) -> bool {
        p.dot(self.center) >= self.cos_radius - EPS
    }

    /// Conservative overlap test between two caps.
    pub fn intersects(&self, other: &Cap) -> bool {
        self.center.angle_to(other.center) <= self.radius() + other.radius() + EPS
    }

    /// Smallest cap around the normalized vertex centroid containing every point.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a UnitVec> + Clone) -> Option<Cap> {
        let sum = points
            .clone()
            .into_iter()
            .fold(Vec3::new(0.0, 0.0, 0.0), |acc, p| acc + p.vec());
        let center = sum.normalize()?;
        let cos_radius = points
            .into_iter()
            .map(|p| p.dot(center))
            .fold(f64::INFINITY, f64::min);
        Some(Cap { center, cos_radius })
    }
}

/// Closed loop of great-circle arcs.
///
/// `normals[i]` is the supporting great circle of the edge from `vertices[i]`
/// to `vertices[i + 1]`. Clipped rings inherit the support of the edge they
/// were cut from so crossing points do not depend on the clipping history.
#[derive(Debug, Clone)]
pub struct Ring {
    vertices: Vec<UnitVec>,
    normals: Vec<UnitVec>,
    cap: Cap,
    reference: UnitVec,
    lonlat: Option<Vec<[f64; 2]>>,
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

impl Ring {
    /// Validates and builds a ring from its vertices (implicitly closed).
    pub fn new(vertices: Vec<UnitVec>) -> Result<Ring> {
        if vertices.len() < 3 {
            return Err(Error::degenerate(format!(
                "ring has {} vertices, need at least 3",
                vertices.len()
            )));
        }
        let n = vertices.len();
        let mut normals = Vec::with_capacity(n);
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            if (a.vec() - b.vec()).norm() <= EPS {
                return Err(Error::degenerate(format!("repeated vertex at index {i}")));
            }
            if (a.vec() + b.vec()).norm() <= EPS {
                return Err(Error::degenerate(format!("antipodal edge at index {i}")));
            }
            normals.push(
                edge_normal(a, b)
                    .ok_or_else(|| Error::degenerate(format!("edge {i} has no plane")))?,
            );
        }
        Ring::from_parts(vertices, normals)
    }

    /// Builds a ring from `[lon, lat]` degree pairs and keeps them, so the ring
    /// can be written back out with the exact source coordinates.
    pub fn from_lonlat(coords: Vec<[f64; 2]>) -> Result<Ring> {
        let vertices = coords
            .iter()
            .map(|&[lon, lat]| UnitVec::from_lonlat(lon, lat))
            .collect::<Result<Vec<_>>>()?;
        let mut ring = Ring::new(vertices)?;
        ring.lonlat = Some(coords);
        Ok(ring)
    }

    /// Builds a ring from vertices and per-edge supports without edge checks.
    pub(crate) fn from_parts(vertices: Vec<UnitVec>, normals: Vec<UnitVec>) -> Result<Ring> {
        debug_assert_eq!(vertices.len(), normals.len());
        if vertices.len() < 3 {
            return Err(Error::degenerate("ring has fewer than 3 vertices"));
        }
        let cap = Cap::around(vertices.iter())
            .ok_or_else(|| Error::degenerate("ring vertices cancel out"))?;
        if cap.cos_radius <= EPS {
            return Err(Error::degenerate(
                "ring does not fit in an open hemisphere",
            ));
        }
        let reference = reference_point(&cap, 0);
        Ok(Ring {
            vertices,
            normals,
            cap,
            reference,
            lonlat: None,
        })
    }

    pub fn vertices(&self) -> &[UnitVec] {
        &self.vertices
    }

    pub fn normals(&self) -> &[UnitVec] {
        &self.normals
    }

    /// Source coordinates when the ring was built by [`Ring::from_lonlat`].
    pub fn source_lonlat(&self) -> Option<&[[f64; 2]]> {
        self.lonlat.as_deref()
    }

    /// `[lon, lat]` per vertex: the source values if known, else computed.
    pub fn lonlat(&self) -> Vec<[f64; 2]> {
        match &self.lonlat {
            Some(c) => c.clone(),
            None => self
                .vertices
                .iter()
                .map(|v| {
                    let (lon, lat) = v.to_lonlat();
                    [lon, lat]
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn cap(&self) -> &Cap {
        &self.cap
    }

    /// Iterator over `(start, end, support)` for every edge.
    pub fn edges(&self) -> impl Iterator<Item = (UnitVec, UnitVec, UnitVec)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n], self.normals[i]))
    }

    pub fn reversed(&self) -> Ring {
        let n = self.vertices.len();
        let mut vertices: Vec<UnitVec> = self.vertices.iter().rev().copied().collect();
        // keep vertices[0] in place so the ring start stays canonical
        vertices.rotate_right(1);
        let normals = (0..n)
            .map(|i| {
                // edge vertices[i] -> vertices[i+1] is the old edge (n-i) -> (n-i-1)
                let old = (2 * n - i - 1) % n;
                self.normals[old].antipode()
            })
            .collect();
        let lonlat = self.lonlat.as_ref().map(|c| {
            let mut c: Vec<[f64; 2]> = c.iter().rev().copied().collect();
            c.rotate_right(1);
            c
        });
        Ring {
            vertices,
            normals,
            cap: self.cap,
            reference: self.reference,
            lonlat,
        }
    }

    /// Signed solid angle; positive when the interior is on the left.
    pub fn signed_area(&self) -> f64 {
        let c = self.cap.center;
        self.edges()
            .map(|(a, b, _)| {
                let num = triple(a, b, c);
                let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
                2.0 * num.atan2(den)
            })
            .sum()
    }

    pub fn locate(&self, p: UnitVec) -> Location {
        if p.dot(self.cap.center) < self.cap.cos_radius - EPS {
            return Location::Outside;
        }
        const ATTEMPTS: usize = 8;
        for attempt in 0..ATTEMPTS {
            let r = if attempt == 0 {
                self.reference
            } else {
                reference_point(&self.cap, attempt)
            };
            match self.count_crossings(p, r, attempt + 1 == ATTEMPTS) {
                Crossings::OnEdge => return Location::Boundary,
                Crossings::Count(c) => {
                    return if c % 2 == 1 {
                        Location::Inside
                    } else {
                        Location::Outside
                    }
                }
                Crossings::Degenerate => continue,
            }
        }
        unreachable!("final attempt never reports degeneracy")
    }

    #[inline]
    pub fn contains(&self, p: UnitVec) -> bool {
        self.locate(p).is_covered()
    }

    fn count_crossings(&self, p: UnitVec, r: UnitVec, force: bool) -> Crossings {
        let q = match p.cross(r).normalize() {
            Some(q) => q,
            None => return Crossings::Degenerate,
        };
        let mut count = 0usize;
        let mut degenerate = false;
        for (a, b, n) in self.edges() {
            let dp = p.dot(n);
            if dp.abs() <= EPS {
                if within_arc(p, a, b, n) {
                    return Crossings::OnEdge;
                }
                continue;
            }
            let dr = r.dot(n);
            if dr.abs() <= EPS {
                degenerate = true;
                if !force {
                    break;
                }
                continue;
            }
            if (dp > 0.0) == (dr > 0.0) {
                continue;
            }
            let da = a.dot(q);
            let db = b.dot(q);
            if da.abs() <= EPS || db.abs() <= EPS {
                degenerate = true;
                if !force {
                    break;
                }
            }
            let s = dr > 0.0;
            if (-db > 0.0) == s && (da > 0.0) == s {
                count += 1;
            }
        }
        if degenerate && !force {
            Crossings::Degenerate
        } else {
            Crossings::Count(count)
        }
    }
}

enum Crossings {
    OnEdge,
    Count(usize),
    Degenerate,
}

/// Exterior point used as the far end of the crossing ray.
///
/// Sits outside the ring's cap at an angle that keeps the ray a minor arc
/// and well away from being antipodal to any point of the cap.
fn reference_point(cap: &Cap, attempt: usize) -> UnitVec {
    let c = cap.center;
    let axis = if c.x().abs() <= c.y().abs() && c.x().abs() <= c.z().abs() {
        UnitVec::X
    } else if c.y().abs() <= c.z().abs() {
        UnitVec::Y
    } else {
        UnitVec::Z
    };
    let u = c.cross(axis).normalize().expect("axis not parallel to center");
    let w = c.cross(u).normalize().expect("orthonormal");
    let phi = attempt as f64 * 2.399_963_229_728_653; // golden angle
    let dir = u.vec() * phi.cos() + w.vec() * phi.sin();
    let radius = cap.radius();
    let theta = radius + 0.5 * (FRAC_PI_2 - radius);
    (c.vec() * theta.cos() + dir * theta.sin())
        .normalize()
        .expect("reference point")
}

/// For `p` on the great circle with support `n`, whether it lies on the minor arc `a → b`.
pub(crate) fn within_arc(p: UnitVec, a: UnitVec, b: UnitVec, n: UnitVec) -> bool {
    let from_a = (a.vec() - p.vec()).cross(p.vec()).dot(n.vec());
    let to_b = (p.vec() - b.vec()).cross(b.vec()).dot(n.vec());
    from_a >= -EPS && to_b >= -EPS && p.vec().dot(a.vec() + b.vec()) > 0.0
}

/// Polygon with one exterior ring and zero or more holes.
///
/// The exterior runs counter-clockwise seen from outside the sphere (positive
/// area); holes run the other way.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalPolygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl SphericalPolygon {
    /// Orients the rings and checks that every hole vertex lies in the exterior.
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Result<Self> {
        let exterior = if exterior.signed_area() < 0.0 {
            exterior.reversed()
        } else {
            exterior
        };
        let mut oriented = Vec::with_capacity(holes.len());
        for (h, hole) in holes.into_iter().enumerate() {
            if let Some(i) = hole.vertices().iter().position(|&v| !exterior.contains(v)) {
                return Err(Error::degenerate(format!(
                    "hole {h} vertex {i} lies outside the exterior ring"
                )));
            }
            oriented.push(if hole.signed_area() > 0.0 {
                hole.reversed()
            } else {
                hole
            });
        }
        Ok(SphericalPolygon {
            exterior,
            holes: oriented,
        })
    }

    /// Builds a polygon whose rings are already oriented, skipping checks.
    pub(crate) fn from_rings_unchecked(exterior: Ring, holes: Vec<Ring>) -> Self {
        SphericalPolygon { exterior, holes }
    }

    pub fn locate(&self, p: UnitVec) -> Location {
        match self.exterior.locate(p) {
            Location::Outside => Location::Outside,
            ext => {
                let mut loc = ext;
                for hole in &self.holes {
                    match hole.locate(p) {
                        Location::Inside => return Location::Outside,
                        Location::Boundary => loc = Location::Boundary,
                        Location::Outside => {}
                    }
                }
                loc
            }
        }
    }

    /// Closed-set membership: boundary points count as inside.
    #[inline]
    pub fn contains(&self, p: UnitVec) -> bool {
        self.locate(p).is_covered()
    }

    /// Solid angle of the exterior minus the holes.
    pub fn area(&self) -> f64 {
        self.exterior.signed_area() + self.holes.iter().map(Ring::signed_area).sum::<f64>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    pub fn vertex_count(&self) -> usize {
        self.rings().map(Ring::len).sum()
    }
}

/// A named region made of interior-disjoint polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub id: u32,
    pub name: String,
    pub polygons: Vec<SphericalPolygon>,
}

impl Region {
    pub fn new(id: u32, name: impl Into<String>, polygons: Vec<SphericalPolygon>) -> Self {
        Region {
            id,
            name: name.into(),
            polygons,
        }
    }

    pub fn contains(&self, p: UnitVec) -> bool {
        self.polygons.iter().any(|poly| poly.contains(p))
    }

    pub fn locate(&self, p: UnitVec) -> Location {
        let mut loc = Location::Outside;
        for poly in &self.polygons {
            match poly.locate(p) {
                Location::Inside => return Location::Inside,
                Location::Boundary => loc = Location::Boundary,
                Location::Outside => {}
            }
        }
        loc
    }

    pub fn area(&self) -> f64 {
        self.polygons.iter().map(SphericalPolygon::area).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.polygons.iter().map(SphericalPolygon::vertex_count).sum()
    }

    /// Bounding cap of all exterior vertices; `None` when the region is empty
    /// or spread so widely that its vertex centroid vanishes.
    pub fn bounding_cap(&self) -> Option<Cap> {
        Cap::around(self.polygons.iter().flat_map(|p| p.exterior.vertices().iter()))
    }
}

/// Whether `p` lies in the closed region bounded by `ring`.
pub fn point_in_ring(p: UnitVec, ring: &Ring) -> bool {
    ring.contains(p)
}

pub fn point_in_region(p: UnitVec, region: &Region) -> bool {
    region.contains(p)
}

/// Solid angle enclosed by the ring, signed by orientation.
pub fn spherical_area(ring: &Ring) -> f64 {
    ring.signed_area()
}

/// Whether two minor arcs share a point; touching counts as intersecting.
pub fn arcs_intersect(a0: UnitVec, a1: UnitVec, b0: UnitVec, b1: UnitVec) -> Result<bool> {
    let na = edge_normal(a0, a1).ok_or_else(|| Error::degenerate("first arc is degenerate"))?;
    let nb = edge_normal(b0, b1).ok_or_else(|| Error::degenerate("second arc is degenerate"))?;
    if (a0.vec() + a1.vec()).norm() <= EPS || (b0.vec() + b1.vec()).norm() <= EPS {
        return Err(Error::degenerate("antipodal arc endpoints"));
    }
    let d_b0 = b0.dot(na);
    let d_b1 = b1.dot(na);
    let d_a0 = a0.dot(nb);
    let d_a1 = a1.dot(nb);
    let zero = |d: f64| d.abs() <= EPS;
    if !(zero(d_b0) || zero(d_b1) || zero(d_a0) || zero(d_a1)) {
        let s = -d_b0 > 0.0;
        return Ok((d_b1 > 0.0) == s && (-d_a1 > 0.0) == s && (d_a0 > 0.0) == s);
    }
    let touching = (zero(d_b0) && within_arc(b0, a0, a1, na))
        || (zero(d_b1) && within_arc(b1, a0, a1, na))
        || (zero(d_a0) && within_arc(a0, b0, b1, nb))
        || (zero(d_a1) && within_arc(a1, b0, b1, nb));
    Ok(touching)
}
