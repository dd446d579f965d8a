use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Plane-side tolerance shared by every sign test in the crate.
pub const EPS: f64 = 1e-12;

/// Unnormalized Cartesian vector used for intermediate arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    #[inline]
    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * o.z - self.z * o.y,
            y: self.z * o.x - self.x * o.z,
            z: self.x * o.y - self.y * o.x,
        }
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Projects onto the unit sphere; `None` for the zero vector or non-finite input.
    #[inline]
    pub fn normalize(self) -> Option<UnitVec> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(UnitVec {
                x: self.x / n,
                y: self.y / n,
                z: self.z / n,
            })
        } else {
            None
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// A point on the unit sphere.
#[derive(Clone, Copy, PartialEq)]
pub struct UnitVec {
    x: f64,
    y: f64,
    z: f64,
}

impl fmt::Debug for UnitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.15}, {:.15}, {:.15})", self.x, self.y, self.z)
    }
}

impl UnitVec {
    pub const X: UnitVec = UnitVec { x: 1.0, y: 0.0, z: 0.0 };
    pub const Y: UnitVec = UnitVec { x: 0.0, y: 1.0, z: 0.0 };
    pub const Z: UnitVec = UnitVec { x: 0.0, y: 0.0, z: 1.0 };

    /// Normalizes `(x, y, z)`; fails on zero or non-finite input.
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Vec3::new(x, y, z)
            .normalize()
            .ok_or_else(|| Error::input(format!("cannot normalize ({x}, {y}, {z})")))
    }

    /// Builds a unit vector from components already known to be unit length.
    pub(crate) const fn from_raw(x: f64, y: f64, z: f64) -> Self {
        UnitVec { x, y, z }
    }

    /// Geographic convention: longitude east from the +x axis, latitude north toward +z.
    pub fn from_lonlat(lon: f64, lat: f64) -> Result<Self> {
        if !lon.is_finite() || !lat.is_finite() {
            return Err(Error::input(format!("non-finite coordinate ({lon}, {lat})")));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::input(format!("latitude {lat} out of range")));
        }
        let lon = lon.rem_euclid(360.0).to_radians();
        let lat = lat.to_radians();
        let (slon, clon) = lon.sin_cos();
        let (slat, clat) = lat.sin_cos();
        Ok(Vec3::new(clat * clon, clat * slon, slat)
            .normalize()
            .expect("trig output is finite and nonzero"))
    }

    /// Inverse of [`UnitVec::from_lonlat`]; longitude in (-180, 180].
    pub fn to_lonlat(self) -> (f64, f64) {
        let lon = self.y.atan2(self.x).to_degrees();
        let lat = self.z.atan2(self.x.hypot(self.y)).to_degrees();
        (lon, lat)
    }

    #[inline]
    pub fn x(self) -> f64 {
        self.x
    }

    #[inline]
    pub fn y(self) -> f64 {
        self.y
    }

    #[inline]
    pub fn z(self) -> f64 {
        self.z
    }

    #[inline]
    pub fn vec(self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    #[inline]
    pub fn dot(self, o: UnitVec) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: UnitVec) -> Vec3 {
        self.vec().cross(o.vec())
    }

    #[inline]
    pub fn antipode(self) -> UnitVec {
        UnitVec {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// Great-circle distance in radians.
    pub fn angle_to(self, o: UnitVec) -> f64 {
        self.cross(o).norm().atan2(self.dot(o))
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Normalized midpoint of the minor arc between `self` and `o`.
    pub fn midpoint(self, o: UnitVec) -> UnitVec {
        (self.vec() + o.vec())
            .normalize()
            .expect("midpoint of antipodal vectors")
    }

    /// Total order on the raw bits, used to canonicalize ring starts.
    pub(crate) fn total_cmp(&self, o: &UnitVec) -> std::cmp::Ordering {
        self.x
            .total_cmp(&o.x)
            .then(self.y.total_cmp(&o.y))
            .then(self.z.total_cmp(&o.z))
    }
}

/// Unit normal of the great circle through `a` then `b`.
///
/// Computed as `(a - b) × b`, which equals `a × b` but keeps full relative
/// precision when the two points are very close together.
#[inline]
pub fn edge_normal(a: UnitVec, b: UnitVec) -> Option<UnitVec> {
    (a.vec() - b.vec()).cross(b.vec()).normalize()
}

/// `c · (a × b)` evaluated relative to `c` for accuracy on small triangles.
#[inline]
pub fn triple(a: UnitVec, b: UnitVec, c: UnitVec) -> f64 {
    let ca = a.vec() - c.vec();
    let cb = b.vec() - c.vec();
    c.vec().dot(ca.cross(cb))
}

/// A great circle through the origin; the kept side is `p · normal ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreatCirclePlane {
    pub normal: UnitVec,
}

impl GreatCirclePlane {
    pub fn new(normal: UnitVec) -> Self {
        GreatCirclePlane { normal }
    }

    /// Plane through `a` and `b` with the left side of `a → b` kept.
    pub fn through(a: UnitVec, b: UnitVec) -> Result<Self> {
        edge_normal(a, b)
            .map(GreatCirclePlane::new)
            .ok_or_else(|| Error::degenerate("plane through identical or antipodal points"))
    }

    #[inline]
    pub fn side(&self, p: UnitVec) -> f64 {
        p.dot(self.normal)
    }

    pub fn flipped(&self) -> Self {
        GreatCirclePlane {
            normal: self.normal.antipode(),
        }
    }
}
