//! Spherical geometry on the unit sphere: points, great-circle rings,
//! polygons with holes, and half-space clipping.

mod clip;
mod ring;
mod vec;

pub use clip::{clip_polygon_to_halfspace, clip_ring};
pub(crate) use clip::{canonical_ring, crossing, snap_ring};
pub use ring::{
    arcs_intersect, point_in_region, point_in_ring, spherical_area, Cap, Location, Region, Ring,
    SphericalPolygon,
};
pub use vec::{edge_normal, triple, GreatCirclePlane, UnitVec, Vec3, EPS};

/// Unit vector from longitude and latitude in degrees.
pub fn unit_vector_from_lonlat(lon: f64, lat: f64) -> crate::Result<UnitVec> {
    UnitVec::from_lonlat(lon, lat)
}
