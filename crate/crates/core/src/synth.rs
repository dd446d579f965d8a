//! Synthetic regions and points.
//!
//! Regions are "coastlines": the boundary radius around a center is built by
//! midpoint displacement over azimuth. Vertices are in strictly increasing
//! azimuth order, so in the gnomonic projection about the center the ring is
//! star-shaped and never self-intersects.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Region, Ring, SphericalPolygon, UnitVec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoastlineParams {
    pub center_lon: f64,
    pub center_lat: f64,
    /// Mean boundary distance from the center, degrees.
    pub radius_deg: f64,
    /// Displacement passes; the ring gets `8 · 2^passes` vertices.
    pub passes: u32,
    /// Relative displacement amplitude of the first pass.
    pub roughness: f64,
    /// Amplitude ratio between passes.
    pub decay: f64,
    pub hole: bool,
    pub islands: u32,
}

impl CoastlineParams {
    pub fn new(center_lon: f64, center_lat: f64, radius_deg: f64) -> Self {
        CoastlineParams {
            center_lon,
            center_lat,
            radius_deg,
            passes: 6,
            roughness: 0.35,
            decay: 0.6,
            hole: false,
            islands: 0,
        }
    }

    pub fn vertices(&self) -> usize {
        8 << self.passes
    }
}

/// Point at angular distance `d` from `c` along bearing `az` (radians, from north toward east).
pub fn destination(c: UnitVec, az: f64, d: f64) -> UnitVec {
    let east = UnitVec::Z
        .cross(c)
        .normalize()
        .unwrap_or(UnitVec::Y);
    let north = c.cross(east);
    let dir = north * az.cos() + east.vec() * az.sin();
    (c.vec() * d.cos() + dir * d.sin())
        .normalize()
        .expect("unit combination")
}

fn star_ring(c: UnitVec, radii: &[f64], phase: f64) -> Result<Ring> {
    let n = radii.len();
    let coords = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let az = phase + TAU * i as f64 / n as f64;
            let (lon, lat) = destination(c, az, r).to_lonlat();
            [lon, lat]
        })
        .collect();
    Ring::from_lonlat(coords)
}

fn fractal_radii(rng: &mut impl Rng, p: &CoastlineParams, base: f64) -> Vec<f64> {
    let (lo, hi) = (0.3 * base, 1.5 * base);
    let mut radii: Vec<f64> = (0..8)
        .map(|_| (base * (1.0 + p.roughness * rng.gen_range(-1.0..1.0))).clamp(lo, hi))
        .collect();
    let mut amp = p.roughness * p.decay * base;
    for _ in 0..p.passes {
        let mut next = Vec::with_capacity(radii.len() * 2);
        for i in 0..radii.len() {
            let a = radii[i];
            let b = radii[(i + 1) % radii.len()];
            next.push(a);
            next.push((0.5 * (a + b) + amp * rng.gen_range(-1.0..1.0)).clamp(lo, hi));
        }
        radii = next;
        amp *= p.decay;
    }
    radii
}

/// Builds one coastline region.
pub fn coastline_region(
    id: u32,
    params: &CoastlineParams,
    rng: &mut impl Rng,
) -> Result<Region> {
    let r = params.radius_deg.to_radians();
    if !(r > 0.0 && 1.5 * r < 1.5) {
        return Err(Error::input(format!(
            "coastline radius {} deg out of range",
            params.radius_deg
        )));
    }
    let c = UnitVec::from_lonlat(params.center_lon, params.center_lat)?;
    let phase = rng.gen_range(0.0..TAU);
    let exterior = star_ring(c, &fractal_radii(rng, params, r), phase)?;
    let mut holes = Vec::new();
    if params.hole {
        let small = CoastlineParams {
            passes: params.passes.saturating_sub(2),
            ..*params
        };
        // at most 0.15 r, inside the exterior's 0.3 r floor
        holes.push(star_ring(c, &fractal_radii(rng, &small, 0.1 * r), phase)?);
    }
    let mut polygons = vec![SphericalPolygon::new(exterior, holes)?];
    for k in 0..params.islands {
        let az = phase + TAU * (k as f64 + 0.5) / params.islands.max(3) as f64;
        let ic = destination(c, az, 2.0 * r);
        let small = CoastlineParams {
            passes: params.passes.saturating_sub(2),
            ..*params
        };
        let ring = star_ring(ic, &fractal_radii(rng, &small, 0.15 * r), 0.0)?;
        polygons.push(SphericalPolygon::new(ring, Vec::new())?);
    }
    Ok(Region::new(id, format!("coast-{id}"), polygons))
}

/// `count` regions on a grid over the continental-US box
/// (lon -120..-75, lat 30..48), ids from 1.
pub fn region_grid(count: usize, passes: u32, seed: u64) -> Result<(Vec<Region>, Vec<CoastlineParams>)> {
    let cols = (count as f64 * 2.0).sqrt().ceil().max(1.0) as usize;
    let rows = count.div_ceil(cols).max(1);
    let (dlon, dlat) = (45.0 / cols as f64, 18.0 / rows as f64);
    let radius = 0.35 * dlon.min(dlat) * 1.1;
    let mut rng = rng(seed);
    let mut regions = Vec::with_capacity(count);
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let (cx, cy) = (i % cols, i / cols);
        let mut p = CoastlineParams::new(
            -120.0 + dlon * (cx as f64 + 0.5),
            30.0 + dlat * (cy as f64 + 0.5),
            radius,
        );
        p.passes = passes;
        p.hole = i % 4 == 1;
        p.islands = if i % 5 == 2 { 2 } else { 0 };
        regions.push(coastline_region(i as u32 + 1, &p, &mut rng)?);
        params.push(p);
    }
    Ok((regions, params))
}

/// The single large region used for level sweeps.
pub fn complex_region(seed: u64) -> Result<(Region, CoastlineParams)> {
    let mut p = CoastlineParams::new(-100.0, 40.0, 4.0);
    p.passes = 9;
    p.roughness = 0.4;
    p.decay = 0.6;
    p.hole = true;
    p.islands = 3;
    let region = coastline_region(1, &p, &mut rng(seed))?;
    Ok((region, p))
}

/// `n` points uniform on the sphere, ids from 0.
pub fn uniform_points(n: usize, rng: &mut impl Rng) -> Vec<(i64, f64, f64)> {
    (0..n)
        .map(|i| {
            let z: f64 = rng.gen_range(-1.0..=1.0);
            let lon: f64 = rng.gen_range(-180.0..180.0);
            (i as i64, lon, z.asin().to_degrees())
        })
        .collect()
}

/// `n` points uniform within the bounding caps of randomly chosen regions.
pub fn cap_points(n: usize, regions: &[Region], rng: &mut impl Rng) -> Result<Vec<(i64, f64, f64)>> {
    let caps = regions
        .iter()
        .map(|r| {
            r.bounding_cap()
                .ok_or_else(|| Error::input(format!("region {} has no bounding cap", r.id)))
        })
        .collect::<Result<Vec<_>>>()?;
    if caps.is_empty() {
        return Err(Error::input("no regions to sample around"));
    }
    Ok((0..n)
        .map(|i| {
            let cap = &caps[rng.gen_range(0..caps.len())];
            let cos_d = rng.gen_range(cap.cos_radius..=1.0);
            let az = rng.gen_range(0.0..TAU);
            let (lon, lat) = destination(cap.center, az, cos_d.clamp(-1.0, 1.0).acos()).to_lonlat();
            (i as i64, lon, lat)
        })
        .collect())
}

/// Unit vector for a sampled point; panics only on out-of-range input,
/// which the samplers never produce.
pub fn to_unit(lon: f64, lat: f64) -> UnitVec {
    UnitVec::from_lonlat(lon, lat).expect("sampled coordinate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coastline_is_valid_and_deterministic() {
        let p = CoastlineParams {
            hole: true,
            islands: 2,
            ..CoastlineParams::new(-100.0, 40.0, 2.0)
        };
        let a = coastline_region(1, &p, &mut rng(5)).unwrap();
        let b = coastline_region(1, &p, &mut rng(5)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.polygons.len(), 3);
        assert_eq!(a.polygons[0].exterior.len(), p.vertices());
        assert_eq!(a.polygons[0].holes.len(), 1);
        assert!(a.area() > 0.0);
        let c = UnitVec::from_lonlat(-100.0, 40.0).unwrap();
        assert!(!a.contains(c), "center sits in the hole");
        assert!(a.contains(destination(c, 0.3, 0.2 * 2f64.to_radians())));
    }

    #[test]
    fn grid_and_points() {
        let (regions, params) = region_grid(12, 3, 9).unwrap();
        assert_eq!(regions.len(), 12);
        assert_eq!(params.len(), 12);
        let ids: Vec<u32> = regions.iter().map(|r| r.id).collect();
        assert_eq!(ids, (1..=12).collect::<Vec<_>>());
        let pts = cap_points(500, &regions, &mut rng(1)).unwrap();
        let hits = pts
            .iter()
            .filter(|&&(_, lon, lat)| regions.iter().any(|r| r.contains(to_unit(lon, lat))))
            .count();
        assert!(hits > 100, "{hits}");
        let u = uniform_points(1000, &mut rng(2));
        let north = u.iter().filter(|p| p.2 > 0.0).count();
        assert!((400..600).contains(&north));
    }

    #[test]
    fn destination_distance() {
        let c = UnitVec::from_lonlat(10.0, 50.0).unwrap();
        for az in [0.0, 1.0, 3.0, 5.5] {
            let p = destination(c, az, 0.1);
            assert!((c.angle_to(p) - 0.1).abs() < 1e-12);
        }
        let north = destination(c, 0.0, 0.1).to_lonlat();
        assert!((north.0 - 10.0).abs() < 1e-9 && north.1 > 50.0);
        let east = destination(UnitVec::from_lonlat(0.0, 0.0).unwrap(), std::f64::consts::FRAC_PI_2, 0.1);
        assert!(east.to_lonlat().0 > 0.0);
    }
}
