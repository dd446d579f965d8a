//! GeoJSON region ingestion and export.
//!
//! Polygon edges are read as great-circle arcs between consecutive vertices,
//! not as straight lines in longitude/latitude.

use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::cover::RegionCover;
use crate::error::{Error, Result};
use crate::geom::{Region, Ring, SphericalPolygon, UnitVec, EPS};
use crate::htm::{decompose_range, trixel_of};

/// Summary of one parsed feature.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionManifest {
    pub region_id: u32,
    pub name: String,
    pub feature_index: usize,
    pub polygons: usize,
    pub rings: usize,
    pub vertices: usize,
}

fn feature_err(index: usize, message: impl Into<String>) -> Error {
    Error::Feature {
        index,
        message: message.into(),
    }
}

/// Parses a FeatureCollection of Polygon / MultiPolygon features.
///
/// Region ids are 1-based feature order unless `id_property` names an
/// integer-valued feature property.
pub fn parse_regions(
    bytes: &[u8],
    id_property: Option<&str>,
) -> Result<(Vec<Region>, Vec<RegionManifest>)> {
    let doc: Value = serde_json::from_slice(bytes)?;
    let features = match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::input("FeatureCollection without a features array"))?
            .as_slice(),
        Some("Feature") => std::slice::from_ref(&doc),
        other => {
            return Err(Error::input(format!(
                "expected a FeatureCollection, found {other:?}"
            )))
        }
    };

    let mut regions = Vec::with_capacity(features.len());
    let mut manifest = Vec::with_capacity(features.len());
    let mut seen = std::collections::HashSet::new();
    for (index, feature) in features.iter().enumerate() {
        let props = feature.get("properties").and_then(Value::as_object);
        let region_id = match id_property {
            None => u32::try_from(index + 1).map_err(|_| feature_err(index, "too many features"))?,
            Some(key) => property_id(props, key).ok_or_else(|| {
                feature_err(index, format!("property {key:?} is missing or not a u32"))
            })?,
        };
        if !seen.insert(region_id) {
            return Err(feature_err(index, format!("duplicate region id {region_id}")));
        }
        let name = props
            .and_then(|p| ["name", "NAME", "NAME_1", "NAME_0"].iter().find_map(|k| p.get(*k)))
            .and_then(Value::as_str)
            .map_or_else(|| format!("feature {index}"), str::to_owned);

        let geometry = feature
            .get("geometry")
            .ok_or_else(|| feature_err(index, "missing geometry"))?;
        let coords = geometry
            .get("coordinates")
            .and_then(Value::as_array)
            .ok_or_else(|| feature_err(index, "missing coordinates"))?;
        let polygon_coords: Vec<&Value> = match geometry.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![geometry.get("coordinates").expect("checked above")],
            Some("MultiPolygon") => coords.iter().collect(),
            other => {
                return Err(feature_err(
                    index,
                    format!("unsupported geometry type {other:?}"),
                ))
            }
        };

        let mut polygons = Vec::with_capacity(polygon_coords.len());
        for (pi, pc) in polygon_coords.into_iter().enumerate() {
            let rings = pc
                .as_array()
                .ok_or_else(|| feature_err(index, format!("polygon {pi} is not an array")))?;
            let mut parsed = Vec::with_capacity(rings.len());
            for (ri, rc) in rings.iter().enumerate() {
                let ring = parse_ring(rc)
                    .map_err(|e| feature_err(index, format!("polygon {pi} ring {ri}: {e}")))?;
                parsed.push(ring);
            }
            let mut rings = parsed.into_iter();
            let exterior = rings
                .next()
                .ok_or_else(|| feature_err(index, format!("polygon {pi} has no rings")))?;
            let poly = SphericalPolygon::new(exterior, rings.collect())
                .map_err(|e| feature_err(index, format!("polygon {pi}: {e}")))?;
            polygons.push(poly);
        }
        let region = Region::new(region_id, name.clone(), polygons);
        manifest.push(RegionManifest {
            region_id,
            name,
            feature_index: index,
            polygons: region.polygons.len(),
            rings: region.polygons.iter().map(|p| 1 + p.holes.len()).sum(),
            vertices: region.vertex_count(),
        });
        regions.push(region);
    }
    Ok((regions, manifest))
}

fn property_id(props: Option<&Map<String, Value>>, key: &str) -> Option<u32> {
    match props?.get(key)? {
        Value::Number(n) => n.as_u64().and_then(|v| u32::try_from(v).ok()),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn parse_ring(value: &Value) -> Result<Ring> {
    let positions = value
        .as_array()
        .ok_or_else(|| Error::input("ring is not an array"))?;
    let mut coords: Vec<[f64; 2]> = Vec::with_capacity(positions.len());
    let mut last: Option<UnitVec> = None;
    let mut first: Option<UnitVec> = None;
    let mut closing = 0usize;
    for pos in positions {
        let pair = pos
            .as_array()
            .filter(|a| a.len() >= 2)
            .ok_or_else(|| Error::input("position is not [lon, lat]"))?;
        let lon = pair[0].as_f64().ok_or_else(|| Error::input("longitude is not a number"))?;
        let lat = pair[1].as_f64().ok_or_else(|| Error::input("latitude is not a number"))?;
        let v = UnitVec::from_lonlat(lon, lat)?;
        if last.is_some_and(|l| (l.vec() - v.vec()).norm() <= EPS) {
            continue;
        }
        // run of vertices coinciding with the first one, dropped if it ends the ring
        if first.is_some_and(|f| (f.vec() - v.vec()).norm() <= EPS) {
            closing += 1;
        } else {
            closing = 0;
        }
        first.get_or_insert(v);
        last = Some(v);
        coords.push([lon, lat]);
    }
    coords.truncate(coords.len() - closing);
    Ring::from_lonlat(coords)
}

fn ring_coords(ring: &Ring) -> Value {
    let mut pts: Vec<Value> = ring.lonlat().iter().map(|c| json!(c)).collect();
    if let Some(first) = pts.first().cloned() {
        pts.push(first);
    }
    Value::Array(pts)
}

fn polygon_coords(poly: &SphericalPolygon) -> Value {
    Value::Array(poly.rings().map(ring_coords).collect())
}

/// Regions as a FeatureCollection with `id` and `name` properties.
pub fn export_regions_geojson(regions: &[Region]) -> Result<Vec<u8>> {
    let features: Vec<Value> = regions
        .iter()
        .map(|r| {
            let geometry = if r.polygons.len() == 1 {
                json!({"type": "Polygon", "coordinates": polygon_coords(&r.polygons[0])})
            } else {
                json!({
                    "type": "MultiPolygon",
                    "coordinates": r.polygons.iter().map(polygon_coords).collect::<Vec<_>>(),
                })
            };
            json!({
                "type": "Feature",
                "properties": {"id": r.id, "name": r.name},
                "geometry": geometry,
            })
        })
        .collect();
    Ok(serde_json::to_vec(
        &json!({"type": "FeatureCollection", "features": features}),
    )?)
}

/// One triangle feature per cover trixel, with `trixel_id`, `level`,
/// `partial` and `region_id` properties.
///
/// Merged rows are split back into the aligned trixels that tile them.
pub fn export_cover_geojson(cover: &RegionCover, maxrows: usize) -> Result<Vec<u8>> {
    if cover.rows.len() > maxrows {
        return Err(Error::input(format!(
            "cover has {} rows, export limit is {maxrows}",
            cover.rows.len()
        )));
    }
    let mut features = Vec::with_capacity(cover.rows.len());
    for row in &cover.rows {
        for id in decompose_range(row.range, cover.index_level)? {
            let t = trixel_of(id)?;
            let ring = t.to_ring();
            features.push(json!({
                "type": "Feature",
                "properties": {
                    "trixel_id": id.value(),
                    "level": id.level(),
                    "partial": row.partial,
                    "region_id": row.region_id,
                },
                "geometry": {"type": "Polygon", "coordinates": [ring_coords(&ring)]},
            }));
        }
    }
    if features.len() > maxrows {
        return Err(Error::input(format!(
            "cover expands to {} trixels, export limit is {maxrows}",
            features.len()
        )));
    }
    Ok(serde_json::to_vec(
        &json!({"type": "FeatureCollection", "features": features}),
    )?)
}
