//! Python bindings: regions, covers, the point join and HTM id helpers.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use htmjoin::classify::{nested_loop_join as nested_loop, prefilter_parallel};
use htmjoin::cover::{build_covers, CoverOptions, GeometryStore};
use htmjoin::htm::{self, HtmId};
use htmjoin::io::{self, CoverFile};
use htmjoin::{build_interval_table, classify, synth, Error, IntervalTable, PointRecord, UnitVec};

fn err(e: Error) -> PyErr {
    if e.is_input_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn records(points: &[(i64, f64, f64)], index_level: u32) -> PyResult<Vec<PointRecord>> {
    points
        .iter()
        .map(|&(id, lon, lat)| PointRecord::new(id, lon, lat, index_level).map_err(err))
        .collect()
}

/// A named region made of spherical polygons.
#[pyclass(module = "pyhtmjoin", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Region {
    inner: htmjoin::Region,
}

#[pymethods]
impl Region {
    #[getter]
    fn id(&self) -> u32 {
        self.inner.id
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    /// Solid angle in steradians.
    #[getter]
    fn area(&self) -> f64 {
        self.inner.area()
    }

    #[getter]
    fn vertex_count(&self) -> usize {
        self.inner.vertex_count()
    }

    /// Polygons as lists of rings of `(lon, lat)`, exterior first.
    fn rings(&self) -> Vec<Vec<Vec<(f64, f64)>>> {
        self.inner
            .polygons
            .iter()
            .map(|p| {
                p.rings()
                    .map(|r| r.lonlat().into_iter().map(|[a, b]| (a, b)).collect())
                    .collect()
            })
            .collect()
    }

    /// Closed-set membership of a lon/lat point.
    fn contains(&self, lon: f64, lat: f64) -> PyResult<bool> {
        Ok(self.inner.contains(UnitVec::from_lonlat(lon, lat).map_err(err)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "Region(id={}, name={:?}, vertices={})",
            self.inner.id,
            self.inner.name,
            self.inner.vertex_count()
        )
    }
}

fn unwrap_regions(regions: &[PyRef<'_, Region>]) -> Vec<htmjoin::Region> {
    regions.iter().map(|r| r.inner.clone()).collect()
}

/// Covers of a region set with their clips and the interval table.
#[pyclass(module = "pyhtmjoin", frozen)]
struct Cover {
    file: CoverFile,
    table: IntervalTable,
}

impl Cover {
    fn from_file(file: CoverFile) -> PyResult<Self> {
        let table = build_interval_table(&file.covers).map_err(err)?;
        Ok(Cover { file, table })
    }

    fn store(&self) -> PyResult<&GeometryStore> {
        self.file
            .store
            .as_ref()
            .ok_or_else(|| PyValueError::new_err("cover has no geometry section"))
    }
}

#[pymethods]
impl Cover {
    /// Tessellates `regions` down to `level`.
    #[staticmethod]
    #[pyo3(signature = (regions, level, merge = false, narrow = true, index_level = None))]
    fn build(
        py: Python<'_>,
        regions: Vec<PyRef<'_, Region>>,
        level: u32,
        merge: bool,
        narrow: bool,
        index_level: Option<u32>,
    ) -> PyResult<Self> {
        let regions = unwrap_regions(&regions);
        let mut opts = CoverOptions::new(level).with_merge(merge).with_narrowing(narrow);
        if let Some(l) = index_level {
            opts = opts.with_index_level(l);
        }
        let (covers, store) = py.detach(|| build_covers(&regions, &opts)).map_err(err)?;
        Cover::from_file(CoverFile {
            index_level: opts.index_level,
            maxlevel: opts.maxlevel,
            covers,
            store: Some(store),
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Cover::from_file(io::read_cover(&path).map_err(err)?)
    }

    /// Writes the cover file; returns the byte count.
    fn save(&self, path: PathBuf) -> PyResult<u64> {
        let f = &self.file;
        io::write_cover(&path, &f.covers, f.store.as_ref(), f.index_level, f.maxlevel).map_err(err)
    }

    fn to_bytes(&self) -> PyResult<Vec<u8>> {
        let f = &self.file;
        io::encode_cover(&f.covers, f.store.as_ref(), f.index_level, f.maxlevel).map_err(err)
    }

    #[getter]
    fn index_level(&self) -> u32 {
        self.file.index_level
    }

    #[getter]
    fn maxlevel(&self) -> u32 {
        self.file.maxlevel
    }

    #[getter]
    fn region_ids(&self) -> Vec<u32> {
        self.file.covers.iter().map(|c| c.region_id).collect()
    }

    fn __len__(&self) -> usize {
        self.table.len()
    }

    /// Rows as `(start, end, partial, trixel_id)`, optionally for one region.
    #[pyo3(signature = (region_id = None))]
    fn rows(&self, region_id: Option<u32>) -> Vec<(u64, u64, bool, u64)> {
        self.file
            .covers
            .iter()
            .filter(|c| region_id.is_none_or(|id| id == c.region_id))
            .flat_map(|c| c.rows.iter())
            .map(|r| (r.range.start, r.range.end, r.partial, r.trixel_id.value()))
            .collect()
    }

    /// Pre-filter candidates as `(point_id, region_id, partial)`.
    fn prefilter(&self, py: Python<'_>, points: Vec<(i64, f64, f64)>) -> PyResult<Vec<(i64, u32, bool)>> {
        let recs = records(&points, self.file.index_level)?;
        let (cands, _) = py.detach(|| prefilter_parallel(&recs, &self.table)).map_err(err)?;
        Ok(cands.iter().map(|c| (c.point_id, c.region_id, c.partial)).collect())
    }

    /// Confirmed matches as `(point_id, region_id, kind)` sorted by point
    /// then region; kind is "full" or "partial".
    fn classify(&self, py: Python<'_>, points: Vec<(i64, f64, f64)>) -> PyResult<Vec<(i64, u32, &'static str)>> {
        let recs = records(&points, self.file.index_level)?;
        let store = self.store()?;
        let (mut matches, _) = py.detach(|| classify(&recs, &self.table, store)).map_err(err)?;
        matches.sort_unstable();
        Ok(matches
            .iter()
            .map(|m| (m.point_id, m.region_id, m.kind.as_str()))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Cover(regions={}, rows={}, maxlevel={})",
            self.file.covers.len(),
            self.table.len(),
            self.file.maxlevel
        )
    }
}

/// Parses GeoJSON text into regions.
#[pyfunction]
#[pyo3(signature = (text, id_property = None))]
fn parse_regions(text: &str, id_property: Option<&str>) -> PyResult<Vec<Region>> {
    let (regions, _) = io::parse_regions(text.as_bytes(), id_property).map_err(err)?;
    Ok(regions.into_iter().map(|inner| Region { inner }).collect())
}

#[pyfunction]
fn export_regions(regions: Vec<PyRef<'_, Region>>) -> PyResult<String> {
    let bytes = io::export_regions_geojson(&unwrap_regions(&regions)).map_err(err)?;
    String::from_utf8(bytes).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Seeded synthetic coastline regions on a grid.
#[pyfunction]
#[pyo3(signature = (count, passes = 6, seed = 1))]
fn synthetic_regions(count: usize, passes: u32, seed: u64) -> PyResult<Vec<Region>> {
    let (regions, _) = synth::region_grid(count, passes, seed).map_err(err)?;
    Ok(regions.into_iter().map(|inner| Region { inner }).collect())
}

/// Seeded points `(id, lon, lat)`, uniform on the sphere or, given regions,
/// within their bounding caps.
#[pyfunction]
#[pyo3(signature = (n, seed = 1, regions = None))]
fn synthetic_points(n: usize, seed: u64, regions: Option<Vec<PyRef<'_, Region>>>) -> PyResult<Vec<(i64, f64, f64)>> {
    let mut rng = synth::rng(seed);
    match regions {
        None => Ok(synth::uniform_points(n, &mut rng)),
        Some(rs) => {
            synth::cap_points(n, &unwrap_regions(&rs), &mut rng).map_err(err)
        }
    }
}

/// Brute-force join: every point against every region.
#[pyfunction]
fn nested_loop_join(py: Python<'_>, regions: Vec<PyRef<'_, Region>>, points: Vec<(i64, f64, f64)>) -> PyResult<Vec<(i64, u32)>> {
    let owned = unwrap_regions(&regions);
    let recs = records(&points, htm::DEFAULT_INDEX_LEVEL)?;
    let mut out = py.detach(|| nested_loop(&recs, &owned));
    out.sort_unstable();
    Ok(out)
}

/// Id of the level-`level` trixel containing the point.
#[pyfunction]
fn encode(lon: f64, lat: f64, level: u32) -> PyResult<u64> {
    let p = UnitVec::from_lonlat(lon, lat).map_err(err)?;
    Ok(htm::encode(p, level).map_err(err)?.value())
}

/// Corners of a trixel as `(lon, lat)`.
#[pyfunction]
fn decode(id: u64) -> PyResult<Vec<(f64, f64)>> {
    let t = htm::trixel_of(HtmId::new(id).map_err(err)?).map_err(err)?;
    Ok(t.vertices.iter().map(|v| v.to_lonlat()).collect())
}

/// Half-open `(start, end)` of a trixel's ids at `maxlevel`.
#[pyfunction]
fn id_range(id: u64, maxlevel: u32) -> PyResult<(u64, u64)> {
    let r = htm::id_range(HtmId::new(id).map_err(err)?, maxlevel).map_err(err)?;
    Ok((r.start, r.end))
}

#[pyfunction]
fn level_of(id: u64) -> PyResult<u32> {
    htm::level_of(id).map_err(err)
}

#[pymodule]
fn pyhtmjoin(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Region>()?;
    m.add_class::<Cover>()?;
    m.add_function(wrap_pyfunction!(parse_regions, m)?)?;
    m.add_function(wrap_pyfunction!(export_regions, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_regions, m)?)?;
    m.add_function(wrap_pyfunction!(synthetic_points, m)?)?;
    m.add_function(wrap_pyfunction!(nested_loop_join, m)?)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(id_range, m)?)?;
    m.add_function(wrap_pyfunction!(level_of, m)?)?;
    m.add("MAX_LEVEL", htm::MAX_LEVEL)?;
    m.add("DEFAULT_INDEX_LEVEL", htm::DEFAULT_INDEX_LEVEL)?;
    Ok(())
}
