//! File formats: GeoJSON regions, point CSV, binary cover files and match CSV.

pub mod coverfile;
pub mod geojson;
pub mod matches;
pub mod points;

pub use coverfile::{decode_cover, encode_cover, read_cover, write_cover, CoverFile};
pub use geojson::{export_cover_geojson, export_regions_geojson, parse_regions, RegionManifest};
pub use matches::{write_matches_csv, CandidateWriter, MatchWriter};
pub use points::{read_points_csv, write_points_csv, PointReader};
