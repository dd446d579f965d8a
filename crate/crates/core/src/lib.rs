//! Point-in-region classification on the sphere using Hierarchical Triangular
//! Mesh covers.
//!
//! Regions are tessellated into full and partial trixels ([`cover`]), the
//! trixels become id intervals in a sorted table, and points are joined to
//! regions by interval stabbing ([`classify`]). Only points that land in
//! partial trixels are tested against geometry, and then only against the
//! region clipped to that trixel.

pub mod bench;
pub mod classify;
pub mod cover;
pub mod error;
pub mod geom;
pub mod htm;
pub mod io;
pub mod synth;

pub use classify::{
    build_interval_table, classify, exact_classify, nested_loop_join, prefilter, CandidateMatch,
    IntervalTable, JoinStats, Match, MatchKind, PointRecord,
};
pub use cover::{
    build_cover, build_covers, classify_trixel, clip_region_to_trixel, eval_trixels, CoverOptions,
    CoverRow, GeometryStore, RegionCover, TrixelClass,
};
pub use error::{Error, Result};
pub use geom::{Region, Ring, SphericalPolygon, UnitVec};
pub use htm::{encode, trixel_of, HtmId, IdRange, Trixel};
