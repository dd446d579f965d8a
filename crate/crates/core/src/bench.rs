//! Benchmarks: false-positive rate per level, and pipeline timing against the
//! nested-loop baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::classify::{
    build_interval_table, classify, nested_loop_join, prefilter_parallel, PointRecord,
};
use crate::cover::{build_covers, CoverOptions};
use crate::error::Result;
use crate::geom::Region;
use crate::synth::CoastlineParams;

#[derive(Debug, Clone, Serialize)]
pub struct Dataset {
    pub regions: usize,
    pub region_vertices: usize,
    pub points: usize,
    pub invalid_points: u64,
    pub seed: Option<u64>,
    pub point_source: String,
    /// Generator settings when the regions are synthetic.
    pub generator: Vec<CoastlineParams>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: u32,
    pub rows: usize,
    pub full_rows: usize,
    pub partial_rows: usize,
    pub clip_vertices: usize,
    pub build_secs: f64,
    pub table_bytes: usize,
    pub candidates: u64,
    pub rejected: u64,
    pub matches: u64,
    pub false_positive_rate: f64,
    pub region_fp_rates: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingReport {
    pub level: u32,
    pub threads: usize,
    pub build_secs: f64,
    pub prefilter_secs: f64,
    pub classify_secs: f64,
    pub baseline_secs: f64,
    pub matches: u64,
    pub baseline_matches: u64,
    /// Baseline and pipeline produced the same (point, region) set.
    pub valid: bool,
    pub speedup: f64,
    pub prefilter_speedup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub dataset: Dataset,
    pub levels: Vec<LevelReport>,
    pub timing: Vec<TimingReport>,
}

impl BenchReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned text tables.
    pub fn to_table(&self) -> String {
        let d = &self.dataset;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} regions ({} vertices), {} points ({}, {} invalid)",
            d.regions, d.region_vertices, d.points, d.point_source, d.invalid_points
        );
        if !self.levels.is_empty() {
            let _ = writeln!(
                s,
                "\n{:>5} {:>10} {:>10} {:>10} {:>9} {:>11} {:>9} {:>8}",
                "level", "rows", "partial", "build s", "cand", "rejected", "matches", "fp %"
            );
            for l in &self.levels {
                let _ = writeln!(
                    s,
                    "{:>5} {:>10} {:>10} {:>10.3} {:>9} {:>11} {:>9} {:>8.3}",
                    l.level,
                    l.rows,
                    l.partial_rows,
                    l.build_secs,
                    l.candidates,
                    l.rejected,
                    l.matches,
                    100.0 * l.false_positive_rate
                );
            }
        }
        for t in &self.timing {
            let _ = writeln!(
                s,
                "\nlevel {} on {} thread(s), cover build {:.3} s",
                t.level, t.threads, t.build_secs
            );
            let _ = writeln!(s, "{:<22} {:>10}", "phase", "seconds");
            let _ = writeln!(s, "{:<22} {:>10.3}", "prefilter only", t.prefilter_secs);
            let _ = writeln!(s, "{:<22} {:>10.3}", "prefilter + exact", t.classify_secs);
            let _ = writeln!(s, "{:<22} {:>10.3}", "nested-loop baseline", t.baseline_secs);
            let _ = writeln!(
                s,
                "speedup {:.1}x (prefilter {:.1}x), matches {} vs baseline {}{}",
                t.speedup,
                t.prefilter_speedup,
                t.matches,
                t.baseline_matches,
                if t.valid { "" } else { "  INVALID: match sets differ" }
            );
        }
        s
    }
}

/// Builds covers at each level and measures the pre-filter false-positive rate.
pub fn fp_rate(regions: &[Region], points: &[PointRecord], levels: &[u32]) -> Result<Vec<LevelReport>> {
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let opts = CoverOptions::new(level);
        let t0 = Instant::now();
        let (covers, store) = build_covers(regions, &opts)?;
        let build_secs = t0.elapsed().as_secs_f64();
        let table = build_interval_table(&covers)?;
        let (_, stats) = classify(points, &table, &store)?;
        out.push(LevelReport {
            level,
            rows: table.len(),
            full_rows: covers.iter().map(|c| c.stats.full_rows).sum(),
            partial_rows: covers.iter().map(|c| c.stats.partial_rows).sum(),
            clip_vertices: store.vertex_count(),
            build_secs,
            table_bytes: table.memory_bytes(),
            candidates: stats.candidates,
            rejected: stats.rejected,
            matches: stats.matches,
            false_positive_rate: stats.false_positive_rate,
            region_fp_rates: stats
                .per_region
                .iter()
                .map(|(&id, r)| (id, r.false_positive_rate()))
                .collect(),
        });
    }
    Ok(out)
}

/// Runs of the pre-filter and full pipeline per timing report.
pub const REPEATS: usize = 3;

/// Times the pre-filter, the full pipeline and the nested-loop baseline on
/// the same points, and checks that pipeline and baseline agree.
pub fn timing(regions: &[Region], points: &[PointRecord], level: u32) -> Result<TimingReport> {
    let opts = CoverOptions::new(level);
    let t0 = Instant::now();
    let (covers, store) = build_covers(regions, &opts)?;
    let build_secs = t0.elapsed().as_secs_f64();
    let table = build_interval_table(&covers)?;

    // the two fast phases are timed best-of-REPEATS to damp scheduler noise
    let mut prefilter_secs = f64::INFINITY;
    let mut classify_secs = f64::INFINITY;
    let mut matches = Vec::new();
    for _ in 0..REPEATS {
        let t = Instant::now();
        let (cands, _) = prefilter_parallel(points, &table)?;
        prefilter_secs = prefilter_secs.min(t.elapsed().as_secs_f64());
        drop(cands);

        let t = Instant::now();
        matches = classify(points, &table, &store)?.0;
        classify_secs = classify_secs.min(t.elapsed().as_secs_f64());
    }

    let t = Instant::now();
    let baseline = nested_loop_join(points, regions);
    let baseline_secs = t.elapsed().as_secs_f64();

    let mut got: Vec<(i64, u32)> = matches.iter().map(|m| (m.point_id, m.region_id)).collect();
    let mut want = baseline;
    got.sort_unstable();
    want.sort_unstable();
    Ok(TimingReport {
        level,
        threads: rayon::current_num_threads(),
        build_secs,
        prefilter_secs,
        classify_secs,
        baseline_secs,
        matches: got.len() as u64,
        baseline_matches: want.len() as u64,
        valid: got == want,
        speedup: baseline_secs / classify_secs.max(1e-9),
        prefilter_speedup: baseline_secs / prefilter_secs.max(1e-9),
    })
}
