use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use htmjoin::bench::{self, BenchReport, Dataset};
use htmjoin::classify::{
    build_interval_table, classify, prefilter_parallel, JoinStats, PointRecord, CHUNK,
};
use htmjoin::cover::{build_cover, CoverOptions, GeometryStore};
use htmjoin::geom::Region;
use htmjoin::htm::{encode, id_range, trixel_of, HtmId, DEFAULT_INDEX_LEVEL, MAX_LEVEL};
use htmjoin::io::{
    export_cover_geojson, parse_regions, read_cover, write_cover, CandidateWriter, MatchWriter,
    PointReader,
};
use htmjoin::synth;
use htmjoin::{Error, Result, UnitVec};

/// HTM covers and point-in-region classification.
#[derive(Parser)]
#[command(name = "htmjoin", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HTM_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build covers for every region in a GeoJSON file.
    Cover(CoverArgs),
    /// Join points to regions using a cover file.
    Classify(ClassifyArgs),
    /// HTM id utilities.
    #[command(subcommand)]
    Id(IdCommand),
    /// Pre-filter false-positive rates and join timing.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct CoverArgs {
    #[arg(long)]
    regions: PathBuf,
    /// Maximum trixel level.
    #[arg(long)]
    level: u32,
    #[arg(long)]
    out: PathBuf,
    /// Feature property holding the region id (default: 1-based feature order).
    #[arg(long)]
    id_property: Option<String>,
    /// Recurse with the full region instead of the parent's clip.
    #[arg(long)]
    no_clip_recursion: bool,
    /// Coalesce adjacent full rows.
    #[arg(long)]
    merge: bool,
    /// Depth of the ids stored in the file (default: max(20, level)).
    #[arg(long)]
    index_level: Option<u32>,
    /// Also write the cover trixels as GeoJSON.
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Row limit for --geojson.
    #[arg(long, default_value_t = 100_000)]
    maxrows: usize,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    cover: PathBuf,
    /// CSV with header id,lon,lat.
    #[arg(long)]
    points: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Write candidates with their partial flag instead of confirmed matches.
    #[arg(long)]
    prefilter_only: bool,
    /// JSON statistics output.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Subcommand)]
enum IdCommand {
    /// Id of the trixel containing a point.
    Encode {
        #[arg(long, allow_hyphen_values = true)]
        lon: f64,
        #[arg(long, allow_hyphen_values = true)]
        lat: f64,
        #[arg(long)]
        level: u32,
    },
    /// Corner coordinates of a trixel, one `lon lat` line each.
    Decode {
        #[arg(long)]
        id: u64,
    },
    /// Half-open id range of a trixel at a deeper level.
    Range {
        #[arg(long)]
        id: u64,
        #[arg(long)]
        maxlevel: u32,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// False-positive rate of the pre-filter at each level.
    FpRate(BenchArgs),
    /// Pre-filter, full pipeline and nested-loop baseline timings.
    Timing(BenchArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// GeoJSON regions; omit to use synthetic coastlines.
    #[arg(long)]
    regions: Option<PathBuf>,
    #[arg(long)]
    id_property: Option<String>,
    /// Number of synthetic regions when --regions is not given.
    #[arg(long, default_value_t = 50)]
    synthetic_regions: usize,
    /// Displacement passes for synthetic regions (8 * 2^passes vertices).
    #[arg(long, default_value_t = 6)]
    region_passes: u32,
    /// Comma-separated maximum levels.
    #[arg(long, value_delimiter = ',', required = true)]
    levels: Vec<u32>,
    /// CSV points with header id,lon,lat.
    #[arg(long, conflicts_with = "synthetic")]
    points: Option<PathBuf>,
    /// Number of seeded random points.
    #[arg(long)]
    synthetic: Option<usize>,
    /// Draw synthetic points inside the regions' bounding caps instead of
    /// uniformly over the sphere.
    #[arg(long)]
    in_caps: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// JSON report output.
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.cmd {
        Command::Cover(a) => cmd_cover(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Id(c) => cmd_id(c),
        Command::Bench(BenchCommand::FpRate(a)) => cmd_bench(a, false),
        Command::Bench(BenchCommand::Timing(a)) => cmd_bench(a, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 1 } else { 2 })
        }
    }
}

fn load_regions(path: &Path, id_property: Option<&str>) -> Result<Vec<Region>> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_regions(&bytes, id_property)?.0)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))
}

fn cmd_cover(a: CoverArgs) -> Result<()> {
    let regions = load_regions(&a.regions, a.id_property.as_deref())?;
    let mut opts = CoverOptions::new(a.level)
        .with_merge(a.merge)
        .with_narrowing(!a.no_clip_recursion);
    if let Some(l) = a.index_level {
        opts = opts.with_index_level(l);
    }
    let t0 = Instant::now();
    let built: Vec<_> = {
        use rayon::prelude::*;
        regions
            .par_iter()
            .map(|r| {
                let t = Instant::now();
                build_cover(r, &opts).map(|(c, s)| (c, s, t.elapsed().as_secs_f64()))
            })
            .collect::<Result<_>>()?
    };
    let build_secs = t0.elapsed().as_secs_f64();

    println!(
        "{:>9} {:>10} {:>10} {:>10} {:>9}  name",
        "region", "rows", "full", "partial", "secs"
    );
    let mut covers = Vec::with_capacity(built.len());
    let mut store = GeometryStore::new();
    for ((c, s, secs), r) in built.into_iter().zip(&regions) {
        println!(
            "{:>9} {:>10} {:>10} {:>10} {:>9.3}  {}",
            c.region_id,
            c.rows.len(),
            c.stats.full_rows,
            c.stats.partial_rows,
            secs,
            r.name
        );
        covers.push(c);
        store.extend(s);
    }
    let rows: usize = covers.iter().map(|c| c.rows.len()).sum();
    let bytes = write_cover(&a.out, &covers, Some(&store), opts.index_level, opts.maxlevel)?;
    println!(
        "total {rows} rows, {} clips, build {build_secs:.3} s, wrote {bytes} bytes to {}",
        store.len(),
        a.out.display()
    );
    if let Some(path) = &a.geojson {
        let mut features = Vec::new();
        for c in &covers {
            let doc: serde_json::Value = serde_json::from_slice(&export_cover_geojson(c, a.maxrows)?)?;
            if let Some(f) = doc["features"].as_array() {
                features.extend(f.iter().cloned());
            }
        }
        if features.len() > a.maxrows {
            return Err(Error::Input(format!(
                "{} trixels exceed --maxrows {}",
                features.len(),
                a.maxrows
            )));
        }
        let doc = serde_json::json!({"type": "FeatureCollection", "features": features});
        fs::write(path, serde_json::to_vec(&doc)?)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyStats {
    #[serde(flatten)]
    join: JoinStats,
    invalid_points: u64,
    prefilter_only: bool,
    wall_secs: f64,
    table_rows: usize,
    table_bytes: usize,
}

fn cmd_classify(a: ClassifyArgs) -> Result<()> {
    let file = read_cover(&a.cover)?;
    let table = build_interval_table(&file.covers)?;
    let store = match (&file.store, a.prefilter_only) {
        (Some(s), _) => Some(s),
        (None, true) => None,
        (None, false) => {
            return Err(Error::Input(format!(
                "{} has no geometry section; only --prefilter-only is possible",
                a.cover.display()
            )))
        }
    };
    let mut reader = PointReader::new(BufReader::new(open(&a.points)?), file.index_level)?;
    let out = BufWriter::new(File::create(&a.out)?);
    let t0 = Instant::now();
    let mut stats = JoinStats::default();
    let mut buf: Vec<PointRecord> = Vec::new();
    if a.prefilter_only {
        let mut w = CandidateWriter::new(out)?;
        while reader.read_chunk(&mut buf, 16 * CHUNK)? > 0 {
            let (mut cands, s) = prefilter_parallel(&buf, &table)?;
            cands.sort_unstable_by_key(|c| (c.point_id, c.region_id, c.trixel_id));
            for c in &cands {
                w.write(c)?;
            }
            stats.merge(&s);
        }
        w.finish()?;
    } else {
        let store = store.expect("checked above");
        let mut w = MatchWriter::new(out)?;
        while reader.read_chunk(&mut buf, 16 * CHUNK)? > 0 {
            let (mut matches, s) = classify(&buf, &table, store)?;
            matches.sort_unstable();
            matches.dedup();
            for m in &matches {
                w.write(m)?;
            }
            stats.merge(&s);
        }
        w.finish()?;
    }
    let wall_secs = t0.elapsed().as_secs_f64();
    if reader.invalid_rows() > 0 {
        let (line, why) = reader.first_invalid().cloned().unwrap_or_default();
        eprintln!(
            "warning: skipped {} invalid point rows (first at line {line}: {why})",
            reader.invalid_rows()
        );
    }
    println!(
        "{} points, {} candidates, {} matches, fp rate {:.4}, {wall_secs:.3} s",
        stats.points, stats.candidates, stats.matches, stats.false_positive_rate
    );
    if let Some(path) = &a.stats {
        let s = ClassifyStats {
            join: stats,
            invalid_points: reader.invalid_rows(),
            prefilter_only: a.prefilter_only,
            wall_secs,
            table_rows: table.len(),
            table_bytes: table.memory_bytes(),
        };
        fs::write(path, serde_json::to_string_pretty(&s)?)?;
    }
    Ok(())
}

fn cmd_id(c: IdCommand) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match c {
        IdCommand::Encode { lon, lat, level } => {
            let id = encode(UnitVec::from_lonlat(lon, lat)?, level)?;
            writeln!(out, "{}", id.value())?;
        }
        IdCommand::Decode { id } => {
            let t = trixel_of(HtmId::new(id)?)?;
            for v in t.vertices {
                let (lon, lat) = v.to_lonlat();
                writeln!(out, "{lon} {lat}")?;
            }
        }
        IdCommand::Range { id, maxlevel } => {
            if maxlevel > MAX_LEVEL {
                return Err(Error::LevelOverflow {
                    level: maxlevel,
                    limit: MAX_LEVEL,
                });
            }
            let r = id_range(HtmId::new(id)?, maxlevel)?;
            writeln!(out, "{} {}", r.start, r.end)?;
        }
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs, timing: bool) -> Result<()> {
    let (regions, generator) = match &a.regions {
        Some(p) => (load_regions(p, a.id_property.as_deref())?, Vec::new()),
        None => synth::region_grid(a.synthetic_regions, a.region_passes, a.seed)?,
    };
    let index_level = a
        .levels
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(DEFAULT_INDEX_LEVEL);
    let mut invalid = 0;
    let (raw, source) = match (&a.points, a.synthetic) {
        (Some(p), _) => {
            let mut rdr = PointReader::new(BufReader::new(open(p)?), index_level)?;
            let pts = rdr.by_ref().collect::<Result<Vec<_>>>()?;
            invalid = rdr.invalid_rows();
            (pts, p.display().to_string())
        }
        (None, Some(n)) => {
            let mut rng = synth::rng(a.seed.wrapping_add(1));
            let pts = if a.in_caps {
                synth::cap_points(n, &regions, &mut rng)?
            } else {
                synth::uniform_points(n, &mut rng)
            };
            let recs = pts
                .into_iter()
                .map(|(id, lon, lat)| PointRecord::new(id, lon, lat, index_level))
                .collect::<Result<Vec<_>>>()?;
            let mode = if a.in_caps { "caps" } else { "uniform" };
            (recs, format!("synthetic {mode}"))
        }
        (None, None) => return Err(Error::Input("one of --points or --synthetic is required".into())),
    };
    let dataset = Dataset {
        regions: regions.len(),
        region_vertices: regions.iter().map(Region::vertex_count).sum(),
        points: raw.len(),
        invalid_points: invalid,
        seed: a.points.is_none().then_some(a.seed),
        point_source: source,
        generator,
    };
    let report = if timing {
        let timing = a
            .levels
            .iter()
            .map(|&l| bench::timing(&regions, &raw, l))
            .collect::<Result<Vec<_>>>()?;
        BenchReport {
            dataset,
            levels: Vec::new(),
            timing,
        }
    } else {
        BenchReport {
            dataset,
            levels: bench::fp_rate(&regions, &raw, &a.levels)?,
            timing: Vec::new(),
        }
    };
    print!("{}", report.to_table());
    if let Some(path) = &a.report {
        fs::write(path, report.to_json()?)?;
    }
    if report.timing.iter().any(|t| !t.valid) {
        return Err(Error::CorruptCover(
            "pipeline and baseline match sets differ".into(),
        ));
    }
    Ok(())
}
