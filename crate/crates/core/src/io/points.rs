//! Point CSV ingestion (`id,lon,lat`).

use std::io::{Read, Write};

use crate::classify::PointRecord;
use crate::error::{Error, Result};

/// Streaming reader; rows that fail to parse are skipped and counted.
pub struct PointReader<R: Read> {
    rows: csv::StringRecordsIntoIter<R>,
    index_level: u32,
    invalid: u64,
    first_invalid: Option<(u64, String)>,
}

impl<R: Read> PointReader<R> {
    pub fn new(input: R, index_level: u32) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(input);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim_start_matches('\u{feff}').to_ascii_lowercase())
            .collect();
        if header.len() < 3 || header[..3] != ["id", "lon", "lat"] {
            return Err(Error::input(format!(
                "point file header must start with id,lon,lat, found {}",
                header.join(",")
            )));
        }
        Ok(PointReader {
            rows: rdr.into_records(),
            index_level,
            invalid: 0,
            first_invalid: None,
        })
    }

    /// Rows skipped so far.
    pub fn invalid_rows(&self) -> u64 {
        self.invalid
    }

    /// Line and reason of the first skipped row.
    pub fn first_invalid(&self) -> Option<&(u64, String)> {
        self.first_invalid.as_ref()
    }

    /// Fills `buf` with up to `max` points; returns how many were read.
    pub fn read_chunk(&mut self, buf: &mut Vec<PointRecord>, max: usize) -> Result<usize> {
        buf.clear();
        while buf.len() < max {
            match self.next() {
                Some(p) => buf.push(p?),
                None => break,
            }
        }
        Ok(buf.len())
    }

    fn skip(&mut self, line: u64, why: String) {
        self.invalid += 1;
        self.first_invalid.get_or_insert((line, why));
    }
}

fn parse(rec: &csv::StringRecord, level: u32) -> std::result::Result<PointRecord, String> {
    if rec.len() < 3 {
        return Err(format!("expected 3 fields, found {}", rec.len()));
    }
    let id: i64 = rec[0].parse().map_err(|e| format!("id {:?}: {e}", &rec[0]))?;
    let lon: f64 = rec[1].parse().map_err(|e| format!("lon {:?}: {e}", &rec[1]))?;
    let lat: f64 = rec[2].parse().map_err(|e| format!("lat {:?}: {e}", &rec[2]))?;
    PointRecord::new(id, lon, lat, level).map_err(|e| e.to_string())
}

impl<R: Read> Iterator for PointReader<R> {
    type Item = Result<PointRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let rec = match self.rows.next()? {
                Ok(r) => r,
                // broken UTF-8 and the like stay row-local
                Err(e) if !matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                    let line = e.position().map_or(0, |p| p.line());
                    self.skip(line, e.to_string());
                    continue;
                }
                Err(e) => return Some(Err(e.into())),
            };
            let line = rec.position().map_or(0, |p| p.line());
            match parse(&rec, self.index_level) {
                Ok(p) => return Some(Ok(p)),
                Err(why) => self.skip(line, why),
            }
        }
    }
}

/// Reads a whole point file into memory.
pub fn read_points_csv<R: Read>(input: R, index_level: u32) -> Result<(Vec<PointRecord>, u64)> {
    let mut rdr = PointReader::new(input, index_level)?;
    let points = rdr.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((points, rdr.invalid_rows()))
}

/// Writes `id,lon,lat` rows with round-trip float formatting.
pub fn write_points_csv<W: Write>(out: W, points: &[(i64, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "lon", "lat"])?;
    for &(id, lon, lat) in points {
        w.write_record([id.to_string(), lon.to_string(), lat.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
