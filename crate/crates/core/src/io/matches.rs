//! Match and candidate CSV output.

use std::io::Write;

use crate::classify::{CandidateMatch, Match};
use crate::error::Result;

/// `point_id,region_id,kind` rows.
pub struct MatchWriter<W: Write> {
    inner: csv::Writer<W>,
    rows: u64,
}

impl<W: Write> MatchWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["point_id", "region_id", "kind"])?;
        Ok(MatchWriter { inner, rows: 0 })
    }

    pub fn write(&mut self, m: &Match) -> Result<()> {
        self.inner.write_record([
            m.point_id.to_string().as_str(),
            m.region_id.to_string().as_str(),
            m.kind.as_str(),
        ])?;
        self.rows += 1;
        Ok(())
    }

    pub fn rows(&self) -> u64 {
        self.rows
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush()?;
        Ok(self.rows)
    }
}

/// `point_id,region_id,partial` rows, partial as 0/1.
pub struct CandidateWriter<W: Write> {
    inner: csv::Writer<W>,
    rows: u64,
}

impl<W: Write> CandidateWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(out);
        inner.write_record(["point_id", "region_id", "partial"])?;
        Ok(CandidateWriter { inner, rows: 0 })
    }

    pub fn write(&mut self, c: &CandidateMatch) -> Result<()> {
        self.inner.write_record([
            c.point_id.to_string().as_str(),
            c.region_id.to_string().as_str(),
            if c.partial { "1" } else { "0" },
        ])?;
        self.rows += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u64> {
        self.inner.flush()?;
        Ok(self.rows)
    }
}

pub fn write_matches_csv<'a, W: Write>(
    out: W,
    matches: impl IntoIterator<Item = &'a Match>,
) -> Result<u64> {
    let mut w = MatchWriter::new(out)?;
    for m in matches {
        w.write(m)?;
    }
    w.finish()
}
