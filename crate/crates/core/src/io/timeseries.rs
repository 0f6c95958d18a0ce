use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::diagnostics::TimeSeriesRecord;
use crate::{Error, Result};

pub const TIMESERIES_HEADER: [&str; 9] = [
    "t",
    "l2_omega",
    "h1_omega",
    "max_omega",
    "q",
    "e_gnorm",
    "energy_residual",
    "mode_re",
    "mode_im",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn fields(r: &TimeSeriesRecord) -> [String; 9] {
    // 17 significant digits: exact f64 round trip
    [r.t, r.l2_omega, r.h1_omega, r.max_omega, r.q, r.e_gnorm, r.energy_residual, r.mode_re, r.mode_im]
        .map(|v| format!("{v:.16e}"))
}

/// Streaming writer for long runs; rows are flushed on [`flush`](Self::flush)
/// and on drop.
pub struct TimeSeriesWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl TimeSeriesWriter<File> {
    pub fn create(path: &Path) -> Result<Self> {
        Self::new(File::create(path)?)
    }
}

impl<W: Write> TimeSeriesWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(TIMESERIES_HEADER).map_err(csv_err)?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, record: &TimeSeriesRecord) -> Result<()> {
        self.inner.write_record(fields(record)).map_err(csv_err)
    }

    pub fn flush(&mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn write_timeseries(path: &Path, records: &[TimeSeriesRecord]) -> Result<()> {
    let mut w = TimeSeriesWriter::create(path)?;
    for r in records {
        w.push(r)?;
    }
    w.flush()
}

/// Reads a series written by [`write_timeseries`]; rows are numbered from 1
/// after the header in errors.
pub fn read_timeseries(path: &Path) -> Result<Vec<TimeSeriesRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(|e| Error::Parse { row: 0, msg: e.to_string() })?;
    if header.iter().ne(TIMESERIES_HEADER) {
        return Err(Error::Parse { row: 0, msg: format!("unexpected header {header:?}") });
    }
    let mut out = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let row = idx + 1;
        let rec = rec.map_err(|e| Error::Parse { row, msg: e.to_string() })?;
        if rec.len() != TIMESERIES_HEADER.len() {
            return Err(Error::Parse { row, msg: format!("{} fields", rec.len()) });
        }
        let mut v = [0.0; 9];
        for (slot, field) in v.iter_mut().zip(rec.iter()) {
            *slot = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse { row, msg: format!("not a number: {field:?}") })?;
        }
        out.push(TimeSeriesRecord {
            t: v[0],
            l2_omega: v[1],
            h1_omega: v[2],
            max_omega: v[3],
            q: v[4],
            e_gnorm: v[5],
            energy_residual: v[6],
            mode_re: v[7],
            mode_im: v[8],
        });
    }
    Ok(out)
}
