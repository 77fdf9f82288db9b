//! CSV output of the metric streams.
//!
//! Three files per run: `metrics.csv` (one row per step), `movement.csv` (one
//! row per 50-step window) and `expectancy.csv` (one row per 500-step window,
//! empty `mean_death_age` when nobody died). Output uses `.` decimals and `\n`
//! line endings regardless of locale.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{
    ExpectancyWindow, MetricsFrame, MetricsSink, MovementHistogram, MOVEMENT_BINS,
    MOVEMENT_WINDOW, EXPECTANCY_WINDOW,
};

pub const METRICS_FILE: &str = "metrics.csv";
pub const MOVEMENT_FILE: &str = "movement.csv";
pub const EXPECTANCY_FILE: &str = "expectancy.csv";

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_owned(),
        source,
    }
}

fn writer<W: Write>(inner: W, headers: bool) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .has_headers(headers)
        .from_writer(inner)
}

fn movement_header() -> Vec<String> {
    std::iter::once("window_start".to_string())
        .chain((0..MOVEMENT_BINS).map(|i| format!("bin_{i}")))
        .collect()
}

fn movement_row(h: &MovementHistogram) -> Vec<String> {
    std::iter::once(h.window_start)
        .chain(h.bins.iter().copied())
        .map(|v| v.to_string())
        .collect()
}

fn write_serde<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = writer(file, false);
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.serialize(row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const FRAME_HEADER: [&str; 6] = [
    "step",
    "population",
    "resources",
    "births",
    "deaths",
    "mean_energy",
];
const EXPECTANCY_HEADER: [&str; 2] = ["window_start", "mean_death_age"];

pub fn write_frames(path: &Path, frames: &[MetricsFrame]) -> Result<()> {
    write_serde(path, frames, &FRAME_HEADER)
}

pub fn write_expectancy(path: &Path, windows: &[ExpectancyWindow]) -> Result<()> {
    write_serde(path, windows, &EXPECTANCY_HEADER)
}

pub fn write_movement(path: &Path, histograms: &[MovementHistogram]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = writer(file, false);
    w.write_record(movement_header()).map_err(csv_err(path))?;
    for h in histograms {
        w.write_record(movement_row(h)).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_serde<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Data(format!(
            "{}: unexpected header {:?}",
            path.display(),
            found
        )));
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err(path))
}

pub fn read_frames(path: &Path) -> Result<Vec<MetricsFrame>> {
    read_serde(path, &FRAME_HEADER)
}

pub fn read_expectancy(path: &Path) -> Result<Vec<ExpectancyWindow>> {
    read_serde(path, &EXPECTANCY_HEADER)
}

pub fn read_movement(path: &Path) -> Result<Vec<MovementHistogram>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let header = r.headers().map_err(csv_err(path))?.clone();
    if header.iter().ne(movement_header().iter().map(String::as_str)) {
        return Err(Error::Data(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for record in r.records() {
        let record = record.map_err(csv_err(path))?;
        let nums = record
            .iter()
            .map(|f| f.parse::<u64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut bins = [0u64; MOVEMENT_BINS];
        bins.copy_from_slice(&nums[1..]);
        out.push(MovementHistogram {
            window_start: nums[0],
            bins,
        });
    }
    Ok(out)
}

/// Streams all three files into a directory.
pub struct CsvSink {
    paths: [PathBuf; 3],
    frames: csv::Writer<File>,
    movement: csv::Writer<File>,
    expectancy: csv::Writer<File>,
}

impl CsvSink {
    /// Starts fresh files, replacing any existing ones.
    pub fn create(dir: &Path) -> Result<Self> {
        write_frames(&dir.join(METRICS_FILE), &[])?;
        write_movement(&dir.join(MOVEMENT_FILE), &[])?;
        write_expectancy(&dir.join(EXPECTANCY_FILE), &[])?;
        Self::append(dir)
    }

    /// Continues files written by a run that is being resumed at `step`.
    /// Rows the interrupted run wrote past the checkpoint are dropped first,
    /// so the files end up identical to an uninterrupted run's.
    pub fn resume(dir: &Path, step: u64) -> Result<Self> {
        let p = dir.join(METRICS_FILE);
        let mut frames = if p.exists() { read_frames(&p)? } else { Vec::new() };
        frames.retain(|f| f.step < step);
        write_frames(&p, &frames)?;

        let p = dir.join(MOVEMENT_FILE);
        let mut movement = if p.exists() { read_movement(&p)? } else { Vec::new() };
        movement.retain(|h| h.window_start + MOVEMENT_WINDOW <= step);
        write_movement(&p, &movement)?;

        let p = dir.join(EXPECTANCY_FILE);
        let mut expectancy = if p.exists() { read_expectancy(&p)? } else { Vec::new() };
        expectancy.retain(|w| w.window_start + EXPECTANCY_WINDOW <= step);
        write_expectancy(&p, &expectancy)?;

        Self::append(dir)
    }

    fn append(dir: &Path) -> Result<Self> {
        let open = |name: &str| -> Result<(PathBuf, csv::Writer<File>)> {
            let path = dir.join(name);
            let file = OpenOptions::new()
                .append(true)
                .open(&path)
                .map_err(|e| Error::io(&path, e))?;
            Ok((path, writer(file, false)))
        };
        let (p0, frames) = open(METRICS_FILE)?;
        let (p1, movement) = open(MOVEMENT_FILE)?;
        let (p2, expectancy) = open(EXPECTANCY_FILE)?;
        Ok(Self {
            paths: [p0, p1, p2],
            frames,
            movement,
            expectancy,
        })
    }

    pub fn flush(&mut self) -> Result<()> {
        self.frames.flush().map_err(|e| Error::io(&self.paths[0], e))?;
        self.movement.flush().map_err(|e| Error::io(&self.paths[1], e))?;
        self.expectancy.flush().map_err(|e| Error::io(&self.paths[2], e))
    }
}

impl MetricsSink for CsvSink {
    fn frame(&mut self, frame: &MetricsFrame) -> Result<()> {
        self.frames.serialize(frame).map_err(csv_err(&self.paths[0]))
    }

    fn movement(&mut self, histogram: &MovementHistogram) -> Result<()> {
        self.movement
            .write_record(movement_row(histogram))
            .map_err(csv_err(&self.paths[1]))
    }

    fn expectancy(&mut self, window: &ExpectancyWindow) -> Result<()> {
        self.expectancy.serialize(window).map_err(csv_err(&self.paths[2]))
    }
}

impl Drop for CsvSink {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}
