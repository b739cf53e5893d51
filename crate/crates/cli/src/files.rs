//! CSV readers and writers for the measurement, ground-truth and track files.

use std::fs::{self, File};
use std::path::Path;

use fusetrack::calib::{validate_ground_truth, GroundTruthSample};
use fusetrack::geo::EnuPosition;
use fusetrack::metrics::ScoredEstimate;
use fusetrack::model::Modality;
use fusetrack::pipeline::{EntryKind, FusedTrack, Measurement};
use nalgebra::Vector3;

use crate::error::{CliError, CliResult};

pub const MEASUREMENT_HEADER: [&str; 6] = ["t_s", "modality", "x_m", "y_m", "z_m", "track_id"];
pub const TRUTH_HEADER: [&str; 4] = ["t_s", "x_m", "y_m", "z_m"];
pub const TRACK_HEADER: [&str; 10] = [
    "t", "x", "y", "z", "vx", "vy", "vz", "kind", "source", "nis",
];

fn open(path: &Path) -> CliResult<(csv::Reader<File>, Vec<String>)> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_owned)
        .collect();
    Ok((rdr, header))
}

fn expect_header(path: &Path, got: &[String], want: &[&str]) -> CliResult<()> {
    if got != want {
        return Err(CliError::Input(format!(
            "{}: line 1: header must be `{}`, found `{}`",
            path.display(),
            want.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

struct Row<'a> {
    path: &'a Path,
    line: u64,
    record: csv::StringRecord,
}

impl Row<'_> {
    fn err(&self, msg: impl std::fmt::Display) -> CliError {
        CliError::Input(format!(
            "{}: line {}: {msg}",
            self.path.display(),
            self.line
        ))
    }

    fn text(&self, i: usize) -> &str {
        self.record.get(i).unwrap_or("").trim()
    }

    fn number(&self, i: usize, name: &str) -> CliResult<f64> {
        let v: f64 = self
            .text(i)
            .parse()
            .map_err(|_| self.err(format!("{name} `{}` is not a number", self.text(i))))?;
        if !v.is_finite() {
            return Err(self.err(format!("{name} must be finite")));
        }
        Ok(v)
    }

    fn optional_number(&self, i: usize, name: &str) -> CliResult<Option<f64>> {
        if self.text(i).is_empty() {
            Ok(None)
        } else {
            self.number(i, name).map(Some)
        }
    }
}

fn rows<'a>(path: &'a Path, rdr: csv::Reader<File>) -> impl Iterator<Item = CliResult<Row<'a>>> {
    rdr.into_records().map(move |r| {
        let record = r.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        Ok(Row { path, line, record })
    })
}

/// Reads a measurement CSV. Rows must be in time order within each modality.
pub fn read_measurements(path: &Path) -> CliResult<Vec<Measurement>> {
    let (rdr, header) = open(path)?;
    expect_header(path, &header, &MEASUREMENT_HEADER)?;
    rows(path, rdr)
        .map(|row| parse_measurement(&row?))
        .collect()
}

fn parse_measurement(row: &Row) -> CliResult<Measurement> {
    let t = row.number(0, "t_s")?;
    let modality: Modality = row
        .text(1)
        .parse()
        .map_err(|_| row.err(format!("unknown modality `{}`", row.text(1))))?;
    let (x, y) = (row.number(2, "x_m")?, row.number(3, "y_m")?);
    let z = row.optional_number(4, "z_m")?;
    let track_id = match row.text(5) {
        "" => None,
        s => Some(
            s.parse::<u32>()
                .map_err(|_| row.err(format!("track_id `{s}` is not a non-negative integer")))?,
        ),
    };
    match (modality, z) {
        (Modality::Radar, Some(z)) => Ok(Measurement::radar(t, Vector3::new(x, y, z), track_id)),
        (Modality::Radar, None) => Err(row.err("radar rows need z_m")),
        (Modality::Rf, None) => Ok(Measurement::rf(t, x, y)),
        (Modality::Rf, Some(_)) => Err(row.err("rf rows must leave z_m empty")),
    }
}

pub fn read_ground_truth(path: &Path) -> CliResult<Vec<GroundTruthSample>> {
    let (rdr, header) = open(path)?;
    expect_header(path, &header, &TRUTH_HEADER)?;
    let gt = rows(path, rdr)
        .map(|row| {
            let row = row?;
            Ok(GroundTruthSample::new(
                row.number(0, "t_s")?,
                EnuPosition::new(
                    row.number(1, "x_m")?,
                    row.number(2, "y_m")?,
                    row.number(3, "z_m")?,
                ),
            ))
        })
        .collect::<CliResult<Vec<_>>>()?;
    validate_ground_truth(&gt).map_err(|e| match CliError::from(e) {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })?;
    Ok(gt)
}

/// Reads anything that can be scored: a track file, a measurement file or a
/// ground-truth file, told apart by the header.
pub fn read_estimates(path: &Path) -> CliResult<Vec<ScoredEstimate>> {
    let (rdr, header) = open(path)?;
    if header == MEASUREMENT_HEADER {
        return Ok(read_measurements(path)?
            .iter()
            .map(ScoredEstimate::from)
            .collect());
    }
    if header == TRUTH_HEADER {
        return Ok(read_ground_truth(path)?
            .iter()
            .map(|g| ScoredEstimate {
                timestamp: g.timestamp,
                position: g.position.to_vector(),
                horizontal_only: false,
                kind: None,
            })
            .collect());
    }
    expect_header(path, &header, &TRACK_HEADER)?;
    rows(path, rdr)
        .map(|row| {
            let row = row?;
            let kind = match row.text(7) {
                "updated" => EntryKind::Updated,
                "coasted" => EntryKind::Coasted,
                other => return Err(row.err(format!("unknown kind `{other}`"))),
            };
            Ok(ScoredEstimate {
                timestamp: row.number(0, "t")?,
                position: Vector3::new(
                    row.number(1, "x")?,
                    row.number(2, "y")?,
                    row.number(3, "z")?,
                ),
                horizontal_only: false,
                kind: Some(kind),
            })
        })
        .collect()
}

fn create(path: &Path) -> CliResult<csv::Writer<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(path: &Path, mut w: csv::Writer<File>) -> CliResult<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Internal(format!("writing {}: {e}", path.display()))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_measurements(path: &Path, ms: &[Measurement]) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_record(MEASUREMENT_HEADER)
        .map_err(write_err(path))?;
    for m in ms {
        let h = m.horizontal();
        let z = m.position3().map(|p| p.z);
        let record = [
            m.timestamp.to_string(),
            m.modality.to_string(),
            h.x.to_string(),
            h.y.to_string(),
            opt(z),
            opt(m.track_id),
        ];
        w.write_record(&record).map_err(write_err(path))?;
    }
    finish(path, w)
}

pub fn write_ground_truth(path: &Path, gt: &[GroundTruthSample]) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_record(TRUTH_HEADER).map_err(write_err(path))?;
    for g in gt {
        let p = g.position;
        w.write_record([g.timestamp, p.east_m, p.north_m, p.up_m].map(|v| v.to_string()))
            .map_err(write_err(path))?;
    }
    finish(path, w)
}

pub fn write_track(path: &Path, track: &FusedTrack) -> CliResult<()> {
    let mut w = create(path)?;
    w.write_record(TRACK_HEADER).map_err(write_err(path))?;
    for e in &track.entries {
        let s = &e.state.0;
        let mut record: Vec<String> = std::iter::once(e.timestamp)
            .chain(s.iter().copied())
            .map(|v| v.to_string())
            .collect();
        record.push(e.kind.as_str().to_owned());
        record.push(opt(e.source));
        record.push(opt(e.nis));
        w.write_record(&record).map_err(write_err(path))?;
    }
    finish(path, w)
}
