use std::fs::File;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use fusetrack::calib::GroundTruthSample;
use fusetrack::geo::{GeodeticCoord, LocalFrame};
use fusetrack::pipeline::Measurement;

use crate::error::{CliError, CliResult};
use crate::files::{write_ground_truth, write_measurements};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Radar,
    Rf,
    Gt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AltitudeReference {
    /// Altitudes are heights above the WGS-84 ellipsoid.
    Ellipsoid,
    /// Altitudes are relative to the origin's altitude.
    Origin,
}

#[derive(Debug, Args)]
pub struct AdaptArgs {
    /// Geodetic CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV in the ENU measurement or ground-truth schema.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, allow_hyphen_values = true)]
    pub origin_lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub origin_lon: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub origin_alt: f64,
    #[arg(long, value_enum, default_value_t = AltitudeReference::Ellipsoid)]
    pub altitude_reference: AltitudeReference,
    #[arg(long, default_value = "t")]
    pub time_col: String,
    #[arg(long, default_value = "lat")]
    pub lat_col: String,
    #[arg(long, default_value = "lon")]
    pub lon_col: String,
    /// Needed for radar and ground truth; ignored for RF.
    #[arg(long, default_value = "alt")]
    pub alt_col: String,
    /// Optional radar track id column.
    #[arg(long)]
    pub track_col: Option<String>,
    /// Subtracted from every timestamp, e.g. a shared epoch.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub time_origin: f64,
}

pub fn run(args: &AdaptArgs) -> CliResult<()> {
    let origin = GeodeticCoord::new(args.origin_lat, args.origin_lon, args.origin_alt)?;
    let frame = LocalFrame::new(origin)?;
    let path = &args.input;
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let column = |name: &str| {
        header
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::Input(format!("{}: no column named `{name}`", path.display())))
    };
    let needs_alt = args.kind != Kind::Rf;
    let t_i = column(&args.time_col)?;
    let lat_i = column(&args.lat_col)?;
    let lon_i = column(&args.lon_col)?;
    let alt_i = if needs_alt {
        Some(column(&args.alt_col)?)
    } else {
        None
    };
    let track_i = args.track_col.as_deref().map(column).transpose()?;

    let mut ms = Vec::new();
    let mut gt = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let err = |msg: String| CliError::Input(format!("{}: line {line}: {msg}", path.display()));
        let num = |i: usize| -> CliResult<f64> {
            let s = record.get(i).unwrap_or("").trim();
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("`{s}` in column {} is not a number", &header[i])))
        };
        let t = num(t_i)? - args.time_origin;
        let alt = match (alt_i, args.altitude_reference) {
            (Some(i), AltitudeReference::Ellipsoid) => num(i)?,
            (Some(i), AltitudeReference::Origin) => num(i)? + args.origin_alt,
            (None, _) => args.origin_alt,
        };
        let p =
            GeodeticCoord::new(num(lat_i)?, num(lon_i)?, alt).map_err(|e| err(e.to_string()))?;
        let enu = frame.to_enu(&p).map_err(|e| err(e.to_string()))?;
        match args.kind {
            Kind::Gt => gt.push(GroundTruthSample::new(t, enu)),
            Kind::Rf => ms.push(Measurement::rf(t, enu.east_m, enu.north_m)),
            Kind::Radar => {
                let id = match track_i {
                    Some(i) => {
                        let s = record.get(i).unwrap_or("").trim();
                        Some(s.parse::<u32>().map_err(|_| {
                            err(format!("track id `{s}` is not a non-negative integer"))
                        })?)
                    }
                    None => None,
                };
                ms.push(Measurement::radar(t, enu.to_vector(), id));
            }
        }
    }
    match args.kind {
        Kind::Gt => write_ground_truth(&args.out, &gt),
        _ => write_measurements(&args.out, &ms),
    }
}
