//! Timestamp-ordered fusion of radar and RF streams.
//!
//! Each measurement passes, in order: largest-track selection (radar), the
//! radar range gate, and the NIS gate. Accepted measurements update the
//! filter; NIS rejections emit the predicted state as a coasted entry.
//! Measurements dropped by the range gate or track selection leave no entry.

use std::collections::BTreeMap;

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::filter::{self, FilterState, InitConfig, NisGate, OutcomeKind};
use crate::geo::EnuPosition;
use crate::model::{Covariance6, CvState, Modality, NoiseConfig};
use crate::{Error, Result};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// One timestamped position fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub timestamp: f64,
    pub modality: Modality,
    values: [f64; 3],
    /// Radar track identifier, when the sensor reports one.
    pub track_id: Option<u32>,
}

impl Measurement {
    pub fn radar(timestamp: f64, position: Vector3<f64>, track_id: Option<u32>) -> Self {
        Self {
            timestamp,
            modality: Modality::Radar,
            values: [position.x, position.y, position.z],
            track_id,
        }
    }

    pub fn rf(timestamp: f64, east: f64, north: f64) -> Self {
        Self {
            timestamp,
            modality: Modality::Rf,
            values: [east, north, 0.0],
            track_id: None,
        }
    }

    /// Measured components: 3 for radar, 2 for RF.
    pub fn observation(&self) -> &[f64] {
        &self.values[..self.modality.dim()]
    }

    pub fn horizontal(&self) -> Vector2<f64> {
        Vector2::new(self.values[0], self.values[1])
    }

    /// Full 3D position, radar only.
    pub fn position3(&self) -> Option<Vector3<f64>> {
        match self.modality {
            Modality::Radar => Some(Vector3::from(self.values)),
            Modality::Rf => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.timestamp.is_finite() && self.observation().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RangeGatePlacement {
    /// Radar fixes are range-checked as they are consumed by the filter loop.
    #[default]
    InLoop,
    /// Radar fixes are range-checked before largest-track selection.
    Preprocess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    RadarFirst,
    RfFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    #[default]
    Fused,
    RadarOnly,
    RfOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionConfig {
    pub schema_version: u32,
    pub noise: NoiseConfig,
    pub init: InitConfig,
    pub nis_gating: bool,
    pub gate_confidence: f64,
    pub range_gating: bool,
    pub radar_max_range_m: f64,
    pub radar_origin: EnuPosition,
    pub range_gate: RangeGatePlacement,
    pub select_largest_track: bool,
    pub tie_break: TieBreak,
    /// Emit predicted (coasted) entries at this interval while no
    /// measurement arrives. `None` emits entries only at measurement times;
    /// config files spell it `0`.
    #[serde(with = "zero_is_none")]
    pub coast_interval_s: Option<f64>,
    /// Restart the filter from the measurement that would be the N-th NIS
    /// rejection in a row. `None` (spelled `0`) never restarts.
    #[serde(with = "zero_is_none")]
    pub reinit_after_rejections: Option<u32>,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            noise: NoiseConfig::default(),
            init: InitConfig::default(),
            nis_gating: true,
            gate_confidence: 0.95,
            range_gating: true,
            radar_max_range_m: 800.0,
            radar_origin: EnuPosition::ORIGIN,
            range_gate: RangeGatePlacement::InLoop,
            select_largest_track: true,
            tie_break: TieBreak::RadarFirst,
            coast_interval_s: Some(1.0),
            reinit_after_rejections: None,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.noise.validate()?;
        self.init.validate()?;
        if !(self.gate_confidence > 0.0 && self.gate_confidence < 1.0) {
            return Err(Error::Config(format!(
                "gate_confidence must lie in (0, 1), got {}",
                self.gate_confidence
            )));
        }
        if !(self.radar_max_range_m > 0.0) {
            return Err(Error::Config(format!(
                "radar_max_range_m must be positive, got {}",
                self.radar_max_range_m
            )));
        }
        if !self.radar_origin.to_vector().iter().all(|v| v.is_finite()) {
            return Err(Error::Config("radar_origin must be finite".into()));
        }
        if self.reinit_after_rejections == Some(0) {
            return Err(Error::Config(
                "reinit_after_rejections must be at least 1".into(),
            ));
        }
        if let Some(step) = self.coast_interval_s {
            if !(step > 0.0 && step.is_finite()) {
                return Err(Error::Config(format!(
                    "coast_interval_s must be positive, got {step}"
                )));
            }
        }
        Ok(())
    }
}

/// Keeps only the measurements of the track id with the most measurements.
/// Ties go to the longest time span, then the lowest id.
pub fn select_largest_track(ms: &[Measurement]) -> Vec<Measurement> {
    let Some(best) = largest_track_id(ms) else {
        return Vec::new();
    };
    ms.iter().filter(|m| m.track_id == best).copied().collect()
}

fn largest_track_id(ms: &[Measurement]) -> Option<Option<u32>> {
    // id -> (count, first, last)
    let mut tracks: BTreeMap<Option<u32>, (usize, f64, f64)> = BTreeMap::new();
    for m in ms {
        let e = tracks
            .entry(m.track_id)
            .or_insert((0, m.timestamp, m.timestamp));
        e.0 += 1;
        e.1 = e.1.min(m.timestamp);
        e.2 = e.2.max(m.timestamp);
    }
    // BTreeMap iterates ids in ascending order; only strictly better replaces.
    let mut best: Option<(Option<u32>, usize, f64)> = None;
    for (id, (count, first, last)) in tracks {
        let span = last - first;
        let better = match best {
            None => true,
            Some((_, c, s)) => count > c || (count == c && span > s),
        };
        if better {
            best = Some((id, count, span));
        }
    }
    best.map(|(id, _, _)| id)
}

/// True when `m` passes the radar range gate. RF fixes always pass.
pub fn range_gate(m: &Measurement, radar_origin: &EnuPosition, max_range_m: f64) -> bool {
    match m.position3() {
        Some(p) => (p - radar_origin.to_vector()).norm() <= max_range_m,
        None => true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Updated,
    Coasted,
}

impl EntryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EntryKind::Updated => "updated",
            EntryKind::Coasted => "coasted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackEntry {
    pub timestamp: f64,
    pub state: CvState,
    pub covariance: Covariance6,
    pub kind: EntryKind,
    /// Modality of the measurement that produced the entry; `None` for
    /// coasts emitted between measurements.
    pub source: Option<Modality>,
    pub nis: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FusedTrack {
    pub entries: Vec<TrackEntry>,
}

impl FusedTrack {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, kind: EntryKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Accepted,
    TrackRejected,
    RangeRejected,
    NisRejected,
    /// Excluded by the fusion mode.
    Ignored,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub measurement: Measurement,
    pub verdict: Verdict,
    pub nis: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModalityCounts {
    pub raw: usize,
    pub track_rejected: usize,
    pub range_rejected: usize,
    pub nis_rejected: usize,
    pub updated: usize,
    /// `updated / (updated + nis_rejected)`.
    pub acceptance_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub radar: ModalityCounts,
    pub rf: ModalityCounts,
    /// Measurements left after track selection and range gating.
    pub survivors: usize,
    pub updated: usize,
    /// Coasted entries emitted at NIS-rejected measurements.
    pub coasted_rejected: usize,
    /// Coasted entries emitted inside measurement gaps.
    pub coasted_gap: usize,
    pub initialized_from: Option<Modality>,
    /// Restarts triggered by `reinit_after_rejections`.
    pub reinitializations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub track: FusedTrack,
    pub report: RunReport,
    /// Per-measurement verdicts in processing order.
    pub decisions: Vec<Decision>,
}

impl FusionOutput {
    pub fn accepted(&self, modality: Modality) -> impl Iterator<Item = &Measurement> {
        self.decisions
            .iter()
            .filter(move |d| d.verdict == Verdict::Accepted && d.measurement.modality == modality)
            .map(|d| &d.measurement)
    }
}

pub fn run_fusion(
    radar: &[Measurement],
    rf: &[Measurement],
    cfg: &FusionConfig,
) -> Result<FusionOutput> {
    run_fusion_mode(radar, rf, cfg, FusionMode::Fused)
}

/// Fuse both streams. Inputs are regrouped by each measurement's own
/// modality, so which argument a measurement arrives in does not matter.
pub fn run_fusion_mode(
    radar: &[Measurement],
    rf: &[Measurement],
    cfg: &FusionConfig,
    mode: FusionMode,
) -> Result<FusionOutput> {
    cfg.validate()?;
    let mut radar_in = Vec::new();
    let mut rf_in = Vec::new();
    for m in radar.iter().chain(rf) {
        if !m.is_finite() {
            return Err(Error::InputDomain(format!(
                "non-finite measurement at t = {}",
                m.timestamp
            )));
        }
        match m.modality {
            Modality::Radar => radar_in.push(*m),
            Modality::Rf => rf_in.push(*m),
        }
    }
    check_sorted(&radar_in, Modality::Radar)?;
    check_sorted(&rf_in, Modality::Rf)?;

    let mut report = RunReport::default();
    report.radar.raw = radar_in.len();
    report.rf.raw = rf_in.len();
    let mut decisions = Vec::with_capacity(radar_in.len() + rf_in.len());

    let (use_radar, use_rf) = match mode {
        FusionMode::Fused => (true, true),
        FusionMode::RadarOnly => (true, false),
        FusionMode::RfOnly => (false, true),
    };
    if !use_radar {
        decisions.extend(radar_in.drain(..).map(|m| Decision {
            measurement: m,
            verdict: Verdict::Ignored,
            nis: None,
        }));
    }
    if !use_rf {
        decisions.extend(rf_in.drain(..).map(|m| Decision {
            measurement: m,
            verdict: Verdict::Ignored,
            nis: None,
        }));
    }

    let in_range = |m: &Measurement| {
        !cfg.range_gating || range_gate(m, &cfg.radar_origin, cfg.radar_max_range_m)
    };
    if cfg.range_gating && cfg.range_gate == RangeGatePlacement::Preprocess {
        radar_in.retain(|m| {
            let keep = in_range(m);
            if !keep {
                report.radar.range_rejected += 1;
                decisions.push(Decision {
                    measurement: *m,
                    verdict: Verdict::RangeRejected,
                    nis: None,
                });
            }
            keep
        });
    }
    if cfg.select_largest_track {
        if let Some(best) = largest_track_id(&radar_in) {
            radar_in.retain(|m| {
                let keep = m.track_id == best;
                if !keep {
                    report.radar.track_rejected += 1;
                    decisions.push(Decision {
                        measurement: *m,
                        verdict: Verdict::TrackRejected,
                        nis: None,
                    });
                }
                keep
            });
        }
    }

    let merged = merge(&radar_in, &rf_in, cfg.tie_break);
    let gate = if cfg.nis_gating {
        Some(NisGate::new(cfg.gate_confidence)?)
    } else {
        None
    };
    let noise = &cfg.noise;
    let mut track = FusedTrack::default();
    let mut state: Option<FilterState> = None;
    let mut rejected_in_a_row = 0u32;

    for m in merged {
        let counts = match m.modality {
            Modality::Radar => &mut report.radar,
            Modality::Rf => &mut report.rf,
        };
        if m.modality == Modality::Radar && !in_range(&m) {
            counts.range_rejected += 1;
            decisions.push(Decision {
                measurement: m,
                verdict: Verdict::RangeRejected,
                nis: None,
            });
            continue;
        }
        let Some(prev) = state.take() else {
            let fs =
                filter::initialize(m.observation(), m.modality, noise, m.timestamp, &cfg.init)?;
            counts.updated += 1;
            report.initialized_from = Some(m.modality);
            track
                .entries
                .push(entry(&fs, EntryKind::Updated, Some(m.modality), None));
            decisions.push(Decision {
                measurement: m,
                verdict: Verdict::Accepted,
                nis: None,
            });
            state = Some(fs);
            continue;
        };

        let dt = m.timestamp - prev.timestamp;
        if let Some(step) = cfg.coast_interval_s {
            emit_gap_coasts(&prev, m.timestamp, step, noise, &mut track)?;
        }
        let predicted = if dt > 0.0 {
            filter::predict(&prev, dt, noise)?
        } else {
            prev
        };
        let (next, outcome) = filter::gated_update(
            &predicted,
            m.observation(),
            m.modality,
            noise,
            gate.as_ref(),
        )?;
        if outcome.kind != OutcomeKind::Updated
            && cfg
                .reinit_after_rejections
                .is_some_and(|n| rejected_in_a_row + 1 >= n)
        {
            let fs =
                filter::initialize(m.observation(), m.modality, noise, m.timestamp, &cfg.init)?;
            counts.updated += 1;
            report.reinitializations += 1;
            rejected_in_a_row = 0;
            track.entries.push(entry(
                &fs,
                EntryKind::Updated,
                Some(m.modality),
                outcome.nis,
            ));
            decisions.push(Decision {
                measurement: m,
                verdict: Verdict::Accepted,
                nis: outcome.nis,
            });
            state = Some(fs);
            continue;
        }
        match outcome.kind {
            OutcomeKind::Updated => {
                rejected_in_a_row = 0;
                counts.updated += 1;
                track.entries.push(entry(
                    &next,
                    EntryKind::Updated,
                    Some(m.modality),
                    outcome.nis,
                ));
                decisions.push(Decision {
                    measurement: m,
                    verdict: Verdict::Accepted,
                    nis: outcome.nis,
                });
            }
            _ => {
                rejected_in_a_row += 1;
                counts.nis_rejected += 1;
                track.entries.push(entry(
                    &next,
                    EntryKind::Coasted,
                    Some(m.modality),
                    outcome.nis,
                ));
                decisions.push(Decision {
                    measurement: m,
                    verdict: Verdict::NisRejected,
                    nis: outcome.nis,
                });
            }
        }
        state = Some(next);
    }

    if track.is_empty() {
        return Err(Error::InsufficientData(
            "no measurements survived gating; fused track is empty".into(),
        ));
    }

    for c in [&mut report.radar, &mut report.rf] {
        let tested = c.updated + c.nis_rejected;
        c.acceptance_rate = (tested > 0).then(|| c.updated as f64 / tested as f64);
    }
    report.updated = report.radar.updated + report.rf.updated;
    report.coasted_rejected = report.radar.nis_rejected + report.rf.nis_rejected;
    report.coasted_gap = track.entries.iter().filter(|e| e.source.is_none()).count();
    report.survivors = report.radar.raw + report.rf.raw
        - report.radar.track_rejected
        - report.radar.range_rejected
        - if use_radar { 0 } else { report.radar.raw }
        - if use_rf { 0 } else { report.rf.raw };

    Ok(FusionOutput {
        track,
        report,
        decisions,
    })
}

fn emit_gap_coasts(
    prev: &FilterState,
    until: f64,
    step: f64,
    noise: &NoiseConfig,
    track: &mut FusedTrack,
) -> Result<()> {
    // Side predictions from `prev`; the filter itself is not advanced.
    let mut k = 1u64;
    loop {
        let dt = step * k as f64;
        if prev.timestamp + dt >= until - 1e-9 {
            return Ok(());
        }
        let fs = filter::predict(prev, dt, noise)?;
        track
            .entries
            .push(entry(&fs, EntryKind::Coasted, None, None));
        k += 1;
    }
}

fn entry(
    fs: &FilterState,
    kind: EntryKind,
    source: Option<Modality>,
    nis: Option<f64>,
) -> TrackEntry {
    TrackEntry {
        timestamp: fs.timestamp,
        state: fs.estimate,
        covariance: fs.covariance,
        kind,
        source,
        nis,
    }
}

fn check_sorted(ms: &[Measurement], modality: Modality) -> Result<()> {
    for (i, w) in ms.windows(2).enumerate() {
        if w[1].timestamp < w[0].timestamp {
            return Err(Error::Ordering(format!(
                "{modality} measurements not sorted by time: row {} at {} s follows {} s",
                i + 1,
                w[1].timestamp,
                w[0].timestamp
            )));
        }
    }
    Ok(())
}

/// Stable merge of two time-sorted streams.
fn merge(radar: &[Measurement], rf: &[Measurement], tie: TieBreak) -> Vec<Measurement> {
    let mut out = Vec::with_capacity(radar.len() + rf.len());
    let (mut i, mut j) = (0, 0);
    while i < radar.len() && j < rf.len() {
        let (a, b) = (&radar[i], &rf[j]);
        let take_radar = match tie {
            TieBreak::RadarFirst => a.timestamp <= b.timestamp,
            TieBreak::RfFirst => a.timestamp < b.timestamp,
        };
        if take_radar {
            out.push(*a);
            i += 1;
        } else {
            out.push(*b);
            j += 1;
        }
    }
    out.extend_from_slice(&radar[i..]);
    out.extend_from_slice(&rf[j..]);
    out
}

mod zero_is_none {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer, T: Serialize + Default + Copy>(
        v: &Option<T>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        v.unwrap_or_default().serialize(s)
    }

    pub fn deserialize<'de, D, T>(d: D) -> Result<Option<T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de> + Default + PartialEq,
    {
        let v = T::deserialize(d)?;
        Ok((v != T::default()).then_some(v))
    }
}
