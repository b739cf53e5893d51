//! Scoring against ground truth: error statistics, temporal coverage,
//! empirical CDFs and NEES consistency.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::calib::{truth_at, validate_ground_truth, GroundTruthSample};
use crate::model::Modality;
use crate::pipeline::{EntryKind, FusedTrack, Measurement, TrackEntry};
use crate::stats::{chi2_quantile, mean_std};
use crate::{Error, Result};

pub const DEFAULT_COVERAGE_BIN_S: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum ScoringMode {
    /// 3D errors, except for estimates that only carry a horizontal position.
    #[default]
    #[serde(rename = "full3d")]
    Full3D,
    /// Horizontal errors for everything.
    #[serde(rename = "horizontal2d")]
    Horizontal2D,
}

/// A position to score: a fused-track entry or a raw measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredEstimate {
    pub timestamp: f64,
    pub position: Vector3<f64>,
    /// Only east/north are meaningful.
    pub horizontal_only: bool,
    pub kind: Option<EntryKind>,
}

impl From<&TrackEntry> for ScoredEstimate {
    fn from(e: &TrackEntry) -> Self {
        Self {
            timestamp: e.timestamp,
            position: e.state.position(),
            horizontal_only: false,
            kind: Some(e.kind),
        }
    }
}

impl From<&Measurement> for ScoredEstimate {
    fn from(m: &Measurement) -> Self {
        let h = m.horizontal();
        Self {
            timestamp: m.timestamp,
            position: m.position3().unwrap_or(Vector3::new(h.x, h.y, 0.0)),
            horizontal_only: m.modality == Modality::Rf,
            kind: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub count: usize,
    pub min_m: f64,
    pub max_m: f64,
    pub mean_m: f64,
    pub std_m: f64,
}

impl ErrorStats {
    pub fn from_errors(errors: &[f64]) -> Option<Self> {
        let (mean_m, std_m) = mean_std(errors)?;
        let min_m = errors.iter().copied().fold(f64::INFINITY, f64::min);
        let max_m = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self {
            count: errors.len(),
            min_m,
            max_m,
            mean_m,
            std_m,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub count: usize,
    pub min_m: f64,
    pub max_m: f64,
    pub mean_m: f64,
    pub std_m: f64,
    pub coverage_pct: f64,
    pub updated: Option<ErrorStats>,
    pub coasted: Option<ErrorStats>,
    /// Estimates outside the ground-truth span, not scored.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredError {
    pub timestamp: f64,
    pub error_m: f64,
    pub kind: Option<EntryKind>,
}

/// Per-estimate Euclidean error against interpolated truth. Estimates outside
/// the truth span are skipped; the second value counts them.
pub fn position_errors(
    est: &[ScoredEstimate],
    gt: &[GroundTruthSample],
    mode: ScoringMode,
) -> Result<(Vec<ScoredError>, usize)> {
    validate_ground_truth(gt)?;
    let mut out = Vec::with_capacity(est.len());
    let mut excluded = 0;
    for e in est {
        let truth = match truth_at(gt, e.timestamp) {
            Ok(t) => t,
            Err(Error::OutOfSpan { .. }) => {
                excluded += 1;
                continue;
            }
            Err(err) => return Err(err),
        };
        let d = e.position - truth;
        let error_m = if e.horizontal_only || mode == ScoringMode::Horizontal2D {
            d.xy().norm()
        } else {
            d.norm()
        };
        out.push(ScoredError {
            timestamp: e.timestamp,
            error_m,
            kind: e.kind,
        });
    }
    Ok((out, excluded))
}

/// Error statistics (sample std, 1/(N-1)) and temporal coverage over the
/// ground-truth span.
pub fn error_stats(
    est: &[ScoredEstimate],
    gt: &[GroundTruthSample],
    mode: ScoringMode,
    bin_s: f64,
) -> Result<ErrorReport> {
    let (scored, excluded) = position_errors(est, gt, mode)?;
    let all: Vec<f64> = scored.iter().map(|s| s.error_m).collect();
    let overall = ErrorStats::from_errors(&all).ok_or_else(|| {
        Error::InsufficientData("no estimates overlap the ground-truth span".into())
    })?;
    let of_kind = |k: EntryKind| {
        let v: Vec<f64> = scored
            .iter()
            .filter(|s| s.kind == Some(k))
            .map(|s| s.error_m)
            .collect();
        ErrorStats::from_errors(&v)
    };
    let span = (gt[0].timestamp, gt[gt.len() - 1].timestamp);
    let ts: Vec<f64> = scored.iter().map(|s| s.timestamp).collect();
    Ok(ErrorReport {
        count: overall.count,
        min_m: overall.min_m,
        max_m: overall.max_m,
        mean_m: overall.mean_m,
        std_m: overall.std_m,
        coverage_pct: coverage(&ts, span, bin_s)?,
        updated: of_kind(EntryKind::Updated),
        coasted: of_kind(EntryKind::Coasted),
        excluded,
    })
}

/// Percentage of `bin_s`-wide bins over `span` holding at least one
/// timestamp. Timestamps outside the span are ignored; the end point belongs
/// to the last bin.
pub fn coverage(timestamps: &[f64], span: (f64, f64), bin_s: f64) -> Result<f64> {
    let (t0, t1) = span;
    if !(t1 > t0) {
        return Err(Error::InputDomain(format!(
            "coverage span [{t0}, {t1}] is empty"
        )));
    }
    if !(bin_s > 0.0) {
        return Err(Error::InputDomain(format!(
            "coverage bin width must be positive, got {bin_s}"
        )));
    }
    let bins = ((t1 - t0) / bin_s).ceil().max(1.0) as usize;
    let mut hit = vec![false; bins];
    for &t in timestamps {
        if t < t0 || t > t1 {
            continue;
        }
        let i = (((t - t0) / bin_s).floor() as usize).min(bins - 1);
        hit[i] = true;
    }
    Ok(100.0 * hit.iter().filter(|&&h| h).count() as f64 / bins as f64)
}

/// Step CDF: sorted values paired with `k / N`.
pub fn empirical_cdf(errors: &[f64]) -> Result<Vec<(f64, f64)>> {
    if errors.is_empty() {
        return Err(Error::InsufficientData(
            "empirical CDF needs at least one value".into(),
        ));
    }
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(k, e)| (e, (k + 1) as f64 / n))
        .collect())
}

/// Smallest value whose cumulative fraction reaches `p`.
pub fn cdf_quantile(cdf: &[(f64, f64)], p: f64) -> Option<f64> {
    let n = cdf.len();
    if n == 0 || !(0.0..=1.0).contains(&p) {
        return None;
    }
    // fractions are exactly (k+1)/n; index by rank to avoid rounding issues
    let rank = ((p * n as f64) - 1e-9).ceil().max(1.0) as usize;
    cdf.get(rank.min(n) - 1).map(|&(v, _)| v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeesStep {
    pub timestamp: f64,
    /// `None` when the position covariance is singular.
    pub nees: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub steps: Vec<NeesStep>,
    pub mean_nees: f64,
    /// Two-sided 95% chi-squared interval for a single 3-dof NEES value.
    pub band: (f64, f64),
    pub fraction_in_band: f64,
    pub flagged: usize,
}

/// `e^T P^-1 e` for a position error; `None` if `P` is not positive definite.
pub fn position_nees(error: &Vector3<f64>, cov: &Matrix3<f64>) -> Option<f64> {
    let chol = cov.cholesky()?;
    let w = chol.l().solve_lower_triangular(error)?;
    Some(w.norm_squared())
}

/// Position NEES of every track entry inside the truth span.
pub fn consistency_report(
    track: &FusedTrack,
    gt: &[GroundTruthSample],
) -> Result<ConsistencyReport> {
    validate_ground_truth(gt)?;
    let mut steps = Vec::with_capacity(track.len());
    for e in &track.entries {
        let truth = match truth_at(gt, e.timestamp) {
            Ok(t) => t,
            Err(Error::OutOfSpan { .. }) => continue,
            Err(err) => return Err(err),
        };
        let cov: Matrix3<f64> = e.covariance.fixed_view::<3, 3>(0, 0).into_owned();
        steps.push(NeesStep {
            timestamp: e.timestamp,
            nees: position_nees(&(e.state.position() - truth), &cov),
        });
    }
    summarize_nees(steps)
}

pub fn summarize_nees(steps: Vec<NeesStep>) -> Result<ConsistencyReport> {
    let valid: Vec<f64> = steps.iter().filter_map(|s| s.nees).collect();
    if valid.is_empty() {
        return Err(Error::InsufficientData(
            "no track entries with a usable covariance inside the truth span".into(),
        ));
    }
    let band = (chi2_quantile(3.0, 0.025)?, chi2_quantile(3.0, 0.975)?);
    let inside = valid
        .iter()
        .filter(|&&v| v >= band.0 && v <= band.1)
        .count();
    Ok(ConsistencyReport {
        mean_nees: valid.iter().sum::<f64>() / valid.len() as f64,
        band,
        fraction_in_band: inside as f64 / valid.len() as f64,
        flagged: steps.len() - valid.len(),
        steps,
    })
}
