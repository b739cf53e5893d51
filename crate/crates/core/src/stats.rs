//! Chi-squared quantiles and small descriptive-statistics helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::{Error, Result};

/// Inverse chi-squared CDF: the value below which a chi-squared variable
/// with `dof` degrees of freedom falls with probability `probability`.
pub fn chi2_quantile(dof: f64, probability: f64) -> Result<f64> {
    if !(probability > 0.0 && probability < 1.0) {
        return Err(Error::Config(format!(
            "probability {probability} must lie in (0, 1)"
        )));
    }
    if !(dof > 0.0 && dof.is_finite()) {
        return Err(Error::Config(format!(
            "degrees of freedom {dof} must be positive"
        )));
    }
    let dist = ChiSquared::new(dof).map_err(|e| Error::Config(e.to_string()))?;
    Ok(dist.inverse_cdf(probability))
}

/// Two-sided `confidence` interval for the average of `samples` independent
/// chi-squared(`dof`) draws.
pub fn chi2_mean_interval(dof: f64, samples: usize, confidence: f64) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InputDomain("need at least one sample".into()));
    }
    let tail = (1.0 - confidence) / 2.0;
    let total = dof * samples as f64;
    let n = samples as f64;
    Ok((
        chi2_quantile(total, tail)? / n,
        chi2_quantile(total, 1.0 - tail)? / n,
    ))
}

/// Mean and sample standard deviation (1/(N-1); zero for a single value).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

pub(crate) fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
