use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub config: String,
    pub value: f64,
}

/// One thresholded quantity; an audit passes when all of its checks do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value ≤ threshold` (NaN fails).
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Check {
        Check { name: name.to_string(), value, threshold, pass: value <= threshold }
    }

    /// Passes when the value equals `threshold` bit for bit.
    pub fn identical(name: &str, value: f64, reference: f64) -> Check {
        Check { name: name.to_string(), value, threshold: reference, pass: value.to_bits() == reference.to_bits() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    pub measured: Vec<Measurement>,
    /// Threshold of the headline check.
    pub threshold: f64,
    pub checks: Vec<Check>,
    pub pass: bool,
    /// `max/min` of the measured values, for sweep audits.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spread: Option<f64>,
    pub details: Vec<String>,
}

impl AuditReport {
    pub fn new(name: &str, measured: Vec<Measurement>, checks: Vec<Check>, details: Vec<String>) -> AuditReport {
        let threshold = checks.first().map_or(f64::NAN, |c| c.threshold);
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        AuditReport { name: name.to_string(), measured, threshold, checks, pass, spread: None, details }
    }
}

/// `max/min`; 1 when everything is zero, ∞ when only the minimum is.
pub fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if values.is_empty() || max == 0.0 {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Least-squares slope of `log y` against `log x` over positive pairs.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
