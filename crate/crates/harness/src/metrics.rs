//! Anonymity metrics and small statistics helpers.

use crate::HarnessError;

/// Confidence improvement over the statistical prior. Negative when the
/// attacker does worse than guessing.
pub fn kappa(confidence: f64, prior: f64) -> Result<f64, HarnessError> {
    if !(0.0..1.0).contains(&prior) {
        return Err(HarnessError::InvalidArgument(format!("prior must lie in [0, 1), got {prior}")));
    }
    if !(0.0..=1.0).contains(&confidence) {
        return Err(HarnessError::InvalidArgument(format!(
            "confidence must lie in [0, 1], got {confidence}"
        )));
    }
    Ok((confidence - prior) / (1.0 - prior))
}

/// Cells learned relative to cells known beforehand.
pub fn alpha(learned: u64, prior_cells: u64) -> f64 {
    learned as f64 / (prior_cells as f64 + 1.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance, computed on values shifted by the first one so that
/// identical inputs give exactly zero.
pub fn variance(xs: &[f64]) -> f64 {
    let Some(&first) = xs.first() else { return 0.0 };
    let shifted: Vec<f64> = xs.iter().map(|x| x - first).collect();
    let m = mean(&shifted);
    shifted.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Welch z statistic for `mean(a) - mean(b)`.
pub fn welch_z(a: &[f64], b: &[f64]) -> f64 {
    let se = (sample_sd(a).powi(2) / a.len() as f64 + sample_sd(b).powi(2) / b.len() as f64).sqrt();
    if se == 0.0 {
        return if mean(a) == mean(b) { 0.0 } else { f64::INFINITY * (mean(a) - mean(b)).signum() };
    }
    (mean(a) - mean(b)) / se
}
