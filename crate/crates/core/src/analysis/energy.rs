use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `E = ½ m Ω_m² R²`.
pub fn energy_series(amplitude: &[f64], mass: f64, omega_m: f64) -> Vec<f64> {
    let k = 0.5 * mass * omega_m * omega_m;
    amplitude.iter().map(|r| k * r * r).collect()
}

/// Every `factor`-th sample; the input is assumed band-limited already.
pub fn decimate(series: &[f64], factor: usize) -> Vec<f64> {
    series.iter().step_by(factor.max(1)).copied().collect()
}

/// Sample spacing that places retained samples three correlation times
/// `1/γ` apart.
pub fn decorrelation_stride(sample_rate: f64, gamma: f64) -> usize {
    (libm::ceil(3.0 * sample_rate / gamma) as usize).max(1)
}

pub fn decorrelate(series: &[f64], stride: usize) -> Vec<f64> {
    decimate(series, stride)
}

/// `γ_eff = γ_R σ_E² / ⟨E⟩²`.
pub fn effective_damping(gamma_r: f64, mean: f64, variance: f64) -> Result<f64> {
    if !(mean > 0.0) {
        return Err(Error::Domain("mean energy must be positive"));
    }
    Ok(gamma_r * variance / (mean * mean))
}
