use alloc::vec::Vec;
use core::f64::consts::{E, PI};

use super::spectrum::{welch_psd, Window, WelchKernel};
use crate::error::{Error, Result};
use crate::numeric::fft::autocorrelation;
use crate::numeric::optimize::{jacobian, nelder_mead};

/// Lorentzian fit to the low-frequency R² spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Decay rate of the R² autocorrelation, 1/s.
    pub gamma_r: f64,
    /// Standard error of `gamma_r` from the fit residuals.
    pub stderr: f64,
    /// Variance of the R² series carried by the Lorentzian; the spectrum is
    /// `4 σ² γ_R/(ω² + γ_R²)`.
    pub variance: f64,
    /// Starting value from the autocorrelation 1/e crossing.
    pub gamma_initial: f64,
    pub segment_length: usize,
    pub bins: usize,
}

fn acf_crossing(series: &[f64], sample_rate: f64) -> Option<f64> {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let acf = autocorrelation(&centered, series.len() / 2);
    let target = acf[0] / E;
    let l = acf.iter().position(|&c| c < target)?;
    // linear interpolation between the bracketing lags
    let frac = (acf[l - 1] - target) / (acf[l - 1] - acf[l]);
    Some(sample_rate / ((l - 1) as f64 + frac))
}

/// Decay rate `γ_R` of an R² (or energy) series from a least-squares
/// Lorentzian fit to its Welch spectrum.
///
/// The starting value comes from the autocorrelation 1/e crossing; the fit
/// band runs from the first non-DC bin to `10·γ_R/2π` and is re-centered
/// once on the fitted rate. Fails with `RecordTooShort` when the record is
/// shorter than `20/γ_R`.
pub fn r2_psd_decay(series: &[f64], sample_rate: f64) -> Result<DecayFit> {
    let n = series.len();
    let duration = n as f64 / sample_rate;
    if n < 64 {
        return Err(Error::TooShort { needed: 64, got: n });
    }
    let gamma0 = acf_crossing(series, sample_rate).ok_or(Error::RecordTooShort { duration, required: f64::INFINITY })?;
    if duration < 20.0 / gamma0 {
        return Err(Error::RecordTooShort { duration, required: 20.0 / gamma0 });
    }
    let by_length = prev_power_of_two(n / 8).max(64);
    let by_rate = (libm::ceil(100.0 * sample_rate / gamma0) as usize).next_power_of_two();
    let seg = by_length.min(by_rate).max(64);
    let spectrum = welch_psd(series, sample_rate, seg, 0.5, Window::Hann)?;
    let kernel = WelchKernel::new(&spectrum, sample_rate);
    let df = spectrum.resolution();
    let log_psd: Vec<f64> = spectrum.psd.iter().map(|s| libm::log(s.max(f64::MIN_POSITIVE))).collect();
    let variance0 = spectrum.total_power();

    let fit_band = |gamma: f64| -> usize {
        let top = (10.0 * gamma / (2.0 * PI) / df) as usize;
        top.clamp(6, spectrum.psd.len() - 1)
    };
    let residuals = |p: &[f64], top: usize| -> Vec<f64> {
        let (gamma, var) = (libm::exp(p[0]), libm::exp(p[1]));
        let model = kernel.expected(|t| var * libm::exp(-gamma * t));
        (1..=top).map(|k| log_psd[k] - libm::log(model[k].max(f64::MIN_POSITIVE))).collect()
    };
    let mut x = alloc::vec![libm::log(gamma0), libm::log(variance0)];
    let mut top = fit_band(gamma0);
    for _ in 0..2 {
        let m = nelder_mead(
            |p| residuals(p, top).iter().map(|r| r * r).sum(),
            &x,
            &[0.2, 0.2],
            1e-12,
            1e-9,
            2000,
        );
        if !m.converged {
            return Err(Error::NonConverged(alloc::format!("R² spectrum fit after {} iterations", m.iterations)));
        }
        x = m.x;
        top = fit_band(libm::exp(x[0]));
    }
    let gamma_r = libm::exp(x[0]);
    if duration < 20.0 / gamma_r {
        return Err(Error::RecordTooShort { duration, required: 20.0 / gamma_r });
    }
    let r = residuals(&x, top);
    let dof = (r.len() as f64 - 2.0).max(1.0);
    let s2 = r.iter().map(|v| v * v).sum::<f64>() / dof;
    let j = jacobian(|p| residuals(p, top), &x, &[1e-5, 1e-5]);
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for row in &j {
        a += row[0] * row[0];
        b += row[0] * row[1];
        c += row[1] * row[1];
    }
    let det = a * c - b * b;
    let var_ln_gamma = if det > 0.0 { s2 * c / det } else { f64::INFINITY };
    Ok(DecayFit {
        gamma_r,
        stderr: gamma_r * libm::sqrt(var_ln_gamma),
        variance: libm::exp(x[1]),
        gamma_initial: gamma0,
        segment_length: seg,
        bins: top,
    })
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        1
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}
