use alloc::vec::Vec;
use core::f64::consts::PI;

use super::spectrum::{Spectrum, WelchKernel};
use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::numeric::optimize::nelder_mead;

/// Half-width of the peak integration band in units of the fitted HWHM.
pub const AREA_BAND_HALF_WIDTHS: f64 = 50.0;

/// Damped-oscillator fit to a displacement spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFit {
    /// Resonance, rad/s.
    pub omega: f64,
    /// Energy damping rate, rad/s (FWHM of the peak in angular frequency).
    pub gamma: f64,
    /// Variance carried by the peak, input units squared.
    pub variance: f64,
    /// White background density.
    pub floor: f64,
    /// Half width at half maximum, Hz.
    pub hwhm: f64,
}

/// Autocovariance of a thermally driven damped oscillator.
fn oscillator_acf(omega: f64, gamma: f64, variance: f64, t: f64) -> f64 {
    let w1_sq = omega * omega - gamma * gamma / 4.0;
    let decay = libm::exp(-gamma * t / 2.0);
    if w1_sq > 0.0 {
        let w1 = libm::sqrt(w1_sq);
        variance * decay * (libm::cos(w1 * t) + gamma / (2.0 * w1) * libm::sin(w1 * t))
    } else {
        variance * decay
    }
}

/// Fits a thermally driven damped oscillator plus an optional white floor
/// to the bins within `search` (Hz). A `fixed_floor` pins the background.
///
/// The forward model is the expected Welch estimate of the oscillator's
/// autocovariance, so widths comparable to the bin spacing are not biased.
/// Residuals are taken on log densities.
pub fn fit_oscillator_peak(spectrum: &Spectrum, search: (f64, f64), fixed_floor: Option<f64>) -> Result<PeakFit> {
    let df = spectrum.resolution();
    let fs = df * spectrum.segment_length as f64;
    let in_band: Vec<usize> = (1..spectrum.frequencies.len())
        .filter(|&k| spectrum.frequencies[k] >= search.0 && spectrum.frequencies[k] <= search.1)
        .collect();
    if in_band.len() < 5 {
        return Err(Error::TooShort { needed: 5, got: in_band.len() });
    }
    let peak = *in_band
        .iter()
        .max_by(|&&a, &&b| spectrum.psd[a].total_cmp(&spectrum.psd[b]))
        .expect("non-empty");
    let s_max = spectrum.psd[peak];
    let base = fixed_floor.unwrap_or_else(|| {
        let mut v: Vec<f64> = in_band.iter().map(|&k| spectrum.psd[k]).collect();
        v.sort_by(f64::total_cmp);
        v[v.len() / 10]
    });
    let half = base + 0.5 * (s_max - base);
    let mut lo = peak;
    while lo > 1 && spectrum.psd[lo] > half {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < spectrum.psd.len() && spectrum.psd[hi] > half {
        hi += 1;
    }
    let f0 = spectrum.frequencies[peak];
    let hwhm0 = (0.5 * (hi - lo) as f64 * df).max(0.5 * df);
    let omega0 = 2.0 * PI * f0;
    let gamma0 = 4.0 * PI * hwhm0;
    let var0 = (s_max - base).max(s_max * 1e-3) * PI * hwhm0;

    // fit band: the peak ±20 initial half-widths, at least ±8 bins
    let reach = (20.0 * hwhm0).max(8.0 * df);
    let bins: Vec<usize> = in_band
        .iter()
        .copied()
        .filter(|&k| (spectrum.frequencies[k] - f0).abs() <= reach)
        .collect();
    let kernel = WelchKernel::new(spectrum, fs);
    let floor_free = fixed_floor.is_none();
    let cost = |p: &[f64]| -> f64 {
        let (omega, gamma, var) = (libm::exp(p[0]), libm::exp(p[1]), libm::exp(p[2]));
        let floor = if floor_free { libm::exp(p[3]) } else { base };
        let model = kernel.expected(|t| oscillator_acf(omega, gamma, var, t));
        bins.iter()
            .map(|&k| {
                let m = model[k] + floor;
                if !(m > 0.0) {
                    return 1e3;
                }
                let r = libm::log(spectrum.psd[k].max(f64::MIN_POSITIVE)) - libm::log(m);
                r * r
            })
            .sum()
    };
    let mut x0 = alloc::vec![libm::log(omega0), libm::log(gamma0), libm::log(var0)];
    let mut step = alloc::vec![0.5 * gamma0 / omega0, 0.3, 0.3];
    if floor_free {
        x0.push(libm::log(base.max(s_max * 1e-8)));
        step.push(0.5);
    }
    let mut best = nelder_mead(cost, &x0, &step, 1e-10, 1e-8, 4000);
    // one restart from the optimum shakes out premature simplex collapse
    best = nelder_mead(cost, &best.x.clone(), &step, 1e-12, 1e-9, 4000);
    if !best.converged {
        return Err(Error::NonConverged(alloc::format!("peak fit after {} iterations", best.iterations)));
    }
    let omega = libm::exp(best.x[0]);
    let gamma = libm::exp(best.x[1]);
    Ok(PeakFit {
        omega,
        gamma,
        variance: libm::exp(best.x[2]),
        floor: if floor_free { libm::exp(best.x[3]) } else { base },
        hwhm: gamma / (4.0 * PI),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdTemperature {
    /// Kelvin.
    pub temperature: f64,
    /// Floor-subtracted peak area, m².
    pub variance: f64,
    pub hwhm: f64,
    pub band: (f64, f64),
}

/// Effective temperature from the area of the oscillator peak.
///
/// Integrates `S − noise_floor` over `f_m ± 50·HWHM` with the half-width
/// from [`fit_oscillator_peak`]; `T = m Ω_m² ⟨x²⟩ / k_B`.
pub fn teff_from_psd_area(spectrum: &Spectrum, mass: f64, omega_m: f64, noise_floor: f64) -> Result<PsdTemperature> {
    let f_m = omega_m / (2.0 * PI);
    let df = spectrum.resolution();
    let nyquist = *spectrum.frequencies.last().unwrap_or(&0.0);
    let search = ((f_m * 0.5).max(df), (f_m * 1.5).min(nyquist));
    let noise_band = |lo: f64, hi: f64| {
        noise_floor * spectrum.frequencies.iter().filter(|f| **f >= lo && **f <= hi).count() as f64 * df
    };
    let floor = (noise_floor > 0.0).then_some(noise_floor);
    let fit = match fit_oscillator_peak(spectrum, search, floor) {
        Ok(f) => f,
        Err(_) => {
            let noise = noise_band(search.0, search.1);
            let peak = spectrum.band_power(search.0, search.1) - noise;
            return Err(Error::PeakNotResolved { peak, noise });
        }
    };
    let half = AREA_BAND_HALF_WIDTHS * fit.hwhm.max(df);
    let band = ((f_m - half).max(df), (f_m + half).min(nyquist));
    let noise = noise_band(band.0, band.1);
    let peak = spectrum.band_power(band.0, band.1) - noise;
    if !(peak >= 3.0 * noise) || !(peak > 0.0) {
        return Err(Error::PeakNotResolved { peak, noise });
    }
    Ok(PsdTemperature {
        temperature: mass * omega_m * omega_m * peak / K_B,
        variance: peak,
        hwhm: fit.hwhm,
        band,
    })
}
