//! The full chain from a displacement record to temperature, gain and
//! damping estimates. Each stage reports its own outcome so one failing
//! estimator does not hide the others.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{
    bandwidth_warning, decimate, decorrelate, decorrelation_stride, demod_bandwidth, demodulate, effective_damping,
    energy_series, fit_energy_distribution, noise_energy, r2_psd_decay, teff_from_psd_area, welch_psd,
    BandwidthWarning, DecayFit, EnergyDistribution, FitOptions, NoiseModel, PsdTemperature, Spectrum, Window,
};
use crate::error::{Error, Result};
use crate::numeric::stats::{mean, variance};

/// How detection noise enters the distribution fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseHandling {
    /// Fit the motional density as if the record were noise free.
    Ignore,
    /// Fix the noise energy from the configured floor and bandwidth.
    Calibrated,
    /// Fit the noise energy as a free parameter.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// One-sided displacement noise density, m²/Hz.
    pub noise_floor: f64,
    pub noise_handling: NoiseHandling,
    /// Demodulation bandwidth, Hz; `None` uses [`demod_bandwidth`].
    pub bandwidth: Option<f64>,
    /// Welch segment length for the displacement spectrum.
    pub segment_length: Option<usize>,
    /// Spacing of histogrammed samples in energy-series samples; `None`
    /// uses three `1/γ_R`.
    pub decorrelation_stride: Option<usize>,
    pub histogram_bins: usize,
    /// Bath temperature, K, when known; the distribution fit then varies
    /// only η (and the noise energy).
    pub bath_temperature: Option<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            noise_floor: 0.0,
            noise_handling: NoiseHandling::Calibrated,
            bandwidth: None,
            segment_length: None,
            decorrelation_stride: None,
            histogram_bins: 40,
            bath_temperature: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub spectrum: Result<Spectrum>,
    pub psd_temperature: Result<PsdTemperature>,
    pub bandwidth: f64,
    pub bandwidth_warning: Option<BandwidthWarning>,
    /// Demodulated energy series after filter settling, J.
    pub energy: Vec<f64>,
    pub energy_sample_rate: f64,
    pub energy_mean: f64,
    /// From the fitted energy correlation time; NaN when the fit failed.
    pub energy_mean_stderr: f64,
    pub energy_variance: f64,
    pub decay: Result<DecayFit>,
    /// `γ_R σ_E²/⟨E⟩²`.
    pub gamma_eff: Result<f64>,
    pub stride: usize,
    /// Decorrelated energy samples, J.
    pub samples: Vec<f64>,
    /// Options the distribution was fitted with, for pooling records.
    pub fit_options: FitOptions,
    pub distribution: Result<EnergyDistribution>,
}

/// Runs spectrum, demodulation, R² decay, moment and distribution stages.
///
/// `gamma_eff_hint` is the expected energy relaxation rate; it sets the
/// default bandwidth and spectral resolution and, if the R² fit fails, the
/// decorrelation spacing.
pub fn analyze_displacement(
    x: &[f64],
    sample_rate: f64,
    mass: f64,
    omega_m: f64,
    gamma_eff_hint: f64,
    options: &PipelineOptions,
) -> Result<PipelineReport> {
    let f0 = omega_m / (2.0 * PI);
    let bandwidth = options.bandwidth.unwrap_or_else(|| demod_bandwidth(f0, sample_rate, gamma_eff_hint));
    let warning = bandwidth_warning(bandwidth, gamma_eff_hint);
    let demod = demodulate(x, sample_rate, f0, bandwidth)?;

    let seg = options.segment_length.unwrap_or_else(|| {
        let wanted = (libm::ceil(16.0 * PI * sample_rate / gamma_eff_hint) as usize).next_power_of_two();
        let cap = prev_power_of_two(x.len() / 8);
        wanted.min(cap).max(256)
    });
    let spectrum = welch_psd(x, sample_rate, seg, 0.5, Window::Hann);
    let psd_temperature = match &spectrum {
        Ok(s) => teff_from_psd_area(s, mass, omega_m, options.noise_floor),
        Err(e) => Err(e.clone()),
    };
    let noise_energy = match options.noise_floor {
        f if f > 0.0 => Some(noise_energy(f, mass, omega_m, bandwidth)),
        _ => None,
    };
    // the envelope is band-limited, so keep about ten samples per bandwidth
    let factor = ((sample_rate / (10.0 * bandwidth)) as usize).max(1);
    let energy = decimate(&energy_series(&demod.amplitude, mass, omega_m), factor);
    Ok(energy_stages(energy, sample_rate / factor as f64, mass, gamma_eff_hint, noise_energy, options, spectrum, psd_temperature, bandwidth, warning))
}

/// Energy stages only, for records that already hold the slow amplitude
/// (the averaged tier). The spectral stages report a missing `x` column.
pub fn analyze_amplitude(
    r: &[f64],
    sample_rate: f64,
    mass: f64,
    omega_m: f64,
    gamma_eff_hint: f64,
    options: &PipelineOptions,
) -> Result<PipelineReport> {
    let energy = energy_series(r, mass, omega_m);
    Ok(energy_stages(
        energy,
        sample_rate,
        mass,
        gamma_eff_hint,
        None,
        options,
        Err(Error::MissingColumn("x")),
        Err(Error::MissingColumn("x")),
        f64::INFINITY,
        None,
    ))
}

#[allow(clippy::too_many_arguments)]
fn energy_stages(
    energy: Vec<f64>,
    sample_rate: f64,
    mass: f64,
    gamma_eff_hint: f64,
    noise_energy: Option<f64>,
    options: &PipelineOptions,
    spectrum: Result<Spectrum>,
    psd_temperature: Result<PsdTemperature>,
    bandwidth: f64,
    warning: Option<BandwidthWarning>,
) -> PipelineReport {
    let energy_mean = mean(&energy);
    let energy_variance = variance(&energy);
    let decay = r2_psd_decay(&energy, sample_rate);
    let gamma_eff = match &decay {
        Ok(d) => effective_damping(d.gamma_r, energy_mean, energy_variance),
        Err(e) => Err(e.clone()),
    };
    // exponentially correlated series: var(mean) = 2σ²/(γ_R T)
    let duration = energy.len() as f64 / sample_rate;
    let energy_mean_stderr = match &decay {
        Ok(d) => libm::sqrt(2.0 * energy_variance / (d.gamma_r * duration)),
        Err(_) => f64::NAN,
    };
    let stride = options.decorrelation_stride.unwrap_or_else(|| {
        let rate = decay.as_ref().map(|d| d.gamma_r).unwrap_or(gamma_eff_hint);
        decorrelation_stride(sample_rate, rate)
    });
    let samples = decorrelate(&energy, stride);
    let noise = match (options.noise_handling, noise_energy) {
        (_, None) | (NoiseHandling::Ignore, _) => NoiseModel::Absent,
        (NoiseHandling::Calibrated, Some(e)) => NoiseModel::Fixed(e),
        (NoiseHandling::Free, Some(_)) => NoiseModel::Free { guess: 0.2 },
    };
    let fit_options = FitOptions {
        noise,
        temperature: options.bath_temperature,
        histogram_bins: options.histogram_bins,
        ..FitOptions::default()
    };
    let distribution = fit_energy_distribution(&samples, mass, &fit_options);
    PipelineReport {
        spectrum,
        psd_temperature,
        bandwidth,
        bandwidth_warning: warning,
        energy,
        energy_sample_rate: sample_rate,
        energy_mean,
        energy_mean_stderr,
        energy_variance,
        decay,
        gamma_eff,
        stride,
        samples,
        fit_options,
        distribution,
    }
}

fn prev_power_of_two(n: usize) -> usize {
    if n == 0 {
        1
    } else {
        1 << (usize::BITS - 1 - n.leading_zeros())
    }
}
