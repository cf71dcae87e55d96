//! Observables from trajectories: spectra, amplitude envelopes, energy
//! statistics and the temperature/damping estimators built on them.

mod demod;
mod energy;
mod fit;
mod peak;
mod pipeline;
mod r2;
mod spectrum;

pub use demod::{bandwidth_warning, demod_bandwidth, demodulate, noise_bandwidth, noise_energy, BandwidthWarning, Demodulated};
pub use energy::{decimate, decorrelate, decorrelation_stride, effective_damping, energy_series};
pub use fit::{fit_energy_distribution, ks_exponential, log_histogram, EnergyDistribution, EnergyFit, FitOptions, LogHistogram, NoiseModel};
pub use peak::{fit_oscillator_peak, teff_from_psd_area, PeakFit, PsdTemperature, AREA_BAND_HALF_WIDTHS};
pub use pipeline::{analyze_amplitude, analyze_displacement, NoiseHandling, PipelineOptions, PipelineReport};
pub use r2::{r2_psd_decay, DecayFit};
pub use spectrum::{welch_psd, Spectrum, Window};
