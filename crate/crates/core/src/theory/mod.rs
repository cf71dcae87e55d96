//! Steady-state theory of the nonlinearly damped oscillator.
//!
//! The stationary energy density is
//!
//! ```text
//! P(E) = exp(-aE - bE²) / Z,   a = 1/(k_B T),   b = β/(k_B T),   β = η/(4m)
//! ```
//!
//! with η = |γ_nl|/γ_g the parametric gain. β = 0 is the Boltzmann–Gibbs
//! exponential. The effective temperature is `⟨E⟩/k_B`.

mod amplitude;
mod energy;
mod measured;

pub use amplitude::{amplitude_pdf, averaged_potential, potential_amplitude_pdf};
pub use energy::{
    balance_damping, effective_temperature, energy_pdf, low_pressure_gamma_eff, low_pressure_teff, EnergyDistModel,
};
pub use measured::{measured_energy_pdf, MeasuredEnergyDensity, DEFAULT_RADIAL_NODES};
