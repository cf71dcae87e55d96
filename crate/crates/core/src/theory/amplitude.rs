//! Amplitude-domain form of the stationary state.

use alloc::vec::Vec;

use super::EnergyDistModel;
use crate::sim::OscillatorModel;

/// Potential `𝒱(R)` of the averaged amplitude equation, whose negative
/// gradient is the deterministic drift of `R`.
pub fn averaged_potential(osc: &OscillatorModel, r: f64) -> f64 {
    let w2 = osc.omega_m * osc.omega_m;
    osc.gamma_g / 4.0 * r * r - w2 * osc.gamma_nl / 32.0 * r * r * r * r - osc.amplitude_diffusion() * libm::log(r)
}

/// Amplitude density obtained from the energy density through
/// `E = ½ m Ω_m² R²`.
pub fn amplitude_pdf(model: &EnergyDistModel, mass: f64, omega_m: f64, r: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    let k = mass * omega_m * omega_m;
    model.pdf(0.5 * k * r * r) * k * r
}

/// `exp(-𝒱(R)/D)` on `grid`, normalized with the trapezoid rule on the same
/// grid. `D` is the amplitude diffusion constant.
pub fn potential_amplitude_pdf(osc: &OscillatorModel, grid: &[f64]) -> Vec<f64> {
    let d = osc.amplitude_diffusion();
    // shift by the potential minimum on the grid to keep exp() in range
    let v: Vec<f64> = grid.iter().map(|&r| if r > 0.0 { averaged_potential(osc, r) / d } else { f64::INFINITY }).collect();
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = v.iter().map(|x| libm::exp(vmin - x)).collect();
    let norm: f64 = grid.windows(2).zip(raw.windows(2)).map(|(g, p)| 0.5 * (g[1] - g[0]) * (p[0] + p[1])).sum();
    raw.into_iter().map(|p| p / norm).collect()
}
