//! Energy density of a phase-uniform oscillator amplitude plus circular
//! Gaussian detection noise.
//!
//! With `E = |A_m + A_n|²`, the conditional density for a fixed motional
//! energy `E_m` is the noncentral (Rician) form
//!
//! ```text
//! p(E | E_m) = (1/E_n) exp(-(E + E_m)/E_n) I₀(2√(E E_m)/E_n)
//! ```
//!
//! which is the angular part of the 2D convolution done analytically. The
//! remaining radial integral over `u = √E_m` is evaluated with Simpson's
//! rule on the window where both factors are non-negligible.

use alloc::vec::Vec;

use super::EnergyDistModel;
use crate::error::{Error, Result};
use crate::numeric::special::bessel_i0e;

/// Default number of radial nodes; doubled once for the resolution check.
pub const DEFAULT_RADIAL_NODES: usize = 160;
const KERNEL_HALF_WIDTH: f64 = 9.0;

#[derive(Debug, Clone, Copy)]
pub struct MeasuredEnergyDensity {
    pub model: EnergyDistModel,
    pub noise_mean_energy: f64,
    nodes: usize,
    u_end: f64,
    ln_norm: f64,
}

impl MeasuredEnergyDensity {
    pub fn new(model: EnergyDistModel, noise_mean_energy: f64, nodes: usize) -> Result<Self> {
        if !(noise_mean_energy >= 0.0 && noise_mean_energy.is_finite()) {
            return Err(Error::InvalidParameter { name: "noise_mean_energy", reason: "must be >= 0" });
        }
        let nodes = (nodes.max(8) / 2) * 2 + 1;
        Ok(Self {
            model,
            noise_mean_energy,
            nodes,
            u_end: libm::sqrt(model.support_end(45.0)),
            ln_norm: libm::log(model.normalization()),
        })
    }

    pub fn density(&self, e: f64) -> f64 {
        if e < 0.0 {
            return 0.0;
        }
        let en = self.noise_mean_energy;
        if en == 0.0 {
            return self.model.pdf(e);
        }
        let (a, b) = (self.model.linear_coefficient(), self.model.quadratic_coefficient());
        let root_e = libm::sqrt(e);
        let width = KERNEL_HALF_WIDTH * libm::sqrt(0.5 * en);
        let lo = (root_e - width).max(0.0);
        let hi = (root_e + width).min(self.u_end);
        if lo >= hi {
            return 0.0;
        }
        let n = self.nodes;
        let h = (hi - lo) / (n - 1) as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let u = lo + h * i as f64;
            let em = u * u;
            let d = root_e - u;
            let ln_motion = -em * (a + b * em) - self.ln_norm;
            let kernel = libm::exp(ln_motion - d * d / en) * bessel_i0e(2.0 * root_e * u / en);
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * kernel * 2.0 * u;
        }
        acc * h / 3.0 / en
    }

    /// Mean of the measured energy, `⟨E_m⟩ + E_n`.
    pub fn mean_energy(&self) -> f64 {
        self.model.mean_energy() + self.noise_mean_energy
    }
}

/// Measured-energy density on `grid`, refusing a radial resolution whose
/// doubling changes any non-negligible value by more than 0.5%.
pub fn measured_energy_pdf(model: &EnergyDistModel, noise_mean_energy: f64, grid: &[f64]) -> Result<Vec<f64>> {
    measured_pdf_checked(model, noise_mean_energy, grid, DEFAULT_RADIAL_NODES)
}

fn measured_pdf_checked(model: &EnergyDistModel, noise_mean_energy: f64, grid: &[f64], nodes: usize) -> Result<Vec<f64>> {
    if grid.iter().any(|&e| e < 0.0) {
        return Err(Error::Domain("energy grid must be non-negative"));
    }
    let coarse = MeasuredEnergyDensity::new(*model, noise_mean_energy, nodes)?;
    let values: Vec<f64> = grid.iter().map(|&e| coarse.density(e)).collect();
    if noise_mean_energy == 0.0 {
        return Ok(values);
    }
    let fine = MeasuredEnergyDensity::new(*model, noise_mean_energy, 2 * nodes)?;
    let peak = values.iter().cloned().fold(0.0, f64::max);
    let mut change: f64 = 0.0;
    for (&e, &v) in grid.iter().zip(&values) {
        if v > 1e-6 * peak {
            let w = fine.density(e);
            change = change.max(((v - w) / w).abs());
        }
    }
    if change > 5e-3 {
        return Err(Error::GridTooCoarse { change });
    }
    Ok(values)
}
