use num_complex::Complex64;

use super::{
    coupling_constants, gas_damping, max_frequency_shift, nonlinear_coefficients, steady_state_field,
    thermal_force_psd, trap_frequency, SystemParams,
};
use crate::constants::K_B;
use crate::error::Result;

/// Validity threshold for `G₂⟨x²⟩/κ` of the adiabatic elimination.
pub const ADIABATIC_VALIDITY_RATIO: f64 = 0.01;

/// Dynamical coefficients of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedDynamics {
    pub u0: f64,
    pub g1_probe: f64,
    pub g2_probe: f64,
    pub g2_trap: f64,
    pub alpha_s_trap: Complex64,
    pub alpha_s_probe: Complex64,
    /// Normalized hot detuning of the trapping beam.
    pub delta: f64,
    pub omega_m: f64,
    pub eps_d: f64,
    /// Signed Van der Pol coefficient (negative on the red side).
    pub gamma_nl: f64,
    pub gamma_g: f64,
    pub s_th: f64,
    /// Parametric gain `|γ_nl|/γ_g`, s²/m².
    pub eta: f64,
    /// `G₂⟨x²⟩_thermal/κ`.
    pub validity_ratio: f64,
}

impl DerivedDynamics {
    pub fn from_params(p: &SystemParams) -> Result<Self> {
        let u0 = max_frequency_shift(&p.particle, &p.cavity);
        let k = p.cavity.wavenumber();
        let (_, g2_trap) = coupling_constants(u0, k, p.trap.phase);
        let (g1_probe, g2_probe) = coupling_constants(u0, k, p.probe.phase);
        let (alpha_s_trap, delta) = steady_state_field(&p.trap, &p.cavity, u0);
        let (alpha_s_probe, _) = steady_state_field(&p.probe, &p.cavity, u0);
        let omega_m = trap_frequency(g2_trap, alpha_s_trap, p.particle.mass)?;
        let (eps_d, gamma_nl) = nonlinear_coefficients(g2_trap, p.cavity.kappa, delta);
        let gamma_g = gas_damping(&p.gas, &p.particle);
        let s_th = thermal_force_psd(gamma_g, p.particle.mass, p.gas.bath_temperature);
        let eta = if gamma_g > 0.0 { gamma_nl.abs() / gamma_g } else { f64::INFINITY };
        let thermal_variance = K_B * p.gas.bath_temperature / (p.particle.mass * omega_m * omega_m);
        Ok(Self {
            u0,
            g1_probe,
            g2_probe,
            g2_trap,
            alpha_s_trap,
            alpha_s_probe,
            delta,
            omega_m,
            eps_d,
            gamma_nl,
            gamma_g,
            s_th,
            eta,
            validity_ratio: g2_trap * thermal_variance / p.cavity.kappa,
        })
    }

    /// Whether `G₂⟨x²⟩ ≪ κ` holds (ratio below 1%).
    pub fn adiabatic_valid(&self) -> bool {
        self.validity_ratio < ADIABATIC_VALIDITY_RATIO
    }

    pub fn is_cooling(&self) -> bool {
        self.delta < 0.0
    }

    pub fn photon_number(&self) -> f64 {
        self.alpha_s_trap.norm_sqr()
    }
}
