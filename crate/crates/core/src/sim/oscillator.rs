use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::theory::{balance_damping, EnergyDistModel};

/// Coefficients of the reduced (Duffing/Van der Pol) oscillator, shared by
/// the reduced and averaged tiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorModel {
    pub mass: f64,
    pub omega_m: f64,
    pub eps_d: f64,
    /// Signed; negative values add dissipation at large amplitude.
    pub gamma_nl: f64,
    pub gamma_g: f64,
    pub bath_temperature: f64,
    /// Amplitude past which the particle is considered lost (λ/4 from the
    /// antinode when built from a system); infinite disables the check.
    pub escape_amplitude: f64,
}

impl OscillatorModel {
    /// Linear thermal oscillator.
    pub fn linear(mass: f64, omega_m: f64, gamma_g: f64, bath_temperature: f64) -> Self {
        Self {
            mass,
            omega_m,
            eps_d: 0.0,
            gamma_nl: 0.0,
            gamma_g,
            bath_temperature,
            escape_amplitude: f64::INFINITY,
        }
    }

    pub fn from_system(params: &SystemParams) -> Result<Self> {
        let d = params.derive()?;
        let model = Self {
            mass: params.particle.mass,
            omega_m: d.omega_m,
            eps_d: d.eps_d,
            gamma_nl: d.gamma_nl,
            gamma_g: d.gamma_g,
            bath_temperature: params.gas.bath_temperature,
            escape_amplitude: params.cavity.wavelength / 4.0,
        };
        model.validate()?;
        Ok(model)
    }

    /// Sets γ_nl from a target parametric gain, keeping its sign convention
    /// (cooling).
    pub fn with_gain(mut self, eta: f64) -> Self {
        self.gamma_nl = -eta * self.gamma_g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::InvalidParameter { name: "mass", reason: "must be positive" });
        }
        if !(self.omega_m > 0.0 && self.omega_m.is_finite()) {
            return Err(Error::InvalidParameter { name: "omega_m", reason: "must be positive" });
        }
        if !(self.gamma_g >= 0.0 && self.bath_temperature > 0.0) {
            return Err(Error::InvalidParameter { name: "gamma_g", reason: "needs gamma_g >= 0 and T > 0" });
        }
        if !(self.eps_d.is_finite() && self.gamma_nl.is_finite()) {
            return Err(Error::InvalidParameter { name: "gamma_nl", reason: "must be finite" });
        }
        Ok(())
    }

    /// Two-sided thermal force density `2 k_B T m γ_g`.
    pub fn s_th(&self) -> f64 {
        2.0 * K_B * self.bath_temperature * self.mass * self.gamma_g
    }

    /// `η = |γ_nl|/γ_g`.
    pub fn gain(&self) -> f64 {
        if self.gamma_g > 0.0 {
            self.gamma_nl.abs() / self.gamma_g
        } else {
            f64::INFINITY
        }
    }

    /// `⟨x²⟩ = k_B T/(m Ω_m²)`.
    pub fn thermal_variance(&self) -> f64 {
        K_B * self.bath_temperature / (self.mass * self.omega_m * self.omega_m)
    }

    /// Amplitude diffusion constant `D = S_th/(4 m² Ω_m²)`; the amplitude
    /// noise has intensity 2D.
    pub fn amplitude_diffusion(&self) -> f64 {
        self.s_th() / (4.0 * self.mass * self.mass * self.omega_m * self.omega_m)
    }

    pub fn energy_model(&self) -> Result<EnergyDistModel> {
        if self.gamma_nl > 0.0 {
            return Err(Error::NotCooling { gamma_nl: self.gamma_nl });
        }
        if self.gamma_g == 0.0 {
            return Err(Error::Domain("the steady state needs gamma_g > 0"));
        }
        EnergyDistModel::from_gain(self.bath_temperature, self.gain(), self.mass)
    }

    /// Steady-state γ_eff from the energy balance; γ_g when no cooling
    /// steady state exists.
    pub fn predicted_gamma_eff(&self) -> f64 {
        match self.energy_model() {
            Ok(m) => balance_damping(self.gamma_g, &m),
            Err(_) => self.gamma_g,
        }
    }

    pub(crate) fn auto_burn_in(&self) -> f64 {
        if self.gamma_g > 0.0 {
            (10.0 / self.predicted_gamma_eff()).max(10.0 / self.gamma_g)
        } else {
            0.0
        }
    }
}
