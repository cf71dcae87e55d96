//! Physical inputs and the constants derived from them.
//!
//! The free functions mirror the individual steps of the derivation so they
//! can be checked in isolation; [`SystemParams::derive`] chains them into a
//! [`DerivedDynamics`].

use core::f64::consts::PI;

use num_complex::Complex64;

use crate::constants::{C, HBAR, K_B};
use crate::error::{Error, Result};

mod derived;

pub use derived::DerivedDynamics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleParams {
    pub mass: f64,
    pub radius: f64,
    pub permittivity: f64,
}

impl ParticleParams {
    pub fn new(mass: f64, radius: f64, permittivity: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter { name: "mass", reason: "must be positive" });
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidParameter { name: "radius", reason: "must be positive" });
        }
        if !(permittivity >= 1.0 && permittivity.is_finite()) {
            return Err(Error::InvalidParameter { name: "permittivity", reason: "must be >= 1" });
        }
        Ok(Self { mass, radius, permittivity })
    }

    pub fn volume(&self) -> f64 {
        4.0 / 3.0 * PI * self.radius * self.radius * self.radius
    }

    pub fn density(&self) -> f64 {
        self.mass / self.volume()
    }

    /// Clausius–Mossotti factor `(ε-1)/(ε+2)`.
    pub fn polarizability_factor(&self) -> f64 {
        (self.permittivity - 1.0) / (self.permittivity + 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    pub length: f64,
    pub wavelength: f64,
    /// Total field half linewidth κ, rad/s.
    pub kappa: f64,
    pub kappa_in: f64,
    pub kappa_loss: f64,
    pub waist: f64,
}

impl CavityParams {
    /// `kappa_loss` is derived as `kappa - kappa_in`.
    pub fn new(length: f64, wavelength: f64, kappa: f64, kappa_in: f64, waist: f64) -> Result<Self> {
        for (name, v) in [("length", length), ("wavelength", wavelength), ("kappa", kappa), ("waist", waist)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        if !(kappa_in >= 0.0 && kappa_in <= kappa) {
            return Err(Error::InvalidParameter { name: "kappa_in", reason: "must lie in [0, kappa]" });
        }
        Ok(Self {
            length,
            wavelength,
            kappa,
            kappa_in,
            kappa_loss: kappa - kappa_in,
            waist,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn laser_angular_frequency(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }

    /// Free spectral range in Hz.
    pub fn free_spectral_range(&self) -> f64 {
        C / (2.0 * self.length)
    }

    pub fn mode_volume(&self) -> f64 {
        PI * self.waist * self.waist * self.length / 4.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamRole {
    Probe,
    Trap,
}

/// Which resonance a configured detuning is measured from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DetuningReference {
    /// Includes the particle-induced shift at the trapping site.
    #[default]
    Hot,
    EmptyCavity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    pub role: BeamRole,
    /// Input power, W.
    pub input_power: f64,
    /// Detuning, rad/s, measured from `reference`.
    pub detuning: f64,
    pub reference: DetuningReference,
    /// Standing-wave phase at the trapping site, rad.
    pub phase: f64,
}

impl BeamParams {
    /// Trapping beam; the particle sits on one of its antinodes (phase 0).
    pub fn trap(input_power: f64, detuning: f64, reference: DetuningReference) -> Result<Self> {
        Self::checked(BeamRole::Trap, input_power, detuning, reference, 0.0)
    }

    /// Probe beam one FSR away; its phase at the trapping site follows from
    /// the site offset `site_offset` from the cavity center.
    pub fn probe(
        input_power: f64,
        detuning: f64,
        reference: DetuningReference,
        site_offset: f64,
        cavity: &CavityParams,
    ) -> Result<Self> {
        Self::checked(BeamRole::Probe, input_power, detuning, reference, probe_phase(site_offset, cavity.length))
    }

    fn checked(role: BeamRole, input_power: f64, detuning: f64, reference: DetuningReference, phase: f64) -> Result<Self> {
        if !(input_power >= 0.0 && input_power.is_finite()) {
            return Err(Error::InvalidParameter { name: "input_power", reason: "must be >= 0" });
        }
        if !detuning.is_finite() {
            return Err(Error::InvalidParameter { name: "detuning", reason: "must be finite" });
        }
        Ok(Self { role, input_power, detuning, reference, phase })
    }

    /// Drive amplitude α_in with α_in² in photons/s.
    pub fn drive_amplitude(&self, cavity: &CavityParams) -> f64 {
        libm::sqrt(self.input_power / (HBAR * cavity.laser_angular_frequency()))
    }

    /// Particle-induced resonance shift seen by this beam at the trapping site.
    pub fn particle_shift(&self, u0: f64) -> f64 {
        let c = libm::cos(self.phase);
        u0 * c * c
    }

    pub fn hot_detuning(&self, u0: f64) -> f64 {
        match self.reference {
            DetuningReference::Hot => self.detuning,
            DetuningReference::EmptyCavity => self.detuning + self.particle_shift(u0),
        }
    }

    pub fn empty_cavity_detuning(&self, u0: f64) -> f64 {
        match self.reference {
            DetuningReference::Hot => self.detuning - self.particle_shift(u0),
            DetuningReference::EmptyCavity => self.detuning,
        }
    }
}

/// Probe standing-wave phase for a trapping site `site_offset` from the
/// cavity center.
pub fn probe_phase(site_offset: f64, cavity_length: f64) -> f64 {
    PI / 2.0 + PI * site_offset / cavity_length
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    /// Pa.
    pub pressure: f64,
    pub bath_temperature: f64,
    pub molecule_mass: f64,
    /// Overrides the free-molecular drag model when set, 1/s.
    pub explicit_damping: Option<f64>,
}

impl GasParams {
    pub fn new(pressure: f64, bath_temperature: f64, molecule_mass: f64, explicit_damping: Option<f64>) -> Result<Self> {
        if !(pressure >= 0.0 && pressure.is_finite()) {
            return Err(Error::InvalidParameter { name: "pressure", reason: "must be >= 0" });
        }
        if !(bath_temperature > 0.0 && bath_temperature.is_finite()) {
            return Err(Error::InvalidParameter { name: "bath_temperature", reason: "must be positive" });
        }
        if !(molecule_mass > 0.0) {
            return Err(Error::InvalidParameter { name: "molecule_mass", reason: "must be positive" });
        }
        if let Some(g) = explicit_damping {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(Error::InvalidParameter { name: "explicit_damping", reason: "must be >= 0" });
            }
        }
        Ok(Self { pressure, bath_temperature, molecule_mass, explicit_damping })
    }
}

/// Complete configuration of the particle-in-cavity system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub particle: ParticleParams,
    pub cavity: CavityParams,
    pub trap: BeamParams,
    pub probe: BeamParams,
    pub gas: GasParams,
    /// Additional harmonic stiffness along the cavity axis (Paul trap), rad/s.
    pub secular_frequency: f64,
}

impl SystemParams {
    /// 185 nm silica sphere in a 14.58 mm, 1064 nm cavity (κ/2π = 143 kHz),
    /// 830 μW trap beam 100 kHz red of the hot resonance, 2.9 μW probe on
    /// the hot resonance, trapping site a quarter cavity length off center,
    /// N₂ at 295 K and 8.6 Pa.
    pub fn reference_setup() -> Self {
        let two_pi = 2.0 * PI;
        let particle = ParticleParams::new(4.88e-17, 185e-9, crate::constants::SILICA_PERMITTIVITY).expect("valid");
        let cavity = CavityParams::new(14.58e-3, 1064e-9, two_pi * 143e3, two_pi * 69e3, 62e-6).expect("valid");
        let trap = BeamParams::trap(830e-6, -two_pi * 100e3, DetuningReference::Hot).expect("valid");
        let probe = BeamParams::probe(2.9e-6, 0.0, DetuningReference::Hot, cavity.length / 4.0, &cavity).expect("valid");
        let gas = GasParams::new(8.6, 295.0, crate::constants::N2_MASS, None).expect("valid");
        Self { particle, cavity, trap, probe, gas, secular_frequency: 0.0 }
    }

    pub fn derive(&self) -> Result<DerivedDynamics> {
        DerivedDynamics::from_params(self)
    }

    pub fn with_pressure(&self, pressure: f64) -> Self {
        let mut p = *self;
        p.gas.pressure = pressure;
        p
    }

    pub fn with_trap_power(&self, power: f64) -> Self {
        let mut p = *self;
        p.trap.input_power = power;
        p
    }
}

/// Maximum dispersive shift `U₀ = (3/2)(V/V_m)((ε-1)/(ε+2))ω_l`, rad/s.
pub fn max_frequency_shift(particle: &ParticleParams, cavity: &CavityParams) -> f64 {
    1.5 * particle.volume() / cavity.mode_volume() * particle.polarizability_factor() * cavity.laser_angular_frequency()
}

/// Linear and quadratic couplings `(k U₀ sin 2φ, k² U₀ cos 2φ)`.
pub fn coupling_constants(u0: f64, wavenumber: f64, phase: f64) -> (f64, f64) {
    (
        wavenumber * u0 * libm::sin(2.0 * phase),
        wavenumber * wavenumber * u0 * libm::cos(2.0 * phase),
    )
}

/// Steady intracavity amplitude at the trapping site and the normalized hot
/// detuning δ = Δ_hot/κ.
pub fn steady_state_field(beam: &BeamParams, cavity: &CavityParams, u0: f64) -> (Complex64, f64) {
    let hot = beam.hot_detuning(u0);
    let drive = libm::sqrt(2.0 * cavity.kappa_in) * beam.drive_amplitude(cavity);
    let alpha = Complex64::new(drive, 0.0) / Complex64::new(cavity.kappa, -hot);
    (alpha, hot / cavity.kappa)
}

/// Duffing and Van der Pol coefficients from adiabatic elimination of the
/// trapping field. Independent of input power.
pub fn nonlinear_coefficients(g2: f64, kappa: f64, delta: f64) -> (f64, f64) {
    let d = 1.0 + delta * delta;
    let eps_d = 2.0 * g2 / kappa * delta / d;
    let gamma_nl = 8.0 * g2 / (kappa * kappa) * delta / (d * d);
    (eps_d, gamma_nl)
}

/// Optical trap frequency `sqrt(2ħG₂|α_s|²/m)`.
pub fn trap_frequency(g2: f64, alpha_s: Complex64, mass: f64) -> Result<f64> {
    if !(g2 > 0.0) {
        return Err(Error::Untrapped { g2 });
    }
    Ok(libm::sqrt(2.0 * HBAR * g2 * alpha_s.norm_sqr() / mass))
}

/// Diffuse-reflection free-molecular momentum-transfer factor.
pub const EPSTEIN_FACTOR: f64 = 8.0 / 3.0 * (1.0 + PI / 8.0);

/// Gas damping rate γ_g, 1/s (free-molecular drag, linear in pressure).
pub fn gas_damping(gas: &GasParams, particle: &ParticleParams) -> f64 {
    if let Some(g) = gas.explicit_damping {
        return g;
    }
    EPSTEIN_FACTOR * gas.pressure / (particle.density() * particle.radius)
        * libm::sqrt(2.0 * gas.molecule_mass / (PI * K_B * gas.bath_temperature))
}

/// Two-sided thermal force spectral density `S_th = 2 k_B T m γ_g`, N²·s.
pub fn thermal_force_psd(gamma_g: f64, mass: f64, bath_temperature: f64) -> f64 {
    2.0 * K_B * bath_temperature * mass * gamma_g
}
