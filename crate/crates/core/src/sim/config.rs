use core::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelTier {
    Full,
    Reduced,
    Averaged,
}

impl ModelTier {
    pub fn name(&self) -> &'static str {
        match self {
            ModelTier::Full => "full",
            ModelTier::Reduced => "reduced",
            ModelTier::Averaged => "averaged",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "full" => Some(ModelTier::Full),
            "reduced" => Some(ModelTier::Reduced),
            "averaged" => Some(ModelTier::Averaged),
            _ => None,
        }
    }
}

impl fmt::Display for ModelTier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    /// Position and momentum drawn from the Boltzmann distribution at the
    /// bath temperature (Rayleigh amplitude, uniform phase for `averaged`).
    Thermal,
    Position { x: f64, p: f64 },
    Amplitude { r: f64, phase: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BurnIn {
    /// `max(10/γ_eff, 10/γ_g)` with the predicted steady-state γ_eff, or
    /// none when the system is undamped.
    Auto,
    Duration(f64),
}

/// Ornstein–Uhlenbeck modulation `Ω_m → Ω_m (1 + j(t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyJitter {
    pub relative_rms: f64,
    pub correlation_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub model: ModelTier,
    pub dt: f64,
    pub duration: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    pub record_stride: usize,
    pub initial_state: InitialState,
    pub burn_in: BurnIn,
    pub frequency_jitter: Option<FrequencyJitter>,
    /// Thermal force on; off gives the deterministic (ζ = 0) dynamics.
    pub thermal_noise: bool,
    /// Skip the per-tier step-size bound.
    pub allow_large_step: bool,
}

impl SimConfig {
    pub fn new(model: ModelTier, dt: f64, duration: f64, seed: u64) -> Self {
        Self {
            model,
            dt,
            duration,
            seed,
            n_trajectories: 1,
            record_stride: 1,
            initial_state: InitialState::Thermal,
            burn_in: BurnIn::Auto,
            frequency_jitter: None,
            thermal_noise: true,
            allow_large_step: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter { name: "dt", reason: "must be positive" });
        }
        if !(self.duration >= self.dt && self.duration.is_finite()) {
            return Err(Error::InvalidParameter { name: "duration", reason: "must be >= dt" });
        }
        if self.n_trajectories == 0 {
            return Err(Error::InvalidParameter { name: "n_trajectories", reason: "must be >= 1" });
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter { name: "record_stride", reason: "must be >= 1" });
        }
        if let BurnIn::Duration(d) = self.burn_in {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::InvalidParameter { name: "burn_in", reason: "must be >= 0" });
            }
        }
        if let Some(j) = self.frequency_jitter {
            if !(j.relative_rms >= 0.0 && j.correlation_time > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "frequency_jitter",
                    reason: "needs relative_rms >= 0 and correlation_time > 0",
                });
            }
        }
        match self.initial_state {
            InitialState::Amplitude { r, .. } if !(r >= 0.0 && r.is_finite()) => {
                Err(Error::InvalidParameter { name: "initial_state", reason: "amplitude must be >= 0" })
            }
            InitialState::Position { x, p } if !(x.is_finite() && p.is_finite()) => {
                Err(Error::InvalidParameter { name: "initial_state", reason: "must be finite" })
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn check_step(&self, limit: f64) -> Result<()> {
        if !self.allow_large_step && self.dt > limit {
            return Err(Error::StepTooLarge { model: self.model, dt: self.dt, limit });
        }
        Ok(())
    }

    pub(crate) fn steps(&self) -> u64 {
        libm::round(self.duration / self.dt) as u64
    }

    pub(crate) fn burn_in_steps(&self, auto: f64) -> u64 {
        let d = match self.burn_in {
            BurnIn::Auto => auto,
            BurnIn::Duration(d) => d,
        };
        libm::ceil(d / self.dt) as u64
    }
}
