use alloc::string::String;
use core::fmt;

use crate::sim::ModelTier;

pub type Result<T> = core::result::Result<T, Error>;

/// Why an integration was stopped before the requested duration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Divergence {
    /// The particle left the optical well it started in.
    WellHop,
    /// Anti-damping drove the amplitude past the escape amplitude.
    Instability,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::WellHop => f.write_str("particle hopped to a neighbouring optical well"),
            Divergence::Instability => f.write_str("dynamical instability (amplitude runaway)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: &'static str },

    #[error("particle is not trapped (G2 = {g2:e} rad/(s·m²) must be positive)")]
    Untrapped { g2: f64 },

    #[error("nonlinear damping heats instead of cools (gamma_nl = {gamma_nl:e} s/m² > 0); the steady state is not normalizable")]
    NotCooling { gamma_nl: f64 },

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("time step {dt:e} s exceeds the {model} stability bound {limit:e} s")]
    StepTooLarge { model: ModelTier, dt: f64, limit: f64 },

    #[error("{model} integration diverged at step {step} (t = {time:e} s): {kind}")]
    Diverged { model: ModelTier, step: u64, time: f64, kind: Divergence },

    #[error("non-finite state in {model} integration at step {step}")]
    NonFinite { model: ModelTier, step: u64 },

    #[error("trajectory has no `{0}` column")]
    MissingColumn(&'static str),

    #[error("series too short: need {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("record too short: {duration:e} s < required {required:e} s (20/gamma_R)")]
    RecordTooShort { duration: f64, required: f64 },

    #[error("energy grid too coarse: doubling the resolution changes the density by {change:.3e} (> 0.5%)")]
    GridTooCoarse { change: f64 },

    #[error("fit did not converge: {0}")]
    NonConverged(String),

    #[error("noise dominated: fitted motion mean energy {motion:e} J < noise mean energy {noise:e} J / 10")]
    NoiseDominated { motion: f64, noise: f64 },

    #[error("peak not resolved: integrated peak {peak:e} < 3 x integrated noise {noise:e} in the band")]
    PeakNotResolved { peak: f64, noise: f64 },
}
