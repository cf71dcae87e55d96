//! Seeded stochastic integration of the three model tiers.
//!
//! | tier       | state                          | stability bound        |
//! |------------|--------------------------------|------------------------|
//! | `full`     | x, p, trap and probe fields    | dt ≤ 1/(20κ)           |
//! | `reduced`  | x, p                           | dt ≤ 1/(50Ω_m)         |
//! | `averaged` | R, φ                           | dt ≤ 1/(10γ_eff)       |
//!
//! All tiers use the stochastic Heun predictor–corrector. A trajectory is a
//! pure function of `(parameters, config, trajectory index)`: each index
//! draws from its own ChaCha stream keyed by the root seed.

mod averaged;
mod config;
mod full;
mod heun;
mod measurement;
mod oscillator;
mod reduced;
pub mod rng;
mod trajectory;

pub use averaged::simulate_averaged;
pub use config::{BurnIn, FrequencyJitter, InitialState, ModelTier, SimConfig};
pub use full::simulate_full;
pub use measurement::measurement_channel;
pub use oscillator::OscillatorModel;
pub use reduced::simulate_reduced;
pub use trajectory::{Column, ColumnKind, Trajectory, TrajectoryMeta};

use crate::error::Result;
use crate::params::SystemParams;

/// Dispatches on `cfg.model`.
pub fn simulate(params: &SystemParams, cfg: &SimConfig, index: u64) -> Result<Trajectory> {
    match cfg.model {
        ModelTier::Full => simulate_full(params, cfg, index),
        ModelTier::Reduced => simulate_reduced(&OscillatorModel::from_system(params)?, cfg, index),
        ModelTier::Averaged => simulate_averaged(&OscillatorModel::from_system(params)?, cfg, index),
    }
}
