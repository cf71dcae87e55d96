//! Simulation and analysis of quadratic optomechanical cooling of a
//! nanosphere levitated at an antinode of a cavity standing wave.
//!
//! The crate is `no_std` (it needs `alloc`) and contains no IO. It is split
//! into four layers:
//!
//! - [`params`]: physical inputs and every derived dynamical constant
//!   (dispersive shift, couplings, intracavity field, gas damping, nonlinear
//!   coefficients of the adiabatically eliminated model).
//! - [`sim`]: seeded stochastic Heun integrators for the three model tiers
//!   (particle plus cavity fields, reduced Duffing/Van der Pol oscillator,
//!   averaged amplitude/phase equations) and a white-noise readout channel.
//! - [`theory`]: steady-state energy distribution, effective temperature and
//!   damping, low-pressure limits and the detection-noise corrupted density.
//! - [`analysis`]: Welch PSDs, lock-in demodulation, energy histograms,
//!   maximum-likelihood distribution fits and the energy-autocorrelation
//!   damping estimator.
//!
//! Everything is in SI units with angular frequencies in rad/s.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod constants;
pub mod error;
pub mod numeric;
pub mod params;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
