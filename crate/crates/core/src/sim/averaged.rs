//! Slow amplitude/phase dynamics after deterministic and stochastic
//! averaging over one oscillation period.
//!
//! The amplitude and phase equations
//!
//! ```text
//! dR = [-(γ_g/2)R + (Ω²γ_nl/8)R³ + D/R] dt + √(2D) dW_R
//! dφ = (3Ω/8) ε_D R² dt + (√(2D)/R) dW_φ
//! ```
//!
//! are the polar (Itô) form of the complex envelope `z = R e^{iφ}` with
//! additive noise,
//!
//! ```text
//! dz = [-(γ_g/2) + (Ω²γ_nl/8)|z|² + i(3Ω/8)ε_D|z|²] z dt + √(2D) (dW_1 + i dW_2)
//! ```
//!
//! so the integration runs on `(Re z, Im z)`, where the origin is regular,
//! and `R`, `φ` are read off the recorded samples.

use core::f64::consts::PI;

use rand::Rng;

use super::heun::{self, Schedule, Sde};
use super::reduced::meta;
use super::rng::{stream, Domain};
use super::{ColumnKind, FrequencyJitter, InitialState, ModelTier, OscillatorModel, SimConfig, Trajectory};
use crate::error::{Divergence, Result};

const MAX_STIFF_STEP: f64 = 0.5;
const MAX_SUBSTEPS: f64 = 4096.0;

struct Envelope {
    omega: f64,
    omega2: f64,
    eps_d: f64,
    gamma_nl: f64,
    gamma_g: f64,
    /// Amplitude diffusion constant D.
    diff: f64,
    escape2: f64,
    jitter: Option<FrequencyJitter>,
}

impl Sde<3> for Envelope {
    fn drift(&self, y: &[f64; 3]) -> [f64; 3] {
        let [u, v, j] = *y;
        let w = 1.0 + j;
        let r2 = u * u + v * v;
        let re = -0.5 * self.gamma_g + self.omega2 * w * w * self.gamma_nl / 8.0 * r2;
        let im = 3.0 * self.omega * w / 8.0 * self.eps_d * r2 + self.omega * j;
        let dj = match self.jitter {
            Some(f) => -j / f.correlation_time,
            None => 0.0,
        };
        [re * u - im * v, re * v + im * u, dj]
    }

    fn diffusion(&self, _y: &[f64; 3]) -> [f64; 3] {
        let s = libm::sqrt(2.0 * self.diff);
        let j = match self.jitter {
            Some(f) => f.relative_rms * libm::sqrt(2.0 / f.correlation_time),
            None => 0.0,
        };
        [s, s, j]
    }

    fn noisy(&self) -> [bool; 3] {
        [self.diff > 0.0, self.diff > 0.0, self.jitter.is_some()]
    }

    /// The cubic drift has rate `3Ω²|γ_nl|R²/8`; an amplitude far above the
    /// steady state (a bath-temperature start) would overshoot at a step
    /// sized for γ_eff.
    fn substeps(&self, y: &[f64; 3], dt: f64) -> u32 {
        let r2 = y[0] * y[0] + y[1] * y[1];
        let rate = 3.0 * self.omega2 * libm::fabs(self.gamma_nl) * r2 / 8.0;
        libm::ceil(rate * dt / MAX_STIFF_STEP).clamp(1.0, MAX_SUBSTEPS) as u32
    }

    fn diverged(&self, y: &[f64; 3]) -> Option<Divergence> {
        (y[0] * y[0] + y[1] * y[1] > self.escape2).then_some(Divergence::Instability)
    }
}

pub fn simulate_averaged(osc: &OscillatorModel, cfg: &SimConfig, index: u64) -> Result<Trajectory> {
    cfg.validate()?;
    osc.validate()?;
    let gamma_eff = osc.predicted_gamma_eff();
    if gamma_eff > 0.0 {
        cfg.check_step(1.0 / (10.0 * gamma_eff))?;
    }
    let mut rng = stream(cfg.seed, Domain::Dynamics, index);
    let r_thermal = libm::sqrt(2.0 * osc.thermal_variance());
    let (r0, phi0) = match cfg.initial_state {
        InitialState::Thermal => {
            let u: f64 = rng.random();
            let v: f64 = rng.random();
            (r_thermal * libm::sqrt(-libm::log(1.0 - u)), 2.0 * PI * v)
        }
        InitialState::Amplitude { r, phase } => (r, phase),
        InitialState::Position { x, p } => {
            let q = -p / (osc.mass * osc.omega_m);
            (libm::hypot(x, q), libm::atan2(q, x))
        }
    };
    let sys = Envelope {
        omega: osc.omega_m,
        omega2: osc.omega_m * osc.omega_m,
        eps_d: osc.eps_d,
        gamma_nl: osc.gamma_nl,
        gamma_g: osc.gamma_g,
        diff: if cfg.thermal_noise { osc.amplitude_diffusion() } else { 0.0 },
        escape2: osc.escape_amplitude * osc.escape_amplitude,
        jitter: cfg.frequency_jitter,
    };
    let schedule = Schedule {
        model: ModelTier::Averaged,
        dt: cfg.dt,
        burn_in_steps: cfg.burn_in_steps(osc.auto_burn_in()),
        steps: cfg.steps(),
        stride: cfg.record_stride as u64,
    };
    let start = [r0 * libm::cos(phi0), r0 * libm::sin(phi0), 0.0];
    let records = heun::run(&sys, start, &schedule, &mut rng)?;
    let dt_rec = cfg.dt * cfg.record_stride as f64;
    let mut traj = Trajectory::from_records(
        1.0 / dt_rec,
        meta(cfg, index),
        dt_rec,
        [ColumnKind::R, ColumnKind::Phi],
        &records,
        |s| [libm::hypot(s[0], s[1]), libm::atan2(s[1], s[0])],
    );
    unwrap_phase(&mut traj);
    Ok(traj)
}

fn unwrap_phase(traj: &mut Trajectory) {
    if let Some(col) = traj.columns.iter_mut().find(|c| c.kind == ColumnKind::Phi) {
        let mut offset = 0.0;
        let mut prev = match col.values.first() {
            Some(&v) => v,
            None => return,
        };
        for v in col.values.iter_mut().skip(1) {
            let raw = *v;
            let d = raw - prev;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
            prev = raw;
            *v = raw + offset;
        }
    }
}
