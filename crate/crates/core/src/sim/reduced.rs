//! Duffing/Van der Pol oscillator with thermal forcing.

use alloc::string::String;

use rand::Rng;
use rand_distr::StandardNormal;

use super::heun::{self, Schedule, Sde};
use super::rng::{stream, Domain};
use super::{ColumnKind, FrequencyJitter, InitialState, ModelTier, OscillatorModel, SimConfig, Trajectory, TrajectoryMeta};
use crate::error::{Divergence, Result};

struct Reduced {
    m: f64,
    omega2: f64,
    eps_d: f64,
    gamma_nl: f64,
    gamma_g: f64,
    force_noise: f64,
    escape: f64,
    jitter: Option<FrequencyJitter>,
}

impl Sde<3> for Reduced {
    fn drift(&self, y: &[f64; 3]) -> [f64; 3] {
        let [x, p, j] = *y;
        let w2 = self.omega2 * (1.0 + j) * (1.0 + j);
        let x2 = x * x;
        let dp = -self.m * w2 * x * (1.0 + self.eps_d * x2) - (self.gamma_g - w2 * self.gamma_nl * x2) * p;
        let dj = match self.jitter {
            Some(f) => -j / f.correlation_time,
            None => 0.0,
        };
        [p / self.m, dp, dj]
    }

    fn diffusion(&self, _y: &[f64; 3]) -> [f64; 3] {
        let j = match self.jitter {
            Some(f) => f.relative_rms * libm::sqrt(2.0 / f.correlation_time),
            None => 0.0,
        };
        [0.0, self.force_noise, j]
    }

    fn noisy(&self) -> [bool; 3] {
        [false, self.force_noise > 0.0, self.jitter.is_some()]
    }

    fn diverged(&self, y: &[f64; 3]) -> Option<Divergence> {
        (libm::fabs(y[0]) > self.escape).then_some(Divergence::Instability)
    }
}

pub(crate) fn meta(cfg: &SimConfig, index: u64) -> TrajectoryMeta {
    TrajectoryMeta {
        model: cfg.model,
        seed: cfg.seed,
        index,
        dt: cfg.dt,
        record_stride: cfg.record_stride,
        params_digest: String::new(),
    }
}

/// Position and momentum of the requested initial state for an oscillator
/// of frequency `omega`.
pub(crate) fn phase_space_start<R: Rng>(
    init: InitialState,
    mass: f64,
    omega: f64,
    temperature: f64,
    rng: &mut R,
) -> (f64, f64) {
    match init {
        InitialState::Thermal => {
            let kt = crate::constants::K_B * temperature;
            let sx = libm::sqrt(kt / (mass * omega * omega));
            let sp = libm::sqrt(kt * mass);
            let gx: f64 = rng.sample(StandardNormal);
            let gp: f64 = rng.sample(StandardNormal);
            (sx * gx, sp * gp)
        }
        InitialState::Position { x, p } => (x, p),
        InitialState::Amplitude { r, phase } => {
            (r * libm::cos(phase), -mass * omega * r * libm::sin(phase))
        }
    }
}

pub fn simulate_reduced(osc: &OscillatorModel, cfg: &SimConfig, index: u64) -> Result<Trajectory> {
    cfg.validate()?;
    osc.validate()?;
    cfg.check_step(1.0 / (50.0 * osc.omega_m))?;
    let mut rng = stream(cfg.seed, Domain::Dynamics, index);
    let (x0, p0) = phase_space_start(cfg.initial_state, osc.mass, osc.omega_m, osc.bath_temperature, &mut rng);
    let sys = Reduced {
        m: osc.mass,
        omega2: osc.omega_m * osc.omega_m,
        eps_d: osc.eps_d,
        gamma_nl: osc.gamma_nl,
        gamma_g: osc.gamma_g,
        force_noise: if cfg.thermal_noise { libm::sqrt(osc.s_th()) } else { 0.0 },
        escape: osc.escape_amplitude,
        jitter: cfg.frequency_jitter,
    };
    let schedule = Schedule {
        model: ModelTier::Reduced,
        dt: cfg.dt,
        burn_in_steps: cfg.burn_in_steps(osc.auto_burn_in()),
        steps: cfg.steps(),
        stride: cfg.record_stride as u64,
    };
    let records = heun::run(&sys, [x0, p0, 0.0], &schedule, &mut rng)?;
    let dt_rec = cfg.dt * cfg.record_stride as f64;
    Ok(Trajectory::from_records(
        1.0 / dt_rec,
        meta(cfg, index),
        dt_rec,
        [ColumnKind::X, ColumnKind::P],
        &records,
        |r| [r[0], r[1]],
    ))
}
