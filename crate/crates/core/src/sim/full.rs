//! Particle coupled to the trap and probe intracavity fields (classical
//! amplitudes, vacuum input noise neglected).

use core::f64::consts::PI;

use num_complex::Complex64;

use super::heun::{self, Schedule, Sde};
use super::reduced::{meta, phase_space_start};
use super::rng::{stream, Domain};
use super::{ColumnKind, ModelTier, OscillatorModel, SimConfig, Trajectory};
use crate::constants::HBAR;
use crate::error::{Divergence, Error, Result};
use crate::params::{gas_damping, max_frequency_shift, trap_frequency, coupling_constants, thermal_force_psd, SystemParams};

struct Mode {
    phase: f64,
    /// Empty-cavity detuning Δ_o.
    detuning: f64,
    drive: f64,
}

struct Full {
    m: f64,
    k: f64,
    u0: f64,
    kappa: f64,
    omega_o2: f64,
    gamma_g: f64,
    force_noise: f64,
    modes: [Mode; 2],
    well: f64,
    hop: f64,
}

impl Full {
    fn steady_field(&self, mode: &Mode, x: f64) -> Complex64 {
        let c = libm::cos(self.k * x + mode.phase);
        Complex64::new(mode.drive, 0.0) / Complex64::new(self.kappa, -(mode.detuning + self.u0 * c * c))
    }
}

impl Sde<6> for Full {
    fn drift(&self, y: &[f64; 6]) -> [f64; 6] {
        let x = y[0];
        let p = y[1];
        let mut force = -self.m * self.omega_o2 * x - self.gamma_g * p;
        let mut out = [0.0; 6];
        out[0] = p / self.m;
        for (j, mode) in self.modes.iter().enumerate() {
            let a = Complex64::new(y[2 + 2 * j], y[3 + 2 * j]);
            let arg = self.k * x + mode.phase;
            force -= HBAR * self.k * self.u0 * a.norm_sqr() * libm::sin(2.0 * arg);
            let c = libm::cos(arg);
            let rot = Complex64::new(-self.kappa, mode.detuning + self.u0 * c * c);
            let da = rot * a + mode.drive;
            out[2 + 2 * j] = da.re;
            out[3 + 2 * j] = da.im;
        }
        out[1] = force;
        out
    }

    fn diffusion(&self, _y: &[f64; 6]) -> [f64; 6] {
        [0.0, self.force_noise, 0.0, 0.0, 0.0, 0.0]
    }

    fn noisy(&self) -> [bool; 6] {
        [false, self.force_noise > 0.0, false, false, false, false]
    }

    fn diverged(&self, y: &[f64; 6]) -> Option<Divergence> {
        (libm::fabs(y[0] - self.well) > self.hop).then_some(Divergence::WellHop)
    }
}

/// Integrates the coupled particle and field equations. Fields start at
/// their steady state for the initial position. Frequency jitter is not
/// applied in this tier.
pub fn simulate_full(params: &SystemParams, cfg: &SimConfig, index: u64) -> Result<Trajectory> {
    cfg.validate()?;
    let cav = &params.cavity;
    cfg.check_step(1.0 / (20.0 * cav.kappa))?;
    if cfg.frequency_jitter.is_some() {
        return Err(Error::InvalidParameter { name: "frequency_jitter", reason: "not supported by the full model" });
    }
    let m = params.particle.mass;
    let t = params.gas.bath_temperature;
    let u0 = max_frequency_shift(&params.particle, cav);
    let k = cav.wavenumber();
    let gamma_g = gas_damping(&params.gas, &params.particle);
    let drive_of = |b: &crate::params::BeamParams| libm::sqrt(2.0 * cav.kappa_in) * b.drive_amplitude(cav);
    let modes = [params.trap, params.probe].map(|b| Mode {
        phase: b.phase,
        detuning: b.empty_cavity_detuning(u0),
        drive: drive_of(&b),
    });

    // Harmonic frequency at the well bottom, for thermal initial states.
    let (_, g2) = coupling_constants(u0, k, params.trap.phase);
    let (alpha, _) = crate::params::steady_state_field(&params.trap, cav, u0);
    let omega_opt = trap_frequency(g2, alpha, m).unwrap_or(0.0);
    let omega0 = libm::sqrt(omega_opt * omega_opt + params.secular_frequency * params.secular_frequency);

    let mut rng = stream(cfg.seed, Domain::Dynamics, index);
    let (x0, p0) = if omega0 > 0.0 {
        phase_space_start(cfg.initial_state, m, omega0, t, &mut rng)
    } else {
        match cfg.initial_state {
            super::InitialState::Position { x, p } => (x, p),
            _ => return Err(Error::Untrapped { g2 }),
        }
    };
    let well = libm::round(k * x0 / PI) * PI / k;
    let sys = Full {
        m,
        k,
        u0,
        kappa: cav.kappa,
        omega_o2: params.secular_frequency * params.secular_frequency,
        gamma_g,
        force_noise: if cfg.thermal_noise { libm::sqrt(thermal_force_psd(gamma_g, m, t)) } else { 0.0 },
        modes,
        well,
        hop: cav.wavelength / 2.0,
    };
    let a_t = sys.steady_field(&sys.modes[0], x0);
    let a_p = sys.steady_field(&sys.modes[1], x0);
    let auto = OscillatorModel::from_system(params)
        .map(|o| o.auto_burn_in())
        .unwrap_or(if gamma_g > 0.0 { 10.0 / gamma_g } else { 0.0 });
    let schedule = Schedule {
        model: ModelTier::Full,
        dt: cfg.dt,
        burn_in_steps: cfg.burn_in_steps(auto),
        steps: cfg.steps(),
        stride: cfg.record_stride as u64,
    };
    let records = heun::run(&sys, [x0, p0, a_t.re, a_t.im, a_p.re, a_p.im], &schedule, &mut rng)?;
    let dt_rec = cfg.dt * cfg.record_stride as f64;
    Ok(Trajectory::from_records(
        1.0 / dt_rec,
        meta(cfg, index),
        dt_rec,
        [
            ColumnKind::X,
            ColumnKind::P,
            ColumnKind::ReAlphaTrap,
            ColumnKind::ImAlphaTrap,
            ColumnKind::ReAlphaProbe,
            ColumnKind::ImAlphaProbe,
        ],
        &records,
        |r| *r,
    ))
}
