#![allow(dead_code)]

use std::f64::consts::PI;

use quadcool_core::constants::K_B;
use quadcool_core::sim::{simulate_reduced, BurnIn, ColumnKind, ModelTier, OscillatorModel, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

pub const MASS: f64 = 4.88e-17;
pub const T_BATH: f64 = 295.0;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Draws from `exp(-aE - bE²)` on E ≥ 0 by rejection: an exponential
/// proposal with acceptance `exp(-bE²)` when the linear term dominates,
/// a half-normal proposal with acceptance `exp(-aE)` otherwise.
pub fn sample_energy(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(n);
    let linear_dominates = b == 0.0 || a * a / b > 4.0;
    let exp = Exp::new(a).unwrap();
    let sigma = if b > 0.0 { (1.0 / (2.0 * b)).sqrt() } else { 0.0 };
    while out.len() < n {
        if linear_dominates {
            let e: f64 = exp.sample(&mut r);
            if r.random::<f64>() < (-b * e * e).exp() {
                out.push(e);
            }
        } else {
            let g: f64 = r.sample(StandardNormal);
            let e = (g * sigma).abs();
            if r.random::<f64>() < (-a * e).exp() {
                out.push(e);
            }
        }
    }
    out
}

/// `|√E_m e^{iθ} + n|²` with circular Gaussian `n`, `⟨|n|²⟩ = noise`.
pub fn add_detection_noise(motion: &[f64], noise: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let s = (noise / 2.0).sqrt();
    motion
        .iter()
        .map(|&e| {
            let th = 2.0 * PI * r.random::<f64>();
            let gx: f64 = r.sample(StandardNormal);
            let gy: f64 = r.sample(StandardNormal);
            let re = e.sqrt() * th.cos() + s * gx;
            let im = e.sqrt() * th.sin() + s * gy;
            re * re + im * im
        })
        .collect()
}

/// η giving the dimensionless nonlinearity `βk_BT`.
pub fn eta_for(beta_kt: f64) -> f64 {
    4.0 * MASS * beta_kt / (K_B * T_BATH)
}

pub fn oscillator(f0: f64, q: f64) -> OscillatorModel {
    let omega = 2.0 * PI * f0;
    OscillatorModel::linear(MASS, omega, omega / q, T_BATH)
}

/// Steady-state reduced-model position record, sampled at `1/(25 dt)`.
pub struct Record {
    pub x: Vec<f64>,
    pub sample_rate: f64,
}

pub fn reduced_record(osc: &OscillatorModel, duration: f64, seed: u64, index: u64) -> Record {
    let mut c = SimConfig::new(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), duration, seed);
    c.record_stride = 25;
    c.burn_in = BurnIn::Auto;
    let t = simulate_reduced(osc, &c, index).unwrap();
    Record { x: t.column(ColumnKind::X).unwrap().to_vec(), sample_rate: t.sample_rate }
}
