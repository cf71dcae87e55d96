//! Stochastic Heun (predictor–corrector) for diagonal noise.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::ModelTier;
use crate::error::{Divergence, Error, Result};

pub(crate) trait Sde<const N: usize> {
    fn drift(&self, y: &[f64; N]) -> [f64; N];
    /// Diagonal noise amplitudes multiplying independent Wiener increments.
    fn diffusion(&self, y: &[f64; N]) -> [f64; N];
    /// Components that receive an increment; fixed for the whole run so the
    /// random stream layout does not depend on the state.
    fn noisy(&self) -> [bool; N];
    /// Post-step map (reflection at a boundary).
    fn project(&self, _y: &mut [f64; N]) {}
    /// Number of equal substeps for the next step. Drifts that stiffen with
    /// the state use this to stay stable far from their typical scale.
    fn substeps(&self, _y: &[f64; N], _dt: f64) -> u32 {
        1
    }
    /// Early termination test, evaluated after every step.
    fn diverged(&self, _y: &[f64; N]) -> Option<Divergence> {
        None
    }
}

pub(crate) fn step<S: Sde<N>, R: Rng, const N: usize>(
    sys: &S,
    y: &mut [f64; N],
    dt: f64,
    sqrt_dt: f64,
    noisy: &[bool; N],
    rng: &mut R,
) {
    let mut dw = [0.0; N];
    for (w, &on) in dw.iter_mut().zip(noisy) {
        if on {
            *w = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
        }
    }
    let f0 = sys.drift(y);
    let g0 = sys.diffusion(y);
    let mut pred = *y;
    for i in 0..N {
        pred[i] += f0[i] * dt + g0[i] * dw[i];
    }
    sys.project(&mut pred);
    let f1 = sys.drift(&pred);
    let g1 = sys.diffusion(&pred);
    for i in 0..N {
        y[i] += 0.5 * (f0[i] + f1[i]) * dt + 0.5 * (g0[i] + g1[i]) * dw[i];
    }
    sys.project(y);
}

pub(crate) struct Schedule {
    pub model: ModelTier,
    pub dt: f64,
    pub burn_in_steps: u64,
    pub steps: u64,
    pub stride: u64,
}

/// Integrates through the burn-in, then records every `stride`-th state
/// (including the first one after burn-in).
pub(crate) fn run<S: Sde<N>, R: Rng, const N: usize>(
    sys: &S,
    mut y: [f64; N],
    schedule: &Schedule,
    rng: &mut R,
) -> Result<Vec<[f64; N]>> {
    let dt = schedule.dt;
    let sqrt_dt = libm::sqrt(dt);
    let noisy = sys.noisy();
    let mut records = Vec::with_capacity((schedule.steps / schedule.stride + 1) as usize);
    let total = schedule.burn_in_steps + schedule.steps;
    let check = |y: &[f64; N], n: u64| -> Result<()> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { model: schedule.model, step: n });
        }
        if let Some(kind) = sys.diverged(y) {
            return Err(Error::Diverged { model: schedule.model, step: n, time: n as f64 * dt, kind });
        }
        Ok(())
    };
    check(&y, 0)?;
    for n in 1..=total {
        if n > schedule.burn_in_steps && (n - 1 - schedule.burn_in_steps) % schedule.stride == 0 {
            records.push(y);
        }
        let k = sys.substeps(&y, dt).max(1);
        if k == 1 {
            step(sys, &mut y, dt, sqrt_dt, &noisy, rng);
        } else {
            let h = dt / k as f64;
            let sqrt_h = libm::sqrt(h);
            for _ in 0..k {
                step(sys, &mut y, h, sqrt_h, &noisy, rng);
            }
        }
        check(&y, n)?;
    }
    if schedule.steps % schedule.stride == 0 {
        records.push(y);
    }
    Ok(records)
}
