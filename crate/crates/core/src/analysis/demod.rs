use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Filter settling time in units of `1/bandwidth`; that many samples are
/// dropped from the front of the output.
const SETTLE_PERIODS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Demodulated {
    /// Amplitude `R`, same units as the input.
    pub amplitude: Vec<f64>,
    /// Unwrapped phase relative to the reference, rad.
    pub phase: Vec<f64>,
    pub sample_rate: f64,
    /// Input samples discarded while the filter settled.
    pub settle_samples: usize,
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(fc: f64, fs: f64, q: f64) -> Self {
        let w0 = 2.0 * PI * fc / fs;
        let (s, c) = (libm::sin(w0), libm::cos(w0));
        let alpha = s / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - c) / 2.0 / a0;
        Self { b: [b0, 2.0 * b0, b0], a: [-2.0 * c / a0, (1.0 - alpha) / a0] }
    }
}

/// Fourth-order Butterworth low-pass as two cascaded sections.
fn butterworth4(fc: f64, fs: f64) -> [Biquad; 2] {
    [
        Biquad::lowpass(fc, fs, 1.0 / (2.0 * libm::cos(PI / 8.0))),
        Biquad::lowpass(fc, fs, 1.0 / (2.0 * libm::cos(3.0 * PI / 8.0))),
    ]
}

/// Complex lock-in at `f0`: mixes with `e^{-i2πf0t}`, low-passes at
/// `bandwidth` and returns `R = 2|z|` and `arg z`.
pub fn demodulate(series: &[f64], sample_rate: f64, f0: f64, bandwidth: f64) -> Result<Demodulated> {
    if !(bandwidth > 0.0 && bandwidth < f0 && f0 < sample_rate / 2.0) {
        return Err(Error::InvalidParameter {
            name: "bandwidth",
            reason: "requires 0 < bandwidth < f0 < sample_rate/2",
        });
    }
    let settle = libm::ceil(SETTLE_PERIODS / bandwidth * sample_rate) as usize;
    if series.len() <= settle {
        return Err(Error::TooShort { needed: settle + 1, got: series.len() });
    }
    let sections = butterworth4(bandwidth, sample_rate);
    let mut state = [[Complex64::new(0.0, 0.0); 2]; 2];
    let step = 2.0 * PI * f0 / sample_rate;
    let n_out = series.len() - settle;
    let mut amplitude = Vec::with_capacity(n_out);
    let mut phase = Vec::with_capacity(n_out);
    let mut last = 0.0;
    let mut offset = 0.0;
    for (i, &x) in series.iter().enumerate() {
        // reduce the carrier phase modulo 2π before taking sin/cos
        let arg = libm::fmod(step * i as f64, 2.0 * PI);
        let mut z = Complex64::new(x * libm::cos(arg), -x * libm::sin(arg));
        for (sec, st) in sections.iter().zip(state.iter_mut()) {
            // transposed direct form II
            let y = st[0] + z * sec.b[0];
            st[0] = st[1] + z * sec.b[1] - y * sec.a[0];
            st[1] = z * sec.b[2] - y * sec.a[1];
            z = y;
        }
        if i >= settle {
            let p = z.arg();
            if i > settle {
                let d = p - last;
                if d > PI {
                    offset -= 2.0 * PI;
                } else if d < -PI {
                    offset += 2.0 * PI;
                }
            }
            last = p;
            amplitude.push(2.0 * z.norm());
            phase.push(p + offset);
        }
    }
    Ok(Demodulated { amplitude, phase, sample_rate, settle_samples: settle, bandwidth })
}

/// Default low-pass bandwidth: `min(f0/5, fs/10)`, raised to
/// `20·γ_eff/2π` when that is larger (but kept below `f0/2`).
pub fn demod_bandwidth(f0: f64, sample_rate: f64, gamma_eff: f64) -> f64 {
    let base = (f0 / 5.0).min(sample_rate / 10.0);
    base.max(20.0 * gamma_eff / (2.0 * PI)).min(f0 / 2.0)
}

/// Equivalent noise bandwidth of the demodulation low-pass, Hz.
pub fn noise_bandwidth(bandwidth: f64) -> f64 {
    bandwidth * (PI / 8.0) / libm::sin(PI / 8.0)
}

/// Mean demodulated energy `½mΩ²⟨R²⟩` produced by white displacement noise
/// of one-sided density `noise_floor` (m²/Hz): `2 m Ω² S B_eq`.
pub fn noise_energy(noise_floor: f64, mass: f64, omega_m: f64, bandwidth: f64) -> f64 {
    2.0 * mass * omega_m * omega_m * noise_floor * noise_bandwidth(bandwidth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandwidthWarning {
    pub bandwidth: f64,
    /// Smallest bandwidth that tracks energy fluctuations, `10·γ_eff/2π`.
    pub required: f64,
}

/// Reports a bandwidth too narrow to follow energy fluctuations at rate
/// `gamma_eff`.
pub fn bandwidth_warning(bandwidth: f64, gamma_eff: f64) -> Option<BandwidthWarning> {
    let required = 10.0 * gamma_eff / (2.0 * PI);
    (bandwidth < required).then_some(BandwidthWarning { bandwidth, required })
}
