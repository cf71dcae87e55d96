use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::fft::fft;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Hann,
}

impl Window {
    pub fn name(&self) -> &'static str {
        match self {
            Window::Hann => "hann",
        }
    }

    /// Periodic window of length `n`.
    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..n).map(|i| 0.5 - 0.5 * libm::cos(2.0 * PI * i as f64 / n as f64)).collect(),
        }
    }
}

/// One-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    /// Input units squared per Hz.
    pub psd: Vec<f64>,
    pub window: Window,
    pub segment_length: usize,
    pub overlap: f64,
    pub n_averages: usize,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() > 1 {
            self.frequencies[1] - self.frequencies[0]
        } else {
            0.0
        }
    }

    /// `Σ S(f) Δf`, the variance carried by the spectrum.
    pub fn total_power(&self) -> f64 {
        self.psd.iter().sum::<f64>() * self.resolution()
    }

    /// Power between `f_lo` and `f_hi` (whole bins whose centers fall inside).
    pub fn band_power(&self, f_lo: f64, f_hi: f64) -> f64 {
        let df = self.resolution();
        self.frequencies
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| **f >= f_lo && **f <= f_hi)
            .map(|(_, s)| s * df)
            .sum()
    }
}

/// Welch estimate with a Hann window. The global mean is removed first;
/// the density is compensated for the window power so that
/// `Σ S Δf` equals the variance of the input.
pub fn welch_psd(series: &[f64], sample_rate: f64, segment_length: usize, overlap: f64, window: Window) -> Result<Spectrum> {
    if !(sample_rate > 0.0) {
        return Err(Error::InvalidParameter { name: "sample_rate", reason: "must be positive" });
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidParameter { name: "overlap", reason: "must be in [0, 1)" });
    }
    if segment_length < 2 {
        return Err(Error::InvalidParameter { name: "segment_length", reason: "must be >= 2" });
    }
    let n = series.len();
    let hop = ((segment_length as f64 * (1.0 - overlap)) as usize).max(1);
    let segments = if n >= segment_length { (n - segment_length) / hop + 1 } else { 0 };
    if segments < 4 {
        return Err(Error::TooShort { needed: segment_length + 3 * hop, got: n });
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let w = window.coefficients(segment_length);
    let u: f64 = w.iter().map(|v| v * v).sum();
    let bins = segment_length / 2 + 1;
    let mut acc = vec![0.0; bins];
    let mut buf = vec![Complex64::new(0.0, 0.0); segment_length];
    for s in 0..segments {
        let start = s * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new((series[start + i] - mean) * w[i], 0.0);
        }
        fft(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (sample_rate * u * segments as f64);
    let psd: Vec<f64> = acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || (segment_length % 2 == 0 && k == bins - 1) { 1.0 } else { 2.0 };
            p * scale * one_sided
        })
        .collect();
    let df = sample_rate / segment_length as f64;
    Ok(Spectrum {
        frequencies: (0..bins).map(|k| k as f64 * df).collect(),
        psd,
        window,
        segment_length,
        overlap,
        n_averages: segments,
    })
}

/// Maps an autocovariance function to the expected value of the Welch
/// estimate at every bin, including window leakage and aliasing. Used as
/// the forward model for spectral fits so that finite resolution does not
/// bias fitted widths.
pub(crate) struct WelchKernel {
    sample_rate: f64,
    /// Window autocorrelation `Σ w[i] w[i+l]`.
    window_acf: Vec<f64>,
    power: f64,
}

impl WelchKernel {
    pub(crate) fn new(spectrum: &Spectrum, sample_rate: f64) -> Self {
        let n = spectrum.segment_length;
        let w = spectrum.window.coefficients(n);
        let window_acf: Vec<f64> = crate::numeric::fft::autocorrelation(&w, n).iter().map(|c| c * n as f64).collect();
        let power = window_acf[0];
        Self { sample_rate, window_acf, power }
    }

    /// Expected one-sided density for an autocovariance `acf(lag_seconds)`.
    pub(crate) fn expected(&self, acf: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.window_acf.len();
        let dt = 1.0 / self.sample_rate;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0].re = acf(0.0) * self.window_acf[0];
        for j in 1..n {
            let pos = acf(j as f64 * dt) * self.window_acf[j];
            let neg = acf((n - j) as f64 * dt) * self.window_acf[n - j];
            buf[j].re = pos + neg;
        }
        fft(&mut buf);
        let bins = n / 2 + 1;
        let scale = 1.0 / (self.sample_rate * self.power);
        (0..bins)
            .map(|k| {
                let one_sided = if k == 0 || (n % 2 == 0 && k == bins - 1) { 1.0 } else { 2.0 };
                buf[k].re * scale * one_sided
            })
            .collect()
    }
}
