//! In-place complex FFT.
//!
//! Power-of-two lengths use an iterative radix-2 Cooley–Tukey transform;
//! other lengths go through Bluestein's chirp-z reformulation (direct DFT
//! for tiny inputs).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Forward transform, `X[k] = Σ x[n] e^{-2πi kn/N}` (no normalization).
pub fn fft(data: &mut [Complex64]) {
    let n = data.len();
    if n <= 1 {
        return;
    }
    if n.is_power_of_two() {
        radix2(data);
    } else if n <= 32 {
        dft(data);
    } else {
        bluestein(data);
    }
}

fn bluestein(data: &mut [Complex64]) {
    let n = data.len();
    let m = (2 * n - 1).next_power_of_two();
    // chirp w[k] = exp(-iπk²/n); k² reduced mod 2n to keep the angle small
    let chirp: Vec<Complex64> = (0..n)
        .map(|k| {
            let k2 = ((k as u128 * k as u128) % (2 * n as u128)) as f64;
            let a = -PI * k2 / n as f64;
            Complex64::new(libm::cos(a), libm::sin(a))
        })
        .collect();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..n {
        a[k] = data[k] * chirp[k];
    }
    let mut b = vec![Complex64::new(0.0, 0.0); m];
    b[0] = chirp[0].conj();
    for k in 1..n {
        b[k] = chirp[k].conj();
        b[m - k] = chirp[k].conj();
    }
    radix2(&mut a);
    radix2(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x = (*x * y).conj();
    }
    radix2(&mut a);
    let scale = 1.0 / m as f64;
    for k in 0..n {
        data[k] = a[k].conj() * scale * chirp[k];
    }
}

fn radix2(data: &mut [Complex64]) {
    let n = data.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let ang = -2.0 * PI / len as f64;
        let half = len / 2;
        // twiddles computed directly per index to avoid accumulated rotation error
        let twiddles: Vec<Complex64> = (0..half)
            .map(|k| {
                let a = ang * k as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let u = data[start + k];
                let v = data[start + k + half] * twiddles[k];
                data[start + k] = u + v;
                data[start + k + half] = u - v;
            }
        }
        len <<= 1;
    }
}

fn dft(data: &mut [Complex64]) {
    let n = data.len();
    let input = data.to_vec();
    for (k, out) in data.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, x) in input.iter().enumerate() {
            let a = -2.0 * PI * ((k * j) % n) as f64 / n as f64;
            acc += x * Complex64::new(libm::cos(a), libm::sin(a));
        }
        *out = acc;
    }
}

/// Biased autocorrelation `c[l] = (1/N) Σ x[i] x[i+l]` of a real series for
/// lags `0..max_lag`, computed through a zero-padded FFT.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let size = (2 * n).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    for (b, &x) in buf.iter_mut().zip(series) {
        b.re = x;
    }
    fft(&mut buf);
    for b in buf.iter_mut() {
        *b = Complex64::new(b.norm_sqr(), 0.0);
    }
    // inverse via conjugation
    for b in buf.iter_mut() {
        *b = b.conj();
    }
    fft(&mut buf);
    let scale = 1.0 / (size as f64 * n as f64);
    buf.iter()
        .take(max_lag.min(n))
        .map(|c| c.re * scale)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radix2_matches_direct_dft() {
        let x: Vec<Complex64> = (0..16)
            .map(|i| Complex64::new(libm::sin(i as f64 * 0.7), libm::cos(i as f64 * 0.3)))
            .collect();
        let mut a = x.clone();
        let mut b = x;
        radix2(&mut a);
        dft(&mut b);
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn bluestein_matches_direct_dft() {
        for n in [33, 100, 257] {
            let x: Vec<Complex64> = (0..n)
                .map(|i| Complex64::new(libm::sin(i as f64 * 0.37), libm::cos(i as f64 * 1.1)))
                .collect();
            let mut a = x.clone();
            let mut b = x;
            bluestein(&mut a);
            dft(&mut b);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).norm() < 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn autocorrelation_matches_direct_sum() {
        let x: Vec<f64> = (0..37).map(|i| libm::sin(i as f64 * 1.3) + 0.1 * i as f64).collect();
        let acf = autocorrelation(&x, 5);
        for (l, &c) in acf.iter().enumerate() {
            let direct: f64 = (0..x.len() - l).map(|i| x[i] * x[i + l]).sum::<f64>() / x.len() as f64;
            assert!((c - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }
}
