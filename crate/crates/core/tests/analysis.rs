mod common;

use std::f64::consts::PI;

use common::*;
use quadcool_core::analysis::{
    decorrelate, decorrelation_stride, demod_bandwidth, demodulate, energy_series, fit_energy_distribution,
    fit_oscillator_peak, ks_exponential, r2_psd_decay, teff_from_psd_area, welch_psd, FitOptions, Window,
};
use quadcool_core::constants::K_B;
use quadcool_core::numeric::stats::{autocorrelation_at, mean, variance};
use quadcool_core::theory::EnergyDistModel;
use quadcool_core::Error;
use rand::Rng;
use rand_distr::StandardNormal;

#[test]
fn white_noise_spectrum_is_flat_and_obeys_parseval() {
    let mut r = rng(4);
    let sigma = 0.7;
    let fs = 2000.0;
    let x: Vec<f64> = (0..1 << 16).map(|_| sigma * r.sample::<f64, _>(StandardNormal)).collect();
    let s = welch_psd(&x, fs, 512, 0.5, Window::Hann).unwrap();
    let level = 2.0 * sigma * sigma / fs;
    let interior = &s.psd[1..s.psd.len() - 1];
    assert!((mean(interior) / level - 1.0).abs() < 0.01);
    // per-bin scatter ~ 1/√(averages)
    let rel_sd = variance(interior).sqrt() / level;
    assert!(rel_sd < 2.0 / (s.n_averages as f64).sqrt(), "{rel_sd}");
    assert!((s.total_power() / variance(&x) - 1.0).abs() < 0.01);
}

#[test]
fn thermal_peak_fit_recovers_frequency_and_damping() {
    let osc = oscillator(100e3, 100.0);
    let rec = reduced_record(&osc, 0.5, 1, 0);
    let s = welch_psd(&rec.x, rec.sample_rate, 8192, 0.5, Window::Hann).unwrap();
    assert!((s.total_power() / variance(&rec.x) - 1.0).abs() < 0.01);
    let fit = fit_oscillator_peak(&s, (50e3, 150e3), None).unwrap();
    assert!((fit.omega / osc.omega_m - 1.0).abs() < 0.05, "Ω {}", fit.omega / osc.omega_m);
    assert!((fit.gamma / osc.gamma_g - 1.0).abs() < 0.05, "γ {}", fit.gamma / osc.gamma_g);
}

#[test]
fn demodulated_thermal_motion_has_twice_the_position_variance() {
    // the low-pass loses ≈0.65·HWHM/bandwidth of the peak power: 0.8% here
    let osc = oscillator(100e3, 100.0);
    let rec = reduced_record(&osc, 2.0, 2, 0);
    let bw = 40e3;
    let d = demodulate(&rec.x, rec.sample_rate, 100e3, bw).unwrap();
    let r2: Vec<f64> = d.amplitude.iter().map(|r| r * r).collect();
    let x2 = rec.x[d.settle_samples..].iter().map(|x| x * x).sum::<f64>() / r2.len() as f64;
    assert!((mean(&r2) / (2.0 * x2) - 1.0).abs() < 0.03, "{}", mean(&r2) / (2.0 * x2));
    let e = energy_series(&d.amplitude, osc.mass, osc.omega_m);
    let t = mean(&e) / K_B;
    assert!((t / T_BATH - 1.0).abs() < 0.03, "T {t}");
}

#[test]
fn exponential_samples_give_gain_consistent_with_zero() {
    let e = sample_energy(1.0 / (K_B * T_BATH), 0.0, 20_000, 8);
    let d = fit_energy_distribution(&e, MASS, &FitOptions::default()).unwrap();
    assert!(d.fit.eta.abs() <= 2.0 * d.fit.eta_stderr(), "{} ± {}", d.fit.eta, d.fit.eta_stderr());
    assert!((d.fit.temperature / T_BATH - 1.0).abs() < 3.0 * d.fit.temperature_stderr() / T_BATH);
    assert!(d.fit.ks_p_value > 0.01);
    assert!(d.histogram.counts.iter().sum::<u64>() as usize == e.len());
    assert!(d.histogram.edges.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn rejection_sampled_energies_recover_temperature_and_gain() {
    for (beta_kt, seed) in [(0.5, 1), (5.0, 2), (200.0, 3)] {
        let model = EnergyDistModel::from_gain(T_BATH, eta_for(beta_kt), MASS).unwrap();
        let (a, b) = (model.linear_coefficient(), model.quadratic_coefficient());
        let e = sample_energy(a, b, 100_000, seed);
        let fit = fit_energy_distribution(&e, MASS, &FitOptions::default()).unwrap().fit;
        let zt = (fit.temperature - T_BATH) / fit.temperature_stderr();
        let ze = (fit.eta - eta_for(beta_kt)) / fit.eta_stderr();
        assert!(zt.abs() < 2.0 && ze.abs() < 2.0, "βkT={beta_kt}: zT={zt}, zη={ze}");
        assert!(fit.ks_p_value > 0.01);
    }
}

#[test]
fn noisy_fit_recovers_motion_while_noise_ignorant_fit_is_biased() {
    let model = EnergyDistModel::from_gain(T_BATH, eta_for(20.0), MASS).unwrap();
    let (a, b) = (model.linear_coefficient(), model.quadratic_coefficient());
    let motion = sample_energy(a, b, 40_000, 31);
    let noise = 0.3 * model.mean_energy();
    let measured = add_detection_noise(&motion, noise, 32);
    // with T free the (T, η) ridge is too flat for curvature-based errors
    let noisy = fit_energy_distribution(&measured, MASS, &FitOptions::noisy().with_temperature(T_BATH)).unwrap().fit;
    let z = [
        (noisy.eta - eta_for(20.0)) / noisy.eta_stderr(),
        (noisy.noise_mean_energy - noise) / noisy.noise_stderr(),
    ];
    assert!(z.iter().all(|v| v.abs() < 2.0), "z {z:?}");
    let naive = fit_energy_distribution(&measured, MASS, &FitOptions::default().with_temperature(T_BATH)).unwrap().fit;
    let bias = (naive.eta - eta_for(20.0)) / naive.eta_stderr();
    assert!(bias.abs() > 3.0, "naive bias {bias}σ");
}

#[test]
fn noise_only_samples_are_reported_as_noise_dominated() {
    let mut r = rng(12);
    let scale = K_B * T_BATH;
    let e: Vec<f64> = (0..5000)
        .map(|_| {
            let x: f64 = r.sample(StandardNormal);
            let y: f64 = r.sample(StandardNormal);
            0.5 * scale * (x * x + y * y)
        })
        .collect();
    // demodulated white noise is exponential
    let (_, p) = ks_exponential(&e);
    assert!(p > 0.01);
    match fit_energy_distribution(&e, MASS, &FitOptions::known_noise(scale)) {
        Err(Error::NoiseDominated { .. }) => {}
        Err(other) => panic!("expected noise-dominated, got {other}"),
        Ok(d) => panic!("expected noise-dominated, fitted T = {} K", d.fit.temperature),
    }
}

fn ou_series(gamma: f64, fs: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let rho = (-gamma / fs).exp();
    let kick = (1.0 - rho * rho).sqrt();
    let mut v = 0.0;
    (0..n)
        .map(|_| {
            v = rho * v + kick * r.sample::<f64, _>(StandardNormal);
            3.0 + v
        })
        .collect()
}

#[test]
fn r2_fit_recovers_ornstein_uhlenbeck_rate_and_scales_its_error() {
    let gamma = 50.0;
    let fs = 2000.0;
    let short = r2_psd_decay(&ou_series(gamma, fs, 1 << 17, 5), fs).unwrap();
    assert!((short.gamma_r / gamma - 1.0).abs() < 0.1, "{}", short.gamma_r);
    let long = r2_psd_decay(&ou_series(gamma, fs, 1 << 18, 6), fs).unwrap();
    assert!((long.gamma_r / gamma - 1.0).abs() < 0.1, "{}", long.gamma_r);
    let ratio = short.stderr / long.stderr;
    assert!((ratio / 2f64.sqrt() - 1.0).abs() < 0.3, "stderr ratio {ratio}");
    match r2_psd_decay(&ou_series(gamma, fs, 600, 7), fs) {
        Err(Error::RecordTooShort { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn thermal_energy_decays_at_the_gas_damping_rate() {
    let osc = oscillator(20e3, 300.0);
    let rec = reduced_record(&osc, 0.8, 3, 0);
    let bw = demod_bandwidth(20e3, rec.sample_rate, osc.gamma_g);
    let d = demodulate(&rec.x, rec.sample_rate, 20e3, bw).unwrap();
    let r2: Vec<f64> = d.amplitude.iter().map(|r| r * r).collect();
    let fit = r2_psd_decay(&r2, rec.sample_rate).unwrap();
    assert!((fit.gamma_r / osc.gamma_g - 1.0).abs() < 0.15, "γ_R/γ_g {}", fit.gamma_r / osc.gamma_g);
    let stride = decorrelation_stride(rec.sample_rate, fit.gamma_r);
    let e = decorrelate(&energy_series(&d.amplitude, osc.mass, osc.omega_m), stride);
    assert!(autocorrelation_at(&e, 1).abs() < 0.1);
}

#[test]
fn psd_area_temperature_of_a_thermal_oscillator() {
    let osc = oscillator(100e3, 100.0);
    let rec = reduced_record(&osc, 0.5, 9, 0);
    let s = welch_psd(&rec.x, rec.sample_rate, 8192, 0.5, Window::Hann).unwrap();
    let t = teff_from_psd_area(&s, osc.mass, osc.omega_m, 0.0).unwrap();
    assert!((t.temperature / T_BATH - 1.0).abs() < 0.05, "{}", t.temperature);
}

#[test]
fn noise_only_spectrum_has_no_resolvable_peak() {
    let mut r = rng(10);
    let fs = 250e3;
    let floor: f64 = 1e-22;
    let sigma = (floor * fs / 2.0).sqrt();
    let x: Vec<f64> = (0..1 << 17).map(|_| sigma * r.sample::<f64, _>(StandardNormal)).collect();
    let s = welch_psd(&x, fs, 4096, 0.5, Window::Hann).unwrap();
    match teff_from_psd_area(&s, MASS, 2.0 * PI * 20e3, floor) {
        Err(Error::PeakNotResolved { .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn pinned_temperature_fit_terminates_on_flat_likelihoods() {
    for (i, beta_kt) in [3.0, 10.0, 30.0, 100.0, 300.0].into_iter().enumerate() {
        let model = EnergyDistModel::from_gain(T_BATH, eta_for(beta_kt), MASS).unwrap();
        for seed in 0..12 {
            let e = sample_energy(model.linear_coefficient(), model.quadratic_coefficient(), 2500, 100 * i as u64 + seed);
            let fit = fit_energy_distribution(&e, MASS, &FitOptions::default().with_temperature(T_BATH));
            assert!(fit.is_ok(), "βkT {beta_kt}, seed {seed}: {:?}", fit.err());
        }
    }
}
