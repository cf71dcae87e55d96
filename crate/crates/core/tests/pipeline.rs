mod common;

use common::{eta_for, oscillator, reduced_record, MASS, T_BATH};
use quadcool_core::analysis::{analyze_displacement, ks_exponential, PipelineOptions, PipelineReport};
use quadcool_core::constants::K_B;
use quadcool_core::sim::OscillatorModel;
use quadcool_core::theory::{low_pressure_gamma_eff, low_pressure_teff};

fn run(osc: &OscillatorModel, duration: f64, seed: u64) -> PipelineReport {
    let options = PipelineOptions { bath_temperature: Some(T_BATH), ..PipelineOptions::default() };
    let rec = reduced_record(osc, duration, seed, 0);
    analyze_displacement(&rec.x, rec.sample_rate, osc.mass, osc.omega_m, osc.predicted_gamma_eff(), &options).unwrap()
}

#[test]
fn pipeline_recovers_the_gain_of_a_moderately_cooled_oscillator() {
    // Gain of the reference setup at 8.6e-2 mbar.
    let eta = eta_for(3.8585);
    let osc = oscillator(20e3, 200.0).with_gain(eta);
    let report = run(&osc, 6.0, 11);
    let dist = report.distribution.as_ref().unwrap();
    let rel = dist.fit.eta / eta - 1.0;
    println!("eta_hat/eta - 1 = {rel:.4} (n = {}, se = {:.4})", dist.fit.n_samples, dist.fit.eta_stderr() / eta);
    assert!(rel.abs() < 0.15);

    let t_dist = dist.fit.effective_temperature();
    let t_psd = report.psd_temperature.as_ref().unwrap().temperature;
    let theory = osc.energy_model().unwrap().mean_energy() / K_B;
    println!("T_psd = {t_psd:.2}, T_dist = {t_dist:.2}, theory = {theory:.2}");
    assert!((t_psd / t_dist - 1.0).abs() < 0.10);
    assert!(report.bandwidth_warning.is_none());
}

#[test]
fn deep_cooling_damping_and_temperature_follow_the_low_pressure_limits() {
    let osc = oscillator(100e3, 3000.0).with_gain(eta_for(100.0));
    let report = run(&osc, 3.0, 12);
    let gamma_eff = *report.gamma_eff.as_ref().unwrap();
    let predicted = low_pressure_gamma_eff(osc.gamma_g, MASS, T_BATH, osc.gain()).unwrap();
    println!("gamma_eff = {gamma_eff:.1}, low-pressure = {predicted:.1}");
    assert!((gamma_eff / predicted - 1.0).abs() < 0.15);

    let t_eff = report.energy_mean / K_B;
    let t_lp = low_pressure_teff(MASS, T_BATH, osc.gain()).unwrap();
    println!("T_eff = {t_eff:.2}, low-pressure = {t_lp:.2}");
    assert!((t_eff / t_lp - 1.0).abs() < 0.05);

    let dist = report.distribution.as_ref().unwrap();
    let (_, p) = ks_exponential(&dist.samples);
    assert!(t_eff / T_BATH < 0.5);
    assert!(p < 0.01, "exponential null not rejected, p = {p}");
}

#[test]
fn thermal_record_gives_unit_damping_ratio_and_no_gain() {
    let osc = oscillator(100e3, 100.0);
    let report = run(&osc, 1.0, 13);
    let gamma_eff = *report.gamma_eff.as_ref().unwrap();
    println!("gamma_eff/gamma_g = {:.3}", gamma_eff / osc.gamma_g);
    assert!((gamma_eff / osc.gamma_g - 1.0).abs() < 0.15);
    let fit = &report.distribution.as_ref().unwrap().fit;
    assert!(fit.eta < 2.0 * fit.eta_stderr() + 1e-12, "eta = {} ± {}", fit.eta, fit.eta_stderr());
}
