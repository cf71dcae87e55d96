use std::f64::consts::PI;

use quadcool_core::constants::K_B;
use quadcool_core::numeric::stats::{mean, variance};
use quadcool_core::params::{BeamParams, DetuningReference, SystemParams};
use quadcool_core::sim::{
    measurement_channel, simulate, simulate_averaged, simulate_full, simulate_reduced, BurnIn, ColumnKind,
    InitialState, ModelTier, OscillatorModel, SimConfig, Trajectory,
};
use quadcool_core::analysis::{welch_psd, Window};
use quadcool_core::Error;

const MASS: f64 = 4.88e-17;
const T_BATH: f64 = 295.0;

fn test_oscillator(q: f64) -> OscillatorModel {
    let omega = 2.0 * PI * 20e3;
    OscillatorModel::linear(MASS, omega, omega / q, T_BATH)
}

fn cfg(model: ModelTier, dt: f64, duration: f64, seed: u64) -> SimConfig {
    SimConfig::new(model, dt, duration, seed)
}

fn oscillator_energy(t: &Trajectory, m: f64, omega: f64) -> Vec<f64> {
    let x = t.column(ColumnKind::X).unwrap();
    let p = t.column(ColumnKind::P).unwrap();
    x.iter().zip(p).map(|(x, p)| 0.5 * p * p / m + 0.5 * m * omega * omega * x * x).collect()
}

#[test]
fn reduced_linear_oscillator_obeys_equipartition() {
    let osc = test_oscillator(100.0);
    let mut c = cfg(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), 60.0 / osc.gamma_g, 11);
    c.burn_in = BurnIn::Duration(0.0);
    c.record_stride = 25;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..100 {
        let t = simulate_reduced(&osc, &c, i).unwrap();
        for x in t.column(ColumnKind::X).unwrap() {
            sum += x * x;
            count += 1;
        }
    }
    let ratio = sum / count as f64 / osc.thermal_variance();
    assert!((ratio - 1.0).abs() < 0.03, "<x²>/(kT/mΩ²) = {ratio}");
}

#[test]
fn nonlinear_damping_accelerates_ring_down() {
    let osc = test_oscillator(1000.0);
    let r0 = 200.0 * osc.thermal_variance().sqrt();
    // γ_nl chosen so the initial extra damping Ω²|γ_nl|R²/4 is 10 γ_g
    let gamma_nl = -40.0 * osc.gamma_g / (osc.omega_m * osc.omega_m * r0 * r0);
    let osc = OscillatorModel { gamma_nl, ..osc };
    let mut c = cfg(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), 0.5 / osc.gamma_g, 0);
    c.thermal_noise = false;
    c.burn_in = BurnIn::Duration(0.0);
    c.initial_state = InitialState::Amplitude { r: r0, phase: 0.0 };
    let t = simulate_reduced(&osc, &c, 0).unwrap();
    let e = oscillator_energy(&t, MASS, osc.omega_m);
    let times = t.column(ColumnKind::Time).unwrap();
    for (k, (&ti, &ei)) in times.iter().zip(&e).enumerate().skip(1000).step_by(500) {
        let envelope = e[0] * (-osc.gamma_g * ti / 2.0).exp();
        assert!(ei < envelope, "sample {k}: {ei} vs {envelope}");
    }
}

#[test]
fn averaged_amplitude_is_rayleigh_without_nonlinear_damping() {
    let osc = test_oscillator(300.0);
    let mut c = cfg(ModelTier::Averaged, 0.05 / osc.gamma_g, 200.0 / osc.gamma_g, 5);
    c.burn_in = BurnIn::Duration(0.0);
    c.record_stride = 20;
    let mut r2 = Vec::new();
    for i in 0..100 {
        let t = simulate_averaged(&osc, &c, i).unwrap();
        let r = t.column(ColumnKind::R).unwrap();
        assert!(r.iter().all(|&v| v > 0.0));
        r2.extend(r.iter().map(|v| v * v));
    }
    let ratio = mean(&r2) / (2.0 * osc.thermal_variance());
    assert!((ratio - 1.0).abs() < 0.03, "<R²> ratio {ratio}");
    // Rayleigh ⇔ R² exponential: coefficient of variation 1
    let cv2 = variance(&r2) / mean(&r2).powi(2);
    assert!((cv2 - 1.0).abs() < 0.06, "CV² {cv2}");
}

#[test]
fn averaged_phase_diffuses_linearly_without_duffing_term() {
    let osc = test_oscillator(300.0);
    let mut c = cfg(ModelTier::Averaged, 0.05 / osc.gamma_g, 400.0 / osc.gamma_g, 9);
    c.burn_in = BurnIn::Duration(10.0 / osc.gamma_g);
    // lags of 2, 4, 8 and 16 damping times, past the amplitude memory
    let lags = [40usize, 80, 160, 320];
    let mut msd = [0.0; 4];
    let mut counts = [0.0; 4];
    for i in 0..100 {
        let t = simulate_averaged(&osc, &c, i).unwrap();
        let phi = t.column(ColumnKind::Phi).unwrap();
        for (k, &lag) in lags.iter().enumerate() {
            for j in (0..phi.len() - lag).step_by(lag / 2) {
                msd[k] += (phi[j + lag] - phi[j]).powi(2);
                counts[k] += 1.0;
            }
        }
    }
    let slopes: Vec<f64> = (0..4).map(|k| msd[k] / counts[k] / lags[k] as f64).collect();
    for s in &slopes[1..] {
        assert!((s / slopes[0] - 1.0).abs() < 0.1, "{slopes:?}");
    }
}

/// Cooling oscillator with βk_BT = 10 and Q = 300.
fn cooled_oscillator() -> OscillatorModel {
    let base = test_oscillator(300.0);
    let eta = 4.0 * MASS * 10.0 / (K_B * T_BATH);
    OscillatorModel { eps_d: -2e12, ..base }.with_gain(eta)
}

fn reduced_mean_energy(osc: &OscillatorModel, dt: f64, n: u64, seed: u64) -> (f64, f64) {
    let mut c = cfg(ModelTier::Reduced, dt, 150.0 / osc.gamma_g, seed);
    c.record_stride = 200;
    let per_traj: Vec<f64> = (0..n)
        .map(|i| mean(&oscillator_energy(&simulate_reduced(osc, &c, i).unwrap(), osc.mass, osc.omega_m)))
        .collect();
    (mean(&per_traj), (variance(&per_traj) / n as f64).sqrt())
}

#[test]
fn averaged_and_reduced_tiers_agree_on_mean_energy() {
    let osc = cooled_oscillator();
    let (reduced, _) = reduced_mean_energy(&osc, 1.0 / (50.0 * osc.omega_m), 24, 3);
    let mut c = cfg(ModelTier::Averaged, 0.02 / osc.predicted_gamma_eff(), 150.0 / osc.gamma_g, 4);
    c.record_stride = 10;
    let mut e = Vec::new();
    for i in 0..200 {
        let t = simulate_averaged(&osc, &c, i).unwrap();
        e.extend(t.column(ColumnKind::R).unwrap().iter().map(|r| 0.5 * osc.mass * osc.omega_m.powi(2) * r * r));
    }
    let averaged = mean(&e);
    let theory = osc.energy_model().unwrap().mean_energy();
    assert!((averaged / reduced - 1.0).abs() < 0.05, "averaged {averaged}, reduced {reduced}");
    assert!((averaged / theory - 1.0).abs() < 0.05, "averaged {averaged}, theory {theory}");
}

#[test]
fn averaged_tier_relaxes_from_the_bath_at_the_largest_allowed_step() {
    // βk_BT = 1e3: a bath-temperature start sits far above the cooled state
    let base = test_oscillator(1e6);
    let osc = base.with_gain(4.0 * MASS * 1e3 / (K_B * T_BATH));
    let g = osc.predicted_gamma_eff();
    let mut c = cfg(ModelTier::Averaged, 1.0 / (10.0 * g), 2000.0 / g, 9);
    c.burn_in = BurnIn::Duration(0.0);
    let mut e = Vec::new();
    for i in 0..20 {
        let t = simulate_averaged(&osc, &c, i).unwrap();
        let r = t.column(ColumnKind::R).unwrap();
        e.extend(r[r.len() / 10..].iter().map(|r| 0.5 * osc.mass * osc.omega_m.powi(2) * r * r));
    }
    let theory = osc.energy_model().unwrap().mean_energy();
    assert!((mean(&e) / theory - 1.0).abs() < 0.1, "{} vs {theory}", mean(&e));
}

#[test]
fn halving_the_step_leaves_the_mean_energy_within_monte_carlo_error() {
    let osc = cooled_oscillator();
    let dt = 1.0 / (50.0 * osc.omega_m);
    let (e1, s1) = reduced_mean_energy(&osc, dt, 16, 21);
    let (e2, s2) = reduced_mean_energy(&osc, dt / 2.0, 16, 22);
    let se = (s1 * s1 + s2 * s2).sqrt();
    assert!((e1 - e2).abs() < 2.0 * se, "{e1} vs {e2}, se {se}");
}

#[test]
fn blue_detuning_runs_away_as_dynamical_instability() {
    let mut p = SystemParams::reference_setup();
    p.trap = BeamParams::trap(p.trap.input_power, 2.0 * PI * 100e3, DetuningReference::Hot).unwrap();
    let osc = OscillatorModel::from_system(&p).unwrap();
    assert!(osc.gamma_nl > 0.0);
    let mut c = cfg(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), 0.5, 1);
    c.burn_in = BurnIn::Duration(0.0);
    match simulate_reduced(&osc, &c, 0) {
        Err(e @ Error::Diverged { time, .. }) => {
            assert!(time > 0.0 && time < 0.5);
            assert!(e.to_string().contains("dynamical instability"), "{e}");
        }
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn reruns_are_bit_identical_and_indices_are_independent() {
    let osc = test_oscillator(100.0);
    let c = cfg(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), 200.0 / osc.gamma_g, 77);
    let a = simulate_reduced(&osc, &c, 0).unwrap();
    let b = simulate_reduced(&osc, &c, 0).unwrap();
    assert_eq!(a, b);
    let other = simulate_reduced(&osc, &c, 1).unwrap();
    let x = a.column(ColumnKind::X).unwrap();
    let y = other.column(ColumnKind::X).unwrap();
    let (mx, my) = (mean(x), mean(y));
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / x.len() as f64;
    let corr = cov / (variance(x) * variance(y)).sqrt();
    // ~200 correlation times per record
    assert!(corr.abs() < 0.25, "cross-correlation {corr}");
}

#[test]
fn step_bounds_are_enforced_unless_overridden() {
    let osc = test_oscillator(100.0);
    let mut c = cfg(ModelTier::Reduced, 1.0 / (10.0 * osc.omega_m), 1e-3, 0);
    assert!(matches!(simulate_reduced(&osc, &c, 0), Err(Error::StepTooLarge { .. })));
    c.allow_large_step = true;
    c.burn_in = BurnIn::Duration(0.0);
    assert!(simulate_reduced(&osc, &c, 0).is_ok());
    let p = SystemParams::reference_setup();
    let c = cfg(ModelTier::Full, 1.0 / (5.0 * p.cavity.kappa), 1e-4, 0);
    assert!(matches!(simulate_full(&p, &c, 0), Err(Error::StepTooLarge { .. })));
}

fn fields_off(mut p: SystemParams) -> SystemParams {
    p.trap.input_power = 0.0;
    p.probe.input_power = 0.0;
    p
}

#[test]
fn full_model_without_light_is_a_damped_oscillator() {
    let mut p = fields_off(SystemParams::reference_setup());
    let omega_o = 2.0 * PI * 10e3;
    let gamma = omega_o / 1000.0;
    p.secular_frequency = omega_o;
    p.gas.explicit_damping = Some(gamma);
    let mut c = cfg(ModelTier::Full, 1.0 / (20.0 * p.cavity.kappa), 5.0 / gamma, 0);
    c.thermal_noise = false;
    c.burn_in = BurnIn::Duration(0.0);
    c.record_stride = 100;
    c.initial_state = InitialState::Position { x: 20e-9, p: 0.0 };
    let t = simulate_full(&p, &c, 0).unwrap();
    let e = oscillator_energy(&t, MASS, omega_o);
    let times = t.column(ColumnKind::Time).unwrap();
    for (i, (&ti, &ei)) in times.iter().zip(&e).enumerate().step_by(97) {
        let expected = e[0] * (-gamma * ti).exp();
        assert!((ei / expected - 1.0).abs() < 0.01, "sample {i}: {ei} vs {expected}");
    }
}

#[test]
fn particle_at_rest_on_the_antinode_stays_there() {
    let mut p = SystemParams::reference_setup();
    p.probe.input_power = 0.0;
    let mut c = cfg(ModelTier::Full, 1.0 / (20.0 * p.cavity.kappa), 2e-4, 0);
    c.thermal_noise = false;
    c.burn_in = BurnIn::Duration(0.0);
    c.initial_state = InitialState::Position { x: 0.0, p: 0.0 };
    let t = simulate_full(&p, &c, 0).unwrap();
    assert!(t.column(ColumnKind::X).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn full_model_oscillates_at_the_predicted_trap_frequency() {
    let mut p = SystemParams::reference_setup();
    p.trap = BeamParams::trap(p.trap.input_power, -0.7 * p.cavity.kappa, DetuningReference::Hot).unwrap();
    let d = p.derive().unwrap();
    let mut c = cfg(ModelTier::Full, 1.0 / (20.0 * p.cavity.kappa), 0.02, 8);
    c.burn_in = BurnIn::Duration(1e-3);
    c.record_stride = 10;
    let t = simulate_full(&p, &c, 0).unwrap();
    let x = t.column(ColumnKind::X).unwrap();
    let s = welch_psd(x, t.sample_rate, 8192, 0.5, Window::Hann).unwrap();
    let peak = s.psd.iter().enumerate().skip(1).max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    let f = s.frequencies[peak];
    let predicted = d.omega_m / (2.0 * PI);
    assert!((f / predicted - 1.0).abs() < 0.02, "peak {f} Hz, predicted {predicted} Hz");
}

#[test]
fn measurement_channel_adds_independent_white_noise() {
    let osc = test_oscillator(100.0);
    let c = cfg(ModelTier::Reduced, 1.0 / (50.0 * osc.omega_m), 20.0 / osc.gamma_g, 2);
    let t = simulate_reduced(&osc, &c, 3).unwrap();
    let same = measurement_channel(&t, 0.0, 1).unwrap();
    assert_eq!(same.column(ColumnKind::YMeas).unwrap(), t.column(ColumnKind::X).unwrap());

    let mut quiet = t.clone();
    let n = quiet.len();
    quiet.set_column(ColumnKind::X, vec![0.0; n]).unwrap();
    let floor = 1e-24;
    let noisy = measurement_channel(&quiet, floor, 1).unwrap();
    let s = welch_psd(noisy.column(ColumnKind::YMeas).unwrap(), t.sample_rate, 1024, 0.5, Window::Hann).unwrap();
    let interior = &s.psd[1..s.psd.len() - 1];
    assert!((mean(interior) / floor - 1.0).abs() < 0.02);
    // noise comes from its own stream: dynamics untouched, seed matters
    let other = measurement_channel(&t, floor, 2).unwrap();
    assert_eq!(other.column(ColumnKind::X), t.column(ColumnKind::X));
    assert_ne!(other.column(ColumnKind::YMeas), measurement_channel(&t, floor, 1).unwrap().column(ColumnKind::YMeas));
}

#[test]
fn dispatcher_routes_by_tier() {
    let p = SystemParams::reference_setup();
    let osc = OscillatorModel::from_system(&p).unwrap();
    let mut c = cfg(ModelTier::Averaged, 0.1 / osc.predicted_gamma_eff(), 0.01, 0);
    c.burn_in = BurnIn::Duration(0.0);
    let t = simulate(&p, &c, 0).unwrap();
    assert!(t.column(ColumnKind::R).is_some() && t.column(ColumnKind::X).is_none());
    assert!((t.sample_rate - 1.0 / c.dt).abs() < 1e-9 * t.sample_rate);
    t.validate().unwrap();
}
