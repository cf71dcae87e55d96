//! End-to-end acceptance checks, one line per criterion.
//!
//! Run with `cargo test -p quadcool --test acceptance`. Criteria listed in
//! `KNOWN_RED` are reported but do not fail the run.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use quadcool::commands::sweep;
use quadcool::config::ExperimentConfig;
use quadcool::manifest::Manifest;
use quadcool::pipeline::{Context, Setup};
use quadcool_core::analysis::{fit_energy_distribution, FitOptions};
use quadcool_core::constants::{HBAR, K_B, N2_MASS, SILICA_PERMITTIVITY};
use quadcool_core::params::{
    max_frequency_shift, BeamParams, CavityParams, DetuningReference, GasParams, ParticleParams, SystemParams,
};
use quadcool_core::sim::{
    simulate_averaged, simulate_full, simulate_reduced, BurnIn, ColumnKind, InitialState, ModelTier, OscillatorModel,
    SimConfig, Trajectory,
};
use quadcool_core::theory::{balance_damping, effective_temperature, low_pressure_gamma_eff, EnergyDistModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use tempfile::TempDir;

const KNOWN_RED: &[u32] = &[4];

const MASS: f64 = 4.88e-17;
const T_BATH: f64 = 295.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn eta_for(beta_kt: f64) -> f64 {
    4.0 * MASS * beta_kt / (K_B * T_BATH)
}

/// Asymptotic Kolmogorov p-value with the small-sample correction.
fn ks_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let l = (sn + 0.12 + 0.11 / sn) * d;
    let mut s = 0.0;
    for k in 1..200 {
        let k = k as f64;
        s += 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * l * l).exp();
    }
    s.clamp(0.0, 1.0)
}

fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &e)| {
            let f = cdf(e);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Slope and intercept of the least-squares line.
fn line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

fn col<'a>(t: &'a Trajectory, kind: ColumnKind) -> &'a [f64] {
    t.column(kind).expect("column present")
}

fn energies(t: &Trajectory, m: f64, omega: f64, stride: usize) -> Vec<f64> {
    let (x, p) = (col(t, ColumnKind::X), col(t, ColumnKind::P));
    x.iter()
        .zip(p)
        .step_by(stride.max(1))
        .map(|(x, p)| p * p / (2.0 * m) + 0.5 * m * omega * omega * x * x)
        .collect()
}

const THERMAL: &str = r#"
[system.overrides]
trap_frequency_hz = 100e3
gain_s2_per_m2 = 0.0
duffing_per_m2 = 0.0

[system.gas]
pressure_mbar = 1.0
bath_temperature_k = 295.0
molecule_mass_amu = 28.0134
damping_per_s = 6283.185

[sim]
model = "reduced"
duration_s = 0.05
seed = 11
n_trajectories = 100
record_stride = 50
"#;

fn equipartition_null() -> Outcome {
    let cfg = ExperimentConfig::from_toml(THERMAL).unwrap();
    let setup = Setup::new(&cfg).unwrap();
    let osc = setup.oscillator;
    let trajectories: Vec<Trajectory> = setup.simulate_all().into_iter().map(Result::unwrap).collect();
    let (mut sum, mut n) = (0.0, 0usize);
    for t in &trajectories {
        let x = col(t, ColumnKind::X);
        sum += x.iter().map(|v| v * v).sum::<f64>();
        n += x.len();
    }
    let x2 = sum / n as f64;
    let expected = K_B * T_BATH / (MASS * osc.omega_m * osc.omega_m);
    let stride = (3.0 / osc.gamma_g * trajectories[0].sample_rate).ceil() as usize;
    let samples: Vec<f64> = trajectories.iter().flat_map(|t| energies(t, MASS, osc.omega_m, stride)).collect();
    let fit = fit_energy_distribution(&samples, MASS, &FitOptions::default()).unwrap().fit;
    let dev = x2 / expected - 1.0;
    let eta_z = fit.eta / fit.eta_stderr();
    outcome(
        dev.abs() < 0.03 && fit.ks_p_value > 0.01,
        format!(
            "<x²> off by {:+.2}% (3%), KS p = {:.3} on {} samples (>0.01), eta/σ = {:+.2}",
            100.0 * dev,
            fit.ks_p_value,
            samples.len(),
            eta_z
        ),
    )
}

/// Cavity with U0/κ ≈ 60 so the cavity-induced Duffing term dominates the
/// geometric one from the sin 2kx force profile.
fn oracle_system(delta: f64) -> (SystemParams, f64) {
    let two_pi = 2.0 * PI;
    let kappa = two_pi * 143e3;
    let kappa_in = two_pi * 69e3;
    let cavity = CavityParams::new(14.58e-3, 1064e-9, kappa, kappa_in, 10e-6).unwrap();
    let radius: f64 = 275e-9;
    let mass = 1840.0 * 4.0 / 3.0 * PI * radius.powi(3);
    let particle = ParticleParams::new(mass, radius, SILICA_PERMITTIVITY).unwrap();
    let k = cavity.wavenumber();
    let g2 = k * k * max_frequency_shift(&particle, &cavity);
    let omega = 0.1 * kappa;
    let photons = omega * omega * mass / (2.0 * HBAR * g2);
    let power =
        photons * kappa * kappa * (1.0 + delta * delta) * HBAR * cavity.laser_angular_frequency() / (2.0 * kappa_in);
    let trap = BeamParams::trap(power, delta * kappa, DetuningReference::Hot).unwrap();
    let probe = BeamParams::probe(0.0, 0.0, DetuningReference::Hot, cavity.length / 4.0, &cavity).unwrap();
    let gas = GasParams::new(0.0, T_BATH, N2_MASS, Some(0.0)).unwrap();
    (SystemParams { particle, cavity, trap, probe, gas, secular_frequency: 0.0 }, g2)
}

/// Per-cycle angular frequency, mean squared amplitude and time between
/// upward zero crossings.
fn cycles(t: &Trajectory, m: f64) -> Vec<(f64, f64, f64)> {
    let (x, p) = (col(t, ColumnKind::X), col(t, ColumnKind::P));
    let fs = t.sample_rate;
    let ups: Vec<f64> = (1..x.len())
        .filter(|&i| x[i - 1] < 0.0 && x[i] >= 0.0)
        .map(|i| (i - 1) as f64 + x[i - 1] / (x[i - 1] - x[i]))
        .collect();
    ups.windows(2)
        .map(|w| {
            let omega = 2.0 * PI * fs / (w[1] - w[0]);
            let idx = w[0].ceil() as usize..=w[1].floor() as usize;
            let n = idx.clone().count() as f64;
            let r2 = idx.map(|i| x[i] * x[i] + (p[i] / (m * omega)).powi(2)).sum::<f64>() / n;
            (omega, r2, 0.5 * (w[0] + w[1]) / fs)
        })
        .collect()
}

fn duffing_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for delta in [-0.3, -0.7, -1.2] {
        let (params, g2) = oracle_system(delta);
        let kappa = params.cavity.kappa;
        let k = params.cavity.wavenumber();
        let m = params.particle.mass;
        let omega = params.derive().unwrap().omega_m;
        let d = 1.0 + delta * delta;
        let eps_oracle = 2.0 * g2 / kappa * delta / d;
        let gnl_oracle = 8.0 * g2 / (kappa * kappa) * delta / (d * d);
        let x0 = (0.9e-3 * kappa / g2).sqrt();
        let duration = 12.0 / (x0 * x0 * omega * omega * gnl_oracle.abs());
        let mut c = SimConfig::new(ModelTier::Full, 1.0 / (40.0 * kappa), duration, 1);
        c.record_stride = 20;
        c.thermal_noise = false;
        c.burn_in = BurnIn::Duration(0.0);
        c.initial_state = InitialState::Position { x: x0, p: 0.0 };
        let t = simulate_full(&params, &c, 0).unwrap();
        let cyc = cycles(&t, m);
        let w: Vec<f64> = cyc.iter().map(|c| c.0).collect();
        let r2: Vec<f64> = cyc.iter().map(|c| c.1).collect();
        let time: Vec<f64> = cyc.iter().map(|c| c.2).collect();
        let inv: Vec<f64> = r2.iter().map(|v| 1.0 / v).collect();
        let (a, w0) = line(&r2, &w);
        let eps_geo = -2.0 / 3.0 * k * k;
        let eps = 8.0 * a / (3.0 * w0) - eps_geo;
        let (s, _) = line(&time, &inv);
        let gnl = -4.0 * s / (w0 * w0);
        let (e1, e2) = (eps / eps_oracle - 1.0, gnl / gnl_oracle - 1.0);
        worst = worst.max(e1.abs()).max(e2.abs());
        parts.push(format!("δ={delta}: ε {:+.1}%, γ_nl {:+.1}%", 100.0 * e1, 100.0 * e2));
    }
    outcome(worst < 0.10, format!("{} (10%)", parts.join(", ")))
}

fn energy_distribution() -> Outcome {
    let omega = 2.0 * PI * 100e3;
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, beta_kt) in [0.3, 3.0, 30.0, 300.0].into_iter().enumerate() {
        let eta = eta_for(beta_kt);
        let model = EnergyDistModel::from_gain(T_BATH, eta, MASS).unwrap();
        let gamma_eff = omega / 150.0;
        let gamma_g = gamma_eff * effective_temperature(&model) / T_BATH;
        let osc = OscillatorModel::linear(MASS, omega, gamma_g, T_BATH).with_gain(eta);
        let (mean, var) = (model.mean_energy(), model.energy_variance());
        let gamma_r = gamma_eff * mean * mean / var;
        let spacing = 3.0 / gamma_r;
        let n = 10_000;

        let dt = 0.99 / (50.0 * omega);
        let stride = (spacing / dt).ceil() as usize;
        let mut c = SimConfig::new(ModelTier::Reduced, dt, n as f64 * stride as f64 * dt, 40 + i as u64);
        c.record_stride = stride;
        let t = simulate_reduced(&osc, &c, 0).unwrap();
        let e = energies(&t, MASS, omega, 1);
        let p = ks_p(ks_statistic(&e, |v| model.cdf(v)), e.len());
        let reduced_mean = e.iter().sum::<f64>() / e.len() as f64;

        let dt_a = 1.0 / (50.0 * gamma_eff);
        let mut c = SimConfig::new(ModelTier::Averaged, dt_a, n as f64 * spacing, 50 + i as u64);
        c.record_stride = (spacing / dt_a).ceil() as usize;
        let t = simulate_averaged(&osc, &c, 0).unwrap();
        let r = col(&t, ColumnKind::R);
        let averaged_mean = r.iter().map(|r| 0.5 * MASS * omega * omega * r * r).sum::<f64>() / r.len() as f64;
        let dev = averaged_mean / reduced_mean - 1.0;

        pass &= p > 0.01 && dev.abs() < 0.05;
        parts.push(format!("βkT={beta_kt}: p={p:.3}, avg/red {:+.1}%", 100.0 * dev));
    }
    outcome(pass, format!("{} (p>0.01, 5%)", parts.join("; ")))
}

fn low_pressure_limits() -> Outcome {
    let gamma_g = 2.0;
    let mut worst: f64 = 0.0;
    let mut identity: f64 = 0.0;
    let mut parts = Vec::new();
    for beta_kt in [150.0, 300.0, 600.0, 1000.0] {
        let eta = eta_for(beta_kt);
        let model = EnergyDistModel::from_gain(T_BATH, eta, MASS).unwrap();
        let t_eff = effective_temperature(&model);
        let closed = (4.0 * MASS * T_BATH / (PI * K_B * eta)).sqrt();
        let dev = t_eff / closed - 1.0;
        worst = worst.max(dev.abs());
        parts.push(format!("{:+.2}%", 100.0 * dev));
        let g_eff = balance_damping(gamma_g, &model);
        identity = identity.max((t_eff * g_eff / (T_BATH * gamma_g) - 1.0).abs());
        let g_lp = low_pressure_gamma_eff(gamma_g, MASS, T_BATH, eta).unwrap();
        let t_lp = quadcool_core::theory::low_pressure_teff(MASS, T_BATH, eta).unwrap();
        identity = identity.max((t_lp * g_lp / (T_BATH * gamma_g) - 1.0).abs());
    }
    outcome(
        worst < 0.01 && identity < 1e-9,
        format!(
            "quadrature vs closed form at βkT 150..1000: {} (1%); T_eff·γ_eff identity {:.1e} (1e-9)",
            parts.join(", "),
            identity
        ),
    )
}

const PRESSURE_SWEEP: &str = r#"
[system.gas]
pressure_mbar = 1e-4
bath_temperature_k = 295.0
molecule_mass_amu = 28.0134

[sim]
model = "averaged"
duration_s = 200.0
seed = 5
n_trajectories = 1
record_stride = 2

[sweep]
parameter = "system.gas.pressure_mbar"
values = { start = 1e-5, stop = 1e-3, points_per_decade = 5.0 }
"#;

fn pressure_scaling() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let cfg = ExperimentConfig::from_toml(PRESSURE_SWEEP).unwrap();
    let (_, rows) = sweep(&cfg, tmp.path()).unwrap();
    let lp: Vec<f64> = rows.iter().map(|r| r.value.log10()).collect();
    let sim: Vec<f64> = rows.iter().map(|r| r.t_eff_sim.log10()).collect();
    let theory: Vec<f64> = rows.iter().map(|r| r.t_eff_theory.log10()).collect();
    let ok = rows.iter().all(|r| r.succeeded());
    let (slope, _) = line(&lp, &sim);
    let (slope_theory, _) = line(&lp, &theory);
    outcome(
        ok && (slope - 0.5).abs() < 0.05,
        format!(
            "{} points, 1e-5..1e-3 mbar: slope {slope:.3} (0.5 ± 0.05), theory {slope_theory:.3}",
            rows.len()
        ),
    )
}

fn gamma_config(damping: f64, gain: f64, duration: f64, seed: u64) -> ExperimentConfig {
    let omega = 2.0 * PI * 100e3;
    ExperimentConfig::from_toml(&format!(
        r#"
[system.overrides]
trap_frequency_hz = 100e3
gain_s2_per_m2 = {gain:e}
duffing_per_m2 = 0.0

[system.gas]
pressure_mbar = 1.0
bath_temperature_k = 295.0
molecule_mass_amu = 28.0134
damping_per_s = {damping:e}

[sim]
model = "reduced"
dt_s = {dt:e}
duration_s = {duration:e}
seed = {seed}
n_trajectories = 1
record_stride = 25
"#,
        dt = 0.99 / (50.0 * omega),
    ))
    .unwrap()
}

fn gamma_chain() -> Outcome {
    let omega = 2.0 * PI * 100e3;
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, damping, gain, duration) in
        [("thermal", omega / 100.0, 0.0, 1.0), ("deep", omega / 3000.0, eta_for(100.0), 3.0)]
    {
        let cfg = gamma_config(damping, gain, duration, 21);
        let setup = Setup::new(&cfg).unwrap();
        let t = setup.simulate_one(0).unwrap();
        let report = Context::new(&cfg, &setup).analyze(&t).unwrap();
        let measured = report.gamma_eff.unwrap_or(f64::NAN);
        let theory = balance_damping(damping, &setup.oscillator.energy_model().unwrap());
        let dev = measured / theory - 1.0;
        pass &= dev.abs() < 0.15;
        parts.push(format!("{label}: γ_eff {measured:.0}/s vs {theory:.0}/s ({:+.1}%)", 100.0 * dev));
    }
    outcome(pass, format!("{} (15%)", parts.join("; ")))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rejection sampling of `exp(-aE - bE²)` with an exponential proposal.
fn sample_energy(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let exp = Exp::new(a).unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let e: f64 = exp.sample(&mut r);
        if r.random::<f64>() < (-b * e * e).exp() {
            out.push(e);
        }
    }
    out
}

fn add_detection_noise(motion: &[f64], noise: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let s = (noise / 2.0).sqrt();
    motion
        .iter()
        .map(|&e| {
            let th = 2.0 * PI * r.random::<f64>();
            let gx: f64 = r.sample(StandardNormal);
            let gy: f64 = r.sample(StandardNormal);
            (e.sqrt() * th.cos() + s * gx).powi(2) + (e.sqrt() * th.sin() + s * gy).powi(2)
        })
        .collect()
}

fn noisy_fit() -> Outcome {
    let eta = eta_for(20.0);
    let model = EnergyDistModel::from_gain(T_BATH, eta, MASS).unwrap();
    let motion = sample_energy(model.linear_coefficient(), model.quadratic_coefficient(), 40_000, 71);
    let noise = 0.3 * model.mean_energy();
    let measured = add_detection_noise(&motion, noise, 72);
    // the bath temperature is known, so η is the motion parameter being fitted
    let f = fit_energy_distribution(&measured, MASS, &FitOptions::noisy().with_temperature(T_BATH)).unwrap().fit;
    let z_eta = (f.eta - eta) / f.eta_stderr();
    let z_noise = (f.noise_mean_energy - noise) / f.noise_stderr();
    let naive = fit_energy_distribution(&measured, MASS, &FitOptions::default().with_temperature(T_BATH)).unwrap().fit;
    let bias = (naive.eta - eta) / naive.eta_stderr();
    outcome(
        z_eta.abs() < 2.0 && bias.abs() > 3.0,
        format!("noisy fit η z = {z_eta:+.2} (<2σ), noise z = {z_noise:+.2}; naive η bias {bias:+.1}σ (>3σ)"),
    )
}

fn reference_scale() -> Outcome {
    let p = SystemParams::reference_setup();
    let d = p.derive().unwrap();
    let f = d.omega_m / (2.0 * PI);
    let u0_kappa = d.u0 / p.cavity.kappa;
    // lowest pressure in the experimental range, 5.4e-6 mbar
    let low = p.with_pressure(5.4e-4).derive().unwrap();
    let eta = low.gamma_nl.abs() / low.gamma_g;
    let model = EnergyDistModel::from_gain(T_BATH, eta, p.particle.mass).unwrap();
    let ratio = T_BATH / effective_temperature(&model);
    let in_factor = (0.5..=2.0).contains(&(f / 51e3));
    outcome(
        in_factor && (0.1..=10.0).contains(&u0_kappa) && ratio > 100.0,
        format!("Ω/2π = {:.1} kHz (25.5..102), U0/κ = {u0_kappa:.2}, T/T_eff = {ratio:.0} at 5.4e-6 mbar (>100)", f / 1e3),
    )
}

fn quadcool(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_quadcool")).args(args).output().map(|o| o.status.success()).unwrap_or(false)
}

fn products(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let m = Manifest::read(&dir.join("manifest.json")).unwrap();
    m.outputs.into_iter().map(|f| (f.path.clone(), fs::read(dir.join(&f.path)).unwrap())).collect()
}

fn rerun(command: &str, cfg: &str, extra: &[&str], root: &Path) -> bool {
    let a = root.join(format!("{command}-a"));
    let b = root.join(format!("{command}-b"));
    let (sa, sb) = (a.display().to_string(), b.display().to_string());
    let mut args = vec![command, "--config", cfg, "--out", &sa];
    args.extend(extra);
    if !quadcool(&args) {
        return false;
    }
    let manifest = a.join("manifest.json").display().to_string();
    quadcool(&[command, "--config", &manifest, "--out", &sb]) && {
        let pa = products(&a);
        !pa.is_empty() && pa == products(&b)
    }
}

fn determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let root = tmp.path();
    let small = THERMAL.replace("n_trajectories = 100", "n_trajectories = 3").replace("duration_s = 0.05", "duration_s = 0.02");
    let cfg = root.join("thermal.toml");
    fs::write(&cfg, &small).unwrap();
    let cfg = cfg.display().to_string();
    let sweep_cfg = root.join("sweep.toml");
    fs::write(
        &sweep_cfg,
        small.replace("n_trajectories = 3", "n_trajectories = 2")
            + "\n[sweep]\nparameter = \"system.overrides.gain_s2_per_m2\"\nvalues = [0.0, 1e5, 1e6, 4e6]\n",
    )
    .unwrap();
    let sweep_cfg = sweep_cfg.display().to_string();

    let mut failed = Vec::new();
    for (command, c) in [("theory", &cfg), ("simulate", &cfg), ("sweep", &sweep_cfg)] {
        if !rerun(command, c, &[], root) {
            failed.push(command);
        }
    }
    let input = root.join("simulate-a").join("traj_0000.csv").display().to_string();
    if !rerun("analyze", &cfg, &[&input], root) {
        failed.push("analyze");
    }
    let (serial, parallel) = (root.join("serial"), root.join("parallel"));
    let serial_ok = quadcool(&["sweep", "--config", &sweep_cfg, "--out", &serial.display().to_string(), "--threads", "1"])
        && quadcool(&["sweep", "--config", &sweep_cfg, "--out", &parallel.display().to_string(), "--threads", "4"])
        && products(&serial) == products(&parallel);
    if !serial_ok {
        failed.push("serial/parallel sweep");
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "theory, simulate, analyze, sweep rerun byte-identical; 1 vs 4 thread sweep identical".into()
        } else {
            format!("mismatch: {}", failed.join(", "))
        },
    )
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 9] = [
        (1, equipartition_null),
        (2, duffing_oracle),
        (3, energy_distribution),
        (4, low_pressure_limits),
        (5, pressure_scaling),
        (6, gamma_chain),
        (7, noisy_fit),
        (8, reference_scale),
        (9, determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut unexpected = Vec::new();
    for (n, check) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let mut o = check();
        let secs = start.elapsed().as_secs_f64();
        if n == 1 && secs > 120.0 {
            o.pass = false;
            o.detail.push_str("; over 2 min");
        }
        let status = match (o.pass, KNOWN_RED.contains(&n)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(n);
                "FAIL"
            }
        };
        println!("criterion {n}  {status}  {}  ({secs:.1} s)", o.detail);
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
