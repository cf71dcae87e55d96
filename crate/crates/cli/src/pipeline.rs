//! Ensemble simulation and per-trajectory analysis shared by the commands.

use quadcool_core::analysis::{
    analyze_amplitude, analyze_displacement, fit_energy_distribution, welch_psd, EnergyDistribution, FitOptions,
    NoiseHandling, PipelineOptions, PipelineReport, Spectrum, Window,
};
use quadcool_core::constants::K_B;
use quadcool_core::params::SystemParams;
use quadcool_core::sim::{
    measurement_channel, simulate_averaged, simulate_full, simulate_reduced, ColumnKind, ModelTier, OscillatorModel,
    SimConfig, Trajectory,
};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, NoiseTreatment};
use crate::error::CliError;
use crate::manifest::params_digest;

/// Resolved physics for one configuration.
pub struct Setup {
    pub params: SystemParams,
    pub oscillator: OscillatorModel,
    pub sim: SimConfig,
    pub measurement_noise: f64,
    pub digest: String,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let params = cfg.system_params()?;
        let mut oscillator = cfg.oscillator()?;
        if cfg.sim.model == crate::config::ModelName::Full && params.secular_frequency > 0.0 {
            let w = params.secular_frequency;
            oscillator.omega_m = (oscillator.omega_m.powi(2) + w * w).sqrt();
        }
        Ok(Self {
            params,
            oscillator,
            sim: cfg.sim_config()?,
            measurement_noise: cfg.sim.measurement_noise_m2_per_hz,
            digest: params_digest(cfg),
        })
    }

    pub fn simulate_one(&self, index: u64) -> Result<Trajectory, CliError> {
        let mut t = match self.sim.model {
            ModelTier::Full => simulate_full(&self.params, &self.sim, index),
            ModelTier::Reduced => simulate_reduced(&self.oscillator, &self.sim, index),
            ModelTier::Averaged => simulate_averaged(&self.oscillator, &self.sim, index),
        }
        .map_err(|e| CliError::core("sim", e))?;
        if self.measurement_noise > 0.0 && t.column(ColumnKind::X).is_some() {
            t = measurement_channel(&t, self.measurement_noise, self.sim.seed).map_err(|e| CliError::core("sim", e))?;
        }
        t.meta.params_digest = self.digest.clone();
        Ok(t)
    }

    /// All trajectories in index order; the schedule does not affect the
    /// result.
    pub fn simulate_all(&self) -> Vec<Result<Trajectory, CliError>> {
        (0..self.sim.n_trajectories as u64).into_par_iter().map(|i| self.simulate_one(i)).collect()
    }
}

/// Inputs of the analysis chain that do not come from the record itself.
#[derive(Debug, Clone)]
pub struct Context {
    pub mass: f64,
    pub omega_m: f64,
    pub gamma_eff_hint: f64,
    pub bath_temperature: f64,
    pub options: PipelineOptions,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig, setup: &Setup) -> Self {
        let a = &cfg.analysis;
        let osc = &setup.oscillator;
        let options = PipelineOptions {
            noise_floor: cfg.noise_floor(),
            noise_handling: match a.noise {
                NoiseTreatment::Ignore => NoiseHandling::Ignore,
                NoiseTreatment::Calibrated => NoiseHandling::Calibrated,
                NoiseTreatment::Free => NoiseHandling::Free,
            },
            bandwidth: a.demod_bandwidth_hz,
            segment_length: a.segment_length,
            decorrelation_stride: a.decorrelation_stride,
            histogram_bins: a.histogram_bins,
            bath_temperature: a.fix_temperature.then_some(osc.bath_temperature),
        };
        Self {
            mass: osc.mass,
            omega_m: osc.omega_m,
            gamma_eff_hint: osc.predicted_gamma_eff().max(osc.omega_m * 1e-9),
            bath_temperature: osc.bath_temperature,
            options,
        }
    }

    /// Displacement records (`y_meas` preferred over `x`) go through
    /// demodulation; amplitude records use `R` directly.
    pub fn analyze(&self, t: &Trajectory) -> Result<PipelineReport, CliError> {
        let series = t.column(ColumnKind::YMeas).or_else(|| t.column(ColumnKind::X));
        let report = match (series, t.column(ColumnKind::R)) {
            (Some(x), _) => analyze_displacement(x, t.sample_rate, self.mass, self.omega_m, self.gamma_eff_hint, &self.options),
            (None, Some(r)) => analyze_amplitude(r, t.sample_rate, self.mass, self.omega_m, self.gamma_eff_hint, &self.options),
            (None, None) => return Err(CliError::Input("record has no x, y_meas or R column".into())),
        };
        report.map_err(|e| CliError::Other(format!("analysis: {e}")))
    }
}

/// One summary row.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub t_eff_psd: f64,
    pub t_eff_dist: f64,
    /// `⟨E⟩/k_B` of the demodulated record.
    pub t_eff_mean: f64,
    pub t_eff_mean_se: f64,
    pub eta_hat: f64,
    pub eta_se: f64,
    pub gamma_r: f64,
    pub gamma_r_se: f64,
    pub gamma_eff: f64,
    pub gamma_eff_se: f64,
    pub ks_p_value: f64,
    pub status: String,
}

impl Summary {
    pub const HEADER: [&'static str; 12] = [
        "T_eff_psd_K",
        "T_eff_dist_K",
        "T_eff_mean_K",
        "T_eff_mean_se_K",
        "eta_hat_s2_per_m2",
        "eta_se_s2_per_m2",
        "gamma_R_per_s",
        "gamma_R_se_per_s",
        "gamma_eff_per_s",
        "gamma_eff_se_per_s",
        "ks_p_value",
        "status",
    ];

    pub fn of(r: &PipelineReport) -> Self {
        let mut errors = Vec::new();
        let t_eff_psd = match &r.psd_temperature {
            Ok(p) => p.temperature,
            Err(quadcool_core::Error::MissingColumn(_)) => f64::NAN,
            Err(e) => {
                errors.push(format!("psd: {e}"));
                f64::NAN
            }
        };
        let (t_eff_dist, eta_hat, eta_se, ks_p_value) = match &r.distribution {
            Ok(d) => (d.fit.effective_temperature(), d.fit.eta, d.fit.eta_stderr(), d.fit.ks_p_value),
            Err(e) => {
                errors.push(format!("fit: {e}"));
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            }
        };
        let (gamma_r, gamma_r_se) = match &r.decay {
            Ok(d) => (d.gamma_r, d.stderr),
            Err(e) => {
                errors.push(format!("decay: {e}"));
                (f64::NAN, f64::NAN)
            }
        };
        let gamma_eff = r.gamma_eff.as_ref().copied().unwrap_or(f64::NAN);
        if let Some(w) = &r.bandwidth_warning {
            errors.push(format!("warning: bandwidth {:.0} Hz below {:.0} Hz", w.bandwidth, w.required));
        }
        Self {
            t_eff_psd,
            t_eff_dist,
            t_eff_mean: r.energy_mean / K_B,
            t_eff_mean_se: r.energy_mean_stderr / K_B,
            eta_hat,
            eta_se,
            gamma_r,
            gamma_r_se,
            gamma_eff,
            gamma_eff_se: gamma_eff * gamma_r_se / gamma_r,
            ks_p_value,
            status: if errors.is_empty() { "ok".into() } else { errors.join("; ").replace(',', ";") },
        }
    }

    pub fn cells(&self) -> Vec<String> {
        let f = crate::io::fmt_f64;
        vec![
            f(self.t_eff_psd),
            f(self.t_eff_dist),
            f(self.t_eff_mean),
            f(self.t_eff_mean_se),
            f(self.eta_hat),
            f(self.eta_se),
            f(self.gamma_r),
            f(self.gamma_r_se),
            f(self.gamma_eff),
            f(self.gamma_eff_se),
            f(self.ks_p_value),
            self.status.clone(),
        ]
    }
}

/// Decorrelated energy samples of several records, fitted together.
#[derive(Debug, Clone, Default)]
pub struct Pool {
    samples: Vec<f64>,
    options: Option<FitOptions>,
}

impl Pool {
    pub fn add(&mut self, r: &PipelineReport) {
        self.samples.extend_from_slice(&r.samples);
        self.options.get_or_insert(r.fit_options);
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn fit(&self, mass: f64) -> Option<quadcool_core::Result<EnergyDistribution>> {
        let options = self.options?;
        Some(fit_energy_distribution(&self.samples, mass, &options))
    }
}

/// Welch PSD of the energy series at the resolution used by the decay fit.
pub fn energy_spectrum(r: &PipelineReport) -> Option<Spectrum> {
    let seg = r.decay.as_ref().ok()?.segment_length;
    let e = &r.energy;
    welch_psd(e, r.energy_sample_rate, seg.min(e.len() / 4), 0.5, Window::Hann).ok()
}

/// Mean and standard error over the finite entries.
pub fn mean_se(values: impl IntoIterator<Item = f64>) -> (f64, f64, usize) {
    let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let m = v.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (m, f64::NAN, 1);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    (m, (var / n as f64).sqrt(), n)
}
