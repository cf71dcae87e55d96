//! Experiment configuration in lab units.
//!
//! The file is TOML; key names carry their unit (`pressure_mbar`,
//! `power_uW`, `kappa_hz`) and everything is converted to SI with angular
//! frequencies in rad/s when the core types are built. Unknown keys are
//! rejected.

use std::f64::consts::PI;
use std::path::Path;

use quadcool_core::constants::{AMU, PA_PER_MBAR, SILICA_PERMITTIVITY};
use quadcool_core::params::{BeamParams, CavityParams, DetuningReference, GasParams, ParticleParams, SystemParams};
use quadcool_core::sim::{BurnIn, FrequencyJitter, InitialState, ModelTier, OscillatorModel, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub theory: TheorySection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default)]
    pub particle: ParticleConfig,
    #[serde(default)]
    pub cavity: CavityConfig,
    #[serde(default = "BeamConfig::trap_default")]
    pub trap: BeamConfig,
    #[serde(default = "BeamConfig::probe_default")]
    pub probe: BeamConfig,
    #[serde(default)]
    pub gas: GasConfig,
    #[serde(default)]
    pub secular_frequency_hz: f64,
    /// Replaces derived coefficients of the reduced and averaged tiers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overrides: Option<OscillatorOverrides>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            particle: ParticleConfig::default(),
            cavity: CavityConfig::default(),
            trap: BeamConfig::trap_default(),
            probe: BeamConfig::probe_default(),
            gas: GasConfig::default(),
            secular_frequency_hz: 0.0,
            overrides: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub mass_kg: f64,
    pub radius_nm: f64,
    pub permittivity: f64,
}

impl Default for ParticleConfig {
    fn default() -> Self {
        Self { mass_kg: 4.88e-17, radius_nm: 185.0, permittivity: SILICA_PERMITTIVITY }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub length_mm: f64,
    pub wavelength_nm: f64,
    /// Half linewidth κ/2π.
    pub kappa_hz: f64,
    pub kappa_in_hz: f64,
    pub waist_um: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        Self { length_mm: 14.58, wavelength_nm: 1064.0, kappa_hz: 143e3, kappa_in_hz: 69e3, waist_um: 62.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DetuningRef {
    #[default]
    Hot,
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    #[serde(rename = "power_uW")]
    pub power_uw: f64,
    /// Laser minus cavity resonance, /2π.
    pub detuning_hz: f64,
    #[serde(default)]
    pub detuning_reference: DetuningRef,
    /// Trapping-site offset from the cavity center (probe only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_offset_mm: Option<f64>,
}

impl BeamConfig {
    fn trap_default() -> Self {
        Self { power_uw: 830.0, detuning_hz: -100e3, detuning_reference: DetuningRef::Hot, site_offset_mm: None }
    }

    fn probe_default() -> Self {
        Self { power_uw: 2.9, detuning_hz: 0.0, detuning_reference: DetuningRef::Hot, site_offset_mm: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    pub pressure_mbar: f64,
    pub bath_temperature_k: f64,
    pub molecule_mass_amu: f64,
    /// Replaces the free-molecular drag model, 1/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub damping_per_s: Option<f64>,
}

impl Default for GasConfig {
    fn default() -> Self {
        Self { pressure_mbar: 8.6e-2, bath_temperature_k: 295.0, molecule_mass_amu: 28.0134, damping_per_s: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OscillatorOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap_frequency_hz: Option<f64>,
    /// Parametric gain η, s²/m².
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gain_s2_per_m2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duffing_per_m2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Full,
    #[default]
    Reduced,
    Averaged,
}

impl From<ModelName> for ModelTier {
    fn from(m: ModelName) -> Self {
        match m {
            ModelName::Full => ModelTier::Full,
            ModelName::Reduced => ModelTier::Reduced,
            ModelName::Averaged => ModelTier::Averaged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialConfig {
    Named(String),
    Position { x_m: f64, p_kg_m_per_s: f64 },
    Amplitude { r_m: f64, phase_rad: f64 },
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig::Named("thermal".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JitterConfig {
    pub relative_rms: f64,
    pub correlation_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    #[serde(default)]
    pub model: ModelName,
    /// Integration step; half the tier's stability bound when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt_s: Option<f64>,
    pub duration_s: f64,
    pub seed: u64,
    pub n_trajectories: usize,
    pub record_stride: usize,
    #[serde(default)]
    pub initial_state: InitialConfig,
    /// Discarded transient; `max(10/γ_eff, 10/γ_g)` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency_jitter: Option<JitterConfig>,
    #[serde(default = "yes")]
    pub thermal_noise: bool,
    #[serde(default)]
    pub allow_large_step: bool,
    /// White displacement noise added as `y_meas`, m²/Hz (one-sided).
    #[serde(default)]
    pub measurement_noise_m2_per_hz: f64,
}

fn yes() -> bool {
    true
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            model: ModelName::Reduced,
            dt_s: None,
            duration_s: 0.1,
            seed: 1,
            n_trajectories: 1,
            record_stride: 10,
            initial_state: InitialConfig::default(),
            burn_in_s: None,
            frequency_jitter: None,
            thermal_noise: true,
            allow_large_step: false,
            measurement_noise_m2_per_hz: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTreatment {
    Ignore,
    #[default]
    Calibrated,
    Free,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demod_bandwidth_hz: Option<f64>,
    /// Calibrated readout noise, m²/Hz; defaults to the simulated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_floor_m2_per_hz: Option<f64>,
    #[serde(default)]
    pub noise: NoiseTreatment,
    /// Fit only η with the linear term pinned at the bath temperature.
    #[serde(default = "yes")]
    pub fix_temperature: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segment_length: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decorrelation_stride: Option<usize>,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
}

fn default_bins() -> usize {
    40
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            demod_bandwidth_hz: None,
            noise_floor_m2_per_hz: None,
            noise: NoiseTreatment::Calibrated,
            fix_temperature: true,
            segment_length: None,
            decorrelation_stride: None,
            histogram_bins: default_bins(),
        }
    }
}

/// Explicit values or a logarithmic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueList {
    Values(Vec<f64>),
    Log { start: f64, stop: f64, points_per_decade: f64 },
}

impl ValueList {
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            ValueList::Values(v) => v.clone(),
            ValueList::Log { start, stop, points_per_decade } => {
                let decades = (stop / start).log10();
                let n = (decades * points_per_decade).round().max(0.0) as usize;
                (0..=n).map(|i| start * 10f64.powf(i as f64 / points_per_decade)).collect()
            }
        }
    }

    fn check(&self, field: &str) -> Result<(), CliError> {
        match self {
            ValueList::Values(v) if v.is_empty() => Err(CliError::config(field, "empty value list")),
            ValueList::Log { start, stop, points_per_decade }
                if !(*start > 0.0 && stop > start && *points_per_decade > 0.0) =>
            {
                Err(CliError::config(field, "needs 0 < start < stop and points_per_decade > 0"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TheorySection {
    pub gain_s2_per_m2: ValueList,
    pub pressure_mbar: ValueList,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            gain_s2_per_m2: ValueList::Log { start: 1e3, stop: 1e9, points_per_decade: 4.0 },
            pressure_mbar: ValueList::Log { start: 1e-6, stop: 1e-1, points_per_decade: 5.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Point seed from the root seed and the swept value.
    #[default]
    ByValue,
    /// Point seed from the root seed and the point index.
    ByIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointOverride {
    pub point: usize,
    /// Dotted config path → value.
    pub set: serde_json::Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Dotted path of a numeric config field, e.g. `system.gas.pressure_mbar`.
    pub parameter: String,
    pub values: ValueList,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub point_overrides: Vec<PointOverride>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    #[serde(default)]
    pub format: Format,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { directory: "out".into(), format: Format::Csv }
    }
}

impl ExperimentConfig {
    /// Parses TOML, or the `config` member of a run manifest (JSON).
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = if text.trim_start().starts_with('{') {
            let v: Value =
                serde_json::from_str(&text).map_err(|e| CliError::config(&path.display().to_string(), &e.to_string()))?;
            let c = v.get("config").ok_or_else(|| CliError::config("config", "manifest has no `config` member"))?;
            serde_json::from_value(c.clone()).map_err(|e| CliError::config("config", &e.to_string()))?
        } else {
            Self::from_toml(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string().trim_end().to_string()))
    }

    /// Returns a copy with the dotted `path` set to `value`.
    pub fn with_value(&self, path: &str, value: Value) -> Result<Self, CliError> {
        let mut tree = serde_json::to_value(self).expect("config serializes");
        let mut node = &mut tree;
        let keys: Vec<&str> = path.split('.').collect();
        for (i, key) in keys.iter().enumerate() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
            let obj = node.as_object_mut().ok_or_else(|| CliError::config(path, "not a table"))?;
            if i + 1 == keys.len() {
                obj.insert((*key).to_string(), value.clone());
                break;
            }
            node = obj.entry(*key).or_insert(Value::Null);
        }
        let cfg: Self = serde_json::from_value(tree).map_err(|e| CliError::config(path, &e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system_params()?;
        let s = &self.sim;
        if let Some(dt) = s.dt_s {
            if !(dt > 0.0) {
                return Err(CliError::config("sim.dt_s", "must be positive"));
            }
        }
        if !(s.duration_s > 0.0) {
            return Err(CliError::config("sim.duration_s", "must be positive"));
        }
        if s.n_trajectories == 0 {
            return Err(CliError::config("sim.n_trajectories", "must be >= 1"));
        }
        if s.record_stride == 0 {
            return Err(CliError::config("sim.record_stride", "must be >= 1"));
        }
        if !(s.measurement_noise_m2_per_hz >= 0.0) {
            return Err(CliError::config("sim.measurement_noise_m2_per_hz", "must be >= 0"));
        }
        self.initial_state()?;
        if s.model == ModelName::Full && self.system.overrides.is_some() {
            return Err(CliError::config("system.overrides", "the full model has no reduced coefficients to override"));
        }
        if let Some(n) = self.analysis.noise_floor_m2_per_hz {
            if !(n >= 0.0) {
                return Err(CliError::config("analysis.noise_floor_m2_per_hz", "must be >= 0"));
            }
        }
        if let Some(bw) = self.analysis.demod_bandwidth_hz {
            if !(bw > 0.0) {
                return Err(CliError::config("analysis.demod_bandwidth_hz", "must be positive"));
            }
        }
        self.theory.gain_s2_per_m2.check("theory.gain_s2_per_m2")?;
        self.theory.pressure_mbar.check("theory.pressure_mbar")?;
        if let Some(sw) = &self.sweep {
            sw.values.check("sweep.values")?;
            let probe = serde_json::to_value(self).expect("config serializes");
            let leaf = sw.parameter.split('.').try_fold(&probe, |v, k| v.get(k));
            if !matches!(leaf, Some(Value::Number(_)) | Some(Value::Null) | None) {
                return Err(CliError::config("sweep.parameter", "must name a numeric field"));
            }
        }
        Ok(())
    }

    pub fn system_params(&self) -> Result<SystemParams, CliError> {
        let s = &self.system;
        let particle = ParticleParams::new(s.particle.mass_kg, s.particle.radius_nm * 1e-9, s.particle.permittivity)
            .map_err(|e| CliError::core("system.particle", e))?;
        let c = &s.cavity;
        let cavity =
            CavityParams::new(c.length_mm * 1e-3, c.wavelength_nm * 1e-9, TWO_PI * c.kappa_hz, TWO_PI * c.kappa_in_hz, c.waist_um * 1e-6)
                .map_err(|e| CliError::core("system.cavity", e))?;
        let reference = |r: DetuningRef| match r {
            DetuningRef::Hot => DetuningReference::Hot,
            DetuningRef::Empty => DetuningReference::EmptyCavity,
        };
        if s.trap.site_offset_mm.is_some() {
            return Err(CliError::config("system.trap.site_offset_mm", "the trap sits on its own antinode"));
        }
        let trap = BeamParams::trap(s.trap.power_uw * 1e-6, TWO_PI * s.trap.detuning_hz, reference(s.trap.detuning_reference))
            .map_err(|e| CliError::core("system.trap", e))?;
        let offset = s.probe.site_offset_mm.map(|o| o * 1e-3).unwrap_or(cavity.length / 4.0);
        let probe = BeamParams::probe(
            s.probe.power_uw * 1e-6,
            TWO_PI * s.probe.detuning_hz,
            reference(s.probe.detuning_reference),
            offset,
            &cavity,
        )
        .map_err(|e| CliError::core("system.probe", e))?;
        let g = &s.gas;
        let gas = GasParams::new(g.pressure_mbar * PA_PER_MBAR, g.bath_temperature_k, g.molecule_mass_amu * AMU, g.damping_per_s)
            .map_err(|e| CliError::core("system.gas", e))?;
        if !(s.secular_frequency_hz >= 0.0) {
            return Err(CliError::config("system.secular_frequency_hz", "must be >= 0"));
        }
        Ok(SystemParams { particle, cavity, trap, probe, gas, secular_frequency: TWO_PI * s.secular_frequency_hz })
    }

    /// Reduced-model coefficients after overrides.
    pub fn oscillator(&self) -> Result<OscillatorModel, CliError> {
        let params = self.system_params()?;
        let o = self.system.overrides.clone().unwrap_or_default();
        let mut osc = match o.trap_frequency_hz {
            Some(f) => {
                let d = params.derive();
                let mut base = OscillatorModel::linear(
                    params.particle.mass,
                    TWO_PI * f,
                    quadcool_core::params::gas_damping(&params.gas, &params.particle),
                    params.gas.bath_temperature,
                );
                if let Ok(d) = d {
                    base.eps_d = d.eps_d;
                    base.gamma_nl = d.gamma_nl;
                    base.escape_amplitude = params.cavity.wavelength / 4.0;
                }
                base
            }
            None => OscillatorModel::from_system(&params).map_err(|e| CliError::core("system", e))?,
        };
        if let Some(eta) = o.gain_s2_per_m2 {
            if !(eta >= 0.0) {
                return Err(CliError::config("system.overrides.gain_s2_per_m2", "must be >= 0"));
            }
            osc = osc.with_gain(eta);
        }
        if let Some(e) = o.duffing_per_m2 {
            osc.eps_d = e;
        }
        osc.validate().map_err(|e| CliError::core("system.overrides", e))?;
        Ok(osc)
    }

    pub fn initial_state(&self) -> Result<InitialState, CliError> {
        match &self.sim.initial_state {
            InitialConfig::Named(n) if n == "thermal" => Ok(InitialState::Thermal),
            InitialConfig::Named(n) => Err(CliError::config("sim.initial_state", &format!("unknown state `{n}`"))),
            InitialConfig::Position { x_m, p_kg_m_per_s } => Ok(InitialState::Position { x: *x_m, p: *p_kg_m_per_s }),
            InitialConfig::Amplitude { r_m, phase_rad } => Ok(InitialState::Amplitude { r: *r_m, phase: *phase_rad }),
        }
    }

    /// Core configuration; a missing step is set to half the tier bound.
    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        let s = &self.sim;
        let model: ModelTier = s.model.into();
        let dt = match s.dt_s {
            Some(dt) => dt,
            None => 0.5 * self.step_bound()?,
        };
        let mut c = SimConfig::new(model, dt, s.duration_s, s.seed);
        c.n_trajectories = s.n_trajectories;
        c.record_stride = s.record_stride;
        c.initial_state = self.initial_state()?;
        c.burn_in = s.burn_in_s.map(BurnIn::Duration).unwrap_or(BurnIn::Auto);
        c.frequency_jitter = s
            .frequency_jitter
            .as_ref()
            .map(|j| FrequencyJitter { relative_rms: j.relative_rms, correlation_time: j.correlation_time_s });
        c.thermal_noise = s.thermal_noise;
        c.allow_large_step = s.allow_large_step;
        c.validate().map_err(|e| CliError::core("sim", e))?;
        Ok(c)
    }

    /// Largest stable step of the configured tier, s.
    pub fn step_bound(&self) -> Result<f64, CliError> {
        Ok(match self.sim.model {
            ModelName::Full => 1.0 / (20.0 * self.system_params()?.cavity.kappa),
            ModelName::Reduced => 1.0 / (50.0 * self.oscillator()?.omega_m),
            ModelName::Averaged => {
                let osc = self.oscillator()?;
                let g = osc.predicted_gamma_eff();
                if g > 0.0 {
                    1.0 / (10.0 * g)
                } else {
                    1.0 / (50.0 * osc.omega_m)
                }
            }
        })
    }

    /// Noise floor assumed by the analysis.
    pub fn noise_floor(&self) -> f64 {
        self.analysis.noise_floor_m2_per_hz.unwrap_or(self.sim.measurement_noise_m2_per_hz)
    }
}
