use std::path::Path;

use quadcool_core::theory::{balance_damping, effective_temperature, low_pressure_gamma_eff, low_pressure_teff, EnergyDistModel};
use serde_json::Value;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{create_dir, fmt_f64, Table};
use crate::manifest::Manifest;

/// Nonlinearity `β k_B T` above which the low-pressure forms apply.
pub const LOW_PRESSURE_BETA_KT: f64 = 100.0;

/// `theory_gain.csv`: T_eff against η. `theory_pressure.csv`: γ_g, η, T_eff
/// and γ_eff against pressure, with the low-pressure forms alongside.
pub fn theory(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    let dir = create_dir(out)?;
    let osc = cfg.oscillator()?;
    let (m, t) = (osc.mass, osc.bath_temperature);

    let mut gains = Table::new(&["eta_s2_per_m2", "beta_kT", "T_eff_K", "T_eff_low_pressure_K"]);
    for eta in cfg.theory.gain_s2_per_m2.resolve() {
        let model = EnergyDistModel::from_gain(t, eta, m).map_err(|e| CliError::core("theory.gain_s2_per_m2", e))?;
        let lp = low_pressure_teff(m, t, eta).unwrap_or(f64::NAN);
        gains.push(vec![fmt_f64(eta), fmt_f64(model.nonlinearity()), fmt_f64(effective_temperature(&model)), fmt_f64(lp)]);
    }
    gains.write(&dir.join("theory_gain.csv"))?;

    let mut pressures = Table::new(&[
        "pressure_mbar",
        "gamma_g_per_s",
        "eta_s2_per_m2",
        "beta_kT",
        "T_eff_K",
        "gamma_eff_per_s",
        "T_eff_low_pressure_K",
        "gamma_eff_low_pressure_per_s",
        "low_pressure",
        "identity_residual",
    ]);
    for p in cfg.theory.pressure_mbar.resolve() {
        let c = cfg.with_value("system.gas.pressure_mbar", Value::from(p))?;
        let o = c.oscillator()?;
        let model = o.energy_model().map_err(|e| CliError::core("system", e))?;
        let eta = o.gain();
        let t_eff = effective_temperature(&model);
        let g_eff = balance_damping(o.gamma_g, &model);
        let t_lp = low_pressure_teff(m, t, eta).unwrap_or(f64::NAN);
        let g_lp = low_pressure_gamma_eff(o.gamma_g, m, t, eta).unwrap_or(f64::NAN);
        let beta_kt = model.nonlinearity();
        // the low-pressure pair obeys T_eff γ_eff = T_bath γ_g identically
        let residual = t_lp * g_lp / (t * o.gamma_g) - 1.0;
        pressures.push(vec![
            fmt_f64(p),
            fmt_f64(o.gamma_g),
            fmt_f64(eta),
            fmt_f64(beta_kt),
            fmt_f64(t_eff),
            fmt_f64(g_eff),
            fmt_f64(t_lp),
            fmt_f64(g_lp),
            (beta_kt > LOW_PRESSURE_BETA_KT).to_string(),
            fmt_f64(residual),
        ]);
    }
    pressures.write(&dir.join("theory_pressure.csv"))?;

    let mut manifest = Manifest::new("theory", cfg);
    manifest.add_output(&dir, "theory_gain.csv")?;
    manifest.add_output(&dir, "theory_pressure.csv")?;
    manifest.write(&dir)?;
    Ok(manifest)
}
