use std::path::Path;

use quadcool_core::sim::rng::derive_seed;
use quadcool_core::theory::{balance_damping, effective_temperature};
use rayon::prelude::*;
use serde_json::Value;

use crate::config::{ExperimentConfig, SeedPolicy};
use crate::error::CliError;
use crate::io::{create_dir, fmt_f64, Table};
use crate::manifest::{Manifest, SeedRecord};
use crate::pipeline::{mean_se, Context, Pool, Setup, Summary};

/// Fraction of points that must succeed for a zero exit status.
pub const MIN_SUCCESS_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub seed: u64,
    pub eta: f64,
    pub t_eff_theory: f64,
    pub t_eff_sim: f64,
    pub t_eff_sim_se: f64,
    pub gamma_eff_theory: f64,
    pub gamma_eff_sim: f64,
    pub gamma_eff_sim_se: f64,
    pub eta_hat: f64,
    pub eta_hat_se: f64,
    pub status: String,
}

impl SweepRow {
    pub fn succeeded(&self) -> bool {
        self.t_eff_sim.is_finite() && self.gamma_eff_sim.is_finite()
    }
}

/// Resolved configuration of every point: `(value, seed, config)`.
pub fn point_configs(cfg: &ExperimentConfig) -> Result<Vec<(f64, ExperimentConfig)>, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::config("sweep", "missing [sweep] block"))?;
    let mut points = Vec::new();
    for (i, v) in sweep.values.resolve().into_iter().enumerate() {
        let mut c = cfg.with_value(&sweep.parameter, Value::from(v))?;
        for o in sweep.point_overrides.iter().filter(|o| o.point == i) {
            for (path, value) in &o.set {
                c = c.with_value(path, value.clone())?;
            }
        }
        c.sim.seed = match sweep.seed_policy {
            SeedPolicy::ByValue => derive_seed(cfg.sim.seed, v.to_bits()),
            SeedPolicy::ByIndex => derive_seed(cfg.sim.seed, i as u64),
        };
        c.sweep = None;
        points.push((v, c));
    }
    Ok(points)
}

fn run_point(index: usize, value: f64, cfg: &ExperimentConfig) -> SweepRow {
    let mut row = SweepRow {
        index,
        value,
        seed: cfg.sim.seed,
        eta: f64::NAN,
        t_eff_theory: f64::NAN,
        t_eff_sim: f64::NAN,
        t_eff_sim_se: f64::NAN,
        gamma_eff_theory: f64::NAN,
        gamma_eff_sim: f64::NAN,
        gamma_eff_sim_se: f64::NAN,
        eta_hat: f64::NAN,
        eta_hat_se: f64::NAN,
        status: String::new(),
    };
    let setup = match Setup::new(cfg) {
        Ok(s) => s,
        Err(e) => {
            row.status = e.to_string();
            return row;
        }
    };
    let osc = &setup.oscillator;
    row.eta = osc.gain();
    if let Ok(model) = osc.energy_model() {
        row.t_eff_theory = effective_temperature(&model);
        row.gamma_eff_theory = balance_damping(osc.gamma_g, &model);
    }
    let ctx = Context::new(cfg, &setup);
    let mut summaries = Vec::new();
    let mut errors = Vec::new();
    let mut pool = Pool::default();
    for r in setup.simulate_all() {
        match r.and_then(|t| ctx.analyze(&t)) {
            Ok(report) => {
                pool.add(&report);
                summaries.push(Summary::of(&report));
            }
            Err(e) => errors.push(e.to_string()),
        }
    }
    let (t, t_se, n) = mean_se(summaries.iter().map(|s| s.t_eff_mean));
    let (g, g_se, ng) = mean_se(summaries.iter().map(|s| s.gamma_eff));
    row.t_eff_sim = t;
    row.gamma_eff_sim = g;
    // the gain comes from one fit to all samples of the point
    if let Some(Ok(d)) = pool.fit(ctx.mass) {
        row.eta_hat = d.fit.eta;
        row.eta_hat_se = d.fit.eta_stderr();
    }
    // a single trajectory carries its own error estimates
    row.t_eff_sim_se = if n == 1 { summaries.iter().map(|s| s.t_eff_mean_se).find(|v| v.is_finite()).unwrap_or(f64::NAN) } else { t_se };
    row.gamma_eff_sim_se =
        if ng == 1 { summaries.iter().map(|s| s.gamma_eff_se).find(|v| v.is_finite()).unwrap_or(f64::NAN) } else { g_se };
    errors.extend(summaries.iter().filter(|s| s.status != "ok" && !s.status.starts_with("fit: series too short")).map(|s| s.status.clone()));
    row.status = if errors.is_empty() { "ok".into() } else { errors.join("; ").replace(',', ";") };
    row
}

/// Runs every point (in parallel) and writes `sweep.csv`. Fails with exit
/// status 6 when fewer than 80% of the points succeed.
pub fn sweep(cfg: &ExperimentConfig, out: &Path) -> Result<(Manifest, Vec<SweepRow>), CliError> {
    let points = point_configs(cfg)?;
    let rows: Vec<SweepRow> = points.par_iter().enumerate().map(|(i, (v, c))| run_point(i, *v, c)).collect();

    let dir = create_dir(out)?;
    let parameter = &cfg.sweep.as_ref().expect("checked").parameter;
    let mut table = Table::new(&[
        "point",
        parameter,
        "seed",
        "eta_s2_per_m2",
        "T_eff_theory_K",
        "T_eff_sim_K",
        "T_eff_sim_se_K",
        "gamma_eff_theory_per_s",
        "gamma_eff_sim_per_s",
        "gamma_eff_sim_se_per_s",
        "eta_hat_s2_per_m2",
        "eta_hat_se_s2_per_m2",
        "status",
    ]);
    let mut manifest = Manifest::new("sweep", cfg);
    manifest.seeds.push(SeedRecord { label: "root".into(), seed: cfg.sim.seed });
    for r in &rows {
        manifest.seeds.push(SeedRecord { label: format!("point {}", r.index), seed: r.seed });
        table.push(vec![
            r.index.to_string(),
            fmt_f64(r.value),
            r.seed.to_string(),
            fmt_f64(r.eta),
            fmt_f64(r.t_eff_theory),
            fmt_f64(r.t_eff_sim),
            fmt_f64(r.t_eff_sim_se),
            fmt_f64(r.gamma_eff_theory),
            fmt_f64(r.gamma_eff_sim),
            fmt_f64(r.gamma_eff_sim_se),
            fmt_f64(r.eta_hat),
            fmt_f64(r.eta_hat_se),
            r.status.clone(),
        ]);
    }
    table.write(&dir.join("sweep.csv"))?;
    manifest.add_output(&dir, "sweep.csv")?;
    manifest.write(&dir)?;

    let ok = rows.iter().filter(|r| r.succeeded()).count();
    if (ok as f64) < MIN_SUCCESS_FRACTION * rows.len() as f64 {
        return Err(CliError::SweepFailed(format!("only {ok} of {} points succeeded", rows.len())));
    }
    Ok((manifest, rows))
}
