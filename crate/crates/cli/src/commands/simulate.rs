use std::path::Path;

use quadcool_core::sim::{ColumnKind, ModelTier, Trajectory};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{create_dir, trajectory_file_name, write_json, write_trajectory};
use crate::manifest::{Manifest, SeedRecord};
use crate::pipeline::{mean_se, Setup};

/// Equipartition test of a linear thermal ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelfCheck {
    pub mean_square_m2: f64,
    pub expected_m2: f64,
    pub relative_error: f64,
    pub stderr: f64,
    pub passed: bool,
}

/// `⟨x²⟩` against `k_B T/(mΩ²)`, passing within 3% or four standard errors.
/// The error comes from the spread of per-trajectory means (ten blocks per
/// trajectory for a single run).
pub fn equipartition_check(trajectories: &[Trajectory], expected: f64) -> Option<SelfCheck> {
    let blocks_per = if trajectories.len() > 1 { 1 } else { 10 };
    let mut block_means = Vec::new();
    for t in trajectories {
        let x = t.column(ColumnKind::X)?;
        let n = x.len() / blocks_per;
        for b in 0..blocks_per {
            let s = &x[b * n..(b + 1) * n];
            block_means.push(s.iter().map(|v| v * v).sum::<f64>() / n as f64);
        }
    }
    let (m, se, _) = mean_se(block_means);
    let rel = m / expected - 1.0;
    let rel_se = se / expected;
    Some(SelfCheck {
        mean_square_m2: m,
        expected_m2: expected,
        relative_error: rel,
        stderr: rel_se,
        passed: rel.abs() < 0.03_f64.max(4.0 * rel_se),
    })
}

/// Writes one file per trajectory. A linear reduced-model thermal ensemble
/// also runs the equipartition self-check (`selfcheck.json`) and fails if
/// it does not pass.
pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Manifest, CliError> {
    let setup = Setup::new(cfg)?;
    let results = setup.simulate_all();
    let mut trajectories = Vec::with_capacity(results.len());
    for r in results {
        trajectories.push(r?);
    }
    let dir = create_dir(out)?;
    let mut manifest = Manifest::new("simulate", cfg);
    manifest.seeds.push(SeedRecord { label: "root".into(), seed: setup.sim.seed });
    let format = cfg.output.format;
    for t in &trajectories {
        let name = trajectory_file_name(t.meta.index, format);
        write_trajectory(&dir.join(&name), t, format)?;
        manifest.add_output(&dir, &name)?;
    }

    let osc = &setup.oscillator;
    let linear = osc.gamma_nl == 0.0 && osc.eps_d == 0.0;
    if setup.sim.model == ModelTier::Reduced && linear && setup.sim.thermal_noise && setup.sim.frequency_jitter.is_none() {
        if let Some(check) = equipartition_check(&trajectories, osc.thermal_variance()) {
            write_json(&dir.join("selfcheck.json"), &check)?;
            manifest.add_output(&dir, "selfcheck.json")?;
            manifest.write(&dir)?;
            if !check.passed {
                return Err(CliError::Other(format!(
                    "equipartition self-check failed: <x²> off by {:.2}% (standard error {:.2}%)",
                    100.0 * check.relative_error,
                    100.0 * check.stderr
                )));
            }
            return Ok(manifest);
        }
    }
    manifest.write(&dir)?;
    Ok(manifest)
}
