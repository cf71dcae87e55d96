use std::path::{Path, PathBuf};

use quadcool_core::sim::Trajectory;
use rayon::prelude::*;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::io::{create_dir, fmt_f64, read_trajectory, write_json, Table};
use crate::manifest::Manifest;
use crate::pipeline::{energy_spectrum, mean_se, Context, Pool, Setup, Summary};

/// Per input `<stem>_psd.csv`, `<stem>_energy_hist.csv`, `<stem>_r2_psd.csv`
/// and `<stem>_fit.json`; one `summary.csv` row per input plus an ensemble
/// row. Unreadable inputs abort the run; analysis failures are recorded.
pub fn analyze(cfg: &ExperimentConfig, inputs: &[PathBuf], out: &Path) -> Result<Manifest, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input("no input files".into()));
    }
    let setup = Setup::new(cfg)?;
    let ctx = Context::new(cfg, &setup);
    let records: Vec<Trajectory> = inputs.iter().map(|p| read_trajectory(p)).collect::<Result<_, _>>()?;
    let dir = create_dir(out)?;
    let mut manifest = Manifest::new("analyze", cfg);
    for p in inputs {
        manifest.add_input(p)?;
    }

    let outcomes: Vec<_> = records.par_iter().map(|t| ctx.analyze(t)).collect();
    let mut header = vec!["file"];
    header.extend(Summary::HEADER);
    let mut summary = Table::new(&header);
    let mut rows = Vec::new();
    let mut pool = Pool::default();
    for (path, outcome) in inputs.iter().zip(outcomes) {
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
        let row = match outcome {
            Ok(report) => {
                for name in write_products(&dir, &stem, &report)? {
                    manifest.add_output(&dir, &name)?;
                }
                pool.add(&report);
                Summary::of(&report)
            }
            Err(CliError::Input(m)) => return Err(CliError::Input(format!("{}: {m}", path.display()))),
            Err(e) => failed_row(&e.to_string()),
        };
        let mut cells = vec![stem];
        cells.extend(row.cells());
        summary.push(cells);
        rows.push(row);
    }
    let ensemble = ensemble_row(&rows, &pool, ctx.mass);
    let mut cells = vec!["ensemble".to_string()];
    cells.extend(ensemble.cells());
    let pooled_fit = pool.fit(ctx.mass).and_then(Result::ok);
    summary.push(cells);
    if let Some(d) = pooled_fit {
        let name = "ensemble_energy_hist.csv";
        histogram_table(&d).write(&dir.join(name))?;
        manifest.add_output(&dir, name)?;
    }
    summary.write(&dir.join("summary.csv"))?;
    manifest.add_output(&dir, "summary.csv")?;
    manifest.write(&dir)?;
    Ok(manifest)
}

/// Means over the records, except the distribution columns, which come
/// from one fit to the pooled samples.
fn ensemble_row(rows: &[Summary], pool: &Pool, mass: f64) -> Summary {
    let avg = |f: fn(&Summary) -> f64| mean_se(rows.iter().map(f));
    let (t_eff_mean, t_se, n) = avg(|s| s.t_eff_mean);
    let (gamma_r, g_se, ng) = avg(|s| s.gamma_r);
    let (gamma_eff, ge_se, nge) = avg(|s| s.gamma_eff);
    let one = |n: usize, own: fn(&Summary) -> f64, spread: f64| {
        if n == 1 {
            rows.iter().map(own).find(|v| v.is_finite()).unwrap_or(f64::NAN)
        } else {
            spread
        }
    };
    let mut row = Summary {
        t_eff_psd: avg(|s| s.t_eff_psd).0,
        t_eff_dist: f64::NAN,
        t_eff_mean,
        t_eff_mean_se: one(n, |s| s.t_eff_mean_se, t_se),
        eta_hat: f64::NAN,
        eta_se: f64::NAN,
        gamma_r,
        gamma_r_se: one(ng, |s| s.gamma_r_se, g_se),
        gamma_eff,
        gamma_eff_se: one(nge, |s| s.gamma_eff_se, ge_se),
        ks_p_value: f64::NAN,
        status: String::new(),
    };
    let ok = rows.iter().filter(|r| r.status == "ok").count();
    row.status = match pool.fit(mass) {
        Some(Ok(d)) => {
            row.t_eff_dist = d.fit.effective_temperature();
            row.eta_hat = d.fit.eta;
            row.eta_se = d.fit.eta_stderr();
            row.ks_p_value = d.fit.ks_p_value;
            format!("{ok}/{} ok; pooled {} samples", rows.len(), pool.len())
        }
        Some(Err(e)) => format!("{ok}/{} ok; pooled fit: {e}", rows.len()).replace(',', ";"),
        None => format!("{ok}/{} ok", rows.len()),
    };
    row
}

fn histogram_table(d: &quadcool_core::analysis::EnergyDistribution) -> Table {
    let h = &d.histogram;
    let model = d.fit.model();
    let density = h.density();
    let mut t = Table::new(&["edge_lo_j", "edge_hi_j", "count", "density_per_j", "model_density_per_j"]);
    for i in 0..h.counts.len() {
        let mid = (h.edges[i] * h.edges[i + 1]).sqrt();
        t.push(vec![
            fmt_f64(h.edges[i]),
            fmt_f64(h.edges[i + 1]),
            h.counts[i].to_string(),
            fmt_f64(density[i]),
            fmt_f64(model.pdf(mid)),
        ]);
    }
    t
}

fn failed_row(msg: &str) -> Summary {
    Summary {
        t_eff_psd: f64::NAN,
        t_eff_dist: f64::NAN,
        t_eff_mean: f64::NAN,
        t_eff_mean_se: f64::NAN,
        eta_hat: f64::NAN,
        eta_se: f64::NAN,
        gamma_r: f64::NAN,
        gamma_r_se: f64::NAN,
        gamma_eff: f64::NAN,
        gamma_eff_se: f64::NAN,
        ks_p_value: f64::NAN,
        status: msg.replace(',', ";"),
    }
}

fn write_products(dir: &Path, stem: &str, r: &quadcool_core::analysis::PipelineReport) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    if let Ok(s) = &r.spectrum {
        let mut t = Table::new(&["frequency_hz", "psd_m2_per_hz"]);
        for (f, p) in s.frequencies.iter().zip(&s.psd) {
            t.push(vec![fmt_f64(*f), fmt_f64(*p)]);
        }
        let name = format!("{stem}_psd.csv");
        t.write(&dir.join(&name))?;
        names.push(name);
    }
    if let Some(s) = energy_spectrum(r) {
        let mut t = Table::new(&["frequency_hz", "psd_j2_per_hz"]);
        for (f, p) in s.frequencies.iter().zip(&s.psd) {
            t.push(vec![fmt_f64(*f), fmt_f64(*p)]);
        }
        let name = format!("{stem}_r2_psd.csv");
        t.write(&dir.join(&name))?;
        names.push(name);
    }
    let mut fit_json = json!({
        "energy_mean_j": r.energy_mean,
        "energy_variance_j2": r.energy_variance,
        "decorrelation_stride": r.stride,
        "demod_bandwidth_hz": if r.bandwidth.is_finite() { json!(r.bandwidth) } else { json!(null) },
    });
    let obj = fit_json.as_object_mut().expect("object");
    match &r.distribution {
        Ok(d) => {
            let name = format!("{stem}_energy_hist.csv");
            histogram_table(d).write(&dir.join(&name))?;
            names.push(name);
            let f = &d.fit;
            obj.insert(
                "fit".into(),
                json!({
                    "parameters": {
                        "temperature_k": f.temperature,
                        "eta_s2_per_m2": f.eta,
                        "noise_mean_energy_j": f.noise_mean_energy,
                    },
                    "covariance": f.covariance,
                    "effective_temperature_k": f.effective_temperature(),
                    "ks_statistic": f.ks_statistic,
                    "ks_p_value": f.ks_p_value,
                    "n_samples": f.n_samples,
                    "log_likelihood": f.log_likelihood,
                }),
            );
        }
        Err(e) => {
            obj.insert("fit_error".into(), json!(e.to_string()));
        }
    }
    match &r.decay {
        Ok(d) => {
            obj.insert("gamma_r_per_s".into(), json!(d.gamma_r));
            obj.insert("gamma_r_stderr_per_s".into(), json!(d.stderr));
        }
        Err(e) => {
            obj.insert("decay_error".into(), json!(e.to_string()));
        }
    }
    match &r.gamma_eff {
        Ok(g) => obj.insert("gamma_eff_per_s".into(), json!(g)),
        Err(e) => obj.insert("gamma_eff_error".into(), json!(e.to_string())),
    };
    match &r.psd_temperature {
        Ok(p) => obj.insert("t_eff_psd_k".into(), json!(p.temperature)),
        Err(e) => obj.insert("t_eff_psd_error".into(), json!(e.to_string())),
    };
    let name = format!("{stem}_fit.json");
    write_json(&dir.join(&name), &fit_json)?;
    names.push(name);
    Ok(names)
}
