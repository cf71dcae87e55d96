use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{ExperimentConfig, Format};
use crate::error::CliError;
use crate::manifest::Manifest;

/// Directory searched for `--config` paths that do not exist as given.
pub const CONFIG_DIR_VAR: &str = "QUADCOOL_CONFIG_DIR";

#[derive(Debug, Parser)]
#[command(name = "quadcool", version, about = "Simulate and analyze quadratic optomechanical cooling")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Steady-state T_eff(η) and T_eff(P), γ_eff(P) tables.
    Theory(Common),
    /// Seeded trajectory ensemble.
    Simulate(Common),
    /// Spectra, energy distributions and damping estimates of trajectory files.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Trajectory files (CSV or binary); taken from the manifest when omitted.
        inputs: Vec<PathBuf>,
    },
    /// Parameter sweep with theory comparison.
    Sweep(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Experiment config (TOML) or a manifest from a previous run.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Root seed; overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Trajectory file format; overrides `output.format`.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

impl Common {
    fn config_path(&self) -> PathBuf {
        if !self.config.exists() && self.config.is_relative() {
            if let Some(dir) = std::env::var_os(CONFIG_DIR_VAR) {
                let candidate = PathBuf::from(dir).join(&self.config);
                if candidate.exists() {
                    return candidate;
                }
            }
        }
        self.config.clone()
    }

    /// Loads the config and applies command-line overrides.
    pub fn resolve(&self) -> Result<(ExperimentConfig, PathBuf), CliError> {
        let mut cfg = ExperimentConfig::load(&self.config_path())?;
        if let Some(s) = self.seed {
            cfg.sim.seed = s;
        }
        if let Some(f) = self.format {
            cfg.output.format = f;
        }
        if let Some(o) = &self.out {
            cfg.output.directory = o.display().to_string();
        }
        let out = PathBuf::from(&cfg.output.directory);
        Ok((cfg, out))
    }
}

pub fn run(cli: Cli) -> Result<Manifest, CliError> {
    let common = match &cli.command {
        Command::Theory(c) | Command::Simulate(c) | Command::Sweep(c) => c,
        Command::Analyze { common, .. } => common,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = common.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    let (cfg, out) = common.resolve()?;
    pool.install(|| match &cli.command {
        Command::Theory(_) => commands::theory(&cfg, &out),
        Command::Simulate(_) => commands::simulate(&cfg, &out),
        Command::Sweep(_) => commands::sweep(&cfg, &out).map(|(m, _)| m),
        Command::Analyze { inputs, common } => {
            let inputs = if inputs.is_empty() { manifest_inputs(common)? } else { inputs.clone() };
            commands::analyze(&cfg, &inputs, &out)
        }
    })
}

/// Inputs recorded in a manifest passed as `--config`: the inputs of an
/// `analyze` run, or the trajectories written by a `simulate` run.
fn manifest_inputs(common: &Common) -> Result<Vec<PathBuf>, CliError> {
    let path = common.config_path();
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    if !text.trim_start().starts_with('{') {
        return Ok(Vec::new());
    }
    let m = Manifest::read(&path)?;
    if m.command == "simulate" {
        let dir = path.parent().unwrap_or(std::path::Path::new("."));
        return Ok(m
            .outputs
            .into_iter()
            .filter(|f| f.path.starts_with("traj_"))
            .map(|f| dir.join(f.path))
            .collect());
    }
    Ok(m.inputs.into_iter().map(|f| PathBuf::from(f.path)).collect())
}
