use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use super::rng::{stream, Domain};
use super::{ColumnKind, Trajectory};
use crate::error::{Error, Result};

/// Adds `y_meas = x + n` with `n` white Gaussian of one-sided PSD
/// `noise_floor` (m²/Hz), drawn from the measurement stream of
/// `(seed, trajectory index)`.
pub fn measurement_channel(traj: &Trajectory, noise_floor: f64, seed: u64) -> Result<Trajectory> {
    if !(noise_floor >= 0.0 && noise_floor.is_finite()) {
        return Err(Error::InvalidParameter { name: "noise_floor", reason: "must be >= 0" });
    }
    let x = traj.require(ColumnKind::X)?;
    let y: Vec<f64> = if noise_floor == 0.0 {
        x.to_vec()
    } else {
        let sigma = libm::sqrt(noise_floor * traj.sample_rate / 2.0);
        let normal = Normal::new(0.0, sigma).map_err(|_| Error::Domain("noise level"))?;
        let mut rng = stream(seed, Domain::Measurement, traj.meta.index);
        x.iter().map(|&v| v + normal.sample(&mut rng)).collect()
    };
    let mut out = traj.clone();
    out.set_column(ColumnKind::YMeas, y)?;
    Ok(out)
}
