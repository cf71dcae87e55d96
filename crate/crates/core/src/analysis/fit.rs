//! Maximum-likelihood fits of the stationary energy distribution, with or
//! without additive detection noise.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::numeric::linalg::invert;
use crate::numeric::optimize::{hessian, nelder_mead};
use crate::numeric::special::ks_p_value;
use crate::numeric::stats::ks_statistic_sorted;
use crate::theory::{EnergyDistModel, MeasuredEnergyDensity};

pub const MIN_FIT_SAMPLES: usize = 1000;
/// Nodes of the √E grid on which the noisy log-density is tabulated.
const LIKELIHOOD_GRID: usize = 320;

/// Treatment of additive detection noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Fit the motional density directly.
    Absent,
    /// Fit the noise energy; `guess` is the starting value as a fraction of
    /// the sample mean. A purely exponential sample cannot separate
    /// thermal motion from noise, so this needs some nonlinearity.
    Free { guess: f64 },
    /// Noise energy known from calibration, J.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub noise: NoiseModel,
    /// Known temperature of the linear term, K; only η (and the noise) are
    /// fitted when set.
    pub temperature: Option<f64>,
    pub radial_nodes: usize,
    pub histogram_bins: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            noise: NoiseModel::Absent,
            temperature: None,
            radial_nodes: crate::theory::DEFAULT_RADIAL_NODES,
            histogram_bins: 40,
        }
    }
}

impl FitOptions {
    pub fn noisy() -> Self {
        Self { noise: NoiseModel::Free { guess: 0.2 }, ..Self::default() }
    }

    pub fn known_noise(noise_mean_energy: f64) -> Self {
        Self { noise: NoiseModel::Fixed(noise_mean_energy), ..Self::default() }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature: Some(temperature), ..self }
    }

    pub fn with_noise(&self) -> bool {
        !matches!(self.noise, NoiseModel::Absent)
    }
}

/// Fitted parameters; `covariance` is ordered (T, η, E_n).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyFit {
    /// Temperature scale of the linear term, K.
    pub temperature: f64,
    /// Parametric gain, s²/m².
    pub eta: f64,
    /// Mean detection-noise energy, J (zero for noise-free fits).
    pub noise_mean_energy: f64,
    pub covariance: [[f64; 3]; 3],
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub n_samples: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub mass: f64,
}

impl EnergyFit {
    pub fn model(&self) -> EnergyDistModel {
        EnergyDistModel { temperature: self.temperature, beta: self.eta / (4.0 * self.mass) }
    }

    pub fn temperature_stderr(&self) -> f64 {
        libm::sqrt(self.covariance[0][0])
    }

    pub fn eta_stderr(&self) -> f64 {
        libm::sqrt(self.covariance[1][1])
    }

    pub fn noise_stderr(&self) -> f64 {
        libm::sqrt(self.covariance[2][2])
    }

    /// Mean motional energy of the fitted distribution, J.
    pub fn motion_mean_energy(&self) -> f64 {
        self.model().mean_energy()
    }

    /// `⟨E⟩/k_B` of the fitted motional distribution.
    pub fn effective_temperature(&self) -> f64 {
        self.motion_mean_energy() / K_B
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl LogHistogram {
    /// Counts normalized to a probability density.
    pub fn density(&self) -> Vec<f64> {
        let n: u64 = self.counts.iter().sum();
        self.counts
            .iter()
            .zip(self.edges.windows(2))
            .map(|(&c, w)| c as f64 / (n as f64 * (w[1] - w[0])))
            .collect()
    }
}

/// Histogram with logarithmically spaced bins between the smallest positive
/// and the largest sample.
pub fn log_histogram(samples: &[f64], bins: usize) -> LogHistogram {
    let bins = bins.max(1);
    let lo = samples.iter().copied().filter(|&v| v > 0.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(0.0, f64::max);
    if !lo.is_finite() || !(hi > lo) {
        return LogHistogram { edges: vec![0.0, hi.max(1.0)], counts: vec![samples.len() as u64] };
    }
    let (llo, lhi) = (libm::log(lo), libm::log(hi));
    let mut edges: Vec<f64> = (0..=bins).map(|i| libm::exp(llo + (lhi - llo) * i as f64 / bins as f64)).collect();
    edges[0] = lo;
    edges[bins] = hi;
    let mut counts = vec![0u64; bins];
    for &v in samples {
        if v < lo {
            continue;
        }
        let i = (((libm::log(v) - llo) / (lhi - llo) * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    LogHistogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDistribution {
    pub samples: Vec<f64>,
    pub histogram: LogHistogram,
    pub fit: EnergyFit,
}

/// KS distance and p-value of the samples against an exponential with the
/// sample mean.
pub fn ks_exponential(samples: &[f64]) -> (f64, f64) {
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let d = ks_statistic_sorted(&sorted, |e| if e <= 0.0 { 0.0 } else { -libm::expm1(-e / mean) });
    (d, ks_p_value(d, samples.len()))
}

/// Maximum-likelihood fit of decorrelated energy samples (J).
///
/// Without noise the exponential-family likelihood is maximized by Newton's
/// method on `(a, b) = (1/k_BT, β/k_BT)`, with `b ≥ 0`, and the covariance
/// is the inverse Fisher information. With noise the measured density is
/// fitted over `(a, b, E_n)` by Nelder–Mead and the covariance comes from
/// the numerical Hessian of the log-likelihood. All work is done in units
/// of the sample mean.
pub fn fit_energy_distribution(samples: &[f64], mass: f64, options: &FitOptions) -> Result<EnergyDistribution> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooShort { needed: MIN_FIT_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::Domain("energy samples must be finite and non-negative"));
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter { name: "mass", reason: "must be positive" });
    }
    let n = samples.len();
    let scale = samples.iter().sum::<f64>() / n as f64;
    if !(scale > 0.0) {
        return Err(Error::Domain("energy samples are all zero"));
    }
    let mut sorted: Vec<f64> = samples.iter().map(|e| e / scale).collect();
    sorted.sort_by(f64::total_cmp);
    let fixed_a = match options.temperature {
        Some(t) if t > 0.0 && t.is_finite() => Some(scale / (K_B * t)),
        Some(_) => return Err(Error::InvalidParameter { name: "temperature", reason: "must be positive" }),
        None => None,
    };

    let scaled = match options.noise {
        NoiseModel::Absent => fit_clean(&sorted, fixed_a)?,
        NoiseModel::Free { guess } => fit_noisy(&sorted, guess, fixed_a, None, options.radial_nodes, scale)?,
        NoiseModel::Fixed(en) => {
            if !(en >= 0.0 && en.is_finite()) {
                return Err(Error::InvalidParameter { name: "noise_mean_energy", reason: "must be >= 0" });
            }
            if en == 0.0 {
                fit_clean(&sorted, fixed_a)?
            } else {
                fit_noisy(&sorted, en / scale, fixed_a, Some(en / scale), options.radial_nodes, scale)?
            }
        }
    };

    // Jacobian of (T, η, E_n) with respect to the scaled (a, b, ν)
    let (a, b, nu) = (scaled.a, scaled.b, scaled.nu);
    let jac = [
        [-scale / (K_B * a * a), 0.0, 0.0],
        [-4.0 * mass * b / (a * a * scale), 4.0 * mass / (a * scale), 0.0],
        [0.0, 0.0, scale],
    ];
    let mut covariance = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    acc += jac[i][k] * scaled.covariance[k][l] * jac[j][l];
                }
            }
            covariance[i][j] = acc;
        }
    }
    let fit = EnergyFit {
        temperature: scale / (K_B * a),
        eta: 4.0 * mass * b / (a * scale),
        noise_mean_energy: nu * scale,
        covariance,
        ks_statistic: scaled.ks,
        ks_p_value: ks_p_value(scaled.ks, n),
        n_samples: n,
        log_likelihood: scaled.log_likelihood - n as f64 * libm::log(scale),
        iterations: scaled.iterations,
        mass,
    };
    Ok(EnergyDistribution {
        samples: samples.to_vec(),
        histogram: log_histogram(samples, options.histogram_bins),
        fit,
    })
}

struct ScaledFit {
    a: f64,
    b: f64,
    nu: f64,
    covariance: [[f64; 3]; 3],
    ks: f64,
    log_likelihood: f64,
    iterations: usize,
}

fn scaled_model(a: f64, b: f64) -> Result<EnergyDistModel> {
    EnergyDistModel::from_exponent(a, b)
}

/// `(ln Z, ⟨e⟩, ⟨e²⟩, ⟨e³⟩, ⟨e⁴⟩)` for the scaled density `exp(-ae-be²)`.
fn exp_family_moments(a: f64, b: f64) -> Result<[f64; 5]> {
    if b == 0.0 {
        return Ok([-libm::log(a), 1.0 / a, 2.0 / (a * a), 6.0 / (a * a * a), 24.0 / (a * a * a * a)]);
    }
    let m = scaled_model(a, b)?;
    Ok([libm::log(m.normalization()), m.moment(1), m.moment(2), m.moment(3), m.moment(4)])
}

fn fit_clean(sorted: &[f64], fixed_a: Option<f64>) -> Result<ScaledFit> {
    let n = sorted.len() as f64;
    let s1 = sorted.iter().sum::<f64>() / n;
    let s2 = sorted.iter().map(|e| e * e).sum::<f64>() / n;
    let objective = |a: f64, b: f64| -> Result<f64> { Ok(a * s1 + b * s2 + exp_family_moments(a, b)?[0]) };
    if let Some(a) = fixed_a {
        return fit_clean_fixed(sorted, a, s2, objective);
    }

    let (mut a, mut b) = (1.0 / s1, 0.0);
    let mut iterations = 0;
    // at b = 0 the likelihood can only improve by increasing b when the
    // sample second moment falls short of the exponential value
    if s2 < 2.0 * s1 * s1 {
        let mut f = objective(a, b)?;
        loop {
            iterations += 1;
            let m = exp_family_moments(a, b)?;
            let g = [s1 - m[1], s2 - m[2]];
            let h = [[m[2] - m[1] * m[1], m[3] - m[1] * m[2]], [m[3] - m[1] * m[2], m[4] - m[2] * m[2]]];
            let det = h[0][0] * h[1][1] - h[0][1] * h[0][1];
            if !(det > 0.0) {
                return Err(Error::NonConverged(format!("singular information matrix at a={a}, b={b}")));
            }
            let da = -(h[1][1] * g[0] - h[0][1] * g[1]) / det;
            let db = -(-h[0][1] * g[0] + h[0][0] * g[1]) / det;
            if libm::fabs(da) <= 1e-8 * a && libm::fabs(db) <= 1e-8 * b.max(1e-3) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let (na, nb) = (a + t * da, (b + t * db).max(0.0));
                if na > 0.0 {
                    let nf = objective(na, nb)?;
                    if nf < f {
                        a = na;
                        b = nb;
                        f = nf;
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            let small = libm::fabs(g[0]) < 1e-11 * s1 && libm::fabs(g[1]) < 1e-11 * s2;
            if small || !accepted {
                break;
            }
            if iterations >= 200 {
                return Err(Error::NonConverged(format!("Newton iterations exhausted at a={a}, b={b}")));
            }
        }
    }
    let m = exp_family_moments(a, b)?;
    let info = [[m[2] - m[1] * m[1], m[3] - m[1] * m[2]], [m[3] - m[1] * m[2], m[4] - m[2] * m[2]]];
    let det = info[0][0] * info[1][1] - info[0][1] * info[0][1];
    let mut covariance = [[0.0; 3]; 3];
    covariance[0][0] = info[1][1] / det / n;
    covariance[0][1] = -info[0][1] / det / n;
    covariance[1][0] = covariance[0][1];
    covariance[1][1] = info[0][0] / det / n;
    let model = scaled_model(a, b)?;
    let ks = ks_statistic_sorted(sorted, |e| model.cdf(e));
    Ok(ScaledFit {
        a,
        b,
        nu: 0.0,
        covariance,
        ks,
        log_likelihood: -n * (a * s1 + b * s2 + m[0]),
        iterations,
    })
}

/// Newton on `b` alone with the linear coefficient pinned.
fn fit_clean_fixed(sorted: &[f64], a: f64, s2: f64, objective: impl Fn(f64, f64) -> Result<f64>) -> Result<ScaledFit> {
    let n = sorted.len() as f64;
    let mut b = 0.0;
    let mut f = objective(a, b)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let m = exp_family_moments(a, b)?;
        let g = s2 - m[2];
        let h = m[4] - m[2] * m[2];
        if (b == 0.0 && g >= 0.0) || libm::fabs(g) < 1e-11 * s2 {
            break;
        }
        let db = -g / h;
        // below the resolution of the quadrature moments
        if libm::fabs(db) <= 1e-8 * b.max(1e-3) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let nb = (b + t * db).max(0.0);
            let nf = objective(a, nb)?;
            if nf < f {
                b = nb;
                f = nf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        if iterations >= 200 {
            return Err(Error::NonConverged(format!("Newton iterations exhausted at b={b}")));
        }
    }
    let m = exp_family_moments(a, b)?;
    let mut covariance = [[0.0; 3]; 3];
    covariance[1][1] = 1.0 / ((m[4] - m[2] * m[2]) * n);
    let model = scaled_model(a, b)?;
    let ks = ks_statistic_sorted(sorted, |e| model.cdf(e));
    Ok(ScaledFit { a, b, nu: 0.0, covariance, ks, log_likelihood: -n * f, iterations })
}

/// Log-likelihood of sorted samples whose log-density is linearly
/// interpolated on a fixed √e grid: reduces to a weighted sum over nodes.
struct GridLikelihood {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GridLikelihood {
    fn new(sorted: &[f64]) -> Self {
        let u_max = libm::sqrt(*sorted.last().expect("non-empty")) * 1.0001;
        let h = u_max / (LIKELIHOOD_GRID - 1) as f64;
        let nodes: Vec<f64> = (0..LIKELIHOOD_GRID).map(|i| i as f64 * h).collect();
        let mut weights = vec![0.0; LIKELIHOOD_GRID];
        for &e in sorted {
            let x = libm::sqrt(e) / h;
            let j = (x as usize).min(LIKELIHOOD_GRID - 2);
            let w = x - j as f64;
            weights[j] += 1.0 - w;
            weights[j + 1] += w;
        }
        Self { nodes, weights }
    }

    fn log_densities(&self, density: &MeasuredEnergyDensity) -> Vec<f64> {
        self.nodes.iter().map(|u| libm::log(density.density(u * u).max(1e-300))).collect()
    }

    fn log_likelihood(&self, density: &MeasuredEnergyDensity) -> f64 {
        self.log_densities(density).iter().zip(&self.weights).map(|(l, w)| l * w).sum()
    }
}

/// `fixed_nu` pins the scaled noise energy, otherwise it is a free
/// parameter starting at `guess`; `fixed_a` pins the linear coefficient.
fn fit_noisy(
    sorted: &[f64],
    guess: f64,
    fixed_a: Option<f64>,
    fixed_nu: Option<f64>,
    nodes: usize,
    scale: f64,
) -> Result<ScaledFit> {
    let n = sorted.len() as f64;
    let clean = fit_clean(sorted, None)?;
    let grid = GridLikelihood::new(sorted);
    let nll = |a: f64, b: f64, nu: f64| -> f64 {
        if !(a > 0.0 && b >= 0.0 && nu > 0.0 && a.is_finite() && b.is_finite() && nu.is_finite()) {
            return f64::INFINITY;
        }
        let model = match scaled_model(a, b) {
            Ok(m) => m,
            Err(_) => return f64::INFINITY,
        };
        match MeasuredEnergyDensity::new(model, nu, nodes) {
            Ok(d) => -grid.log_likelihood(&d),
            Err(_) => f64::INFINITY,
        }
    };
    // noise eats a fraction `g` of the mean: start from the clean fit
    // rescaled to the remaining motional energy
    let g = guess.clamp(1e-3, 0.9);
    let r = 1.0 - g;
    let (a0, b0) = (fixed_a.unwrap_or(clean.a / r), clean.b / (r * r));
    // optimizer coordinates: [ln a]?, b, [ln ν]?
    let unpack = |p: &[f64]| -> (f64, f64, f64) {
        let mut k = 0;
        let a = match fixed_a {
            Some(a) => a,
            None => {
                k = 1;
                libm::exp(p[0])
            }
        };
        let nu = fixed_nu.unwrap_or_else(|| libm::exp(p[k + 1]));
        (a, p[k], nu)
    };
    let f = |p: &[f64]| {
        let (a, b, nu) = unpack(p);
        nll(a, b, nu) / n
    };
    let mut start = Vec::new();
    let mut step = Vec::new();
    if fixed_a.is_none() {
        start.push(libm::log(a0));
        step.push(0.2);
    }
    let b_index = start.len();
    start.push(b0);
    step.push(0.2 * b0.max(0.05));
    if fixed_nu.is_none() {
        start.push(libm::log(g));
        step.push(0.5);
    }
    let mut best = nelder_mead(f, &start, &step, 1e-12, 1e-7, 3000);
    let mut iterations = best.iterations;
    let restart = best.x.clone();
    for s in step.iter_mut() {
        *s *= 0.25;
    }
    step[b_index] = step[b_index].max(0.05 * best.x[b_index].max(0.02));
    best = nelder_mead(f, &restart, &step, 1e-13, 1e-8, 3000);
    iterations += best.iterations;
    let (a, b, nu) = unpack(&best.x);

    let motion = scaled_model(a, b).map(|m| m.mean_energy()).unwrap_or(0.0);
    if !(motion >= nu / 10.0) {
        return Err(Error::NoiseDominated { motion: motion * scale, noise: nu * scale });
    }
    if !best.converged {
        return Err(Error::NonConverged(format!(
            "noisy fit did not converge after {iterations} iterations (a={a}, b={b}, noise={nu})"
        )));
    }
    let h = [1e-3 * a, 1e-3 * b.max(0.01), 1e-3 * nu];
    // keep the stencil inside b ≥ 0
    let centre = [a, b.max(h[1]), nu];
    let free: Vec<usize> = [(0, fixed_a.is_none()), (1, true), (2, fixed_nu.is_none())]
        .iter()
        .filter(|(_, f)| *f)
        .map(|(i, _)| *i)
        .collect();
    let at = |p: &[f64]| {
        let mut full = centre;
        for (k, &i) in free.iter().enumerate() {
            full[i] = p[k];
        }
        full
    };
    let c_free: Vec<f64> = free.iter().map(|&i| centre[i]).collect();
    let h_free: Vec<f64> = free.iter().map(|&i| h[i]).collect();
    let hess = hessian(
        |p| {
            let q = at(p);
            nll(q[0], q[1], q[2])
        },
        &c_free,
        &h_free,
    );
    let inv = invert(&hess).ok_or_else(|| Error::NonConverged(format!("singular Hessian at a={a}, b={b}, noise={nu}")))?;
    let mut covariance = [[0.0; 3]; 3];
    for (k, &i) in free.iter().enumerate() {
        if !(inv[k][k] > 0.0) {
            return Err(Error::NonConverged(format!("Hessian not positive definite at a={a}, b={b}, noise={nu}")));
        }
        for (l, &j) in free.iter().enumerate() {
            covariance[i][j] = inv[k][l];
        }
    }
    let density = MeasuredEnergyDensity::new(scaled_model(a, b)?, nu, nodes)?;
    let ks = ks_statistic_sorted(sorted, tabulated_cdf(&grid.nodes, &density));
    Ok(ScaledFit {
        a,
        b,
        nu,
        covariance,
        ks,
        log_likelihood: -nll(a, b, nu),
        iterations,
    })
}

/// CDF by cumulative trapezoid of `p(u²)·2u` on a refined √e grid,
/// linearly interpolated in √e.
fn tabulated_cdf<'a>(nodes: &[f64], density: &MeasuredEnergyDensity) -> impl Fn(f64) -> f64 + 'a {
    let refine = 4;
    let u_max = *nodes.last().expect("non-empty");
    let m = (nodes.len() - 1) * refine + 1;
    let h = u_max / (m - 1) as f64;
    let f: Vec<f64> = (0..m)
        .map(|i| {
            let u = i as f64 * h;
            density.density(u * u) * 2.0 * u
        })
        .collect();
    let mut cum = vec![0.0; m];
    for i in 1..m {
        cum[i] = cum[i - 1] + 0.5 * h * (f[i] + f[i - 1]);
    }
    let total = cum[m - 1];
    move |e: f64| {
        if e <= 0.0 {
            return 0.0;
        }
        let x = libm::sqrt(e) / h;
        if x >= (m - 1) as f64 {
            return 1.0;
        }
        let j = x as usize;
        let w = x - j as f64;
        ((1.0 - w) * cum[j] + w * cum[j + 1]) / total
    }
}
