use core::f64::consts::PI;

use crate::constants::K_B;
use crate::error::{Error, Result};
use crate::numeric::quad::integrate;
use crate::numeric::special::erfcx;

/// Stationary energy distribution `exp(-E/k_BT · (1 + βE))`, normalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDistModel {
    /// Temperature scale of the linear term, K (the bath temperature for the
    /// physical model; a fit parameter otherwise).
    pub temperature: f64,
    /// Coefficient of E² relative to E in the exponent, 1/J.
    pub beta: f64,
}

impl EnergyDistModel {
    pub fn new(temperature: f64, beta: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::InvalidParameter { name: "temperature", reason: "must be positive" });
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter { name: "beta", reason: "must be finite and >= 0" });
        }
        Ok(Self { temperature, beta })
    }

    pub fn thermal(temperature: f64) -> Result<Self> {
        Self::new(temperature, 0.0)
    }

    /// From the parametric gain η (s²/m²) and particle mass.
    pub fn from_gain(temperature: f64, eta: f64, mass: f64) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter { name: "eta", reason: "must be >= 0" });
        }
        Self::new(temperature, eta / (4.0 * mass))
    }

    /// From exponent coefficients `a` (1/J) and `b` (1/J²).
    pub fn from_exponent(a: f64, b: f64) -> Result<Self> {
        Self::new(1.0 / (K_B * a), b / a)
    }

    pub fn gain(&self, mass: f64) -> f64 {
        4.0 * mass * self.beta
    }

    pub fn linear_coefficient(&self) -> f64 {
        1.0 / (K_B * self.temperature)
    }

    pub fn quadratic_coefficient(&self) -> f64 {
        self.beta / (K_B * self.temperature)
    }

    /// Dimensionless nonlinearity `β k_B T = b/a²`.
    pub fn nonlinearity(&self) -> f64 {
        self.beta * K_B * self.temperature
    }

    fn exponent(&self, e: f64) -> f64 {
        -e * (self.linear_coefficient() + self.quadratic_coefficient() * e)
    }

    /// `Z = ∫₀^∞ exp(-aE - bE²) dE` in closed form.
    pub fn normalization(&self) -> f64 {
        let (a, b) = (self.linear_coefficient(), self.quadratic_coefficient());
        if b == 0.0 {
            return 1.0 / a;
        }
        libm::sqrt(PI / (4.0 * b)) * erfcx(a / (2.0 * libm::sqrt(b)))
    }

    /// Same integral by adaptive quadrature.
    pub fn normalization_quadrature(&self) -> f64 {
        self.raw_moment_quadrature(0)
    }

    /// Energy beyond which the unnormalized density is below `e^{-750}`.
    pub(crate) fn support_end(&self, log_cut: f64) -> f64 {
        let (a, b) = (self.linear_coefficient(), self.quadratic_coefficient());
        if b == 0.0 {
            return log_cut / a;
        }
        // positive root of bE² + aE - log_cut = 0, written without cancellation
        2.0 * log_cut / (a + libm::sqrt(a * a + 4.0 * b * log_cut))
    }

    fn raw_moment_quadrature(&self, n: i32) -> f64 {
        let end = self.support_end(750.0);
        // scale to O(1) so absolute tolerances are meaningful
        let scale = self.support_end(1.0);
        let integral = integrate(
            |x| {
                let e = x * scale;
                libm::pow(x, n as f64) * libm::exp(self.exponent(e))
            },
            0.0,
            end / scale,
            1e-300,
            1e-13,
        );
        integral.value * libm::pow(scale, (n + 1) as f64)
    }

    /// `⟨Eⁿ⟩` by quadrature.
    pub fn moment(&self, n: i32) -> f64 {
        self.raw_moment_quadrature(n) / self.normalization()
    }

    pub fn pdf(&self, e: f64) -> f64 {
        if e < 0.0 {
            return 0.0;
        }
        libm::exp(self.exponent(e)) / self.normalization()
    }

    pub fn ln_pdf(&self, e: f64) -> f64 {
        self.exponent(e) - libm::log(self.normalization())
    }

    pub fn cdf(&self, e: f64) -> f64 {
        if e <= 0.0 {
            return 0.0;
        }
        let (a, b) = (self.linear_coefficient(), self.quadratic_coefficient());
        if b == 0.0 {
            return -libm::expm1(-a * e);
        }
        let sb = libm::sqrt(b);
        let z1 = a / (2.0 * sb);
        let z2 = z1 + sb * e;
        let num = erfcx(z1) - erfcx(z2) * libm::exp(self.exponent(e));
        (num / erfcx(z1)).clamp(0.0, 1.0)
    }

    pub fn mean_energy(&self) -> f64 {
        if self.beta == 0.0 {
            return K_B * self.temperature;
        }
        self.moment(1)
    }

    pub fn energy_variance(&self) -> f64 {
        if self.beta == 0.0 {
            let m = K_B * self.temperature;
            return m * m;
        }
        let m1 = self.moment(1);
        self.moment(2) - m1 * m1
    }
}

/// Density of the stationary energy distribution; errors for `E < 0`.
pub fn energy_pdf(model: &EnergyDistModel, e: f64) -> Result<f64> {
    if e < 0.0 {
        return Err(Error::Domain("energy must be non-negative"));
    }
    Ok(model.pdf(e))
}

/// `T_eff = ⟨E⟩/k_B`.
pub fn effective_temperature(model: &EnergyDistModel) -> f64 {
    model.mean_energy() / K_B
}

/// Deep-nonlinear limit `T_eff = (4 m T_bath / (π k_B η))^{1/2}`.
pub fn low_pressure_teff(mass: f64, bath_temperature: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain("eta must be positive"));
    }
    Ok(libm::sqrt(4.0 * mass * bath_temperature / (PI * K_B * eta)))
}

/// Deep-nonlinear limit `γ_eff = γ_g (π k_B T_bath η / (4m))^{1/2}`.
pub fn low_pressure_gamma_eff(gamma_g: f64, mass: f64, bath_temperature: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Domain("eta must be positive"));
    }
    Ok(gamma_g * libm::sqrt(PI * K_B * bath_temperature * eta / (4.0 * mass)))
}

/// Effective damping from the stationary energy balance,
/// `γ_eff = γ_g T_bath / T_eff`. Equals γ_g for β = 0 and the deep-nonlinear
/// limit for β k_B T ≫ 1.
pub fn balance_damping(gamma_g: f64, model: &EnergyDistModel) -> f64 {
    gamma_g * model.temperature / effective_temperature(model)
}
