//! Physical constants (SI, CODATA 2018 exact values where defined).

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

/// Atomic mass constant, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Mass of an N₂ molecule, kg.
pub const N2_MASS: f64 = 28.0134 * AMU;

/// Relative permittivity of fused silica at 1064 nm (n ≈ 1.45).
pub const SILICA_PERMITTIVITY: f64 = 2.1;

/// Pascal per millibar.
pub const PA_PER_MBAR: f64 = 100.0;
