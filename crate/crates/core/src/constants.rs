//! Physical constants used for SI conversions (2019 SI exact values where
//! they exist, CODATA otherwise). Everything downstream of the unit layer
//! works in units of the trap frequency and never touches these.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;
/// Electron Landé factor used for the spin–gradient coupling.
pub const G_E: f64 = 2.0;
/// Mass density of diamond spheres, kg/m³.
pub const DIAMOND_DENSITY: f64 = 3500.0;
