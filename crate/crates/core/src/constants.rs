//! Physical constants (CODATA 2018) and the ⁸⁷Sr atomic mass.

use crate::error::{Error, Result};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant, J·s (exact, SI 2019).
pub const PLANCK_H: f64 = 6.626_070_15e-34;
/// Boltzmann constant, J/K (exact, SI 2019).
pub const BOLTZMANN_K: f64 = 1.380_649e-23;
/// Bohr radius, m.
pub const BOHR_RADIUS: f64 = 5.291_772_109_03e-11;
/// Atomic mass constant, kg.
pub const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
/// ⁸⁷Sr mass in atomic mass units (AME2020).
pub const SR87_MASS_U: f64 = 86.908_877_464_2;
/// ⁸⁷Sr mass, kg.
pub const SR87_MASS: f64 = SR87_MASS_U * ATOMIC_MASS;

/// Bundle of the constants entering the interaction and trap formulas.
///
/// Immutable after construction; [`PhysicalConstants::codata2018`] is the
/// set used everywhere in this crate unless a caller overrides it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    hbar: f64,
    boltzmann_k: f64,
    bohr_radius: f64,
    mass_sr87: f64,
}

impl PhysicalConstants {
    /// CODATA 2018 values with the AME2020 ⁸⁷Sr mass.
    pub const fn codata2018() -> Self {
        PhysicalConstants {
            hbar: HBAR,
            boltzmann_k: BOLTZMANN_K,
            bohr_radius: BOHR_RADIUS,
            mass_sr87: SR87_MASS,
        }
    }

    /// Custom constants; every entry must be strictly positive.
    pub fn new(hbar: f64, boltzmann_k: f64, bohr_radius: f64, mass_sr87: f64) -> Result<Self> {
        if !(hbar > 0.0 && boltzmann_k > 0.0 && bohr_radius > 0.0 && mass_sr87 > 0.0) {
            return Err(Error::Domain("physical constants must be positive"));
        }
        Ok(PhysicalConstants {
            hbar,
            boltzmann_k,
            bohr_radius,
            mass_sr87,
        })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn boltzmann_k(&self) -> f64 {
        self.boltzmann_k
    }

    pub fn bohr_radius(&self) -> f64 {
        self.bohr_radius
    }

    pub fn mass_sr87(&self) -> f64 {
        self.mass_sr87
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::codata2018()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_positive() {
        let c = PhysicalConstants::default();
        assert!(c.hbar() > 0.0 && c.boltzmann_k() > 0.0);
        assert!(c.bohr_radius() > 0.0 && c.mass_sr87() > 0.0);
    }

    #[test]
    fn sr87_mass_in_expected_range() {
        assert!((SR87_MASS - 1.443e-25).abs() < 1e-27);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(PhysicalConstants::new(1.0, -1.0, 1.0, 1.0).is_err());
    }
}
