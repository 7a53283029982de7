//! Shared domain types and unit conventions.
//!
//! All internal physics uses SI with *angular* frequencies (rad/s);
//! ordinary frequency in Hz appears only at file/CLI boundaries. The two
//! converters below are exact inverses to within 1 ulp.

use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::constants::{BOLTZMANN_K, HBAR};
use crate::error::{Error, Result};
use crate::math;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
#[inline]
pub fn to_angular(f_hz: f64) -> f64 {
    TAU * f_hz
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
#[inline]
pub fn from_angular(w: f64) -> f64 {
    w / TAU
}

/// Lamb-Dicke parameter η = k·a_ho/√2 with a_ho = √(ħ/(mω)).
///
/// `k` may be zero (probe orthogonal to the axis); `omega` and `mass`
/// must be strictly positive.
pub fn lamb_dicke(k: f64, omega: f64, mass: f64) -> Result<f64> {
    if !(omega > 0.0) || !(mass > 0.0) {
        return Err(Error::Domain("lamb_dicke requires omega > 0 and mass > 0"));
    }
    if !(k >= 0.0) {
        return Err(Error::Domain("lamb_dicke requires k >= 0"));
    }
    Ok(k * math::sqrt(HBAR / (mass * omega)) / math::sqrt(2.0))
}

/// Trap frequencies, Lamb-Dicke parameter, and mean transverse beam waist
/// for a single lattice site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapGeometry {
    /// Angular trap frequency along X, rad/s.
    pub omega_x: f64,
    /// Angular trap frequency along Y, rad/s.
    pub omega_y: f64,
    /// Angular trap frequency along Z (the weak axis), rad/s.
    pub omega_z: f64,
    /// Axial Lamb-Dicke parameter of the probe.
    pub eta_z: f64,
    /// Mean transverse beam waist W⊥ = √(W_X W_Y), m.
    pub waist_perp: f64,
}

impl TrapGeometry {
    pub fn new(
        omega_x: f64,
        omega_y: f64,
        omega_z: f64,
        eta_z: f64,
        waist_perp: f64,
    ) -> Result<Self> {
        if !(omega_x > 0.0 && omega_y > 0.0 && omega_z > 0.0) {
            return Err(Error::Domain("trap frequencies must be positive"));
        }
        if !(eta_z >= 0.0) {
            return Err(Error::Domain("eta_z must be non-negative"));
        }
        if !(waist_perp > 0.0) {
            return Err(Error::Domain("waist_perp must be positive"));
        }
        Ok(TrapGeometry {
            omega_x,
            omega_y,
            omega_z,
            eta_z,
            waist_perp,
        })
    }

    /// Geometric-mean transverse frequency ω⊥ = √(ω_X ω_Y).
    pub fn omega_perp(&self) -> f64 {
        math::sqrt(self.omega_x * self.omega_y)
    }

    /// Relative deviation of the stored `eta_z` from η = k_z·a_ho/√2.
    ///
    /// Lets a caller cross-check the stored Lamb-Dicke parameter when the
    /// probe wavevector projection is known.
    pub fn eta_z_deviation(&self, k_z: f64, mass: f64) -> Result<f64> {
        let eta = lamb_dicke(k_z, self.omega_z, mass)?;
        if eta == 0.0 && self.eta_z == 0.0 {
            return Ok(0.0);
        }
        Ok(math::fabs(self.eta_z - eta) / eta.max(self.eta_z))
    }
}

/// Temperatures along the three trap axes; 0 selects the exact
/// ground-configuration limit wherever a thermal average is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalState {
    pub temp_x: f64,
    pub temp_y: f64,
    pub temp_z: f64,
}

impl ThermalState {
    pub fn new(temp_x: f64, temp_y: f64, temp_z: f64) -> Result<Self> {
        if !(temp_x >= 0.0 && temp_y >= 0.0 && temp_z >= 0.0) {
            return Err(Error::Domain("temperatures must be non-negative"));
        }
        Ok(ThermalState {
            temp_x,
            temp_y,
            temp_z,
        })
    }

    /// Isotropic state with the same temperature along every axis.
    pub fn isotropic(t: f64) -> Result<Self> {
        Self::new(t, t, t)
    }
}

/// Boltzmann parameter α = ħω/(k_B T); +∞ when T = 0.
pub fn boltzmann_alpha(omega: f64, temp: f64) -> f64 {
    if temp == 0.0 {
        f64::INFINITY
    } else {
        HBAR * omega / (BOLTZMANN_K * temp)
    }
}

/// Interrogation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// All atoms start in the ground clock state.
    GtoE,
    /// All atoms start in the excited clock state.
    EtoG,
}

/// Drive parameters of one Rabi interrogation.
///
/// The duration and the pulse-area factor are stored redundantly and kept
/// consistent: t·Ω^B = sπ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveParams {
    /// Bare Rabi frequency Ω^B, rad/s.
    pub rabi_bare: f64,
    /// Probe detuning δ from atomic resonance, rad/s. Positive detuning is
    /// blue of resonance.
    pub detuning: f64,
    /// Pulse-area factor s in t = sπ/Ω^B (s = 1 is a π-pulse).
    pub pulse_area_factor: f64,
    /// Pulse duration, s.
    pub duration: f64,
    pub direction: Direction,
}

impl DriveParams {
    /// Relative tolerance on the t·Ω^B = sπ consistency requirement.
    const AREA_TOL: f64 = 1e-9;

    pub fn new(
        rabi_bare: f64,
        detuning: f64,
        pulse_area_factor: f64,
        duration: f64,
        direction: Direction,
    ) -> Result<Self> {
        if !(rabi_bare > 0.0) {
            return Err(Error::Domain("rabi_bare must be positive"));
        }
        if !(duration > 0.0) {
            return Err(Error::Domain("duration must be positive"));
        }
        let area = duration * rabi_bare;
        let expect = pulse_area_factor * PI;
        if math::fabs(area - expect) > Self::AREA_TOL * expect.max(area) {
            return Err(Error::Domain("duration and pulse_area_factor disagree"));
        }
        Ok(DriveParams {
            rabi_bare,
            detuning,
            pulse_area_factor,
            duration,
            direction,
        })
    }

    /// Build from the pulse-area factor; the duration follows as sπ/Ω^B.
    pub fn from_pulse_area(
        rabi_bare: f64,
        pulse_area_factor: f64,
        detuning: f64,
        direction: Direction,
    ) -> Result<Self> {
        if !(rabi_bare > 0.0) {
            return Err(Error::Domain("rabi_bare must be positive"));
        }
        if !(pulse_area_factor > 0.0) {
            return Err(Error::Domain("pulse_area_factor must be positive"));
        }
        Ok(DriveParams {
            rabi_bare,
            detuning,
            pulse_area_factor,
            duration: pulse_area_factor * PI / rabi_bare,
            direction,
        })
    }

    /// Build from the duration; the pulse-area factor follows as tΩ^B/π.
    pub fn from_duration(
        rabi_bare: f64,
        duration: f64,
        detuning: f64,
        direction: Direction,
    ) -> Result<Self> {
        if !(rabi_bare > 0.0) {
            return Err(Error::Domain("rabi_bare must be positive"));
        }
        if !(duration > 0.0) {
            return Err(Error::Domain("duration must be positive"));
        }
        Ok(DriveParams {
            rabi_bare,
            detuning,
            pulse_area_factor: duration * rabi_bare / PI,
            duration,
            direction,
        })
    }

    /// Same drive at a different detuning.
    pub fn at_detuning(&self, detuning: f64) -> Self {
        DriveParams { detuning, ..*self }
    }
}

/// Ordered set of occupied axial vibrational modes, strictly decreasing.
///
/// Identical ground-state fermions must occupy distinct axial modes, so
/// duplicates are rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModeConfiguration {
    modes: Vec<usize>,
}

impl ModeConfiguration {
    /// Sorts the given modes into decreasing order; duplicates are an error.
    pub fn new(mut modes: Vec<usize>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Domain("mode configuration must not be empty"));
        }
        modes.sort_unstable_by(|a, b| b.cmp(a));
        if modes.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("mode configuration has duplicate modes"));
        }
        Ok(ModeConfiguration { modes })
    }

    /// The zero-temperature configuration {n-1, …, 1, 0}.
    pub fn ground(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(Error::Domain("mode configuration must not be empty"));
        }
        Ok(ModeConfiguration {
            modes: (0..n_atoms).rev().collect(),
        })
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// One point of a lineshape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    /// Detuning, rad/s.
    pub detuning: f64,
    /// Excitation fraction (model output lies in [0, 1]; measured data may
    /// stray outside and is flagged, not rejected).
    pub excitation: f64,
    /// Optional 1σ uncertainty of the excitation fraction.
    pub sigma: Option<f64>,
}

/// A lineshape on a strictly increasing detuning grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    points: Vec<SpectrumPoint>,
}

impl Spectrum {
    pub fn new(points: Vec<SpectrumPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("spectrum must contain at least one point"));
        }
        for p in &points {
            if !p.detuning.is_finite() || !p.excitation.is_finite() {
                return Err(Error::Domain("spectrum values must be finite"));
            }
            if let Some(s) = p.sigma {
                if !(s >= 0.0) {
                    return Err(Error::Domain("spectrum sigma must be non-negative"));
                }
            }
        }
        if points.windows(2).any(|w| w[0].detuning >= w[1].detuning) {
            return Err(Error::Domain("spectrum detunings must strictly increase"));
        }
        Ok(Spectrum { points })
    }

    /// Assemble from a detuning grid and values (no uncertainties).
    pub fn from_values(detunings: &[f64], values: &[f64]) -> Result<Self> {
        if detunings.len() != values.len() {
            return Err(Error::Domain("detuning and value lengths differ"));
        }
        Self::new(
            detunings
                .iter()
                .zip(values)
                .map(|(&d, &v)| SpectrumPoint {
                    detuning: d,
                    excitation: v,
                    sigma: None,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[SpectrumPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn detunings(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.detuning)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.excitation)
    }

    /// Number of points whose excitation fraction falls outside [0, 1].
    pub fn bounds_violations(&self) -> usize {
        self.points
            .iter()
            .filter(|p| p.excitation < 0.0 || p.excitation > 1.0)
            .count()
    }

    /// The point with the largest excitation fraction.
    pub fn max_point(&self) -> SpectrumPoint {
        let mut best = self.points[0];
        for p in &self.points[1..] {
            if p.excitation > best.excitation {
                best = *p;
            }
        }
        best
    }
}

/// Evenly spaced detuning grid over [min, max] with the given step (rad/s).
pub fn detuning_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(min < max) {
        return Err(Error::Domain("grid requires min < max and step > 0"));
    }
    let n = math::floor((max - min) / step + 0.5) as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn angular_conversion_definition() {
        assert_eq!(to_angular(0.0), 0.0);
        assert!((to_angular(800.0) - TAU * 800.0).abs() < 1e-12);
    }

    #[test]
    fn lamb_dicke_zero_projection() {
        assert_eq!(lamb_dicke(0.0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn lamb_dicke_frequency_scaling() {
        // η scales as ω^(-1/2): quadrupling ω halves η.
        let m = crate::constants::SR87_MASS;
        let a = lamb_dicke(1.0e7, to_angular(800.0), m).unwrap();
        let b = lamb_dicke(1.0e7, 4.0 * to_angular(800.0), m).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn lamb_dicke_inversion_round_trip() {
        // Choose k_z so that η_Z = 0.07 at ω_Z = 2π×800 Hz for ⁸⁷Sr, then
        // recover k_z by algebraic inversion.
        let m = crate::constants::SR87_MASS;
        let w = to_angular(800.0);
        let eta = 0.07;
        let k = eta * math::sqrt(2.0) / math::sqrt(crate::constants::HBAR / (m * w));
        let eta_back = lamb_dicke(k, w, m).unwrap();
        assert!((eta_back - eta).abs() < 1e-12 * eta);
        assert!(lamb_dicke(k, -1.0, m).is_err());
    }

    #[test]
    fn trap_rejects_nonpositive_frequencies() {
        assert!(TrapGeometry::new(0.0, 1.0, 1.0, 0.1, 1e-5).is_err());
        assert!(TrapGeometry::new(1.0, 1.0, -2.0, 0.1, 1e-5).is_err());
        assert!(TrapGeometry::new(1.0, 1.0, 1.0, -0.1, 1e-5).is_err());
    }

    #[test]
    fn drive_area_consistency() {
        let d = DriveParams::from_pulse_area(10.0, 1.5, 0.0, Direction::GtoE).unwrap();
        assert!((d.duration * d.rabi_bare - 1.5 * PI).abs() < 1e-12);
        assert!(DriveParams::new(10.0, 0.0, 1.0, 1.0, Direction::GtoE).is_err());
        let ok = DriveParams::new(10.0, 0.0, 1.0, PI / 10.0, Direction::GtoE);
        assert!(ok.is_ok());
    }

    #[test]
    fn mode_configuration_sorted_and_distinct() {
        let m = ModeConfiguration::new(vec![0, 2, 1]).unwrap();
        assert_eq!(m.modes(), &[2, 1, 0]);
        assert!(ModeConfiguration::new(vec![1, 1]).is_err());
        assert_eq!(ModeConfiguration::ground(3).unwrap().modes(), &[2, 1, 0]);
    }

    #[test]
    fn spectrum_requires_increasing_grid() {
        let pts = vec![
            SpectrumPoint {
                detuning: 0.0,
                excitation: 0.5,
                sigma: None,
            },
            SpectrumPoint {
                detuning: 0.0,
                excitation: 0.5,
                sigma: None,
            },
        ];
        assert!(Spectrum::new(pts).is_err());
        let s = Spectrum::from_values(&[-1.0, 1.0], &[0.1, 1.2]).unwrap();
        assert_eq!(s.bounds_violations(), 1);
    }

    #[test]
    fn grid_covers_range() {
        let g = detuning_grid(-10.0, 10.0, 2.5).unwrap();
        assert_eq!(g.len(), 9);
        assert!((g[8] - 10.0).abs() < 1e-12);
        assert!(detuning_grid(1.0, -1.0, 0.5).is_err());
    }
}
