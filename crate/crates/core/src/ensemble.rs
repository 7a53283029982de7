//! Averaging single-site lineshapes over the lattice-site distribution.
//!
//! Sites away from the center of the lattice beams sit in a shallower
//! transverse potential, ω⊥(X,Y) = ω⊥(0,0)·exp[−(X²+Y²)/W⊥²], so the
//! interaction strength u (∝ ω⊥) and the transverse thermal factors vary
//! from tube to tube. The trap-averaged spectrum is a weighted Monte Carlo
//! mean over sampled sites, deterministic for a fixed seed, with the
//! per-point standard error attached.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::overlap::{InteractionParams, OverlapTable, TruncationPolicy};
use crate::rng::Rng;
use crate::thermal::{
    isb_closed_form_with, single_atom_thermal, thermal_lineshape_bruteforce_with, PairFidelity,
    ThermalLineshapeConfig,
};
use crate::types::{DriveParams, Spectrum, SpectrumPoint, ThermalState, TrapGeometry};

/// Lattice geometry being sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    /// 1D lattice: stack of pancakes along the vertical axis.
    OneD,
    /// 2D lattice: rows of tubes, Gaussian column loading.
    TwoD,
}

/// Distribution of populated lattice sites.
#[derive(Debug, Clone)]
pub struct LatticeDistribution {
    pub geometry_kind: GeometryKind,
    /// Gaussian column spread σ_H along X, m.
    pub sigma_h: f64,
    /// Number of uniformly loaded rows along Y.
    pub n_rows: usize,
    /// Full extent covered by the rows along Y, m.
    pub row_extent: f64,
    /// Mean beam waist W⊥, m.
    pub waist_perp: f64,
    /// Trap at the beam-intersection center.
    pub center_trap: TrapGeometry,
    /// (atoms per site, fraction of populated sites); fractions sum to ≤ 1,
    /// any remainder is treated as unpopulated and never sampled.
    pub occupancy: Vec<(usize, f64)>,
    /// Place multiply occupied sites uniformly over the central region
    /// instead of following the Gaussian column profile.
    pub uniform_double_occupancy: bool,
    /// Half-width of that central region, m.
    pub uniform_halfwidth: f64,
}

impl LatticeDistribution {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_h >= 0.0) || !(self.waist_perp > 0.0) || !(self.row_extent >= 0.0) {
            return Err(Error::Domain("lattice lengths must be non-negative"));
        }
        if self.n_rows == 0 {
            return Err(Error::Domain("lattice needs at least one row"));
        }
        if self.occupancy.is_empty() {
            return Err(Error::Domain("occupancy model must not be empty"));
        }
        let mut total = 0.0;
        for &(n, frac) in &self.occupancy {
            if n == 0 {
                return Err(Error::Domain("occupancy entries must have n >= 1"));
            }
            if !(frac >= 0.0) {
                return Err(Error::Domain("occupancy fractions must be non-negative"));
            }
            total += frac;
        }
        if total > 1.0 + 1e-12 || total <= 0.0 {
            return Err(Error::Domain("occupancy fractions must sum to (0, 1]"));
        }
        Ok(())
    }

    /// Default 2D-lattice loading: ~100 rows of tubes
    /// (≈ 40 µm at half the lattice wavelength), σ_H = 8 µm columns,
    /// W⊥ = 30 µm, 30 % of populated tubes doubly occupied and placed
    /// uniformly near the center.
    ///
    /// The doubly occupied region extends one σ_H from the center; the
    /// closed-form engine is only valid while sites stay well inside the
    /// beam waist, so keep `uniform_halfwidth` ≲ W⊥/2.
    pub fn experiment_2d(center_trap: TrapGeometry) -> Self {
        LatticeDistribution {
            geometry_kind: GeometryKind::TwoD,
            sigma_h: 8e-6,
            n_rows: 100,
            row_extent: 40e-6,
            waist_perp: center_trap.waist_perp,
            center_trap,
            occupancy: vec![(1, 0.7), (2, 0.3)],
            uniform_double_occupancy: true,
            uniform_halfwidth: 8e-6,
        }
    }
}

/// One sampled lattice site.
#[derive(Debug, Clone, Copy)]
pub struct SiteSample {
    pub x: f64,
    pub y: f64,
    pub n_atoms: usize,
    /// Locally rescaled trap.
    pub trap: TrapGeometry,
    /// Averaging weight (the site's atom number, so spectra average
    /// per atom).
    pub weight: f64,
}

/// Trap at position (x, y): the transverse frequencies pick up the beam
/// intensity factor exp[−(x²+y²)/W⊥²] equally, leaving their ratio and
/// the axial confinement unchanged.
pub fn local_trap(center: &TrapGeometry, x: f64, y: f64, waist: f64) -> TrapGeometry {
    let g = math::exp(-(x * x + y * y) / (waist * waist));
    TrapGeometry {
        omega_x: center.omega_x * g,
        omega_y: center.omega_y * g,
        omega_z: center.omega_z,
        eta_z: center.eta_z,
        waist_perp: center.waist_perp,
    }
}

/// Draw `n_samples` sites; deterministic for a given seed, with one
/// derived random stream per sample so parallel evaluation cannot change
/// the draws.
pub fn sample_sites(
    dist: &LatticeDistribution,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<SiteSample>> {
    dist.validate()?;
    if n_samples == 0 {
        return Err(Error::Domain("need at least one sample"));
    }
    let total: f64 = dist.occupancy.iter().map(|&(_, f)| f).sum();
    let mut out = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let mut rng = Rng::stream(seed, i as u64);
        // Occupancy from the cumulative fractions (renormalized to the
        // populated sites).
        let draw = rng.uniform() * total;
        let mut acc = 0.0;
        let mut n_atoms = dist.occupancy.last().map(|&(n, _)| n).unwrap_or(1);
        for &(n, frac) in &dist.occupancy {
            acc += frac;
            if draw < acc {
                n_atoms = n;
                break;
            }
        }
        let uniform = dist.uniform_double_occupancy && n_atoms >= 2;
        let (x, y) = match dist.geometry_kind {
            GeometryKind::TwoD => {
                let x = if uniform {
                    rng.uniform_in(-dist.uniform_halfwidth, dist.uniform_halfwidth)
                } else {
                    rng.normal_scaled(0.0, dist.sigma_h)
                };
                let y = if dist.n_rows == 1 {
                    0.0
                } else {
                    let mut row = rng.below(dist.n_rows as u64) as f64;
                    if uniform && dist.row_extent > 0.0 {
                        // Restrict to rows inside the central region.
                        let frac = (dist.uniform_halfwidth / (0.5 * dist.row_extent)).min(1.0);
                        let n_central =
                            ((dist.n_rows as f64 * frac) as u64).max(1);
                        let offset = (dist.n_rows as u64 - n_central) / 2;
                        row = (offset + rng.below(n_central)) as f64;
                    }
                    (row / (dist.n_rows as f64 - 1.0) - 0.5) * dist.row_extent
                };
                (x, y)
            }
            GeometryKind::OneD => (0.0, rng.normal_scaled(0.0, dist.sigma_h)),
        };
        let trap = local_trap(&dist.center_trap, x, y, dist.waist_perp);
        out.push(SiteSample {
            x,
            y,
            n_atoms,
            trap,
            weight: n_atoms as f64,
        });
    }
    Ok(out)
}

/// Which per-site engine the ensemble average runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteEngine {
    ClosedForm,
    BruteForce(PairFidelity),
}

/// Full configuration of a trap-averaged spectrum.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub dist: LatticeDistribution,
    pub thermal: ThermalState,
    pub drive: DriveParams,
    pub truncation: TruncationPolicy,
    /// Singlet scattering length, m.
    pub a_eg_minus: f64,
    pub mass: f64,
    pub engine: SiteEngine,
    pub n_samples: usize,
    pub seed: u64,
}

/// Per-site lineshape values on the grid (per-atom excitation fraction).
///
/// Singly occupied sites contribute their thermal carrier under the
/// brute-force engines and zero under the ISB-only closed form; sites
/// with more than two atoms are outside the thermal model and rejected.
pub fn site_values(cfg: &EnsembleConfig, site: &SiteSample, grid: &[f64]) -> Result<Vec<f64>> {
    let mut table = OverlapTable::new();
    site_values_with(cfg, site, grid, &mut table)
}

/// As [`site_values`], reusing a shared overlap cache. A parallel driver
/// should hold one cache per worker; cached values are pure functions of
/// the mode indices, so the outcome is identical however the cache is
/// shared.
pub fn site_values_with(
    cfg: &EnsembleConfig,
    site: &SiteSample,
    grid: &[f64],
    table: &mut OverlapTable,
) -> Result<Vec<f64>> {
    if site.n_atoms > 2 {
        return Err(Error::Domain(
            "thermal engines cover one or two atoms per site",
        ));
    }
    let interaction = InteractionParams::derive_with(
        cfg.a_eg_minus,
        &site.trap,
        &cfg.thermal,
        cfg.mass,
        &cfg.truncation,
        table,
    )?;
    let site_cfg = ThermalLineshapeConfig {
        trap: site.trap,
        thermal: cfg.thermal,
        interaction,
        drive: cfg.drive,
        truncation: cfg.truncation,
        fidelity: match cfg.engine {
            SiteEngine::BruteForce(f) => f,
            SiteEngine::ClosedForm => PairFidelity::SidebandFormula,
        },
    };
    let spectrum = match (cfg.engine, site.n_atoms) {
        (SiteEngine::ClosedForm, 1) => return Ok(vec![0.0; grid.len()]),
        (SiteEngine::ClosedForm, _) => isb_closed_form_with(&site_cfg, grid, table)?.spectrum,
        (SiteEngine::BruteForce(PairFidelity::SidebandFormula), 1) => {
            return Ok(vec![0.0; grid.len()])
        }
        (SiteEngine::BruteForce(_), 1) => single_atom_thermal(&site_cfg, grid)?,
        (SiteEngine::BruteForce(_), _) => {
            thermal_lineshape_bruteforce_with(&site_cfg, grid, table)?
        }
    };
    Ok(spectrum.values().collect())
}

/// Weighted mean of per-site values with the Monte Carlo standard error.
pub fn reduce_weighted(
    sites: &[SiteSample],
    values: &[Vec<f64>],
    grid: &[f64],
) -> Result<Spectrum> {
    if sites.is_empty() || sites.len() != values.len() {
        return Err(Error::Domain("site and value counts disagree"));
    }
    let w_total: f64 = sites.iter().map(|s| s.weight).sum();
    let mut points = Vec::with_capacity(grid.len());
    for (j, &delta) in grid.iter().enumerate() {
        let mut mean = 0.0;
        for (site, vals) in sites.iter().zip(values) {
            mean += site.weight * vals[j];
        }
        mean /= w_total;
        let mut var = 0.0;
        for (site, vals) in sites.iter().zip(values) {
            let d = vals[j] - mean;
            var += site.weight * site.weight * d * d;
        }
        let sem = math::sqrt(var) / w_total;
        points.push(SpectrumPoint {
            detuning: delta,
            excitation: mean,
            sigma: Some(sem),
        });
    }
    Spectrum::new(points)
}

/// Trap-averaged spectrum: sample sites, evaluate each, reduce.
pub fn ensemble_average(cfg: &EnsembleConfig, grid: &[f64]) -> Result<Spectrum> {
    let sites = sample_sites(&cfg.dist, cfg.n_samples, cfg.seed)?;
    let values = per_site_values(cfg, &sites, grid)?;
    reduce_weighted(&sites, &values, grid)
}

/// Serial per-site evaluation in sample order (the reduction order that
/// any parallel driver must reproduce).
pub fn per_site_values(
    cfg: &EnsembleConfig,
    sites: &[SiteSample],
    grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let mut table = OverlapTable::new();
    sites
        .iter()
        .map(|s| site_values_with(cfg, s, grid, &mut table))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{BOHR_RADIUS, SR87_MASS};
    use crate::overlap::u_param;
    use crate::types::{to_angular, Direction};

    fn center_trap() -> TrapGeometry {
        TrapGeometry::new(
            to_angular(110e3),
            to_angular(70e3),
            to_angular(800.0),
            0.07,
            30e-6,
        )
        .unwrap()
    }

    fn base_config(engine: SiteEngine, n_samples: usize, seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            dist: LatticeDistribution::experiment_2d(center_trap()),
            thermal: ThermalState::isotropic(4.5e-6).unwrap(),
            drive: DriveParams::from_pulse_area(to_angular(6.25), 1.0, 0.0, Direction::GtoE)
                .unwrap(),
            truncation: TruncationPolicy::default(),
            a_eg_minus: -280.0 * BOHR_RADIUS,
            mass: SR87_MASS,
            engine,
            n_samples,
            seed,
        }
    }

    #[test]
    fn local_trap_identity_and_scaling() {
        let c = center_trap();
        let same = local_trap(&c, 0.0, 0.0, 30e-6);
        assert_eq!(same, c);
        // (x² + y²) = W⊥²: ω⊥ reduced by exactly 1/e.
        let w = 30e-6;
        let at_waist = local_trap(&c, w / math::sqrt(2.0), w / math::sqrt(2.0), w);
        let ratio = at_waist.omega_perp() / c.omega_perp();
        assert!((ratio - math::exp(-1.0)).abs() < 1e-12);
        assert_eq!(at_waist.omega_z, c.omega_z);
        assert_eq!(at_waist.eta_z, c.eta_z);
        // u ∝ ω⊥, so u at the 1/e site is u/e.
        let u0 = u_param(-1e-9, &c, SR87_MASS).unwrap();
        let u1 = u_param(-1e-9, &at_waist, SR87_MASS).unwrap();
        assert!((u1 / u0 - math::exp(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn sampling_deterministic() {
        let dist = LatticeDistribution::experiment_2d(center_trap());
        let a = sample_sites(&dist, 500, 7).unwrap();
        let b = sample_sites(&dist, 500, 7).unwrap();
        for (s, t) in a.iter().zip(&b) {
            assert_eq!(s.x, t.x);
            assert_eq!(s.y, t.y);
            assert_eq!(s.n_atoms, t.n_atoms);
        }
        let c = sample_sites(&dist, 500, 8).unwrap();
        assert!(a.iter().zip(&c).any(|(s, t)| s.x != t.x));
    }

    #[test]
    fn degenerate_distribution_collapses_to_center() {
        let mut dist = LatticeDistribution::experiment_2d(center_trap());
        dist.sigma_h = 0.0;
        dist.n_rows = 1;
        dist.occupancy = vec![(2, 1.0)];
        dist.uniform_double_occupancy = false;
        let sites = sample_sites(&dist, 20, 3).unwrap();
        for s in &sites {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.y, 0.0);
            assert_eq!(s.n_atoms, 2);
            assert_eq!(s.trap, dist.center_trap);
        }
    }

    #[test]
    fn gaussian_spread_statistics() {
        let mut dist = LatticeDistribution::experiment_2d(center_trap());
        dist.occupancy = vec![(1, 1.0)];
        dist.uniform_double_occupancy = false;
        let n = 100_000;
        let sites = sample_sites(&dist, n, 12345).unwrap();
        let mean_abs_x: f64 =
            sites.iter().map(|s| math::fabs(s.x)).sum::<f64>() / n as f64;
        // E|X| = σ√(2/π); the standard error of the estimate is
        // σ√(1−2/π)/√n.
        let expect = dist.sigma_h * math::sqrt(2.0 / core::f64::consts::PI);
        let se = dist.sigma_h * math::sqrt(1.0 - 2.0 / core::f64::consts::PI)
            / math::sqrt(n as f64);
        assert!(
            (mean_abs_x - expect).abs() < 3.0 * se,
            "mean |x| = {mean_abs_x}, expected {expect} ± {se}"
        );
    }

    #[test]
    fn empty_occupancy_rejected() {
        let mut dist = LatticeDistribution::experiment_2d(center_trap());
        dist.occupancy.clear();
        assert!(sample_sites(&dist, 10, 0).is_err());
    }

    #[test]
    fn single_sample_equals_single_site() {
        let mut cfg = base_config(SiteEngine::ClosedForm, 1, 99);
        cfg.dist.occupancy = vec![(2, 1.0)];
        let grid: Vec<f64> = (1..200).map(|k| -to_angular(k as f64 * 2.0)).rev().collect();
        let avg = ensemble_average(&cfg, &grid).unwrap();
        let sites = sample_sites(&cfg.dist, 1, cfg.seed).unwrap();
        let direct = site_values(&cfg, &sites[0], &grid).unwrap();
        for (p, d) in avg.points().iter().zip(&direct) {
            assert_eq!(p.excitation, *d);
            assert_eq!(p.sigma, Some(0.0));
        }
    }

    #[test]
    fn infinite_waist_removes_inhomogeneity() {
        let mut cfg = base_config(SiteEngine::ClosedForm, 64, 4);
        cfg.dist.occupancy = vec![(2, 1.0)];
        cfg.dist.uniform_double_occupancy = false;
        cfg.dist.waist_perp = 1e9;
        let grid: Vec<f64> = (1..150).map(|k| -to_angular(k as f64 * 3.0)).rev().collect();
        let avg = ensemble_average(&cfg, &grid).unwrap();
        // Every site sees the central trap, so the average equals the
        // central site exactly and the MC error vanishes.
        let central = SiteSample {
            x: 0.0,
            y: 0.0,
            n_atoms: 2,
            trap: cfg.dist.center_trap,
            weight: 2.0,
        };
        let direct = site_values(&cfg, &central, &grid).unwrap();
        for (p, d) in avg.points().iter().zip(&direct) {
            assert!((p.excitation - d).abs() < 1e-15);
            assert!(p.sigma.unwrap() < 1e-15);
        }
    }

    #[test]
    fn average_is_linear_and_bounded_by_max() {
        let cfg = base_config(SiteEngine::ClosedForm, 50, 21);
        let grid: Vec<f64> = (1..100).map(|k| -to_angular(k as f64 * 4.0)).rev().collect();
        let sites = sample_sites(&cfg.dist, cfg.n_samples, cfg.seed).unwrap();
        let values = per_site_values(&cfg, &sites, &grid).unwrap();
        let reduced = reduce_weighted(&sites, &values, &grid).unwrap();
        let whole = ensemble_average(&cfg, &grid).unwrap();
        for (a, b) in reduced.points().iter().zip(whole.points()) {
            assert_eq!(a.excitation, b.excitation);
        }
        // Never exceeds the per-site maximum.
        for (j, p) in whole.points().iter().enumerate() {
            let max_site = values.iter().map(|v| v[j]).fold(f64::NEG_INFINITY, f64::max);
            assert!(p.excitation <= max_site + 1e-15);
        }
    }

    #[test]
    fn averaging_broadens_the_sideband_shape() {
        // Averaging over site depths broadens the ISB relative to its own
        // peak detuning. (The absolute FWHM is not a robust comparison:
        // shallower sites contribute self-similar profiles that are both
        // narrower and shifted inward, so a centrally concentrated
        // distribution shrinks the absolute width while the fractional
        // width grows.)
        let mut cfg = base_config(SiteEngine::ClosedForm, 400, 11);
        cfg.dist.occupancy = vec![(2, 1.0)];
        let grid: Vec<f64> = (1..1200).map(|k| -to_angular(k as f64 * 0.5)).rev().collect();
        let avg = ensemble_average(&cfg, &grid).unwrap();
        let central = SiteSample {
            x: 0.0,
            y: 0.0,
            n_atoms: 2,
            trap: cfg.dist.center_trap,
            weight: 2.0,
        };
        let single = site_values(&cfg, &central, &grid).unwrap();
        // (peak position, FWHM), both in grid index units.
        let shape = |vals: &[f64]| {
            let (imax, max) = vals
                .iter()
                .enumerate()
                .fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
            let half = max / 2.0;
            let mut lo = imax;
            while lo > 0 && vals[lo] > half {
                lo -= 1;
            }
            let mut hi = imax;
            while hi + 1 < vals.len() && vals[hi] > half {
                hi += 1;
            }
            ((hi - lo) as f64, grid[imax].abs())
        };
        let avg_vals: Vec<f64> = avg.values().collect();
        let (w_avg, p_avg) = shape(&avg_vals);
        let (w_one, p_one) = shape(&single);
        assert!(
            w_avg / p_avg >= w_one / p_one,
            "relative width {} vs {}",
            w_avg / p_avg,
            w_one / p_one
        );
    }

    #[test]
    fn averaged_peak_brackets_single_site_factor() {
        // The averaged ISB peak sits between 0.2 and 0.35 of |<U>_T| of
        // the central tube (the single-site factor is ~0.302).
        let mut cfg = base_config(SiteEngine::ClosedForm, 400, 11);
        cfg.dist.occupancy = vec![(2, 1.0)];
        let grid: Vec<f64> = (1..1200).map(|k| -to_angular(k as f64 * 0.5)).rev().collect();
        let avg = ensemble_average(&cfg, &grid).unwrap();
        let peak = avg.max_point().detuning.abs();
        let mean_u_center = crate::overlap::mean_interaction(
            cfg.a_eg_minus,
            &cfg.dist.center_trap,
            &cfg.thermal,
            cfg.mass,
            &cfg.truncation,
        )
        .unwrap()
        .abs();
        let ratio = peak / mean_u_center;
        assert!(
            (0.2..=0.35).contains(&ratio),
            "peak at {ratio:.4} of the central |<U>|"
        );
    }
}
