//! Finite-temperature two-atom lineshapes.
//!
//! At T_Z > 0 the occupied axial mode pair (n₁ > n₂) fluctuates, and the
//! observed lineshape is the Boltzmann-weighted average
//!
//!   ⟨N^e⟩_T = Σ_{n₁>n₂} N^e_{n⃗}(t, δ) e^{−α(n₁+n₂)} / Σ e^{−α(n₁+n₂)},
//!
//! with α = ħω_Z/(k_B T_Z). Transverse excitation is folded in as the
//! ϑ(α_X)ϑ(α_Y) renormalization of the interaction. Two per-pair engines
//! are provided: exact two-atom evolution, and the resolved-sideband
//! formula f(t, δ−U_n, ΔΩ_n). The closed-form profile is the continuum
//! limit of the latter, valid for |δ| ≫ Ω^B, k_B T_Z > ħω_Z and pulses
//! short against 1/⟨ΔΩ⟩.
//!
//! All outputs are per-atom excitation fractions.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::SymMat;
use crate::math;
use crate::overlap::{
    InteractionParams, OverlapKind, OverlapTable, TruncationPolicy,
};
use crate::spinmodel::{
    build_hamiltonian, evolve, excitation_fraction, rabi_frequency_mode, rabi_lineshape,
    QuantumState, SpinSystem,
};
use crate::types::{
    boltzmann_alpha, Direction, DriveParams, ModeConfiguration, Spectrum, ThermalState,
    TrapGeometry,
};

/// Per-pair lineshape engine of the brute-force thermal average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairFidelity {
    /// Exact two-atom evolution (full lineshape: carrier and sideband).
    ExactPair,
    /// Resolved-sideband formula f(t, δ−U_n, ΔΩ_n) with the linearized
    /// drive inhomogeneity (sideband only).
    SidebandFormula,
}

/// Everything needed to produce a finite-temperature lineshape for one
/// doubly occupied site.
#[derive(Debug, Clone)]
pub struct ThermalLineshapeConfig {
    pub trap: TrapGeometry,
    pub thermal: ThermalState,
    pub interaction: InteractionParams,
    pub drive: DriveParams,
    pub truncation: TruncationPolicy,
    pub fidelity: PairFidelity,
}

impl ThermalLineshapeConfig {
    /// α along the weak axis; +∞ at T_Z = 0.
    pub fn alpha_z(&self) -> f64 {
        boltzmann_alpha(self.trap.omega_z, self.thermal.temp_z)
    }

    /// Transverse renormalization ϑ(α_X)·ϑ(α_Y).
    pub fn transverse_factor(&self) -> Result<f64> {
        crate::overlap::transverse_renormalization(&self.trap, &self.thermal, &self.truncation)
    }

    fn transverse_factor_with(&self, table: &mut OverlapTable) -> Result<f64> {
        crate::overlap::transverse_renormalization_with(
            &self.trap,
            &self.thermal,
            &self.truncation,
            table,
        )
    }

    fn resonance_sign(&self) -> f64 {
        match self.drive.direction {
            Direction::GtoE => 1.0,
            Direction::EtoG => -1.0,
        }
    }
}

/// Boltzmann-weighted thermal average of the per-pair lineshape.
///
/// T_Z = 0 collapses the average onto the single pair (1, 0).
pub fn thermal_lineshape_bruteforce(
    cfg: &ThermalLineshapeConfig,
    grid: &[f64],
) -> Result<Spectrum> {
    let mut table = OverlapTable::new();
    thermal_lineshape_bruteforce_with(cfg, grid, &mut table)
}

/// As [`thermal_lineshape_bruteforce`], reusing a shared overlap cache.
pub fn thermal_lineshape_bruteforce_with(
    cfg: &ThermalLineshapeConfig,
    grid: &[f64],
    table: &mut OverlapTable,
) -> Result<Spectrum> {
    let alpha = cfg.alpha_z();
    let txy = cfg.transverse_factor_with(table)?;
    let values = if alpha.is_infinite() {
        let u10 = txy * cfg.interaction.u * table.kernel(OverlapKind::Hybrid, 1, 0);
        pair_lineshape(cfg, 1, 0, u10, grid)?
    } else {
        let cap = cfg.truncation.mode_cap(alpha)?;
        match cfg.fidelity {
            PairFidelity::SidebandFormula => {
                sideband_formula_average(cfg, alpha, txy, cap, table, grid)
            }
            PairFidelity::ExactPair => exact_pair_average(cfg, alpha, txy, cap, table, grid)?,
        }
    };
    Spectrum::from_values(grid, &values)
}

/// Sideband-formula engine, with the mode-pair sum factored over the
/// index difference wherever the interaction kernel allows it.
fn sideband_formula_average(
    cfg: &ThermalLineshapeConfig,
    alpha: f64,
    txy: f64,
    cap: usize,
    table: &mut OverlapTable,
    grid: &[f64],
) -> Vec<f64> {
    let w = |k: usize| math::exp(-alpha * k as f64);
    let t = cfg.drive.duration;
    let eta2 = cfg.trap.eta_z * cfg.trap.eta_z;
    let kappa_scale = cfg.drive.rabi_bare * eta2 / math::sqrt(2.0);
    let sign = cfg.resonance_sign();
    let u0 = txy * cfg.interaction.u;

    // Pair weight normalization Σ_{n1>n2} e^{-α(n1+n2)} over the cutoff.
    let g2 = |m: usize| (1.0 - w(2 * (m + 1))) / (1.0 - w(2));
    let mut z_pairs = 0.0;
    for delta in 1..=cap {
        z_pairs += w(delta) * g2(cap - delta);
    }

    let mut values = vec![0.0; grid.len()];
    // Near-diagonal band: n-dependent kernel.
    for delta in 1..crate::overlap::K0_SWITCH_DELTA.max(1) {
        if delta > cap {
            break;
        }
        let kappa = kappa_scale * delta as f64;
        for n2 in 0..=(cap - delta) {
            let weight = w(2 * n2 + delta);
            let u = u0 * table.kernel(OverlapKind::Hybrid, n2 + delta, n2);
            for (v, &d) in values.iter_mut().zip(grid) {
                *v += weight * rabi_lineshape(t, d - sign * u, kappa);
            }
        }
    }
    // K(0) region: the kernel depends only on the index difference, so the
    // inner thermal sum factors into the geometric weight g2.
    for delta in crate::overlap::K0_SWITCH_DELTA.max(1)..=cap {
        let kappa = kappa_scale * delta as f64;
        let u = u0 * table.kernel(OverlapKind::Hybrid, delta, 0);
        let weight = w(delta) * g2(cap - delta);
        for (v, &d) in values.iter_mut().zip(grid) {
            *v += weight * rabi_lineshape(t, d - sign * u, kappa);
        }
    }
    // Per-atom fraction for N = 2.
    for v in values.iter_mut() {
        *v /= 2.0 * z_pairs;
    }
    values
}

/// Exact-pair engine: full two-atom evolution per mode pair.
fn exact_pair_average(
    cfg: &ThermalLineshapeConfig,
    alpha: f64,
    txy: f64,
    cap: usize,
    table: &mut OverlapTable,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let w = |k: usize| math::exp(-alpha * k as f64);
    let mut values = vec![0.0; grid.len()];
    let mut z = 0.0;
    for n1 in 1..=cap {
        for n2 in 0..n1 {
            let weight = w(n1 + n2);
            let u = txy * cfg.interaction.u * table.kernel(OverlapKind::Hybrid, n1, n2);
            let pair = pair_lineshape(cfg, n1, n2, u, grid)?;
            for (v, p) in values.iter_mut().zip(&pair) {
                *v += weight * p;
            }
            z += weight;
        }
    }
    for v in values.iter_mut() {
        *v /= z;
    }
    Ok(values)
}

/// Exact lineshape of one mode pair (per-atom fraction).
fn pair_lineshape(
    cfg: &ThermalLineshapeConfig,
    n1: usize,
    n2: usize,
    u_pair: f64,
    grid: &[f64],
) -> Result<Vec<f64>> {
    let modes = ModeConfiguration::new(vec![n1, n2])?;
    let rabi = vec![
        rabi_frequency_mode(n1, cfg.trap.eta_z, cfg.drive.rabi_bare, false),
        rabi_frequency_mode(n2, cfg.trap.eta_z, cfg.drive.rabi_bare, false),
    ];
    let mut umat = SymMat::zeros(2);
    umat.set(0, 1, u_pair);
    let initial = match cfg.drive.direction {
        Direction::GtoE => QuantumState::all_g(2),
        Direction::EtoG => QuantumState::all_e(2),
    };
    let mut out = Vec::with_capacity(grid.len());
    for &delta in grid {
        let sys = SpinSystem::new(modes.clone(), rabi.clone(), umat.clone(), delta)?;
        let h = build_hamiltonian(&sys)?;
        let fin = evolve(&h, &initial, cfg.drive.duration)?;
        let frac = excitation_fraction(&fin);
        out.push(match cfg.drive.direction {
            Direction::GtoE => frac,
            Direction::EtoG => 1.0 - frac,
        });
    }
    Ok(out)
}

/// Validity bookkeeping of the closed-form profile.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormValidity {
    /// Grid indices inside the carrier region |δ| < 5 Ω^B, where the
    /// profile is not meaningful.
    pub near_carrier: Vec<usize>,
    /// k_B T_Z > ħ ω_Z (the average must populate many axial modes).
    pub thermal_regime_ok: bool,
    /// t ⟨ΔΩ⟩ < 1 (pulse short against the inhomogeneity time).
    pub pulse_regime_ok: bool,
}

impl ClosedFormValidity {
    pub fn clean(&self) -> bool {
        self.near_carrier.is_empty() && self.thermal_regime_ok && self.pulse_regime_ok
    }
}

/// Closed-form ISB output with per-point validity flags.
#[derive(Debug, Clone)]
pub struct ClosedFormOutput {
    pub spectrum: Spectrum,
    pub validity: ClosedFormValidity,
}

/// Thermally averaged interaction entering the closed form; the axial
/// factor is the continuum limit ϑ̃ → √α_Z the derivation rests on.
pub fn closed_form_mean_u(cfg: &ThermalLineshapeConfig) -> Result<f64> {
    let mut table = OverlapTable::new();
    closed_form_mean_u_with(cfg, &mut table)
}

fn closed_form_mean_u_with(cfg: &ThermalLineshapeConfig, table: &mut OverlapTable) -> Result<f64> {
    let alpha = cfg.alpha_z();
    if !alpha.is_finite() {
        return Err(Error::Domain("closed form requires T_Z > 0"));
    }
    Ok(cfg.transverse_factor_with(table)? * cfg.interaction.u * math::sqrt(alpha))
}

/// Closed-form ISB profile
///
///   ⟨N̂^e⟩ = η_Z⁴ π² √π s Ω^B / (2|⟨U⟩|) · α_Z^{−2}
///           · (⟨U⟩/(√π δ))⁷ · exp(−(⟨U⟩/(√π δ))²),
///
/// nonzero only on the resonant side (δ of the sign of ⟨U⟩ for g→e, the
/// mirror for e→g), divided by N = 2 to a per-atom fraction.
pub fn isb_closed_form(cfg: &ThermalLineshapeConfig, grid: &[f64]) -> Result<ClosedFormOutput> {
    let mut table = OverlapTable::new();
    isb_closed_form_with(cfg, grid, &mut table)
}

/// As [`isb_closed_form`], reusing a shared overlap cache.
pub fn isb_closed_form_with(
    cfg: &ThermalLineshapeConfig,
    grid: &[f64],
    table: &mut OverlapTable,
) -> Result<ClosedFormOutput> {
    let alpha = cfg.alpha_z();
    if !alpha.is_finite() {
        return Err(Error::Domain("closed form requires T_Z > 0"));
    }
    let mean_u = closed_form_mean_u_with(cfg, table)?;
    let eta2 = cfg.trap.eta_z * cfg.trap.eta_z;
    let s = cfg.drive.pulse_area_factor;
    let rabi = cfg.drive.rabi_bare;
    let sign = cfg.resonance_sign();

    let mut values = Vec::with_capacity(grid.len());
    let mut near_carrier = Vec::new();
    if mean_u == 0.0 {
        values.resize(grid.len(), 0.0);
    } else {
        let pref =
            eta2 * eta2 * PI * PI * math::sqrt(PI) * s * rabi / (2.0 * math::fabs(mean_u))
                / (alpha * alpha);
        for (i, &delta) in grid.iter().enumerate() {
            if math::fabs(delta) < 5.0 * rabi {
                near_carrier.push(i);
            }
            if sign * delta * mean_u <= 0.0 || delta == 0.0 {
                values.push(0.0);
                continue;
            }
            let chi = mean_u / (math::sqrt(PI) * delta);
            let chi2 = chi * chi;
            values.push(0.5 * pref * math::pow(chi2, 3.5) * math::exp(-chi2));
        }
    }
    // Mean drive inhomogeneity ⟨ΔΩ⟩ ≈ Ω^B η² / (√2 α) (continuum ⟨Δn⟩ = 1/α).
    let mean_dw = rabi * eta2 / (math::sqrt(2.0) * alpha);
    let validity = ClosedFormValidity {
        near_carrier,
        thermal_regime_ok: alpha < 1.0,
        pulse_regime_ok: cfg.drive.duration * mean_dw < 1.0,
    };
    Ok(ClosedFormOutput {
        spectrum: Spectrum::from_values(grid, &values)?,
        validity,
    })
}

/// Detuning of the closed-form ISB maximum: |δ| = |⟨U⟩| √(2/(7π)).
pub fn closed_form_peak_detuning(mean_u: f64) -> f64 {
    math::fabs(mean_u) * math::sqrt(2.0 / (7.0 * PI))
}

/// Boltzmann-averaged single-atom lineshape (carrier only); the N = 1
/// counterpart of the thermal average, used by the ensemble layer.
pub fn single_atom_thermal(cfg: &ThermalLineshapeConfig, grid: &[f64]) -> Result<Spectrum> {
    let alpha = cfg.alpha_z();
    let t = cfg.drive.duration;
    let mut values = vec![0.0; grid.len()];
    if alpha.is_infinite() {
        let w0 = rabi_frequency_mode(0, cfg.trap.eta_z, cfg.drive.rabi_bare, false);
        for (v, &d) in values.iter_mut().zip(grid) {
            *v = rabi_lineshape(t, d, w0);
        }
    } else {
        let cap = cfg.truncation.mode_cap(alpha)?;
        let mut z = 0.0;
        for n in 0..=cap {
            let weight = math::exp(-alpha * n as f64);
            let wn = rabi_frequency_mode(n, cfg.trap.eta_z, cfg.drive.rabi_bare, false);
            for (v, &d) in values.iter_mut().zip(grid) {
                *v += weight * rabi_lineshape(t, d, wn);
            }
            z += weight;
        }
        for v in values.iter_mut() {
            *v /= z;
        }
    }
    Spectrum::from_values(grid, &values)
}

/// Gauss–Legendre 10-point nodes (positive half) and weights.
const GL10_X: [f64; 5] = [
    0.148_874_338_981_631_21,
    0.433_395_394_129_247_19,
    0.679_409_568_299_024_41,
    0.865_063_366_688_984_51,
    0.973_906_528_517_171_72,
];
const GL10_W: [f64; 5] = [
    0.295_524_224_714_752_87,
    0.269_266_719_309_996_36,
    0.219_086_362_515_982_04,
    0.149_451_349_150_580_59,
    0.066_671_344_308_688_14,
];

fn gl10<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..5 {
        acc += GL10_W[i] * (f(c + h * GL10_X[i]) + f(c - h * GL10_X[i]));
    }
    acc * h
}

/// ∫_{-∞}^{∞} dp (1+p²)⁻¹ sin²(c √(1+p²)), to 1e-8 relative.
///
/// Composite Gauss–Legendre over segments no longer than a quarter
/// oscillation period, with the constant sin² mean of the far tail added
/// analytically; the oscillatory tail remainder is bounded below the
/// tolerance by the cutoff choice.
pub fn sideband_kernel_integral(c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Domain("kernel integral requires finite c >= 0"));
    }
    if c == 0.0 {
        return Ok(0.0);
    }
    let rel_tol = 1e-8;
    let scale = (PI * c).min(PI / 2.0);
    let tol = rel_tol * scale;
    // Oscillatory tail remainder after mean subtraction is ≲ 1/(2 c P²).
    let p_max = math::sqrt(1.0 / (c * tol)).clamp(1e3, 3e7);
    let f = |p: f64| {
        let q = math::sqrt(1.0 + p * p);
        let s = math::sin(c * q);
        s * s / (1.0 + p * p)
    };
    let quarter_period = PI / (4.0 * c);
    let mut acc = 0.0;
    let mut p = 0.0;
    while p < p_max {
        // Segment short against both the oscillation and the envelope.
        let len = quarter_period.min((p / 4.0).max(0.5));
        let hi = (p + len).min(p_max);
        acc += gl10(&f, p, hi);
        p = hi;
    }
    // Mean of sin² over the analytic tail.
    let tail = 0.5 * (PI / 2.0 - math::atan(p_max));
    Ok(2.0 * (acc + tail))
}
