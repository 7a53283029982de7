//! Axial-mode overlap integrals, their asymptotics, the thermal
//! renormalization functions ϑ and ϑ̃, interaction strengths, and the
//! strong-interaction figure of merit γ.
//!
//! The overlap of two harmonic-oscillator probability densities,
//!
//!   I(n1, n2) = √(2π) ∫ ψ_{n1}²(z) ψ_{n2}²(z) dz,
//!
//! is evaluated exactly by Gauss–Hermite quadrature (the integrand is a
//! polynomial times a Gaussian). Two large-index approximations are used in
//! thermal sums, where mode indices reach thousands:
//!
//! * the complete-elliptic form
//!   I ≈ 2 K[(1 − (n1+n2)/|Δ|)/2] / (π √(π|Δ|)), accurate everywhere at
//!   large indices, and
//! * its K(0) simplification I ≈ 1/√(π|Δ|), valid when min(n1,n2) ≪ |Δ|.
//!
//! The thermal kernels (ϑ, ϑ̃, the brute-force interaction matrix) use the
//! K(0) form for |n1−n2| ≥ [`K0_SWITCH_DELTA`] and exact values (or the
//! elliptic form past the quadrature cap) below it. This keeps the thermal
//! averages consistent with the continuum treatment behind the small-α
//! limit ϑ → √α and the closed-form sideband profile, while the Δ = 0, 1
//! band — where K(0) fails badly — stays faithful.

use alloc::collections::BTreeMap;
use core::f64::consts::PI;

use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::math;
use crate::quadrature::{overlap_rule_size, HermiteRule};
use crate::types::{boltzmann_alpha, ThermalState, TrapGeometry};

/// Pairs with |n1 − n2| at or above this use the K(0) asymptotic in
/// thermal kernels; the band below it stays exact/elliptic.
pub const K0_SWITCH_DELTA: usize = 2;

/// Largest mode sum n1 + n2 evaluated by quadrature inside thermal
/// kernels; beyond it the elliptic asymptotic takes over (sub-percent
/// accurate there).
const EXACT_SUM_CAP: usize = 120;

/// Diagonal overlap asymptote I(n,n) ≈ A ln(B (2n+1)^{2/3}) / √(2n+1):
/// prefactor A = 3√2/(2π^{3/2}).
const DIAG_ASYM_A: f64 = 0.380_962_467_733_524_4;
/// Fitted to the exact diagonal overlap over n ∈ [60, 120] (0.03 %
/// agreement across that range); see tests.
const DIAG_ASYM_B: f64 = 14.8;

/// Truncation control for Boltzmann-weighted mode sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Relative Boltzmann tail weight allowed beyond the mode cutoff.
    pub tail_weight_tol: f64,
    /// Hard cap on the mode index.
    pub max_mode: usize,
}

impl TruncationPolicy {
    pub fn new(tail_weight_tol: f64, max_mode: usize) -> Result<Self> {
        if !(tail_weight_tol > 0.0 && tail_weight_tol < 1.0) {
            return Err(Error::Domain("tail_weight_tol must lie in (0, 1)"));
        }
        if max_mode == 0 {
            return Err(Error::Domain("max_mode must be at least 1"));
        }
        Ok(TruncationPolicy {
            tail_weight_tol,
            max_mode,
        })
    }

    /// Smallest cutoff whose Boltzmann tail weight is below tolerance.
    pub fn mode_cap(&self, alpha: f64) -> Result<usize> {
        if !(alpha > 0.0) {
            return Err(Error::Domain("alpha must be positive"));
        }
        if alpha.is_infinite() {
            return Ok(1);
        }
        let needed = math::ceil_to_usize(-math::ln(self.tail_weight_tol) / alpha);
        if needed > self.max_mode {
            return Err(Error::Truncation {
                achieved: math::exp(-alpha * (self.max_mode as f64 + 1.0)),
                requested: self.tail_weight_tol,
            });
        }
        Ok(needed)
    }
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_weight_tol: 1e-6,
            max_mode: 4000,
        }
    }
}

/// Singlet-channel interaction parameters for a trap/temperature setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    /// Singlet ¹S₀–³P₀ scattering length a⁻ₑg, m (sign kept).
    pub a_eg_minus: f64,
    /// On-site interaction scale u, rad/s.
    pub u: f64,
    /// Thermally averaged two-atom interaction ⟨U⟩_T, rad/s.
    pub mean_u_thermal: f64,
}

impl InteractionParams {
    pub fn derive(
        a_eg_minus: f64,
        trap: &TrapGeometry,
        thermal: &ThermalState,
        mass: f64,
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        let mut table = OverlapTable::new();
        Self::derive_with(a_eg_minus, trap, thermal, mass, policy, &mut table)
    }

    /// As [`InteractionParams::derive`], reusing a shared overlap cache
    /// (the hot path when evaluating many sites).
    pub fn derive_with(
        a_eg_minus: f64,
        trap: &TrapGeometry,
        thermal: &ThermalState,
        mass: f64,
        policy: &TruncationPolicy,
        table: &mut OverlapTable,
    ) -> Result<Self> {
        let u = u_param(a_eg_minus, trap, mass)?;
        let mean_u_thermal = mean_interaction_with(a_eg_minus, trap, thermal, mass, policy, table)?;
        Ok(InteractionParams {
            a_eg_minus,
            u,
            mean_u_thermal,
        })
    }
}

/// Which evaluation backs a thermal overlap kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapKind {
    /// Quadrature up to a mode-sum cap, elliptic asymptotic beyond.
    Exact,
    /// K(0) asymptotic for every off-diagonal pair (diagonal exact).
    K0,
    /// Production kernel: exact/elliptic below [`K0_SWITCH_DELTA`],
    /// K(0) at or above it.
    Hybrid,
}

/// Memoized overlap evaluations; reusable across thermal sums.
#[derive(Debug, Default)]
pub struct OverlapTable {
    rules: BTreeMap<usize, HermiteRule>,
    values: BTreeMap<(usize, usize), f64>,
}

impl OverlapTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Exact overlap via a cached quadrature rule. Rule sizes are rounded
    /// up to multiples of 64 so repeated mode sums share a handful of
    /// rules (a larger rule is still exact).
    fn exact(&mut self, n1: usize, n2: usize) -> f64 {
        let key = (n1.min(n2), n1.max(n2));
        if let Some(&v) = self.values.get(&key) {
            return v;
        }
        let m = overlap_rule_size(n1 + n2).next_multiple_of(64);
        let rule = self
            .rules
            .entry(m)
            .or_insert_with(|| HermiteRule::new(m).expect("rule size is positive"));
        let v = rule.overlap(n1, n2);
        self.values.insert(key, v);
        v
    }

    fn cached<F: FnOnce() -> f64>(&mut self, n1: usize, n2: usize, f: F) -> f64 {
        let key = (n1.min(n2), n1.max(n2));
        if let Some(&v) = self.values.get(&key) {
            return v;
        }
        let v = f();
        self.values.insert(key, v);
        v
    }

    /// Kernel used by thermal sums, per [`OverlapKind`].
    pub fn kernel(&mut self, kind: OverlapKind, n1: usize, n2: usize) -> f64 {
        let d = n1.abs_diff(n2);
        let s = n1 + n2;
        match kind {
            OverlapKind::Hybrid => {
                if d >= K0_SWITCH_DELTA {
                    k0_asymptotic(d)
                } else if s <= EXACT_SUM_CAP {
                    self.exact(n1, n2)
                } else if d == 0 {
                    self.cached(n1, n2, || diagonal_asymptotic(n1))
                } else {
                    self.cached(n1, n2, || elliptic_asymptotic(n1, n2))
                }
            }
            OverlapKind::K0 => {
                if d == 0 {
                    if s <= EXACT_SUM_CAP {
                        self.exact(n1, n2)
                    } else {
                        self.cached(n1, n2, || diagonal_asymptotic(n1))
                    }
                } else {
                    k0_asymptotic(d)
                }
            }
            OverlapKind::Exact => {
                if s <= EXACT_SUM_CAP {
                    self.exact(n1, n2)
                } else if d == 0 {
                    self.cached(n1, n2, || diagonal_asymptotic(n1))
                } else {
                    self.cached(n1, n2, || elliptic_asymptotic(n1, n2))
                }
            }
        }
    }
}

/// Exact overlap integral I(n1, n2) by Gauss–Hermite quadrature.
///
/// The node count 2(n1+n2)+1 (rounded up to even) makes the quadrature
/// exact for the polynomial-times-Gaussian integrand; evaluation is done
/// with normalized oscillator functions in log space, so large indices do
/// not overflow. Indices above `policy.max_mode` are refused.
pub fn overlap_integral(n1: usize, n2: usize, policy: &TruncationPolicy) -> Result<f64> {
    if n1.max(n2) > policy.max_mode {
        return Err(Error::Truncation {
            achieved: f64::NAN,
            requested: policy.tail_weight_tol,
        });
    }
    let m = overlap_rule_size(n1 + n2);
    let rule = HermiteRule::new(m)?;
    Ok(rule.overlap(n1, n2))
}

/// Complete elliptic integral of the first kind K(m) in the parameter
/// convention, by the arithmetic-geometric mean. Real for m < 1.
pub fn complete_elliptic_k(m: f64) -> Result<f64> {
    if !(m < 1.0) {
        return Err(Error::Domain("elliptic parameter must satisfy m < 1"));
    }
    let mut a = 1.0_f64;
    let mut g = math::sqrt(1.0 - m);
    for _ in 0..64 {
        if math::fabs(a - g) <= 1e-17 * a {
            break;
        }
        let an = 0.5 * (a + g);
        g = math::sqrt(a * g);
        a = an;
    }
    Ok(PI / (2.0 * a))
}

/// Large-index overlap asymptotic.
///
/// With `use_elliptic` the full form 2 K[(1 − (n1+n2)/|Δ|)/2]/(π √(π|Δ|))
/// is returned (the K argument is ≤ 0 for any valid pair and K is real
/// there); without it, the K(0) simplification 1/√(π|Δ|). The formula is
/// singular at n1 = n2.
pub fn overlap_asymptotic(n1: usize, n2: usize, use_elliptic: bool) -> Result<f64> {
    if n1 == n2 {
        return Err(Error::Domain("overlap asymptotic is singular at n1 = n2"));
    }
    let d = n1.abs_diff(n2) as f64;
    if !use_elliptic {
        return Ok(1.0 / math::sqrt(PI * d));
    }
    let m = 0.5 * (1.0 - (n1 + n2) as f64 / d);
    let k = complete_elliptic_k(m)?;
    Ok(2.0 * k / (PI * math::sqrt(PI * d)))
}

fn k0_asymptotic(d: usize) -> f64 {
    1.0 / math::sqrt(PI * d as f64)
}

fn elliptic_asymptotic(n1: usize, n2: usize) -> f64 {
    overlap_asymptotic(n1, n2, true).expect("n1 != n2 in elliptic branch")
}

/// Asymptote of the diagonal overlap I(n, n) for large n.
fn diagonal_asymptotic(n: usize) -> f64 {
    let nu = 2.0 * n as f64 + 1.0;
    DIAG_ASYM_A * math::ln(DIAG_ASYM_B * math::pow(nu, 2.0 / 3.0)) / math::sqrt(nu)
}

/// Evaluation backend shared by ϑ and ϑ̃.
fn theta_sums(
    alpha: f64,
    policy: &TruncationPolicy,
    kind: OverlapKind,
    table: &mut OverlapTable,
) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::Domain("theta requires alpha > 0"));
    }
    if alpha.is_infinite() {
        // T = 0: only (0,0) survives in ϑ and (1,0) in ϑ̃.
        return Ok((1.0, 0.5));
    }
    let cap = policy.mode_cap(alpha)?;
    let w = |k: usize| math::exp(-alpha * k as f64);
    // Partition sums over the truncated mode range 0..=cap.
    let z1 = (1.0 - w(cap + 1)) / (1.0 - w(1));
    let z2 = (1.0 - w(2 * (cap + 1))) / (1.0 - w(2));

    // Off-diagonal numerator, ordered pairs counted once and doubled.
    let mut offdiag = 0.0;
    match kind {
        OverlapKind::Hybrid | OverlapKind::K0 => {
            let switch = match kind {
                OverlapKind::K0 => 1,
                _ => K0_SWITCH_DELTA,
            };
            // Near-diagonal band: n-dependent kernel values.
            for delta in 1..switch {
                let mut band = 0.0;
                for n in 0..=(cap - delta) {
                    band += table.kernel(kind, n + delta, n) * w(2 * n + delta);
                }
                offdiag += band;
            }
            // K(0) region factorizes: Σ_Δ K0(Δ) e^{-αΔ} Σ_{n2} e^{-2αn2}.
            for delta in switch..=cap {
                let g2 = (1.0 - w(2 * (cap - delta + 1))) / (1.0 - w(2));
                offdiag += k0_asymptotic(delta) * w(delta) * g2;
            }
        }
        OverlapKind::Exact => {
            for n1 in 1..=cap {
                let wn1 = w(n1);
                for n2 in 0..n1 {
                    offdiag += table.kernel(kind, n1, n2) * wn1 * w(n2);
                }
            }
        }
    }

    let mut diag = 0.0;
    for n in 0..=cap {
        diag += table.kernel(kind, n, n) * w(2 * n);
    }

    let theta = (diag + 2.0 * offdiag) / (z1 * z1);
    // At very large α the restricted partition sum underflows; the limits
    // are then exact.
    let pair_norm = 0.5 * (z1 * z1 - z2);
    let theta_tilde = if pair_norm > 0.0 {
        offdiag / pair_norm
    } else {
        0.5
    };
    Ok((theta, theta_tilde))
}

/// Boltzmann-weighted thermal renormalization ϑ(α), unrestricted mode sum.
pub fn theta(alpha: f64, policy: &TruncationPolicy) -> Result<f64> {
    let mut table = OverlapTable::new();
    theta_with_kernel(alpha, policy, OverlapKind::Hybrid, &mut table)
}

/// Pauli-restricted companion ϑ̃(α) (n1 > n2 only).
pub fn theta_tilde(alpha: f64, policy: &TruncationPolicy) -> Result<f64> {
    let mut table = OverlapTable::new();
    theta_tilde_with_kernel(alpha, policy, OverlapKind::Hybrid, &mut table)
}

/// ϑ(α) under an explicit kernel choice (comparison/diagnostic use).
pub fn theta_with_kernel(
    alpha: f64,
    policy: &TruncationPolicy,
    kind: OverlapKind,
    table: &mut OverlapTable,
) -> Result<f64> {
    theta_sums(alpha, policy, kind, table).map(|(t, _)| t)
}

/// ϑ̃(α) under an explicit kernel choice (comparison/diagnostic use).
pub fn theta_tilde_with_kernel(
    alpha: f64,
    policy: &TruncationPolicy,
    kind: OverlapKind,
    table: &mut OverlapTable,
) -> Result<f64> {
    theta_sums(alpha, policy, kind, table).map(|(_, t)| t)
}

/// On-site interaction scale u = 4 a √(m ω_X ω_Y ω_Z / ħ), rad/s.
///
/// The sign follows the scattering length.
pub fn u_param(a: f64, trap: &TrapGeometry, mass: f64) -> Result<f64> {
    if !(mass > 0.0) {
        return Err(Error::Domain("mass must be positive"));
    }
    if !a.is_finite() {
        return Err(Error::Domain("scattering length must be finite"));
    }
    Ok(4.0 * a * math::sqrt(mass * trap.omega_x * trap.omega_y * trap.omega_z / HBAR))
}

/// Thermally averaged interaction
/// ⟨U⟩_T = u ϑ(ħω_X/k_BT_X) ϑ(ħω_Y/k_BT_Y) ϑ̃(ħω_Z/k_BT_Z), rad/s.
///
/// Zero temperature along an axis selects the analytic limit of the
/// corresponding factor (ϑ → 1, ϑ̃ → 1/2).
pub fn mean_interaction(
    a: f64,
    trap: &TrapGeometry,
    thermal: &ThermalState,
    mass: f64,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let mut table = OverlapTable::new();
    mean_interaction_with(a, trap, thermal, mass, policy, &mut table)
}

/// As [`mean_interaction`], reusing a shared overlap cache.
pub fn mean_interaction_with(
    a: f64,
    trap: &TrapGeometry,
    thermal: &ThermalState,
    mass: f64,
    policy: &TruncationPolicy,
    table: &mut OverlapTable,
) -> Result<f64> {
    let u = u_param(a, trap, mass)?;
    let txy = transverse_renormalization_with(trap, thermal, policy, table)?;
    let tz = theta_tilde_with_kernel(
        boltzmann_alpha(trap.omega_z, thermal.temp_z),
        policy,
        OverlapKind::Hybrid,
        table,
    )?;
    Ok(u * txy * tz)
}

/// Transverse renormalization ϑ(α_X)·ϑ(α_Y) alone (used where the axial
/// factor is resolved mode-by-mode rather than averaged).
pub fn transverse_renormalization(
    trap: &TrapGeometry,
    thermal: &ThermalState,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let mut table = OverlapTable::new();
    transverse_renormalization_with(trap, thermal, policy, &mut table)
}

/// As [`transverse_renormalization`], reusing a shared overlap cache.
pub fn transverse_renormalization_with(
    trap: &TrapGeometry,
    thermal: &ThermalState,
    policy: &TruncationPolicy,
    table: &mut OverlapTable,
) -> Result<f64> {
    let tx = theta_with_kernel(
        boltzmann_alpha(trap.omega_x, thermal.temp_x),
        policy,
        OverlapKind::Hybrid,
        table,
    )?;
    let ty = theta_with_kernel(
        boltzmann_alpha(trap.omega_y, thermal.temp_y),
        policy,
        OverlapKind::Hybrid,
        table,
    )?;
    Ok(tx * ty)
}

/// Strong-interaction figure of merit
/// γ = E_int/⟨Ω̄⟩ with E_int = (N−1)|⟨U⟩_T|/2.
pub fn gamma_ratio(n_atoms: usize, mean_u: f64, mean_rabi: f64) -> Result<f64> {
    if n_atoms < 2 {
        return Err(Error::Domain("gamma requires at least two atoms"));
    }
    if !(mean_rabi > 0.0) {
        return Err(Error::Domain("gamma requires a positive mean Rabi frequency"));
    }
    Ok((n_atoms as f64 - 1.0) * math::fabs(mean_u) / (2.0 * mean_rabi))
}
