//! Gauss–Hermite quadrature and normalized harmonic-oscillator functions.
//!
//! Nodes are the eigenvalues of the Golub–Welsch tridiagonal matrix
//! (off-diagonal √(j/2)), polished by one Newton step on the normalized
//! oscillator function ψ_m. Weights are evaluated through
//!
//!   W_k = w_k e^{x_k²} = 1 / (m ψ_{m−1}(x_k)²),
//!
//! so that ∫ F(y) dy ≈ Σ_k W_k F(x_k) is exact whenever F is a polynomial
//! of degree ≤ 2m−1 times e^{−y²}. Working with ψ_n (Gaussian included,
//! values bounded by 1) instead of the bare Hermite polynomials avoids the
//! factorial overflows that set in near n ≈ 150; the only unbounded
//! quantities are logarithms, which are tracked explicitly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::tridiag_eigenvalues;
use crate::math;

/// ln(π)/4, for ψ_0 = π^{-1/4} e^{-x²/2}.
const LN_PI_QUARTER: f64 = 0.286_182_471_462_350_27;

/// Magnitude (as ln) and sign of ψ_n(x) for every n in `targets`
/// (strictly increasing). Returns (ln|ψ_n(x)|, sign) per target; sign 0
/// if the value underflows to an exact zero.
pub(crate) fn ln_psi_at(x: f64, targets: &[usize]) -> Vec<(f64, f64)> {
    debug_assert!(targets.windows(2).all(|w| w[0] < w[1]));
    let mut out = Vec::with_capacity(targets.len());
    // Scaled recurrence: ψ_n = val_n · e^{ofs}, with val kept in a safe range.
    let mut ofs = -0.5 * x * x - LN_PI_QUARTER;
    let mut prev = 0.0_f64; // ψ_{n-1}, scaled
    let mut cur = 1.0_f64; // ψ_0, scaled
    let mut next_target = 0;
    let n_max = *targets.last().unwrap();
    for n in 0..=n_max {
        if next_target < targets.len() && targets[next_target] == n {
            let (ln_v, sign) = if cur == 0.0 {
                (f64::NEG_INFINITY, 0.0)
            } else {
                (math::ln(math::fabs(cur)) + ofs, if cur > 0.0 { 1.0 } else { -1.0 })
            };
            out.push((ln_v, sign));
            next_target += 1;
        }
        if n == n_max {
            break;
        }
        let np1 = (n + 1) as f64;
        let new = x * math::sqrt(2.0 / np1) * cur - math::sqrt(n as f64 / np1) * prev;
        prev = cur;
        cur = new;
        let mag = math::fabs(cur).max(math::fabs(prev));
        if mag > 1e120 {
            cur *= 1e-120;
            prev *= 1e-120;
            ofs += math::ln(1e120);
        } else if mag != 0.0 && mag < 1e-120 {
            cur *= 1e120;
            prev *= 1e120;
            ofs -= math::ln(1e120);
        }
    }
    out
}

/// ψ_m(x) and ψ_{m−1}(x) with a common scale: returns (v_m, v_{m−1}, ln_scale)
/// with ψ = v · e^{ln_scale}. Used where only ratios matter (Newton steps).
fn psi_pair_scaled(m: usize, x: f64) -> (f64, f64, f64) {
    let mut ofs = -0.5 * x * x - LN_PI_QUARTER;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    for n in 0..m {
        let np1 = (n + 1) as f64;
        let new = x * math::sqrt(2.0 / np1) * cur - math::sqrt(n as f64 / np1) * prev;
        prev = cur;
        cur = new;
        let mag = math::fabs(cur).max(math::fabs(prev));
        if mag > 1e120 {
            cur *= 1e-120;
            prev *= 1e-120;
            ofs += math::ln(1e120);
        } else if mag != 0.0 && mag < 1e-120 {
            cur *= 1e120;
            prev *= 1e120;
            ofs -= math::ln(1e120);
        }
    }
    (cur, prev, ofs)
}

/// A Gauss–Hermite rule held in log form.
#[derive(Debug, Clone)]
pub struct HermiteRule {
    m: usize,
    nodes: Vec<f64>,
    ln_weights: Vec<f64>, // ln W_k with W_k = w_k e^{x_k²}
}

impl HermiteRule {
    /// Rule with `m` nodes (m ≥ 1).
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("quadrature rule needs at least one node"));
        }
        let diag = alloc::vec![0.0; m];
        let off: Vec<f64> = (1..m).map(|j| math::sqrt(j as f64 / 2.0)).collect();
        let mut nodes = tridiag_eigenvalues(&diag, &off)?;
        // One Newton step on ψ_m sharpens each eigenvalue to full precision;
        // ψ'_m = √(2m) ψ_{m−1} − x ψ_m.
        for x in nodes.iter_mut() {
            for _ in 0..2 {
                let (vm, vm1, _) = psi_pair_scaled(m, *x);
                let deriv = math::sqrt(2.0 * m as f64) * vm1 - *x * vm;
                if deriv != 0.0 {
                    let step = vm / deriv;
                    if math::fabs(step) < 1.0 {
                        *x -= step;
                    }
                }
            }
        }
        nodes.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let ln_m = math::ln(m as f64);
        let ln_weights = nodes
            .iter()
            .map(|&x| {
                let v = ln_psi_at(x, &[m - 1])[0];
                -ln_m - 2.0 * v.0
            })
            .collect();
        Ok(HermiteRule {
            m,
            nodes,
            ln_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// ∫ F(y) dy for F = polynomial × e^{−y²}; exact for degree ≤ 2m−1.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.ln_weights)
            .map(|(&x, &lw)| math::exp(lw) * f(x))
            .sum()
    }

    /// The mode-overlap integral evaluated on this rule:
    ///
    ///   I(n1, n2) = √(2π) ∫ ψ_{n1}²(z) ψ_{n2}²(z) dz,
    ///
    /// summed in log space so arbitrarily large mode indices stay finite.
    /// The rule must satisfy m ≥ n1+n2+1 for exactness.
    pub fn overlap(&self, n1: usize, n2: usize) -> f64 {
        debug_assert!(self.m >= n1 + n2 + 1, "rule too small for exactness");
        let mut targets_buf = [0usize; 2];
        let t = if n1 == n2 {
            targets_buf[0] = n1;
            &targets_buf[..1]
        } else {
            targets_buf[0] = n1.min(n2);
            targets_buf[1] = n1.max(n2);
            &targets_buf[..2]
        };
        let half_ln_pi = 2.0 * LN_PI_QUARTER;
        let inv_sqrt2 = core::f64::consts::FRAC_1_SQRT_2;
        let mut sum = 0.0;
        for (&x, &lw) in self.nodes.iter().zip(&self.ln_weights) {
            let vals = ln_psi_at(x * inv_sqrt2, t);
            let ln_prod = if t.len() == 1 {
                4.0 * vals[0].0
            } else {
                2.0 * (vals[0].0 + vals[1].0)
            };
            sum += math::exp(lw + ln_prod + half_ln_pi);
        }
        sum
    }
}

/// Node count used for an exact overlap of mode sum `s = n1 + n2`:
/// 2s+1 rounded up to the next even number.
pub fn overlap_rule_size(s: usize) -> usize {
    let m = 2 * s + 1;
    m + (m & 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_point_rule_matches_reference() {
        let rule = HermiteRule::new(3).unwrap();
        let xs = rule.nodes();
        assert!((xs[0] + 1.224_744_871_391_589).abs() < 1e-13);
        assert!(xs[1].abs() < 1e-13);
        assert!((xs[2] - 1.224_744_871_391_589).abs() < 1e-13);
        // Middle weight W = w e^{x²} = 2√π/3 at x = 0.
        let total: f64 = rule.integrate(|x| math::exp(-x * x));
        assert!((total - math::sqrt(core::f64::consts::PI)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_moments() {
        // ∫ y² e^{-y²} dy = √π/2, ∫ y⁴ e^{-y²} dy = 3√π/4.
        let rule = HermiteRule::new(6).unwrap();
        let sqrt_pi = math::sqrt(core::f64::consts::PI);
        let m2 = rule.integrate(|x| x * x * math::exp(-x * x));
        let m4 = rule.integrate(|x| x * x * x * x * math::exp(-x * x));
        assert!((m2 - sqrt_pi / 2.0).abs() < 1e-13);
        assert!((m4 - 3.0 * sqrt_pi / 4.0).abs() < 1e-12);
    }

    #[test]
    fn psi_values_match_closed_forms() {
        // ψ_0(x) = π^{-1/4} e^{-x²/2}; ψ_1(x) = √2 x ψ_0(x).
        for &x in &[0.3, 1.7, 5.0] {
            let v = ln_psi_at(x, &[0, 1]);
            let psi0 = math::exp(-0.5 * x * x) / math::pow(core::f64::consts::PI, 0.25);
            let psi1 = math::sqrt(2.0) * x * psi0;
            assert!((v[0].1 * math::exp(v[0].0) - psi0).abs() < 1e-14);
            assert!((v[1].1 * math::exp(v[1].0) - psi1).abs() < 1e-13);
        }
    }

    #[test]
    fn large_rule_stays_finite() {
        // n ≈ 400 would overflow naive Hermite-polynomial evaluation.
        let rule = HermiteRule::new(802).unwrap();
        let v = rule.overlap(250, 150);
        assert!(v.is_finite() && v > 0.0 && v < 1.0);
    }
}
