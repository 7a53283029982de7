//! Exact dynamics of N driven pseudo-spins and the collective sideband
//! decomposition of the lineshape.
//!
//! The rotating-frame Hamiltonian of one tube with modes n⃗ = (n₁,…,n_N) is
//!
//!   H/ħ = −δ S^z − Σ_j Ω_{n_j} S^x_{n_j}
//!         − Σ_{j'≠j} (U_{n_j,n_{j'}}/2)(S⃗_{n_j}·S⃗_{n_{j'}} − 1/4),
//!
//! a real symmetric operator on the 2^N product basis. Exact evolution by
//! eigendecomposition serves as the assumption-free reference. The N−1
//! collective excitation modes — the S = N/2−1, M = N/2−1 sector reached
//! by one spin flip from |e…e⟩ with the symmetric state projected out —
//! give the sideband positions U^{q,N} and couplings ΔΩ^{q,N}, and with
//! them the sideband lineshape
//!
//!   N^e(t, δ) = N f(t, δ, Ω̄) + Σ_q f(t, δ − U^{q,N}, ΔΩ^{q,N}),
//!
//! where f(t, δ, y) = y²/(y²+δ²) · sin²(t√(y²+δ²)/2).

use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{eigh, uniform_complement_basis, SymMat};
use crate::math;
use crate::types::{Direction, DriveParams, ModeConfiguration, Spectrum};

/// Hard cap on the atom number for exact evolution (2^N amplitudes).
pub const MAX_ATOMS_EXACT: usize = 12;

/// Norm drift tolerated across a unitary evolution.
const NORM_TOL: f64 = 1e-9;

/// The two-level Rabi transfer probability f(t, δ, y).
pub fn rabi_lineshape(t: f64, delta: f64, y: f64) -> f64 {
    let w2 = y * y + delta * delta;
    if w2 == 0.0 {
        return 0.0;
    }
    let s = math::sin(0.5 * t * math::sqrt(w2));
    (y * y / w2) * s * s
}

/// Mode-dependent carrier Rabi frequency Ω_n.
///
/// The exact branch is the carrier Lamb-Dicke coupling
/// Ω^B e^{−η²/2} L_n(η²); the linearized branch Ω^B (1 − η²(n + 1/2))
/// reproduces the first-order pairwise difference ΔΩ = −Ω^B η² Δn/√2.
pub fn rabi_frequency_mode(n: usize, eta: f64, rabi_bare: f64, linearized: bool) -> f64 {
    let x = eta * eta;
    if linearized {
        return rabi_bare * (1.0 - x * (n as f64 + 0.5));
    }
    rabi_bare * math::exp(-0.5 * x) * laguerre(n, x)
}

/// Laguerre polynomial L_n(x) by the three-term recurrence.
fn laguerre(n: usize, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut cur = 1.0 - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Boltzmann-averaged carrier Rabi frequency ⟨Ω_n⟩ over axial modes.
///
/// A cross-check companion to an experimentally estimated ⟨Ω̄⟩; the
/// average uses the exact Laguerre branch.
pub fn mean_rabi_thermal(
    rabi_bare: f64,
    eta: f64,
    alpha_z: f64,
    policy: &crate::overlap::TruncationPolicy,
) -> Result<f64> {
    if alpha_z.is_infinite() {
        return Ok(rabi_frequency_mode(0, eta, rabi_bare, false));
    }
    let cap = policy.mode_cap(alpha_z)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for n in 0..=cap {
        let w = math::exp(-alpha_z * n as f64);
        num += rabi_frequency_mode(n, eta, rabi_bare, false) * w;
        den += w;
    }
    Ok(num / den)
}

/// One tube of N pseudo-spins: modes, per-mode Rabi frequencies, the
/// symmetric interaction matrix (zero diagonal), and the detuning.
#[derive(Debug, Clone)]
pub struct SpinSystem {
    pub modes: ModeConfiguration,
    pub rabi_per_mode: Vec<f64>,
    pub u_matrix: SymMat,
    pub detuning: f64,
}

impl SpinSystem {
    pub fn new(
        modes: ModeConfiguration,
        rabi_per_mode: Vec<f64>,
        u_matrix: SymMat,
        detuning: f64,
    ) -> Result<Self> {
        let n = modes.len();
        if rabi_per_mode.len() != n || u_matrix.dim() != n {
            return Err(Error::Domain("spin system dimensions disagree"));
        }
        if u_matrix.asymmetry() > 0.0 {
            return Err(Error::Domain("interaction matrix must be symmetric"));
        }
        for j in 0..n {
            if u_matrix.get(j, j) != 0.0 {
                return Err(Error::Domain("interaction matrix must have zero diagonal"));
            }
        }
        Ok(SpinSystem {
            modes,
            rabi_per_mode,
            u_matrix,
            detuning,
        })
    }

    /// Build Ω_{n_j} from the Lamb-Dicke coupling and U_{n_j,n_{j'}} from
    /// the exact overlap integrals scaled by the interaction strength `u`.
    pub fn from_overlaps(
        modes: ModeConfiguration,
        rabi_bare: f64,
        eta: f64,
        u: f64,
        detuning: f64,
        linearized: bool,
    ) -> Result<Self> {
        let n = modes.len();
        let rabi: Vec<f64> = modes
            .modes()
            .iter()
            .map(|&m| rabi_frequency_mode(m, eta, rabi_bare, linearized))
            .collect();
        let policy = crate::overlap::TruncationPolicy::default();
        let mut umat = SymMat::zeros(n);
        for j in 0..n {
            for jp in (j + 1)..n {
                let i = crate::overlap::overlap_integral(modes.modes()[j], modes.modes()[jp], &policy)?;
                umat.set(j, jp, u * i);
            }
        }
        SpinSystem::new(modes, rabi, umat, detuning)
    }

    pub fn n_atoms(&self) -> usize {
        self.modes.len()
    }

    pub fn at_detuning(&self, detuning: f64) -> Self {
        SpinSystem {
            detuning,
            ..self.clone()
        }
    }

    /// Mean Rabi frequency Ω̄ over the occupied modes.
    pub fn mean_rabi(&self) -> f64 {
        self.rabi_per_mode.iter().sum::<f64>() / self.rabi_per_mode.len() as f64
    }
}

/// Pure state on the {e,g}^N product basis (bit j set ⇔ atom j excited).
#[derive(Debug, Clone)]
pub struct QuantumState {
    amps: Vec<Complex64>,
}

impl QuantumState {
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_power_of_two() {
            return Err(Error::Domain("state dimension must be a power of two"));
        }
        let state = QuantumState { amps };
        if math::fabs(state.norm() - 1.0) > NORM_TOL {
            return Err(Error::Domain("state must have unit norm"));
        }
        Ok(state)
    }

    /// |g…g⟩.
    pub fn all_g(n_atoms: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_atoms];
        amps[0] = Complex64::new(1.0, 0.0);
        QuantumState { amps }
    }

    /// |e…e⟩.
    pub fn all_e(n_atoms: usize) -> Self {
        let dim = 1usize << n_atoms;
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[dim - 1] = Complex64::new(1.0, 0.0);
        QuantumState { amps }
    }

    pub fn n_atoms(&self) -> usize {
        self.amps.len().trailing_zeros() as usize
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.amps.iter().map(|a| a.norm_sqr()).sum())
    }
}

/// The dense Hamiltonian H/ħ of a spin system (real symmetric, 2^N × 2^N).
pub fn build_hamiltonian(sys: &SpinSystem) -> Result<SymMat> {
    let n = sys.n_atoms();
    if n > MAX_ATOMS_EXACT {
        return Err(Error::Resource("exact evolution capped at 12 atoms"));
    }
    let dim = 1usize << n;
    let mut h = SymMat::zeros(dim);
    let half_n = n as f64 / 2.0;
    for b in 0..dim {
        let pop = (b as u64).count_ones() as f64;
        // −δ S^z.
        h.add(b, b, -sys.detuning * (pop - half_n));
        // −Σ_j Ω_j S^x_j: flips one bit, element −Ω_j/2.
        for j in 0..n {
            let b2 = b ^ (1 << j);
            if b2 > b {
                h.add(b, b2, -0.5 * sys.rabi_per_mode[j]);
            }
        }
        // −Σ_{j<j'} U_{jj'} (S_j·S_{j'} − 1/4): for anti-aligned bits a
        // diagonal +U/2 and a flip-flop −U/2.
        for j in 0..n {
            for jp in (j + 1)..n {
                let bj = (b >> j) & 1;
                let bjp = (b >> jp) & 1;
                if bj != bjp {
                    let u = sys.u_matrix.get(j, jp);
                    h.add(b, b, 0.5 * u);
                    let b2 = b ^ (1 << j) ^ (1 << jp);
                    if b2 > b {
                        h.add(b, b2, -0.5 * u);
                    }
                }
            }
        }
    }
    Ok(h)
}

/// Unitary evolution exp(−iHt)|ψ⟩ by eigendecomposition.
pub fn evolve(h: &SymMat, initial: &QuantumState, t: f64) -> Result<QuantumState> {
    let dim = h.dim();
    if initial.amps.len() != dim {
        return Err(Error::Domain("state dimension does not match Hamiltonian"));
    }
    if math::fabs(initial.norm() - 1.0) > NORM_TOL {
        return Err(Error::Domain("initial state must have unit norm"));
    }
    let eig = eigh(h)?;
    // a_k = v_k · ψ, then ψ(t) = Σ_k e^{-i λ_k t} a_k v_k.
    let mut coeff = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let v = eig.vector(k);
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..dim {
            acc += v[i] * initial.amps[i];
        }
        let phase = -eig.values[k] * t;
        coeff[k] = acc * Complex64::new(math::cos(phase), math::sin(phase));
    }
    let mut out = vec![Complex64::new(0.0, 0.0); dim];
    for k in 0..dim {
        let v = eig.vector(k);
        let c = coeff[k];
        for i in 0..dim {
            out[i] += c * v[i];
        }
    }
    let state = QuantumState { amps: out };
    if math::fabs(state.norm() - 1.0) > NORM_TOL {
        return Err(Error::Numerical("evolution lost unitarity"));
    }
    Ok(state)
}

/// Excited-state fraction ⟨N_e⟩/N of a product-basis state.
pub fn excitation_fraction(state: &QuantumState) -> f64 {
    let n = state.n_atoms() as f64;
    let mut acc = 0.0;
    for (b, a) in state.amps.iter().enumerate() {
        acc += (b as u64).count_ones() as f64 * a.norm_sqr();
    }
    acc / n
}

/// Exact lineshape: evolve the initial product state at every grid
/// detuning and record the transferred fraction.
///
/// For g→e interrogation the excited fraction is recorded; for e→g the
/// de-excited fraction, so both start at 0 far off resonance.
pub fn lineshape_exact(sys: &SpinSystem, drive: &DriveParams, grid: &[f64]) -> Result<Spectrum> {
    let n = sys.n_atoms();
    let initial = match drive.direction {
        Direction::GtoE => QuantumState::all_g(n),
        Direction::EtoG => QuantumState::all_e(n),
    };
    let mut values = Vec::with_capacity(grid.len());
    for &delta in grid {
        let h = build_hamiltonian(&sys.at_detuning(delta))?;
        let fin = evolve(&h, &initial, drive.duration)?;
        let frac = excitation_fraction(&fin);
        values.push(match drive.direction {
            Direction::GtoE => frac,
            Direction::EtoG => 1.0 - frac,
        });
    }
    Spectrum::from_values(grid, &values)
}

/// The N−1 collective excitation modes of the one-flip sector.
#[derive(Debug, Clone)]
pub struct CollectiveSpectrum {
    /// Interaction energies U^{q,N}, rad/s, ascending.
    pub energies: Vec<f64>,
    /// Drive couplings ΔΩ^{q,N}, rad/s (signs are basis conventions;
    /// only magnitudes are physical).
    pub couplings: Vec<f64>,
    /// Mean Rabi frequency Ω̄ of the carrier term.
    pub mean_rabi: f64,
    /// True if two or more collective energies coincide within tolerance;
    /// individual couplings inside such a block are basis-dependent.
    pub degenerate: bool,
}

impl CollectiveSpectrum {
    /// Sum of squared couplings per degenerate energy block (the
    /// basis-invariant combination), as (energy, Σ ΔΩ²) pairs.
    pub fn block_coupling_squares(&self, rel_tol: f64) -> Vec<(f64, f64)> {
        let scale = self
            .energies
            .iter()
            .fold(0.0_f64, |m, &e| m.max(math::fabs(e)))
            .max(1e-300);
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (&e, &c) in self.energies.iter().zip(&self.couplings) {
            match out.last_mut() {
                Some((e0, acc)) if math::fabs(e - *e0) <= rel_tol * scale => {
                    *acc += c * c;
                }
                _ => out.push((e, c * c)),
            }
        }
        out
    }
}

/// Diagonalize the interaction within the S = N/2−1, M = N/2−1 sector.
///
/// In the one-flip basis |a⟩ (atom a in g, the rest in e) the interaction
/// block is M_ab = δ_ab Σ_{j≠a} U_{aj}/2 − U_{ab}/2; the uniform vector is
/// its exact null vector (the symmetric, non-interacting state) and is
/// projected out with a Householder complement. Couplings follow from
/// ⟨e…e|S^x_j|q⟩ = c_j^q/2 as ΔΩ^q = Σ_j Ω_j c_j^q.
pub fn collective_spectrum(sys: &SpinSystem) -> Result<CollectiveSpectrum> {
    let n = sys.n_atoms();
    if n < 2 {
        return Err(Error::Domain("collective spectrum requires N >= 2"));
    }
    let mut sector = SymMat::zeros(n);
    for a in 0..n {
        let mut row_sum = 0.0;
        for j in 0..n {
            if j != a {
                row_sum += sys.u_matrix.get(a, j);
            }
        }
        sector.set(a, a, 0.5 * row_sum);
        for b in (a + 1)..n {
            sector.set(a, b, -0.5 * sys.u_matrix.get(a, b));
        }
    }
    let q = uniform_complement_basis(n);
    let cols = n - 1;
    // B = Qᵀ M Q.
    let mut b = SymMat::zeros(cols);
    for ca in 0..cols {
        for cb in ca..cols {
            let mut acc = 0.0;
            for i in 0..n {
                let mut mi = 0.0;
                for j in 0..n {
                    mi += sector.get(i, j) * q[j * cols + cb];
                }
                acc += q[i * cols + ca] * mi;
            }
            b.set(ca, cb, acc);
        }
    }
    let eig = eigh(&b)?;
    let mut modes: Vec<(f64, f64)> = (0..cols)
        .map(|k| {
            let y = eig.vector(k);
            let mut coupling = 0.0;
            for j in 0..n {
                let mut cj = 0.0;
                for c in 0..cols {
                    cj += q[j * cols + c] * y[c];
                }
                coupling += sys.rabi_per_mode[j] * cj;
            }
            (eig.values[k], coupling)
        })
        .collect();
    modes.sort_unstable_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(
                math::fabs(a.1)
                    .partial_cmp(&math::fabs(b.1))
                    .unwrap_or(core::cmp::Ordering::Equal),
            )
    });
    let energies: Vec<f64> = modes.iter().map(|m| m.0).collect();
    let couplings: Vec<f64> = modes.iter().map(|m| m.1).collect();
    let scale = energies
        .iter()
        .fold(0.0_f64, |m, &e| m.max(math::fabs(e)))
        .max(1e-300);
    let degenerate = energies
        .windows(2)
        .any(|w| math::fabs(w[1] - w[0]) <= 1e-9 * scale);
    Ok(CollectiveSpectrum {
        energies,
        couplings,
        mean_rabi: sys.mean_rabi(),
        degenerate,
    })
}

/// Sideband lineshape: carrier plus the N−1 collective resonances,
/// normalized to an excitation fraction.
pub fn lineshape_sidebands(
    cs: &CollectiveSpectrum,
    n_atoms: usize,
    drive: &DriveParams,
    grid: &[f64],
) -> Result<Spectrum> {
    if n_atoms < 2 || cs.energies.len() != n_atoms - 1 {
        return Err(Error::Domain("collective spectrum size must be N - 1"));
    }
    // e→g interrogation mirrors the sidebands to δ = −U^q.
    let sign = match drive.direction {
        Direction::GtoE => 1.0,
        Direction::EtoG => -1.0,
    };
    let t = drive.duration;
    let nf = n_atoms as f64;
    let values: Vec<f64> = grid
        .iter()
        .map(|&delta| {
            let mut acc = nf * rabi_lineshape(t, delta, cs.mean_rabi);
            for (&u, &dw) in cs.energies.iter().zip(&cs.couplings) {
                acc += rabi_lineshape(t, delta - sign * u, dw);
            }
            acc / nf
        })
        .collect();
    Spectrum::from_values(grid, &values)
}
