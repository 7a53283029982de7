//! Dense linear algebra for small real-symmetric problems.
//!
//! Householder tridiagonalization followed by the implicit-shift QL
//! iteration: the classic EISPACK `tred2`/`tql2` pair. Hilbert spaces here
//! are tiny (2^N with N ≤ 12, collective sectors of size N−1), so a dense
//! solver is the right tool. The eigenvalue-only tridiagonal path is reused
//! by the Gauss–Hermite node computation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Dense symmetric matrix, full row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    n: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(n: usize) -> Self {
        SymMat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both (i, j) and (j, i).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds to both (i, j) and (j, i); the diagonal is added once.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest absolute asymmetry max |A_ij − A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max(math::fabs(self.get(i, j) - self.get(j, i)));
            }
        }
        worst
    }
}

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    vectors: Vec<f64>, // eigenvector k occupies [k*n, (k+1)*n)
    n: usize,
}

impl Eigh {
    /// Components of the k-th eigenvector (unit norm).
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.n..(k + 1) * self.n]
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// Diagonalize a symmetric matrix.
pub fn eigh(mat: &SymMat) -> Result<Eigh> {
    let n = mat.n;
    if n == 0 {
        return Err(Error::Domain("cannot diagonalize an empty matrix"));
    }
    let mut a = mat.data.clone();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(n, &mut a, &mut d, &mut e);
    tql2(n, &mut d, &mut e, Some(&mut a))?;

    // Sort ascending; gather eigenvectors from the columns of `a`.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(core::cmp::Ordering::Equal));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (slot, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[slot * n + i] = a[i * n + k];
        }
    }
    Ok(Eigh { values, vectors, n })
}

/// Eigenvalues (ascending) of a symmetric tridiagonal matrix with diagonal
/// `diag` and subdiagonal `off` (`off.len() == diag.len() - 1`).
pub fn tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n {
        return Err(Error::Domain("tridiagonal sizes inconsistent"));
    }
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[1..n].copy_from_slice(off);
    // tql expects the subdiagonal in e[0..n-1] after the shift below.
    tql2(n, &mut d, &mut e, None)?;
    d.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    Ok(d)
}

/// Householder reduction to tridiagonal form with accumulated transform.
/// On exit `a` holds the orthogonal matrix Q, `d` the diagonal, `e[1..]`
/// the subdiagonal.
fn tred2(n: usize, a: &mut [f64], d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += math::fabs(a[i * n + k]);
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
            } else {
                for k in 0..=l {
                    a[i * n + k] /= scale;
                    h += a[i * n + k] * a[i * n + k];
                }
                let f = a[i * n + l];
                let g = if f >= 0.0 {
                    -math::sqrt(h)
                } else {
                    math::sqrt(h)
                };
                e[i] = scale * g;
                h -= f * g;
                a[i * n + l] = f - g;
                let mut f_acc = 0.0;
                for j in 0..=l {
                    a[j * n + i] = a[i * n + j] / h;
                    let mut g_acc = 0.0;
                    for k in 0..=j {
                        g_acc += a[j * n + k] * a[i * n + k];
                    }
                    for k in (j + 1)..=l {
                        g_acc += a[k * n + j] * a[i * n + k];
                    }
                    e[j] = g_acc / h;
                    f_acc += e[j] * a[i * n + j];
                }
                let hh = f_acc / (h + h);
                for j in 0..=l {
                    let f = a[i * n + j];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[j * n + k] -= f * e[k] + g * a[i * n + k];
                    }
                }
            }
        } else {
            e[i] = a[i * n + l];
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for i in 0..n {
        if d[i] != 0.0 {
            for j in 0..i {
                let mut g = 0.0;
                for k in 0..i {
                    g += a[i * n + k] * a[k * n + j];
                }
                for k in 0..i {
                    a[k * n + j] -= g * a[k * n + i];
                }
            }
        }
        d[i] = a[i * n + i];
        a[i * n + i] = 1.0;
        for j in 0..i {
            a[j * n + i] = 0.0;
            a[i * n + j] = 0.0;
        }
    }
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[1..]` the subdiagonal on entry. When `z` is
/// given it must hold the accumulated transform (e.g. from [`tred2`]) and
/// is updated to the eigenvector matrix (eigenvectors in columns).
fn tql2(n: usize, d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = math::fabs(d[m]) + math::fabs(d[m + 1]);
                if math::fabs(e[m]) <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS {
                return Err(Error::Numerical("QL iteration did not converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = math::hypot(g, 1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = math::hypot(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(zm) = z.as_deref_mut() {
                    for k in 0..n {
                        f = zm[k * n + i + 1];
                        zm[k * n + i + 1] = s * zm[k * n + i] + c * f;
                        zm[k * n + i] = c * zm[k * n + i] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Solve `a x = b` for a small dense system by Gaussian elimination with
/// partial pivoting. `a` is row-major n×n and is destroyed.
pub fn solve_dense(a: &mut [f64], b: &mut [f64]) -> Result<()> {
    let n = b.len();
    if a.len() != n * n {
        return Err(Error::Domain("solve_dense shape mismatch"));
    }
    for col in 0..n {
        let mut piv = col;
        let mut best = math::fabs(a[col * n + col]);
        for row in (col + 1)..n {
            let v = math::fabs(a[row * n + col]);
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return Err(Error::Numerical("singular matrix in solve_dense"));
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let inv = 1.0 / a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] * inv;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col * n + k] * b[k];
        }
        b[col] = acc / a[col * n + col];
    }
    Ok(())
}

/// Invert a small dense matrix (row-major), by repeated solves.
pub fn invert_dense(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; n * n];
    for col in 0..n {
        let mut rhs = vec![0.0; n];
        rhs[col] = 1.0;
        let mut work = a.to_vec();
        solve_dense(&mut work, &mut rhs)?;
        for row in 0..n {
            out[row * n + col] = rhs[row];
        }
    }
    Ok(out)
}

/// Orthonormal basis of the complement of the uniform vector (1,…,1)/√n,
/// returned as the columns of an n×(n−1) matrix (row-major).
///
/// Built from a single Householder reflector that maps e₁ onto the uniform
/// vector, so the remaining columns span its orthogonal complement exactly.
pub fn uniform_complement_basis(n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let s = 1.0 / math::sqrt(n as f64);
    // v = s_vec + e1 (all entries of s_vec are +s > 0, so this is the
    // numerically stable sign choice); H = I - 2 v vᵀ/(vᵀv) maps s_vec to -e1.
    let mut v = vec![s; n];
    v[0] += 1.0;
    let vtv: f64 = v.iter().map(|x| x * x).sum();
    let mut q = vec![0.0; n * (n - 1)];
    for col in 1..n {
        for row in 0..n {
            let id = if row == col { 1.0 } else { 0.0 };
            q[row * (n - 1) + (col - 1)] = id - 2.0 * v[row] * v[col] / vtv;
        }
    }
    q
}
