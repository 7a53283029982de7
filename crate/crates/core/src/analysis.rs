//! Data reduction and least-squares parameter extraction.
//!
//! The experimental pipeline: concatenate repeated scans, bin on a grid
//! anchored at δ = 0, compute per-bin means and standard errors, reflect
//! the (sideband-free) positive-detuning half onto the negative half and
//! subtract to isolate the ISB, then fit. Fitting uses damped least
//! squares (Levenberg–Marquardt): damped normal equations with simple
//! gain-based step acceptance.

use alloc::vec;
use alloc::vec::Vec;

use crate::ensemble::{per_site_values, reduce_weighted, sample_sites, EnsembleConfig, SiteSample};
use crate::error::{Error, Result};
use crate::linalg::{invert_dense, solve_dense};
use crate::math;

/// Scan sweep direction (alternated in the experiment to cancel drift).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanDirection {
    Up,
    Down,
}

/// One laser scan across the resonance: (detuning in Hz, excitation).
#[derive(Debug, Clone)]
pub struct ScanRecord {
    pub points: Vec<(f64, f64)>,
    pub direction: ScanDirection,
    pub scan_id: u64,
}

impl ScanRecord {
    pub fn new(points: Vec<(f64, f64)>, direction: ScanDirection, scan_id: u64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("scan must contain points"));
        }
        let monotone = points.windows(2).all(|w| match direction {
            ScanDirection::Up => w[0].0 < w[1].0,
            ScanDirection::Down => w[0].0 > w[1].0,
        });
        if !monotone {
            return Err(Error::Domain("scan detunings must be monotone"));
        }
        Ok(ScanRecord {
            points,
            direction,
            scan_id,
        })
    }
}

/// One bin of pooled scan data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    /// Bin center, Hz.
    pub center: f64,
    pub mean: f64,
    /// Standard error of the mean (0 for a single count, flagged by
    /// `count == 1`).
    pub sem: f64,
    pub count: usize,
}

/// Binned lineshape on a grid aligned to δ = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedSpectrum {
    pub bins: Vec<Bin>,
    pub bin_width: f64,
}

impl BinnedSpectrum {
    /// True if any bin holds a single point (its SEM is meaningless).
    pub fn has_degenerate_bins(&self) -> bool {
        self.bins.iter().any(|b| b.count < 2)
    }
}

/// Pool the points of every scan and bin them on a grid aligned to δ = 0
/// (bin k covers [(k−1/2)w, (k+1/2)w)). Empty bins are omitted.
pub fn concatenate_and_bin(scans: &[ScanRecord], bin_width: f64) -> Result<BinnedSpectrum> {
    if !(bin_width > 0.0) {
        return Err(Error::Domain("bin width must be positive"));
    }
    if scans.is_empty() {
        return Err(Error::Domain("need at least one scan"));
    }
    let mut buckets: alloc::collections::BTreeMap<i64, Vec<f64>> =
        alloc::collections::BTreeMap::new();
    for scan in scans {
        for &(detuning, excitation) in &scan.points {
            let k = math::round(detuning / bin_width) as i64;
            buckets.entry(k).or_default().push(excitation);
        }
    }
    if buckets.is_empty() {
        return Err(Error::Domain("no points to bin"));
    }
    let bins = buckets
        .into_iter()
        .map(|(k, mut vals)| {
            // Canonical reduction order: bit-identical means regardless of
            // the order scans were supplied in.
            vals.sort_unstable_by(f64::total_cmp);
            let count = vals.len();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let sem = if count > 1 {
                let var =
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (count - 1) as f64;
                math::sqrt(var / count as f64)
            } else {
                0.0
            };
            Bin {
                center: k as f64 * bin_width,
                mean,
                sem,
                count,
            }
        })
        .collect();
    Ok(BinnedSpectrum { bins, bin_width })
}

/// Reflect the positive-detuning half onto the negative half and subtract:
/// output(−|δ|) = value(−|δ|) − value(+|δ|), uncertainties in quadrature.
///
/// Bins without a mirror partner (including δ = 0, its own mirror) are
/// dropped.
pub fn reflect_subtract(binned: &BinnedSpectrum) -> Result<BinnedSpectrum> {
    let mut positive: alloc::collections::BTreeMap<i64, &Bin> = alloc::collections::BTreeMap::new();
    let key = |b: &Bin| math::round(b.center / binned.bin_width) as i64;
    for b in &binned.bins {
        let k = key(b);
        if k > 0 {
            positive.insert(k, b);
        }
    }
    let mut bins = Vec::new();
    for b in &binned.bins {
        let k = key(b);
        if k >= 0 {
            continue;
        }
        if let Some(mirror) = positive.get(&(-k)) {
            bins.push(Bin {
                center: b.center,
                mean: b.mean - mirror.mean,
                sem: math::sqrt(b.sem * b.sem + mirror.sem * mirror.sem),
                count: b.count.min(mirror.count),
            });
        }
    }
    if bins.is_empty() {
        return Err(Error::Domain("no mirror-matched bins"));
    }
    Ok(BinnedSpectrum {
        bins,
        bin_width: binned.bin_width,
    })
}

/// One point offered to a fitter.
#[derive(Debug, Clone, Copy)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    pub sigma: Option<f64>,
}

impl From<&Bin> for FitPoint {
    fn from(b: &Bin) -> Self {
        FitPoint {
            x: b.center,
            y: b.mean,
            sigma: if b.sem > 0.0 { Some(b.sem) } else { None },
        }
    }
}

/// A named fitted parameter with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParam {
    pub name: &'static str,
    pub value: f64,
    pub std_err: f64,
}

/// Outcome of a least-squares fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// √(Σ r²) of the weighted residuals at the solution.
    pub residual_norm: f64,
    pub converged: bool,
    pub n_evaluations: usize,
    /// A parameter ended on its bound.
    pub at_bound: bool,
}

impl FitResult {
    pub fn param(&self, name: &str) -> Option<(f64, f64)> {
        self.params
            .iter()
            .find(|p| p.name == name)
            .map(|p| (p.value, p.std_err))
    }
}

/// Options of the damped least-squares driver.
struct LmOptions<'a> {
    /// Typical magnitude per parameter (finite-difference scaling).
    scales: &'a [f64],
    max_iterations: usize,
    rel_step_tol: f64,
}

struct LmOutcome {
    x: Vec<f64>,
    covariance: Option<Vec<f64>>,
    chi2: f64,
    n_evaluations: usize,
    converged: bool,
}

/// Damped least squares: solve (JᵀJ + λ diag(JᵀJ)) δ = −Jᵀr, accept steps
/// that lower χ², shrink λ on success and grow it on failure.
fn lm_minimize<F>(mut residuals: F, x0: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: FnMut(&[f64], &mut Vec<f64>) -> Result<()>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = Vec::new();
    residuals(&x, &mut r)?;
    let mut n_eval = 1;
    let m = r.len();
    if m < n {
        return Err(Error::Domain("fewer residuals than parameters"));
    }
    let chi2_of = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let mut chi2 = chi2_of(&r);
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut jac = vec![0.0; m * n];
    let mut r_pert = Vec::new();
    let mut last_jtj: Option<Vec<f64>> = None;

    for _iter in 0..opts.max_iterations {
        // Forward-difference Jacobian.
        for j in 0..n {
            let step = 1e-6 * math::fabs(x[j]).max(opts.scales[j] * 1e-6);
            let mut xp = x.clone();
            xp[j] += step;
            residuals(&xp, &mut r_pert)?;
            n_eval += 1;
            for i in 0..m {
                jac[i * n + j] = (r_pert[i] - r[i]) / step;
            }
        }
        // Normal equations.
        let mut jtj = vec![0.0; n * n];
        let mut jtr = vec![0.0; n];
        for i in 0..m {
            for a in 0..n {
                let ja = jac[i * n + a];
                jtr[a] += ja * r[i];
                for b in a..n {
                    jtj[a * n + b] += ja * jac[i * n + b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[a * n + b] = jtj[b * n + a];
            }
        }
        last_jtj = Some(jtj.clone());

        let mut improved = false;
        for _try in 0..16 {
            let mut a = jtj.clone();
            for d in 0..n {
                let diag = jtj[d * n + d];
                a[d * n + d] = diag + lambda * diag.max(1e-30);
            }
            let mut step: Vec<f64> = jtr.iter().map(|v| -v).collect();
            if solve_dense(&mut a, &mut step).is_err() {
                lambda *= 10.0;
                continue;
            }
            let xn: Vec<f64> = x.iter().zip(&step).map(|(xi, s)| xi + s).collect();
            residuals(&xn, &mut r_pert)?;
            n_eval += 1;
            let chi2_new = chi2_of(&r_pert);
            if chi2_new.is_finite() && chi2_new < chi2 {
                let small_step = step
                    .iter()
                    .zip(&x)
                    .zip(opts.scales)
                    .all(|((s, xi), sc)| {
                        math::fabs(*s) <= opts.rel_step_tol * (math::fabs(*xi) + sc)
                    });
                x = xn;
                core::mem::swap(&mut r, &mut r_pert);
                let rel_drop = (chi2 - chi2_new) / chi2.max(1e-300);
                chi2 = chi2_new;
                lambda = (lambda / 3.0).max(1e-12);
                improved = true;
                if small_step || rel_drop < 1e-14 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e14 {
                break;
            }
        }
        if converged {
            break;
        }
        if !improved {
            // λ exhausted: local minimum to working precision.
            converged = chi2.is_finite();
            break;
        }
    }

    // Covariance from the final Gauss–Newton matrix, scaled by the reduced χ².
    let covariance = last_jtj.and_then(|jtj| {
        let dof = (m.saturating_sub(n)).max(1) as f64;
        invert_dense(&jtj, n)
            .ok()
            .map(|inv| inv.iter().map(|v| v * chi2 / dof).collect())
    });
    Ok(LmOutcome {
        x,
        covariance,
        chi2,
        n_evaluations: n_eval,
        converged,
    })
}

/// Lorentzian model A γ²/((x−x₀)² + γ²) + B.
fn lorentzian(x: f64, p: &[f64]) -> f64 {
    let (x0, a, g, b) = (p[0], p[1], p[2], p[3]);
    let g2 = g * g;
    a * g2 / ((x - x0) * (x - x0) + g2) + b
}

/// Least-squares Lorentzian fit; parameters `center`, `amplitude`,
/// `width` (half width at half maximum), `offset`.
pub fn lorentzian_fit(points: &[FitPoint]) -> Result<FitResult> {
    if points.len() < 4 {
        return Err(Error::Domain("lorentzian fit needs at least 4 points"));
    }
    let names = ["center", "amplitude", "width", "offset"];
    let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let scale_y = ys.iter().fold(0.0_f64, |m, v| m.max(math::fabs(*v))).max(1e-30);
    if spread <= 1e-12 * scale_y {
        // Flat input: no center is identifiable; report a zero-amplitude
        // non-converged result rather than a spurious confident fit.
        return Ok(FitResult {
            params: names
                .iter()
                .map(|&name| FitParam {
                    name,
                    value: if name == "offset" { ys[0] } else { 0.0 },
                    std_err: f64::INFINITY,
                })
                .collect(),
            residual_norm: 0.0,
            converged: false,
            n_evaluations: 0,
            at_bound: false,
        });
    }
    // Initial guess from the most prominent excursion off the median.
    let mut sorted = ys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let (imax, _) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, math::fabs(p.y - median)))
        .fold((0, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
    let span = points.last().unwrap().x - points[0].x;
    let x0 = [
        points[imax].x,
        points[imax].y - median,
        math::fabs(span) / 10.0,
        median,
    ];
    let weighted = points.iter().all(|p| p.sigma.map_or(false, |s| s > 0.0));
    let pts: Vec<FitPoint> = points.to_vec();
    let residual = move |p: &[f64], out: &mut Vec<f64>| -> Result<()> {
        out.clear();
        for pt in &pts {
            let w = if weighted { pt.sigma.unwrap() } else { 1.0 };
            out.push((lorentzian(pt.x, p) - pt.y) / w);
        }
        Ok(())
    };
    let scales = [
        math::fabs(span).max(1.0),
        math::fabs(x0[1]).max(1e-3),
        math::fabs(span / 10.0).max(1.0),
        scale_y,
    ];
    let opts = LmOptions {
        scales: &scales,
        max_iterations: 200,
        rel_step_tol: 1e-8,
    };
    let out = lm_minimize(residual, &x0, &opts)?;
    Ok(pack_result(&names, &out, false))
}

fn pack_result(names: &[&'static str], out: &LmOutcome, at_bound: bool) -> FitResult {
    let n = names.len();
    let errs: Vec<f64> = match &out.covariance {
        Some(cov) => (0..n)
            .map(|i| {
                let v = cov[i * n + i];
                if v >= 0.0 {
                    math::sqrt(v)
                } else {
                    f64::NAN
                }
            })
            .collect(),
        None => vec![f64::NAN; n],
    };
    let finite_errs = errs.iter().all(|e| e.is_finite());
    FitResult {
        params: names
            .iter()
            .zip(out.x.iter().zip(&errs))
            .map(|(&name, (&value, &std_err))| FitParam {
                name,
                value,
                std_err,
            })
            .collect(),
        residual_norm: math::sqrt(out.chi2),
        converged: out.converged && finite_errs,
        n_evaluations: out.n_evaluations,
        at_bound,
    }
}

/// Configuration of the scattering-length fit: the ensemble model the
/// binned ISB data is compared against.
#[derive(Debug, Clone)]
pub struct ScatteringFitModel {
    /// Ensemble template; its `a_eg_minus` and (optionally) the center
    /// trap's `eta_z` are replaced by the fit parameters.
    pub ensemble: EnsembleConfig,
    /// Also float the Lamb-Dicke parameter η_Z.
    pub free_eta: bool,
    /// Exclude bins with |δ| below this multiple of Ω^B (closed-form
    /// validity cut).
    pub carrier_cut: f64,
    /// Extra excluded detuning windows [lo, hi] in Hz (e.g. a known
    /// contamination dip).
    pub masked_hz: Vec<(f64, f64)>,
    /// Cap on |a⁻ₑg| in Bohr radii.
    pub abs_bound_bohr: f64,
}

impl ScatteringFitModel {
    pub fn new(ensemble: EnsembleConfig) -> Self {
        ScatteringFitModel {
            ensemble,
            free_eta: false,
            carrier_cut: 5.0,
            masked_hz: Vec::new(),
            abs_bound_bohr: 1e4,
        }
    }
}

/// Fit the singlet scattering length (in Bohr radii) to a reflected,
/// binned ISB spectrum, weighting by 1/sem² where SEMs are available.
///
/// The model spectrum is the trap-averaged closed form evaluated on the
/// same site sample for every iteration (common random numbers), so the
/// objective is smooth and the fit deterministic given the seed.
pub fn fit_scattering_length(
    data: &BinnedSpectrum,
    model: &ScatteringFitModel,
    initial_a_bohr: f64,
) -> Result<FitResult> {
    let bohr = crate::constants::BOHR_RADIUS;
    let cut_hz =
        model.carrier_cut * crate::types::from_angular(model.ensemble.drive.rabi_bare);
    let selected: Vec<&Bin> = data
        .bins
        .iter()
        .filter(|b| math::fabs(b.center) >= cut_hz)
        .filter(|b| {
            !model
                .masked_hz
                .iter()
                .any(|&(lo, hi)| b.center >= lo && b.center <= hi)
        })
        .collect();
    let n_params = if model.free_eta { 2 } else { 1 };
    if selected.len() <= n_params {
        return Err(Error::Domain("not enough bins outside the carrier cut"));
    }
    let weighted = selected.iter().all(|b| b.sem > 0.0);
    let grid: Vec<f64> = selected
        .iter()
        .map(|b| crate::types::to_angular(b.center))
        .collect();
    // Bin centers ascend already (BTreeMap order upstream), but assert.
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("bin centers must be strictly increasing"));
    }
    let sites: Vec<SiteSample> = sample_sites(
        &model.ensemble.dist,
        model.ensemble.n_samples,
        model.ensemble.seed,
    )?;
    let base = model.ensemble.clone();
    let eta0 = base.dist.center_trap.eta_z;
    let bound = model.abs_bound_bohr;
    let mut hit_bound = false;
    let data_vals: Vec<(f64, f64)> = selected.iter().map(|b| (b.mean, b.sem)).collect();

    let residual = |p: &[f64], out: &mut Vec<f64>| -> Result<()> {
        let a_bohr = p[0].clamp(-bound, bound);
        let mut cfg = base.clone();
        cfg.a_eg_minus = a_bohr * bohr;
        if model.free_eta {
            cfg.dist.center_trap.eta_z = math::fabs(p[1]);
        }
        // Re-derive per-site traps for the (possibly) new η.
        let sites_eta: Vec<SiteSample> = sites
            .iter()
            .map(|s| {
                let mut t = s.trap;
                t.eta_z = cfg.dist.center_trap.eta_z;
                SiteSample { trap: t, ..*s }
            })
            .collect();
        let values = per_site_values(&cfg, &sites_eta, &grid)?;
        let spec = reduce_weighted(&sites_eta, &values, &grid)?;
        out.clear();
        for (pnt, &(mean, sem)) in spec.points().iter().zip(&data_vals) {
            let w = if weighted { sem } else { 1.0 };
            out.push((pnt.excitation - mean) / w);
        }
        Ok(())
    };

    let x0 = if model.free_eta {
        vec![initial_a_bohr, eta0]
    } else {
        vec![initial_a_bohr]
    };
    let scales = if model.free_eta {
        vec![100.0, 0.05]
    } else {
        vec![100.0]
    };
    let opts = LmOptions {
        scales: &scales,
        max_iterations: 200,
        rel_step_tol: 1e-8,
    };
    let out = lm_minimize(residual, &x0, &opts)?;
    if math::fabs(out.x[0]) >= bound * (1.0 - 1e-9) {
        hit_bound = true;
    }
    let names: &[&'static str] = if model.free_eta {
        &["a_eg_minus_bohr", "eta_z"]
    } else {
        &["a_eg_minus_bohr"]
    };
    Ok(pack_result(names, &out, hit_bound))
}
