//! Orchestration: dispatch the configured engine, collect artifacts in
//! memory, then write everything atomically with a run manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use isb_core::analysis::{
    concatenate_and_bin, fit_scattering_length, lorentzian_fit, reflect_subtract, FitPoint,
    FitResult, ScatteringFitModel,
};
use isb_core::ensemble::{reduce_weighted, sample_sites, site_values_with, EnsembleConfig, SiteEngine};
use isb_core::overlap::{InteractionParams, OverlapTable};
use isb_core::spinmodel::{collective_spectrum, lineshape_exact, lineshape_sidebands, SpinSystem};
use isb_core::thermal::{isb_closed_form, thermal_lineshape_bruteforce, ThermalLineshapeConfig};
use isb_core::types::{from_angular, to_angular, ModeConfiguration, Spectrum};
use isb_core::Error as CoreError;

use crate::config::{Engine, Loaded, Mode};
use crate::csv_io;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Numerical(_) => "numerical",
            RunError::Io(_) => "io",
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical error: {m}"),
            RunError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        RunError::Numerical(e.to_string())
    }
}

pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// One computed artifact waiting to be written.
enum Artifact {
    Text { name: &'static str, contents: String },
}

pub fn run(loaded: &Loaded, out_dir: &Path) -> Result<RunOutput, RunError> {
    let started = Instant::now();
    let mut warnings = loaded.warnings.clone();
    let mut timings: Vec<(String, f64)> = Vec::new();
    let mut artifacts: Vec<Artifact> = Vec::new();

    let stage_start = Instant::now();
    match loaded.config.mode {
        Mode::Simulate => {
            let spectrum = simulate(loaded, &mut warnings)?;
            artifacts.push(Artifact::Text {
                name: "spectrum.csv",
                contents: csv_io::spectrum_csv(&spectrum),
            });
        }
        Mode::Analyze => {
            let (binned, reflected, lorentz) = analyze(loaded)?;
            artifacts.push(Artifact::Text {
                name: "binned.csv",
                contents: csv_io::binned_csv(&binned),
            });
            artifacts.push(Artifact::Text {
                name: "reflected.csv",
                contents: csv_io::binned_csv(&reflected),
            });
            artifacts.push(Artifact::Text {
                name: "lorentzian.json",
                contents: fit_result_json(&lorentz),
            });
            if binned.has_degenerate_bins() {
                warnings.push(
                    "some bins hold a single point; their standard errors are undefined"
                        .to_string(),
                );
            }
        }
        Mode::Fit => {
            let (binned, reflected, fit) = fit(loaded)?;
            artifacts.push(Artifact::Text {
                name: "binned.csv",
                contents: csv_io::binned_csv(&binned),
            });
            artifacts.push(Artifact::Text {
                name: "reflected.csv",
                contents: csv_io::binned_csv(&reflected),
            });
            artifacts.push(Artifact::Text {
                name: "fit.json",
                contents: fit_result_json(&fit),
            });
            if !fit.converged {
                warnings.push("fit did not converge".to_string());
            }
            if fit.at_bound {
                warnings.push("fitted scattering length sits at its bound".to_string());
            }
        }
    }
    timings.push((format!("{:?}", loaded.config.mode).to_lowercase(), stage_start.elapsed().as_secs_f64()));

    std::fs::create_dir_all(out_dir).map_err(|e| RunError::Io(e.to_string()))?;
    let mut files = Vec::new();
    let write_start = Instant::now();
    for a in &artifacts {
        let Artifact::Text { name, contents } = a;
        let path = out_dir.join(name);
        csv_io::write_atomic(&path, contents).map_err(|e| RunError::Io(e.to_string()))?;
        files.push(path);
    }
    timings.push(("write".to_string(), write_start.elapsed().as_secs_f64()));

    // Manifest last, so its presence marks a complete run.
    let manifest = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(&loaded.config).map_err(|e| RunError::Io(e.to_string()))?,
        "wall_clock_s": started.elapsed().as_secs_f64(),
        "timings_s": timings.iter().cloned().collect::<std::collections::BTreeMap<_, _>>(),
        "warnings": warnings,
        "outputs": files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>(),
    });
    let manifest_path = out_dir.join("manifest.json");
    csv_io::write_atomic(
        &manifest_path,
        &serde_json::to_string_pretty(&manifest).map_err(|e| RunError::Io(e.to_string()))?,
    )
    .map_err(|e| RunError::Io(e.to_string()))?;
    files.push(manifest_path);

    Ok(RunOutput { files, warnings })
}

fn thermal_config(loaded: &Loaded) -> Result<ThermalLineshapeConfig, RunError> {
    let interaction = InteractionParams::derive(
        loaded.a_eg_minus,
        &loaded.trap,
        &loaded.thermal,
        loaded.mass(),
        &loaded.truncation,
    )?;
    Ok(ThermalLineshapeConfig {
        trap: loaded.trap,
        thermal: loaded.thermal,
        interaction,
        drive: loaded.drive,
        truncation: loaded.truncation,
        fidelity: loaded.config.fidelity.into(),
    })
}

fn ensemble_config(loaded: &Loaded, engine: SiteEngine) -> Result<EnsembleConfig, RunError> {
    let dist = loaded
        .lattice
        .clone()
        .ok_or_else(|| RunError::Config("missing lattice block".to_string()))?;
    Ok(EnsembleConfig {
        dist,
        thermal: loaded.thermal,
        drive: loaded.drive,
        truncation: loaded.truncation,
        a_eg_minus: loaded.a_eg_minus,
        mass: loaded.mass(),
        engine,
        n_samples: loaded.config.n_samples,
        seed: loaded.config.seed,
    })
}

/// Trap-averaged spectrum with per-worker overlap caches; identical to
/// the serial reduction at any thread count (the per-site values are pure
/// and the reduction order is the sample order).
pub fn ensemble_average_parallel(
    cfg: &EnsembleConfig,
    grid: &[f64],
) -> Result<Spectrum, CoreError> {
    let sites = sample_sites(&cfg.dist, cfg.n_samples, cfg.seed)?;
    let values: Result<Vec<Vec<f64>>, CoreError> = sites
        .par_iter()
        .map_init(OverlapTable::new, |table, site| {
            site_values_with(cfg, site, grid, table)
        })
        .collect();
    reduce_weighted(&sites, &values?, grid)
}

fn spin_system(loaded: &Loaded, detuning: f64) -> Result<SpinSystem, RunError> {
    let spin = loaded
        .config
        .physics
        .spin
        .as_ref()
        .ok_or_else(|| RunError::Config("missing spin block".to_string()))?;
    let modes = ModeConfiguration::new(spin.modes.clone())?;
    let u = match spin.u_hz {
        Some(hz) => to_angular(hz),
        None => isb_core::overlap::u_param(loaded.a_eg_minus, &loaded.trap, loaded.mass())?,
    };
    Ok(SpinSystem::from_overlaps(
        modes,
        loaded.drive.rabi_bare,
        loaded.trap.eta_z,
        u,
        detuning,
        spin.linearized_rabi,
    )?)
}

fn simulate(loaded: &Loaded, warnings: &mut Vec<String>) -> Result<Spectrum, RunError> {
    let grid = loaded
        .grid
        .as_ref()
        .ok_or_else(|| RunError::Config("simulate requires a grid".to_string()))?;
    match loaded.config.engine {
        Engine::Exact => {
            let sys = spin_system(loaded, 0.0)?;
            Ok(lineshape_exact(&sys, &loaded.drive, grid)?)
        }
        Engine::Sidebands => {
            let sys = spin_system(loaded, 0.0)?;
            let cs = collective_spectrum(&sys)?;
            if cs.degenerate {
                warnings.push(
                    "degenerate collective energies: per-line couplings are basis-dependent"
                        .to_string(),
                );
            }
            Ok(lineshape_sidebands(&cs, sys.n_atoms(), &loaded.drive, grid)?)
        }
        Engine::ClosedForm => {
            let cfg = thermal_config(loaded)?;
            let out = isb_closed_form(&cfg, grid)?;
            if !out.validity.near_carrier.is_empty() {
                warnings.push(format!(
                    "{} grid points lie in the carrier region |δ| < 5 Ω^B",
                    out.validity.near_carrier.len()
                ));
            }
            if !out.validity.thermal_regime_ok {
                warnings.push("k_B T_Z > ħω_Z fails; the closed form is outside its regime".into());
            }
            if !out.validity.pulse_regime_ok {
                warnings.push("pulse is not short against 1/⟨ΔΩ⟩; sidebands saturate".into());
            }
            Ok(out.spectrum)
        }
        Engine::BruteForce => {
            let cfg = thermal_config(loaded)?;
            Ok(thermal_lineshape_bruteforce(&cfg, grid)?)
        }
        Engine::Ensemble => {
            let site_engine = match loaded.config.site_engine {
                crate::config::SiteEngineCfg::ClosedForm => SiteEngine::ClosedForm,
                crate::config::SiteEngineCfg::BruteForce => {
                    SiteEngine::BruteForce(loaded.config.fidelity.into())
                }
            };
            let cfg = ensemble_config(loaded, site_engine)?;
            Ok(ensemble_average_parallel(&cfg, grid)?)
        }
    }
}

fn read_scans(loaded: &Loaded) -> Result<Vec<isb_core::analysis::ScanRecord>, RunError> {
    let analysis = loaded
        .config
        .analysis
        .as_ref()
        .ok_or_else(|| RunError::Config("missing analysis block".to_string()))?;
    let mut scans = Vec::new();
    for (i, file) in analysis.scan_files.iter().enumerate() {
        let text =
            std::fs::read_to_string(file).map_err(|e| RunError::Io(format!("{file}: {e}")))?;
        scans.push(
            csv_io::parse_scan_csv(&text, i as u64).map_err(RunError::Config)?,
        );
    }
    Ok(scans)
}

type AnalyzeOutput = (
    isb_core::analysis::BinnedSpectrum,
    isb_core::analysis::BinnedSpectrum,
    FitResult,
);

fn analyze(loaded: &Loaded) -> Result<AnalyzeOutput, RunError> {
    let analysis = loaded.config.analysis.as_ref().unwrap();
    let scans = read_scans(loaded)?;
    let binned = concatenate_and_bin(&scans, analysis.bin_width_hz)?;
    let reflected = reflect_subtract(&binned)?;
    // Scan centering: Lorentzian fit of the full binned lineshape.
    let pts: Vec<FitPoint> = binned.bins.iter().map(FitPoint::from).collect();
    let lorentz = lorentzian_fit(&pts)?;
    Ok((binned, reflected, lorentz))
}

fn fit(loaded: &Loaded) -> Result<AnalyzeOutput, RunError> {
    let analysis = loaded.config.analysis.as_ref().unwrap();
    let fit_cfg = loaded.config.fit.as_ref().unwrap();
    let scans = read_scans(loaded)?;
    let binned = concatenate_and_bin(&scans, analysis.bin_width_hz)?;
    let reflected = reflect_subtract(&binned)?;
    let ensemble = ensemble_config(loaded, SiteEngine::ClosedForm)?;
    let mut model = ScatteringFitModel::new(ensemble);
    model.free_eta = fit_cfg.free_eta;
    model.carrier_cut = fit_cfg.carrier_cut;
    model.masked_hz = analysis.mask_hz.clone();
    let fit = fit_scattering_length(&reflected, &model, fit_cfg.initial_a_bohr)?;
    Ok((binned, reflected, fit))
}

fn fit_result_json(fit: &FitResult) -> String {
    let params: serde_json::Map<String, serde_json::Value> = fit
        .params
        .iter()
        .map(|p| {
            (
                p.name.to_string(),
                json!({ "value": p.value, "std_err": p.std_err }),
            )
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "parameters": params,
        "residual_norm": fit.residual_norm,
        "converged": fit.converged,
        "n_evaluations": fit.n_evaluations,
        "at_bound": fit.at_bound,
    }))
    .expect("fit result serializes")
    // Trailing newline keeps the file diff-friendly.
        + "\n"
}

/// Detuning (Hz) of the spectrum maximum — convenience for smoke tests.
pub fn peak_hz(spectrum: &Spectrum) -> f64 {
    from_angular(spectrum.max_point().detuning)
}
