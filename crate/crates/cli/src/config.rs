//! Configuration file model and validation.
//!
//! Boundary units follow the lab conventions: frequencies in Hz,
//! temperatures in µK, lengths in µm, scattering lengths in Bohr radii.
//! Everything is converted to SI/angular on load.

use serde::{Deserialize, Serialize};

use isb_core::constants::{BOHR_RADIUS, BOLTZMANN_K, HBAR, SR87_MASS};
use isb_core::ensemble::{GeometryKind, LatticeDistribution};
use isb_core::overlap::TruncationPolicy;
use isb_core::thermal::PairFidelity;
use isb_core::types::{to_angular, Direction, DriveParams, ThermalState, TrapGeometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Analyze,
    Fit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Exact,
    Sidebands,
    ClosedForm,
    BruteForce,
    Ensemble,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityCfg {
    ExactPair,
    SidebandFormula,
}

impl From<FidelityCfg> for PairFidelity {
    fn from(f: FidelityCfg) -> Self {
        match f {
            FidelityCfg::ExactPair => PairFidelity::ExactPair,
            FidelityCfg::SidebandFormula => PairFidelity::SidebandFormula,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionCfg {
    GToE,
    EToG,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapCfg {
    pub omega_x_hz: f64,
    pub omega_y_hz: f64,
    pub omega_z_hz: f64,
    pub eta_z: f64,
    #[serde(default = "default_waist_um")]
    pub waist_perp_um: f64,
}

fn default_waist_um() -> f64 {
    30.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalCfg {
    pub temp_x_uk: f64,
    pub temp_y_uk: f64,
    pub temp_z_uk: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriveCfg {
    pub rabi_hz: f64,
    /// One of the two must be given; both must agree if both are.
    #[serde(default)]
    pub pulse_area_factor: Option<f64>,
    #[serde(default)]
    pub duration_s: Option<f64>,
    pub direction: DirectionCfg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InteractionCfg {
    pub a_eg_minus_bohr: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinCfg {
    /// Occupied axial modes (distinct).
    pub modes: Vec<usize>,
    /// Interaction scale u/2π in Hz; derived from the scattering length
    /// and trap when omitted.
    #[serde(default)]
    pub u_hz: Option<f64>,
    #[serde(default)]
    pub linearized_rabi: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryCfg {
    OneD,
    TwoD,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeCfg {
    #[serde(default = "default_geometry")]
    pub geometry: GeometryCfg,
    #[serde(default = "default_sigma_h_um")]
    pub sigma_h_um: f64,
    #[serde(default = "default_n_rows")]
    pub n_rows: usize,
    #[serde(default = "default_row_extent_um")]
    pub row_extent_um: f64,
    /// (atoms per site, fraction of populated sites).
    pub occupancy: Vec<(usize, f64)>,
    #[serde(default = "default_true")]
    pub uniform_double_occupancy: bool,
    #[serde(default = "default_uniform_halfwidth_um")]
    pub uniform_halfwidth_um: f64,
}

fn default_geometry() -> GeometryCfg {
    GeometryCfg::TwoD
}
fn default_sigma_h_um() -> f64 {
    8.0
}
fn default_n_rows() -> usize {
    100
}
fn default_row_extent_um() -> f64 {
    40.0
}
fn default_true() -> bool {
    true
}
fn default_uniform_halfwidth_um() -> f64 {
    8.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhysicsCfg {
    pub trap: TrapCfg,
    pub thermal: ThermalCfg,
    pub drive: DriveCfg,
    pub interaction: InteractionCfg,
    #[serde(default)]
    pub spin: Option<SpinCfg>,
    #[serde(default)]
    pub lattice: Option<LatticeCfg>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GridCfg {
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationCfg {
    #[serde(default = "default_tail_tol")]
    pub tail_weight_tol: f64,
    #[serde(default = "default_max_mode")]
    pub max_mode: usize,
}

fn default_tail_tol() -> f64 {
    1e-6
}
fn default_max_mode() -> usize {
    4000
}

impl Default for TruncationCfg {
    fn default() -> Self {
        TruncationCfg {
            tail_weight_tol: default_tail_tol(),
            max_mode: default_max_mode(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisCfg {
    /// Scan CSV files (header `detuning_hz,excitation`).
    pub scan_files: Vec<String>,
    #[serde(default = "default_bin_width")]
    pub bin_width_hz: f64,
    /// Detuning windows (Hz) excluded from fitting, e.g. a contamination
    /// dip.
    #[serde(default)]
    pub mask_hz: Vec<(f64, f64)>,
}

fn default_bin_width() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitCfg {
    pub initial_a_bohr: f64,
    #[serde(default)]
    pub free_eta: bool,
    #[serde(default = "default_carrier_cut")]
    pub carrier_cut: f64,
}

fn default_carrier_cut() -> f64 {
    5.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub engine: Engine,
    pub physics: PhysicsCfg,
    #[serde(default)]
    pub grid: Option<GridCfg>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Worker threads; 0 = all available cores. Outputs are identical at
    /// any setting.
    #[serde(default)]
    pub parallelism: usize,
    #[serde(default = "default_fidelity")]
    pub fidelity: FidelityCfg,
    /// Per-site engine of the ensemble average.
    #[serde(default = "default_site_engine")]
    pub site_engine: SiteEngineCfg,
    #[serde(default)]
    pub truncation: TruncationCfg,
    #[serde(default)]
    pub analysis: Option<AnalysisCfg>,
    #[serde(default)]
    pub fit: Option<FitCfg>,
}

fn default_n_samples() -> usize {
    400
}
fn default_fidelity() -> FidelityCfg {
    FidelityCfg::SidebandFormula
}
fn default_site_engine() -> SiteEngineCfg {
    SiteEngineCfg::ClosedForm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteEngineCfg {
    ClosedForm,
    BruteForce,
}

/// A validated configuration converted to core types.
pub struct Loaded {
    pub config: RunConfig,
    pub trap: TrapGeometry,
    pub thermal: ThermalState,
    pub drive: DriveParams,
    pub a_eg_minus: f64,
    pub truncation: TruncationPolicy,
    pub grid: Option<Vec<f64>>,
    pub lattice: Option<LatticeDistribution>,
    pub warnings: Vec<String>,
}

/// Validation report of `validate`.
#[derive(Debug, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Check every invariant without running; returns all violations and
    /// the physics-regime warnings.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        let mut fail = |msg: String| rep.violations.push(msg);

        let t = &self.physics.trap;
        if !(t.omega_x_hz > 0.0 && t.omega_y_hz > 0.0 && t.omega_z_hz > 0.0) {
            fail("trap frequencies must be positive".into());
        }
        if !(t.eta_z >= 0.0) {
            fail("eta_z must be non-negative".into());
        }
        if !(t.waist_perp_um > 0.0) {
            fail("waist_perp_um must be positive".into());
        }
        let th = &self.physics.thermal;
        if !(th.temp_x_uk >= 0.0 && th.temp_y_uk >= 0.0 && th.temp_z_uk >= 0.0) {
            fail("temperatures must be non-negative".into());
        }
        let d = &self.physics.drive;
        if !(d.rabi_hz > 0.0) {
            fail("rabi_hz must be positive".into());
        }
        match (d.pulse_area_factor, d.duration_s) {
            (None, None) => fail("drive needs pulse_area_factor or duration_s".into()),
            (Some(s), None) if !(s > 0.0) => fail("pulse_area_factor must be positive".into()),
            (None, Some(t)) if !(t > 0.0) => fail("duration_s must be positive".into()),
            (Some(s), Some(t)) => {
                let expect = s * core::f64::consts::PI / to_angular(d.rabi_hz);
                if !(s > 0.0 && t > 0.0) || (t - expect).abs() > 1e-9 * expect.abs().max(t.abs()) {
                    fail("duration_s and pulse_area_factor disagree (t = sπ/Ω^B)".into());
                }
            }
            _ => {}
        }
        if let Some(g) = &self.grid {
            if !(g.min_hz < g.max_hz) {
                fail("grid needs min_hz < max_hz".into());
            }
            if !(g.step_hz > 0.0) {
                fail("grid step must be positive".into());
            }
            if g.step_hz > g.max_hz - g.min_hz {
                fail("grid step exceeds the grid span".into());
            }
        } else if self.mode == Mode::Simulate {
            fail("simulate requires a grid".into());
        }
        if !(self.truncation.tail_weight_tol > 0.0 && self.truncation.tail_weight_tol < 1.0) {
            fail("tail_weight_tol must lie in (0, 1)".into());
        }
        if self.truncation.max_mode == 0 {
            fail("max_mode must be at least 1".into());
        }
        match self.engine {
            Engine::Exact | Engine::Sidebands => {
                match &self.physics.spin {
                    None => fail("exact/sidebands engines need a physics.spin block".into()),
                    Some(s) => {
                        if s.modes.is_empty() {
                            fail("spin.modes must not be empty".into());
                        }
                        let mut sorted = s.modes.clone();
                        sorted.sort_unstable();
                        if sorted.windows(2).any(|w| w[0] == w[1]) {
                            fail("spin.modes must be distinct".into());
                        }
                        if s.modes.len() > isb_core::spinmodel::MAX_ATOMS_EXACT {
                            fail("spin.modes exceeds the exact-evolution atom cap".into());
                        }
                    }
                }
            }
            Engine::Ensemble => {
                if self.physics.lattice.is_none() {
                    fail("ensemble engine needs a physics.lattice block".into());
                }
            }
            _ => {}
        }
        if let Some(l) = &self.physics.lattice {
            if l.occupancy.is_empty() {
                fail("lattice occupancy must not be empty".into());
            }
            let total: f64 = l.occupancy.iter().map(|&(_, f)| f).sum();
            if !(total > 0.0 && total <= 1.0 + 1e-12) {
                fail("lattice occupancy fractions must sum to (0, 1]".into());
            }
            if l.occupancy.iter().any(|&(n, _)| n == 0 || n > 2) {
                fail("lattice occupancy supports 1 or 2 atoms per site".into());
            }
            if self.n_samples == 0 {
                fail("n_samples must be at least 1".into());
            }
        }
        match self.mode {
            Mode::Analyze | Mode::Fit => {
                match &self.analysis {
                    None => fail("analyze/fit need an analysis block".into()),
                    Some(a) => {
                        if a.scan_files.is_empty() {
                            fail("analysis.scan_files must not be empty".into());
                        }
                        if !(a.bin_width_hz > 0.0) {
                            fail("bin_width_hz must be positive".into());
                        }
                    }
                }
                if self.mode == Mode::Fit {
                    if self.fit.is_none() {
                        fail("fit mode needs a fit block".into());
                    }
                    if self.physics.lattice.is_none() {
                        fail("fit mode needs a physics.lattice block".into());
                    }
                }
            }
            Mode::Simulate => {}
        }

        // Physics-regime warnings (do not block a run).
        if rep.violations.is_empty() {
            let omega_z = to_angular(t.omega_z_hz);
            if th.temp_z_uk > 0.0 {
                let alpha_z = HBAR * omega_z / (BOLTZMANN_K * th.temp_z_uk * 1e-6);
                // The closed form needs k_B T_Z ≫ ħω_Z; warn already when
                // the margin shrinks below a factor of 3.
                if alpha_z > 1.0 / 3.0
                    && matches!(self.engine, Engine::ClosedForm | Engine::Ensemble)
                {
                    rep.warnings.push(format!(
                        "closed form needs k_B T_Z ≫ ħω_Z: ħω_Z/k_B = {:.1} nK vs T_Z = {:.1} nK",
                        HBAR * omega_z / BOLTZMANN_K * 1e9,
                        th.temp_z_uk * 1e3
                    ));
                }
            } else if matches!(self.engine, Engine::ClosedForm | Engine::Ensemble) {
                rep.warnings
                    .push("closed form requires T_Z > 0".to_string());
            }
            if let Some(g) = &self.grid {
                if matches!(self.engine, Engine::ClosedForm | Engine::Ensemble)
                    && g.min_hz.abs().min(g.max_hz.abs()) < 5.0 * d.rabi_hz
                    && g.min_hz <= 5.0 * d.rabi_hz
                    && g.max_hz >= -5.0 * d.rabi_hz
                {
                    rep.warnings.push(format!(
                        "grid enters the carrier region |δ| < 5 Ω^B = {:.2} Hz where the closed form is invalid",
                        5.0 * d.rabi_hz
                    ));
                }
            }
        }
        rep
    }

    /// Validate and convert to core types.
    pub fn load(self) -> Result<Loaded, String> {
        let rep = self.validate();
        if !rep.violations.is_empty() {
            return Err(rep.violations.join("; "));
        }
        let t = &self.physics.trap;
        let trap = TrapGeometry::new(
            to_angular(t.omega_x_hz),
            to_angular(t.omega_y_hz),
            to_angular(t.omega_z_hz),
            t.eta_z,
            t.waist_perp_um * 1e-6,
        )
        .map_err(|e| e.to_string())?;
        let th = &self.physics.thermal;
        let thermal = ThermalState::new(
            th.temp_x_uk * 1e-6,
            th.temp_y_uk * 1e-6,
            th.temp_z_uk * 1e-6,
        )
        .map_err(|e| e.to_string())?;
        let d = &self.physics.drive;
        let direction = match d.direction {
            DirectionCfg::GToE => Direction::GtoE,
            DirectionCfg::EToG => Direction::EtoG,
        };
        let rabi = to_angular(d.rabi_hz);
        let drive = match (d.pulse_area_factor, d.duration_s) {
            (Some(s), None) => DriveParams::from_pulse_area(rabi, s, 0.0, direction),
            (None, Some(t)) => DriveParams::from_duration(rabi, t, 0.0, direction),
            (Some(s), Some(t)) => DriveParams::new(rabi, 0.0, s, t, direction),
            (None, None) => unreachable!("validated"),
        }
        .map_err(|e| e.to_string())?;
        let truncation = TruncationPolicy::new(
            self.truncation.tail_weight_tol,
            self.truncation.max_mode,
        )
        .map_err(|e| e.to_string())?;
        // Build the grid in Hz first so the boundary values stay exactly
        // representable in the output files.
        let grid = match &self.grid {
            Some(g) => Some(
                isb_core::types::detuning_grid(g.min_hz, g.max_hz, g.step_hz)
                    .map_err(|e| e.to_string())?
                    .into_iter()
                    .map(to_angular)
                    .collect(),
            ),
            None => None,
        };
        let lattice = self.physics.lattice.as_ref().map(|l| LatticeDistribution {
            geometry_kind: match l.geometry {
                GeometryCfg::OneD => GeometryKind::OneD,
                GeometryCfg::TwoD => GeometryKind::TwoD,
            },
            sigma_h: l.sigma_h_um * 1e-6,
            n_rows: l.n_rows,
            row_extent: l.row_extent_um * 1e-6,
            waist_perp: trap.waist_perp,
            center_trap: trap,
            occupancy: l.occupancy.clone(),
            uniform_double_occupancy: l.uniform_double_occupancy,
            uniform_halfwidth: l.uniform_halfwidth_um * 1e-6,
        });
        let a_eg_minus = self.physics.interaction.a_eg_minus_bohr * BOHR_RADIUS;
        Ok(Loaded {
            warnings: rep.warnings,
            trap,
            thermal,
            drive,
            a_eg_minus,
            truncation,
            grid,
            lattice,
            config: self,
        })
    }
}

impl Loaded {
    pub fn mass(&self) -> f64 {
        SR87_MASS
    }
}
