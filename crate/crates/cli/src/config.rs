//! Experiment configuration.
//!
//! Files are TOML in the units the campaigns are usually described in
//! (days, km, dyne/cm²). Everything is converted to SI by [`ExperimentConfig::resolve`],
//! which also records each conversion for the manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use topomode::dynamics::{ModelParams, Scheme};
use topomode::sensitivity::{ControlNorm, ResponseNorm};

use crate::error::{CliError, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;
pub const METRES_PER_KM: f64 = 1_000.0;
/// 1 dyne/cm² = 0.1 N/m².
pub const PASCAL_PER_DYNE_CM2: f64 = 0.1;

/// Spin-up and trajectory lengths used with `--paper-scale` (days).
pub const FULL_SPINUP_DAYS: f64 = 7300.0;
pub const FULL_TRAJECTORY_DAYS: f64 = 204.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    SquareTwogyre,
    RealisticBasin,
    AlphaSweep,
    WavenumberSweep,
    T0Sweep,
    GrowthRegime,
    StabilityComparison,
}

impl ExperimentKind {
    /// Kinds that linearize about a stationary point.
    pub fn is_stationary(self) -> bool {
        matches!(
            self,
            Self::AlphaSweep | Self::WavenumberSweep | Self::GrowthRegime | Self::StabilityComparison
        )
    }

    fn default_nu(self) -> f64 {
        match self {
            Self::RealisticBasin => 300.0,
            k if k.is_stationary() => 3000.0,
            _ => 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub topography: TopographyConfig,
    #[serde(default)]
    pub forcing: ForcingConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub norm: NormConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshConfig {
    /// `standard`, `graded` or `file`.
    pub source: String,
    pub side_km: f64,
    pub n_coarse: usize,
    pub grading_ratio: f64,
    pub file: Option<PathBuf>,
    /// Basin scale `L` for meshes read from file (km).
    pub scale_km: f64,
}

impl Default for MeshConfig {
    fn default() -> Self {
        Self {
            source: "standard".into(),
            side_km: 4000.0,
            n_coarse: 10,
            grading_ratio: 8.0,
            file: None,
            scale_km: 4000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    /// 1/s
    pub f0: f64,
    /// 1/(m s)
    pub beta: f64,
    /// 1/s
    pub sigma: f64,
    /// m²/s; defaults depend on the experiment kind.
    pub nu: Option<f64>,
    /// kg/m³
    pub rho0: f64,
    /// m
    pub h0: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            f0: 1e-4,
            beta: 2e-11,
            sigma: 5e-8,
            nu: None,
            rho0: 1025.0,
            h0: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopographyConfig {
    /// `flat`, `sinusoidal` or `grid`.
    pub kind: String,
    pub base_m: f64,
    pub alpha_m: f64,
    pub kx: u32,
    pub ky: u32,
    /// GRID2D depth file on lon/lat axes (m).
    pub file: Option<PathBuf>,
    /// Smallest admissible depth for gridded topography (m).
    pub min_depth_m: f64,
}

impl Default for TopographyConfig {
    fn default() -> Self {
        Self {
            kind: "flat".into(),
            base_m: 500.0,
            alpha_m: 0.0,
            kx: 4,
            ky: 4,
            file: None,
            min_depth_m: 1000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForcingConfig {
    /// `two_gyre` or `gridded`.
    pub kind: String,
    pub tau0_dyne_cm2: f64,
    /// GRID2D zonal and meridional stress on lon/lat axes (N/m²).
    pub tau_x_file: Option<PathBuf>,
    pub tau_y_file: Option<PathBuf>,
    pub phi0_deg: f64,
    pub lambda0_deg: f64,
    pub span_deg: f64,
}

impl Default for ForcingConfig {
    fn default() -> Self {
        Self {
            kind: "two_gyre".into(),
            tau0_dyne_cm2: 1.1,
            tau_x_file: None,
            tau_y_file: None,
            phi0_deg: 20.0,
            lambda0_deg: -40.0,
            span_deg: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NumericsConfig {
    pub dt_days: f64,
    pub tau_days: f64,
    /// `rk4` or `euler`.
    pub scheme: String,
    pub spinup_days: f64,
    pub trajectory_days: f64,
    /// Error-growing times of the t0 sweeps.
    pub window_days: Vec<f64>,
    /// Error-growing time of the stationary sweeps.
    pub growth_time_days: f64,
    /// Singular values recorded per window or sweep point.
    pub top: usize,
    /// Singular vectors written at each end of the spectrum.
    pub modes: usize,
    pub stationary_spinup_days: f64,
    pub stationary_window_days: f64,
    pub stationary_tol: f64,
    /// Distance (relative to `‖ω‖`) within which the end of a spin-up must
    /// lie from the Newton-refined steady state to count as converged.
    pub approach_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub growth_t_min_days: f64,
    pub growth_t_max_days: f64,
    pub growth_points: usize,
    pub small_t_max_days: f64,
    /// Taylor test settings for `fdcheck`.
    pub fd_eps: Vec<f64>,
    pub fd_time_days: f64,
    pub fd_dt_days: f64,
    pub fd_samples: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            dt_days: 0.1,
            tau_days: 0.1,
            scheme: "rk4".into(),
            spinup_days: 730.0,
            trajectory_days: 51.2,
            window_days: vec![0.8, 12.8],
            growth_time_days: 1.0,
            top: 8,
            modes: 3,
            stationary_spinup_days: 800.0,
            stationary_window_days: 10.0,
            stationary_tol: 1e-6,
            approach_tol: 1e-3,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            growth_t_min_days: 1e-3,
            growth_t_max_days: 100.0,
            growth_points: 26,
            small_t_max_days: 1.0,
            fd_eps: vec![1e-2, 1e-3, 1e-4, 1e-5],
            fd_time_days: 1.0,
            fd_dt_days: 0.01,
            fd_samples: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alpha_min_m: f64,
    pub alpha_max_m: f64,
    pub alpha_step_m: f64,
    pub k_min: u32,
    pub k_max: u32,
    pub k_alpha_m: f64,
    pub nu_low: f64,
    pub nu_high: f64,
    pub nu_rel_tol: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_min_m: -300.0,
            alpha_max_m: 300.0,
            alpha_step_m: 20.0,
            k_min: 0,
            k_max: 30,
            k_alpha_m: 100.0,
            nu_low: 100.0,
            nu_high: 3000.0,
            nu_rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormConfig {
    /// `enstrophy`, `energy` or `euclidean`.
    pub response: String,
    /// `mass` or `euclidean`.
    pub control: String,
}

impl Default for NormConfig {
    fn default() -> Self {
        Self {
            response: "enstrophy".into(),
            control: "mass".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// A unit conversion applied while resolving a configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conversion {
    pub key: String,
    pub value: f64,
    pub unit: String,
    pub si_value: f64,
    pub si_unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Standard { side: f64 },
    Graded { side: f64, n_coarse: usize, ratio: f64 },
    File { path: PathBuf, scale: f64 },
}

impl MeshSource {
    /// Basin length scale `L` (m).
    pub fn scale(&self) -> f64 {
        match self {
            Self::Standard { side } | Self::Graded { side, .. } => *side,
            Self::File { scale, .. } => *scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TopographySpec {
    Flat { depth: f64 },
    Sinusoidal { base: f64, alpha: f64, kx: u32, ky: u32 },
    Grid { path: PathBuf, min_depth: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ForcingSpec {
    TwoGyre { tau0: f64 },
    Gridded { tau_x: PathBuf, tau_y: PathBuf },
}

/// Validated configuration in SI units with file paths made absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub mesh: MeshSource,
    pub params: ModelParams,
    pub topography: TopographySpec,
    pub forcing: ForcingSpec,
    pub map: (f64, f64, f64),
    pub dt: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub spinup: f64,
    pub trajectory: f64,
    pub windows: Vec<f64>,
    pub growth_time: f64,
    pub top: usize,
    pub modes: usize,
    pub stationary_spinup: f64,
    pub stationary_window: f64,
    pub stationary_tol: f64,
    pub approach_tol: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub growth_times: Vec<f64>,
    pub small_t_max: f64,
    pub fd_eps: Vec<f64>,
    pub fd_time: f64,
    pub fd_dt: f64,
    pub fd_samples: usize,
    pub sweep: SweepConfig,
    /// Mean depth and wavenumbers of the sinusoidal sweeps (m, integers).
    pub sweep_base: f64,
    pub sweep_k: (u32, u32),
    pub response: ResponseNorm,
    pub control: ControlNorm,
    pub paper_scale: bool,
    pub conversions: Vec<Conversion>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text)
    }

    /// Converts to SI, checks ranges and resolves relative paths against
    /// `base_dir`. No numerical work happens here.
    pub fn resolve(&self, base_dir: &Path, paper_scale: bool) -> Result<Resolved> {
        let mut conv = Vec::new();
        let mut record = |key: &str, value: f64, unit: &str, factor: f64, si_unit: &str| {
            let si_value = value * factor;
            conv.push(Conversion {
                key: key.into(),
                value,
                unit: unit.into(),
                si_value,
                si_unit: si_unit.into(),
            });
            si_value
        };
        let days = |key: &str, v: f64, rec: &mut dyn FnMut(&str, f64, &str, f64, &str) -> f64| {
            rec(key, v, "day", SECONDS_PER_DAY, "s")
        };
        let abs = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let existing = |p: &Option<PathBuf>, what: &str| -> Result<PathBuf> {
            let p = p
                .as_ref()
                .ok_or_else(|| CliError::Config(format!("{what} is required")))?;
            let p = abs(p);
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "{what} '{}' does not exist",
                    p.display()
                )));
            }
            Ok(p)
        };

        let mesh = match self.mesh.source.as_str() {
            "standard" => MeshSource::Standard {
                side: record("mesh.side_km", self.mesh.side_km, "km", METRES_PER_KM, "m"),
            },
            "graded" => MeshSource::Graded {
                side: record("mesh.side_km", self.mesh.side_km, "km", METRES_PER_KM, "m"),
                n_coarse: self.mesh.n_coarse,
                ratio: self.mesh.grading_ratio,
            },
            "file" => MeshSource::File {
                path: existing(&self.mesh.file, "mesh.file")?,
                scale: record("mesh.scale_km", self.mesh.scale_km, "km", METRES_PER_KM, "m"),
            },
            other => return Err(CliError::Config(format!("unknown mesh source '{other}'"))),
        };
        if !(mesh.scale() > 0.0) {
            return Err(CliError::Config("mesh length scale must be positive".into()));
        }
        if let MeshSource::Graded {
            n_coarse, ratio, ..
        } = mesh
        {
            if n_coarse < 2 || !(ratio >= 1.0) {
                return Err(CliError::Config(
                    "graded mesh needs n_coarse >= 2 and grading_ratio >= 1".into(),
                ));
            }
        }

        let params = ModelParams {
            f0: self.physics.f0,
            beta: self.physics.beta,
            sigma: self.physics.sigma,
            nu: self.physics.nu.unwrap_or(self.kind.default_nu()),
            rho0: self.physics.rho0,
            h0: self.physics.h0,
            l: mesh.scale(),
        };
        params.validate()?;

        let t = &self.topography;
        let topography = match t.kind.as_str() {
            "flat" => TopographySpec::Flat { depth: t.base_m },
            "sinusoidal" => TopographySpec::Sinusoidal {
                base: t.base_m,
                alpha: t.alpha_m,
                kx: t.kx,
                ky: t.ky,
            },
            "grid" => TopographySpec::Grid {
                path: existing(&t.file, "topography.file")?,
                min_depth: t.min_depth_m,
            },
            other => return Err(CliError::Config(format!("unknown topography '{other}'"))),
        };
        if !matches!(topography, TopographySpec::Grid { .. }) && !(t.base_m - t.alpha_m.abs() > 0.0)
        {
            return Err(CliError::Config(format!(
                "depth {} - |{}| must be positive",
                t.base_m, t.alpha_m
            )));
        }

        let f = &self.forcing;
        let forcing = match f.kind.as_str() {
            "two_gyre" => ForcingSpec::TwoGyre {
                tau0: record(
                    "forcing.tau0_dyne_cm2",
                    f.tau0_dyne_cm2,
                    "dyne/cm^2",
                    PASCAL_PER_DYNE_CM2,
                    "N/m^2",
                ),
            },
            "gridded" => ForcingSpec::Gridded {
                tau_x: existing(&f.tau_x_file, "forcing.tau_x_file")?,
                tau_y: existing(&f.tau_y_file, "forcing.tau_y_file")?,
            },
            other => return Err(CliError::Config(format!("unknown forcing '{other}'"))),
        };

        let n = &self.numerics;
        let (spinup_days, trajectory_days) = if paper_scale {
            (FULL_SPINUP_DAYS, FULL_TRAJECTORY_DAYS)
        } else {
            (n.spinup_days, n.trajectory_days)
        };
        let dt = days("numerics.dt_days", n.dt_days, &mut record);
        let tau = days("numerics.tau_days", n.tau_days, &mut record);
        let spinup = days("numerics.spinup_days", spinup_days, &mut record);
        let trajectory = days("numerics.trajectory_days", trajectory_days, &mut record);
        let windows: Vec<f64> = n
            .window_days
            .iter()
            .map(|&w| days("numerics.window_days", w, &mut record))
            .collect();
        let growth_time = days("numerics.growth_time_days", n.growth_time_days, &mut record);
        let stationary_spinup = days(
            "numerics.stationary_spinup_days",
            n.stationary_spinup_days,
            &mut record,
        );
        let stationary_window = days(
            "numerics.stationary_window_days",
            n.stationary_window_days,
            &mut record,
        );
        let small_t_max = days("numerics.small_t_max_days", n.small_t_max_days, &mut record);
        let fd_time = days("numerics.fd_time_days", n.fd_time_days, &mut record);
        let fd_dt = days("numerics.fd_dt_days", n.fd_dt_days, &mut record);
        let t_min = days("numerics.growth_t_min_days", n.growth_t_min_days, &mut record);
        let t_max = days("numerics.growth_t_max_days", n.growth_t_max_days, &mut record);

        let positive = [
            ("dt_days", dt),
            ("tau_days", tau),
            ("trajectory_days", trajectory),
            ("growth_time_days", growth_time),
            ("stationary_window_days", stationary_window),
            ("fd_time_days", fd_time),
            ("fd_dt_days", fd_dt),
        ];
        if let Some((k, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(CliError::Config(format!("numerics.{k} must be positive, got {v}")));
        }
        if !(spinup >= 0.0) || !(stationary_spinup >= 0.0) {
            return Err(CliError::Config("spin-up durations must be non-negative".into()));
        }
        if windows.is_empty() || windows.iter().any(|w| !(*w >= tau)) {
            return Err(CliError::Config(
                "numerics.window_days must be non-empty and each at least tau".into(),
            ));
        }
        if !(0.0 < t_min && t_min < t_max) || n.growth_points < 8 {
            return Err(CliError::Config(
                "growth T range must satisfy 0 < min < max with at least 8 points".into(),
            ));
        }
        if n.top == 0 {
            return Err(CliError::Config("numerics.top must be positive".into()));
        }
        let growth_times = (0..n.growth_points)
            .map(|i| {
                let s = i as f64 / (n.growth_points - 1) as f64;
                (t_min.ln() + s * (t_max.ln() - t_min.ln())).exp()
            })
            .collect();
        let scheme = match n.scheme.as_str() {
            "rk4" => Scheme::Rk4,
            "euler" => Scheme::Euler,
            other => return Err(CliError::Config(format!("unknown scheme '{other}'"))),
        };

        let s = &self.sweep;
        if !(s.alpha_step_m > 0.0) || !(s.alpha_min_m <= s.alpha_max_m) {
            return Err(CliError::Config("alpha range must be ordered with a positive step".into()));
        }
        if s.k_min > s.k_max {
            return Err(CliError::Config("k_min must not exceed k_max".into()));
        }
        if !(0.0 < s.nu_low && s.nu_low < s.nu_high) || !(s.nu_rel_tol > 0.0) {
            return Err(CliError::Config(
                "nu bracket must satisfy 0 < nu_low < nu_high with a positive tolerance".into(),
            ));
        }
        let sweep_base = match &topography {
            TopographySpec::Grid { .. } => None,
            _ => Some(t.base_m),
        };
        if let Some(base) = sweep_base {
            let amax = s.alpha_min_m.abs().max(s.alpha_max_m.abs()).max(s.k_alpha_m.abs());
            if self.kind.is_stationary() && !(base - amax > 0.0) {
                return Err(CliError::Config(format!(
                    "sweep amplitude {amax} m would make the depth non-positive"
                )));
            }
        }

        let response = match self.norm.response.as_str() {
            "enstrophy" => ResponseNorm::Enstrophy,
            "energy" => ResponseNorm::Energy,
            "euclidean" => ResponseNorm::Euclidean,
            other => return Err(CliError::Config(format!("unknown response norm '{other}'"))),
        };
        let control = match self.norm.control.as_str() {
            "mass" => ControlNorm::Mass,
            "euclidean" => ControlNorm::Euclidean,
            other => return Err(CliError::Config(format!("unknown control norm '{other}'"))),
        };
        if n.fd_eps.is_empty() || n.fd_samples == 0 {
            return Err(CliError::Config("fdcheck needs eps values and samples".into()));
        }

        Ok(Resolved {
            kind: self.kind,
            seed: self.seed,
            mesh,
            params,
            topography,
            forcing,
            map: (f.phi0_deg, f.lambda0_deg, f.span_deg),
            dt,
            tau,
            scheme,
            spinup,
            trajectory,
            windows,
            growth_time,
            top: n.top,
            modes: n.modes,
            stationary_spinup,
            stationary_window,
            stationary_tol: n.stationary_tol,
            approach_tol: n.approach_tol,
            newton_tol: n.newton_tol,
            newton_max_iter: n.newton_max_iter,
            growth_times,
            small_t_max,
            fd_eps: n.fd_eps.clone(),
            fd_time,
            fd_dt,
            fd_samples: n.fd_samples,
            sweep: s.clone(),
            sweep_base: t.base_m,
            sweep_k: (t.kx, t.ky),
            response,
            control,
            paper_scale,
            conversions: conv,
        })
    }
}

impl Resolved {
    /// Sweep amplitudes `min, min + step, ...` up to and including `max`.
    pub fn alphas(&self) -> Vec<f64> {
        let s = &self.sweep;
        let count = ((s.alpha_max_m - s.alpha_min_m) / s.alpha_step_m + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| s.alpha_min_m + i as f64 * s.alpha_step_m)
            .collect()
    }

    pub fn wavenumbers(&self) -> Vec<u32> {
        (self.sweep.k_min..=self.sweep.k_max).collect()
    }

    /// Samples in the post-spin-up trajectory (one per `tau`, both ends
    /// included).
    pub fn trajectory_samples(&self) -> usize {
        (self.trajectory / self.tau).round() as usize + 1
    }
}
