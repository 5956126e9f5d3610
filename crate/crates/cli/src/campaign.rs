//! Experiment drivers. Each run writes plain-text tables into an artifact
//! directory and finishes with `manifest.json`, also when a stage fails.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use topomode::dynamics::{
    run_to_stationary, sinusoidal_topography, spin_up, write_diagnostics_csv, write_field,
    write_snapshot, DiagnosticsRecord, Model, ModelParams, ModelState, Trajectory,
};
use topomode::sensitivity::{
    build_g_iterative, build_g_stationary, compute_spectrum, fit_growth, null_space_report,
    stationary_g, t0_sweep, NormOperator, SensitivitySpectrum, DEFAULT_DENSE_CAP,
};
use topomode::tangent::{fd_verify, refine_stationary, write_fd_csv, TangentOperators};

use crate::config::{ExperimentConfig, ExperimentKind, Resolved, SECONDS_PER_DAY};
use crate::error::{CliError, Result};
use crate::fields::smooth_random_field;
use crate::manifest::{hash_inputs, stage, Artifacts, Manifest};
use crate::matrix_io::write_matrix;
use crate::setup::Setup;

/// Singular values kept per sweep point.
pub const SWEEP_TOP: usize = 5;
/// Spin-up diagnostics are logged every this many steps.
const LOG_EVERY: usize = 100;
/// Leading singular values tabulated by the growth-regime experiment.
const GROWTH_INDICES: [usize; 7] = [1, 10, 20, 50, 100, 150, 200];
/// Number of cosine modes per direction in fdcheck perturbations.
const FD_FIELD_MODES: u32 = 4;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub dry_run: bool,
    pub paper_scale: bool,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

/// What to run once the configuration is loaded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Job {
    Experiment,
    FdCheck,
}

fn days(t: f64) -> f64 {
    (t / SECONDS_PER_DAY * 1e6).round() / 1e6
}

/// Output directory: `--output-dir`, else `output.dir` from the config
/// (relative to the config file), else `<config stem>_output` next to it.
pub fn output_dir(config_path: &Path, cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    let base = config_path.parent().unwrap_or(Path::new("."));
    if let Some(d) = &opts.output_dir {
        return d.clone();
    }
    match &cfg.output.dir {
        Some(d) if d.is_absolute() => d.clone(),
        Some(d) => base.join(d),
        None => {
            let stem = config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            base.join(format!("{stem}_output"))
        }
    }
}

pub fn run_file(config_path: &Path, opts: &RunOptions, job: Job) -> Result<Outcome> {
    let text = std::fs::read_to_string(config_path).map_err(|e| CliError::Input {
        path: config_path.to_path_buf(),
        source: e,
    })?;
    let cfg = ExperimentConfig::from_toml(&text)?;
    let dir = output_dir(config_path, &cfg, opts);
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_text(&text, base, &dir, opts, job)
}

/// Validates `text`, then runs `job` into `dir`. Configuration errors are
/// returned before anything is written.
pub fn run_text(text: &str, base_dir: &Path, dir: &Path, opts: &RunOptions, job: Job) -> Result<Outcome> {
    let cfg = ExperimentConfig::from_toml(text)?;
    let r = cfg.resolve(base_dir, opts.paper_scale)?;
    let inputs = hash_inputs(&input_files(&r))?;
    let mut manifest = Manifest::new(text, &r, inputs, opts.dry_run);
    let mut art = Artifacts::create(dir)?;
    if opts.dry_run {
        let manifest = art.finish(manifest)?;
        return Ok(Outcome {
            dir: dir.to_path_buf(),
            manifest,
        });
    }
    let result = execute(&r, job, &mut manifest, &mut art);
    let manifest = art.finish(manifest)?;
    result.map(|()| Outcome {
        dir: dir.to_path_buf(),
        manifest,
    })
}

fn input_files(r: &Resolved) -> Vec<&Path> {
    use crate::config::{ForcingSpec, MeshSource, TopographySpec};
    let mut files = Vec::new();
    if let MeshSource::File { path, .. } = &r.mesh {
        files.push(path.as_path());
    }
    if let TopographySpec::Grid { path, .. } = &r.topography {
        files.push(path.as_path());
    }
    if let ForcingSpec::Gridded { tau_x, tau_y } = &r.forcing {
        files.push(tau_x.as_path());
        files.push(tau_y.as_path());
    }
    files
}

fn execute(r: &Resolved, job: Job, man: &mut Manifest, art: &mut Artifacts) -> Result<()> {
    let setup = stage(man, "setup", || Setup::new(r))?;
    man.mesh_sha256 = Some(setup.mesh_sha256.clone());
    match job {
        Job::FdCheck => fdcheck(r, &setup, man, art),
        Job::Experiment => match r.kind {
            ExperimentKind::SquareTwogyre
            | ExperimentKind::T0Sweep
            | ExperimentKind::RealisticBasin => unsteady(r, &setup, man, art),
            ExperimentKind::AlphaSweep => {
                let pts = r.alphas();
                parameter_sweep(r, &setup, man, art, "alpha_m", &pts, |a| {
                    (a, r.sweep_k.0, r.sweep_k.1)
                })
            }
            ExperimentKind::WavenumberSweep => {
                let ks: Vec<f64> = r.wavenumbers().into_iter().map(f64::from).collect();
                parameter_sweep(r, &setup, man, art, "k", &ks, |k| {
                    (r.sweep.k_alpha_m, k as u32, k as u32)
                })
            }
            ExperimentKind::GrowthRegime => growth_regime(r, &setup, man, art),
            ExperimentKind::StabilityComparison => stability_comparison(r, &setup, man, art),
        },
    }
}

fn model_for(r: &Resolved, setup: &Setup) -> Result<Model> {
    let depth = setup.depth(&r.topography, r.params.l)?;
    setup.model(r.params, depth)
}

/// Samples one state every `tau`, taking `tau / dt` model steps between
/// samples.
fn sample_trajectory(model: &Model, r: &Resolved, start: &ModelState) -> Result<Trajectory> {
    let ratio = r.tau / r.dt;
    let sub = ratio.round() as usize;
    if sub == 0 || (ratio - sub as f64).abs() > 1e-9 * ratio {
        return Err(CliError::Config(format!(
            "tau ({} days) must be a whole multiple of dt ({} days)",
            days(r.tau),
            days(r.dt)
        )));
    }
    let samples = r.trajectory_samples();
    let mut states = Vec::with_capacity(samples);
    states.push(start.clone());
    for k in 1..samples {
        states.push(model.advance(&states[k - 1], r.dt, sub, r.scheme)?);
    }
    Ok(Trajectory::new(states)?)
}

#[derive(Debug, Serialize)]
struct WindowSummary {
    t_days: f64,
    windows: usize,
    lambda1_max_over_min: f64,
    /// Index `k` of the ratio `λ1 / λk` below (the last value kept).
    ratio_index: usize,
    lambda1_over_lambdak_first: f64,
    lambda1_over_lambdak_mean: f64,
    null_dim: usize,
    n_minus_n0: usize,
    boundary_localized: usize,
}

#[derive(Debug, Serialize)]
struct UnsteadySummary {
    n: usize,
    n0: usize,
    spinup_days: f64,
    trajectory_days: f64,
    windows: Vec<WindowSummary>,
}

fn write_modes<W: Write>(sp: &SensitivitySpectrum, count: usize, mut w: W) -> std::io::Result<()> {
    let active = sp.singular_values.len() - sp.null_dim;
    let top: Vec<usize> = (0..count.min(active)).collect();
    let bottom: Vec<usize> = (active.saturating_sub(count)..active).collect();
    write!(w, "dof")?;
    for i in &top {
        write!(w, " sensitive_{}", i + 1)?;
    }
    for i in &bottom {
        write!(w, " insensitive_{}", i + 1)?;
    }
    writeln!(w)?;
    for k in 0..sp.right_vectors.nrows() {
        write!(w, "{k}")?;
        for &i in top.iter().chain(&bottom) {
            write!(w, " {:e}", sp.right_vectors[(k, i)])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

fn unsteady(r: &Resolved, setup: &Setup, man: &mut Manifest, art: &mut Artifacts) -> Result<()> {
    let model = stage(man, "model", || {
        let m = model_for(r, setup)?;
        art.write("depth.txt", |w| write_field("depth", &m.depth, w))?;
        Ok(m)
    })?;
    let start = stage(man, "spin_up", || {
        let s = spin_up(&model, &ModelState::zero(model.n()), r.spinup, r.dt, r.scheme, LOG_EVERY)?;
        art.write("spinup.csv", |w| write_diagnostics_csv(&s.log, w))?;
        art.write("initial_state.txt", |w| write_snapshot(&s.state, w))?;
        Ok(s.state)
    })?;
    let traj = stage(man, "trajectory", || {
        let traj = sample_trajectory(&model, r, &start)?;
        let log: Vec<DiagnosticsRecord> = traj
            .states()
            .iter()
            .map(|s| {
                let (energy, enstrophy) = model.diagnostics(s);
                DiagnosticsRecord {
                    t: s.t,
                    energy,
                    enstrophy,
                }
            })
            .collect();
        art.write("trajectory_diagnostics.csv", |w| write_diagnostics_csv(&log, w))?;
        Ok(traj)
    })?;
    let norm = NormOperator::new(&model, r.response, r.control)?;
    let mut windows = Vec::new();
    for &t in &r.windows {
        let label = format!("T{}d", days(t));
        let summary = stage(man, &format!("t0_sweep_{label}"), || {
            let steps = (t / r.tau).round() as usize;
            let count = (traj.len() - 1) / steps;
            if count == 0 {
                return Err(CliError::Config(format!(
                    "window of {} days is longer than the {}-day trajectory",
                    days(t),
                    days(r.trajectory)
                )));
            }
            let sweep = t0_sweep(&model, &traj, steps, count, &norm, r.top)?;
            art.write(&format!("t0_sweep_{label}.csv"), |w| {
                write!(w, "t0_days")?;
                for i in 1..=r.top {
                    write!(w, ",lambda_{i}")?;
                }
                writeln!(w)?;
                for ws in &sweep {
                    write!(w, "{}", days(ws.t0))?;
                    for l in &ws.lambdas {
                        write!(w, ",{l:e}")?;
                    }
                    writeln!(w)?;
                }
                Ok(())
            })?;

            let op = build_g_iterative(&model, &traj.window(0, steps)?, r.tau)?;
            let sp = compute_spectrum(&op.g, &norm)?;
            let null = null_space_report(&sp, &model.dofmap);
            art.write(&format!("spectrum_{label}.csv"), |w| sp.write_csv(w))?;
            art.write(&format!("g_{label}.txt"), |w| write_matrix(&op.g, w))?;
            art.write(&format!("modes_{label}.txt"), |w| write_modes(&sp, r.modes, w))?;
            art.write(&format!("null_space_{label}.txt"), |w| null.write_text(w))?;

            let l1: Vec<f64> = sweep.iter().map(|w| w.lambdas[0]).collect();
            let max = l1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = l1.iter().cloned().fold(f64::INFINITY, f64::min);
            let ratios: Vec<f64> = sweep
                .iter()
                .map(|w| w.lambdas[0] / w.lambdas[w.lambdas.len() - 1])
                .collect();
            Ok(WindowSummary {
                t_days: days(t),
                windows: count,
                lambda1_max_over_min: max / min,
                ratio_index: sweep[0].lambdas.len(),
                lambda1_over_lambdak_first: ratios[0],
                lambda1_over_lambdak_mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
                null_dim: sp.null_dim,
                n_minus_n0: model.n() - model.n0(),
                boundary_localized: null.boundary_localized(),
            })
        })?;
        windows.push(summary);
    }
    let summary = UnsteadySummary {
        n: model.n(),
        n0: model.n0(),
        spinup_days: days(r.spinup),
        trajectory_days: days(r.trajectory),
        windows,
    };
    art.write_json("summary.json", &summary)
}

/// Outcome of the search for a stationary point at one parameter set.
#[derive(Debug, Clone)]
struct Steady {
    state: Option<ModelState>,
    converged: bool,
    last_change: f64,
    newton_residual: f64,
    error: Option<String>,
}

/// Spins up towards a fixed point and polishes it with Newton. The point
/// counts as reached when Newton converges and the spin-up either met the
/// window criterion or came within `approach_tol` of it.
fn find_steady(model: &Model, r: &Resolved) -> Result<Steady> {
    let (s, rep) = run_to_stationary(
        model,
        &ModelState::zero(model.n()),
        r.stationary_spinup,
        r.dt,
        r.stationary_window,
        r.stationary_tol,
        r.scheme,
    )?;
    let last_change = rep.last_change();
    Ok(match refine_stationary(model, &s, r.newton_tol, r.newton_max_iter) {
        Ok(p) => Steady {
            converged: rep.converged || last_change <= r.approach_tol,
            newton_residual: p.residual,
            state: Some(p.state),
            last_change,
            error: None,
        },
        Err(e) => Steady {
            state: None,
            converged: false,
            last_change,
            newton_residual: f64::NAN,
            error: Some(e.to_string()),
        },
    })
}

#[derive(Debug, Clone)]
struct SweepPoint {
    value: f64,
    steady: Steady,
    lambdas: Vec<f64>,
}

fn sweep_point(r: &Resolved, setup: &Setup, params: ModelParams, topo: (f64, u32, u32)) -> Result<(Steady, Vec<f64>)> {
    let (alpha, kx, ky) = topo;
    let (depth, _) = sinusoidal_topography(alpha, kx, ky, r.sweep_base, r.params.l, &setup.dofmap)?;
    let model = setup.model(params, depth)?;
    let steady = find_steady(&model, r)?;
    let lambdas = match &steady.state {
        Some(s) => {
            let op = build_g_stationary(&model, s, r.growth_time, DEFAULT_DENSE_CAP)?;
            let norm = NormOperator::new(&model, r.response, r.control)?;
            let sp = compute_spectrum(&op.g, &norm)?;
            sp.singular_values.iter().take(SWEEP_TOP).copied().collect()
        }
        None => Vec::new(),
    };
    Ok((steady, lambdas))
}

fn fmt_or_nan(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".into(), |v| format!("{v:e}"))
}

fn write_points<W: Write>(key: &str, points: &[SweepPoint], mut w: W) -> std::io::Result<()> {
    write!(w, "{key},converged,last_change,newton_residual")?;
    for i in 1..=SWEEP_TOP {
        write!(w, ",lambda_{i}")?;
    }
    writeln!(w)?;
    for p in points {
        write!(
            w,
            "{},{},{:e},{:e}",
            p.value, p.steady.converged, p.steady.last_change, p.steady.newton_residual
        )?;
        for i in 0..SWEEP_TOP {
            write!(w, ",{}", fmt_or_nan(p.lambdas.get(i).copied()))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepSummary {
    parameter: String,
    points: usize,
    unconverged: Vec<f64>,
    argmax_lambda1: Option<f64>,
    lambda1_max_over_min: Option<f64>,
    /// `|λ1(first) − λ1(last)| / max(λ1(first), λ1(last))`.
    end_asymmetry: Option<f64>,
}

fn run_points(
    r: &Resolved,
    setup: &Setup,
    values: &[f64],
    topo: &(impl Fn(f64) -> (f64, u32, u32) + Sync),
) -> Result<Vec<SweepPoint>> {
    values
        .par_iter()
        .map(|&v| {
            let (steady, lambdas) = sweep_point(r, setup, r.params, topo(v))?;
            Ok(SweepPoint {
                value: v,
                steady,
                lambdas,
            })
        })
        .collect()
}

fn parameter_sweep(
    r: &Resolved,
    setup: &Setup,
    man: &mut Manifest,
    art: &mut Artifacts,
    key: &str,
    values: &[f64],
    topo: impl Fn(f64) -> (f64, u32, u32) + Sync,
) -> Result<()> {
    let points = stage(man, "sweep", || run_points(r, setup, values, &topo))?;
    stage(man, "write", || {
        for (i, p) in points.iter().enumerate() {
            art.write(&format!("points/{key}_{i:03}.csv"), |w| {
                write_points(key, std::slice::from_ref(p), &mut *w)?;
                if let Some(e) = &p.steady.error {
                    writeln!(w, "# no stationary point: {e}")?;
                }
                Ok(())
            })?;
        }
        art.write("sweep.csv", |w| write_points(key, &points, w))?;
        let l1: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|p| p.lambdas.first().map(|l| (p.value, *l)))
            .collect();
        let argmax = l1
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|p| p.0);
        let max = l1.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = l1.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let ends = match (points.first(), points.last()) {
            (Some(a), Some(b)) => a.lambdas.first().zip(b.lambdas.first()),
            _ => None,
        };
        let summary = SweepSummary {
            parameter: key.into(),
            points: points.len(),
            unconverged: points
                .iter()
                .filter(|p| !p.steady.converged)
                .map(|p| p.value)
                .collect(),
            argmax_lambda1: argmax,
            lambda1_max_over_min: (!l1.is_empty()).then(|| max / min),
            end_asymmetry: ends.map(|(a, b)| (a - b).abs() / a.max(*b)),
        };
        art.write_json("summary.json", &summary)
    })
}

#[derive(Debug, Serialize)]
struct GrowthSummary {
    a: f64,
    b: f64,
    rms: f64,
    t_critical_days: Option<f64>,
    branch_len: usize,
    large_t_slope: Option<f64>,
    /// Growth past the breakpoint is faster than the small-`T` power law.
    faster_than_power_law: Option<bool>,
    converged: bool,
    newton_residual: f64,
}

fn growth_regime(r: &Resolved, setup: &Setup, man: &mut Manifest, art: &mut Artifacts) -> Result<()> {
    let model = stage(man, "model", || model_for(r, setup))?;
    let steady = stage(man, "stationary_point", || {
        let st = find_steady(&model, r)?;
        match &st.state {
            Some(s) => {
                art.write("stationary_state.txt", |w| write_snapshot(s, w))?;
                Ok(st)
            }
            None => Err(CliError::Config(format!(
                "no stationary point: {}",
                st.error.clone().unwrap_or_default()
            ))),
        }
    })?;
    let state = steady.state.as_ref().expect("checked above");
    let rows = stage(man, "spectra", || {
        if model.n0() > DEFAULT_DENSE_CAP {
            return Err(topomode::Error::TooLarge {
                size: model.n0(),
                cap: DEFAULT_DENSE_CAP,
            }
            .into());
        }
        let op = TangentOperators::new(&model, state)?;
        let (a, b) = (op.dense_a(), op.dense_b());
        let norm = NormOperator::new(&model, r.response, r.control)?;
        r.growth_times
            .par_iter()
            .map(|&t| {
                let sp = compute_spectrum(&stationary_g(&a, &b, t)?, &norm)?;
                Ok((t, sp.singular_values))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    stage(man, "fit", || {
        let indices: Vec<usize> = GROWTH_INDICES
            .iter()
            .copied()
            .filter(|&i| i <= rows[0].1.len())
            .collect();
        art.write("growth.csv", |w| {
            write!(w, "t_days")?;
            for i in &indices {
                write!(w, ",lambda_{i}")?;
            }
            writeln!(w)?;
            for (t, sv) in &rows {
                write!(w, "{:e}", t / SECONDS_PER_DAY)?;
                for &i in &indices {
                    write!(w, ",{:e}", sv[i - 1])?;
                }
                writeln!(w)?;
            }
            Ok(())
        })?;
        let pts: Vec<(f64, f64)> = rows.iter().map(|(t, sv)| (*t, sv[0])).collect();
        let fit = fit_growth(&pts, r.small_t_max)?;
        art.write_json(
            "summary.json",
            &GrowthSummary {
                a: fit.a,
                b: fit.b,
                rms: fit.rms,
                t_critical_days: fit.t_critical.map(|t| t / SECONDS_PER_DAY),
                branch_len: fit.branch_len,
                large_t_slope: fit.large_t_slope,
                faster_than_power_law: fit.large_t_slope.map(|s| s > fit.a),
                converged: steady.converged,
                newton_residual: steady.newton_residual,
            },
        )
    })
}

/// Bisection result for the smallest viscosity with a stationary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuBracket {
    /// Smallest tested viscosity known to converge (`None` on bracket
    /// failure).
    pub nu_min: Option<f64>,
    /// Largest tested viscosity known not to converge.
    pub nu_fail: Option<f64>,
    /// The lower end of the bracket already converged.
    pub lower_bracket: bool,
    pub bracket_failure: bool,
}

/// Geometric bisection of `converges` on `[low, high]` until the bracket
/// is within `rel_tol` of its upper end. Assumes convergence is monotone in
/// the viscosity.
pub fn bisect_nu(
    low: f64,
    high: f64,
    rel_tol: f64,
    mut converges: impl FnMut(f64) -> Result<bool>,
) -> Result<NuBracket> {
    if !converges(high)? {
        return Ok(NuBracket {
            nu_min: None,
            nu_fail: Some(high),
            lower_bracket: false,
            bracket_failure: true,
        });
    }
    if converges(low)? {
        return Ok(NuBracket {
            nu_min: Some(low),
            nu_fail: None,
            lower_bracket: true,
            bracket_failure: false,
        });
    }
    let (mut lo, mut hi) = (low, high);
    while (hi - lo) / hi > rel_tol {
        let mid = (lo * hi).sqrt();
        if converges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(NuBracket {
        nu_min: Some(hi),
        nu_fail: Some(lo),
        lower_bracket: false,
        bracket_failure: false,
    })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties; `None` for fewer
/// than two pairs or a constant sample.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mean) * (b - mean)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mean).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - mean).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

#[derive(Debug, Serialize)]
struct StabilitySummary {
    points: usize,
    bracket_failures: Vec<f64>,
    lower_bracket: Vec<f64>,
    spearman_nu_min_lambda1: Option<f64>,
}

fn stability_comparison(r: &Resolved, setup: &Setup, man: &mut Manifest, art: &mut Artifacts) -> Result<()> {
    let alphas = r.alphas();
    let (kx, ky) = r.sweep_k;
    let rows = stage(man, "bisection", || {
        alphas
            .par_iter()
            .map(|&alpha| {
                let (steady, lambdas) = sweep_point(r, setup, r.params, (alpha, kx, ky))?;
                let (depth, _) =
                    sinusoidal_topography(alpha, kx, ky, r.sweep_base, r.params.l, &setup.dofmap)?;
                let bracket = bisect_nu(r.sweep.nu_low, r.sweep.nu_high, r.sweep.nu_rel_tol, |nu| {
                    let model = setup.model(ModelParams { nu, ..r.params }, depth.clone())?;
                    Ok(find_steady(&model, r)?.converged)
                })?;
                Ok((alpha, bracket, steady.converged, lambdas.first().copied()))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    stage(man, "write", || {
        art.write("stability.csv", |w| {
            writeln!(w, "alpha_m,nu_min,nu_fail,lower_bracket,bracket_failure,converged,lambda_1")?;
            for (alpha, b, conv, l1) in &rows {
                writeln!(
                    w,
                    "{alpha},{},{},{},{},{conv},{}",
                    fmt_or_nan(b.nu_min),
                    fmt_or_nan(b.nu_fail),
                    b.lower_bracket,
                    b.bracket_failure,
                    fmt_or_nan(*l1)
                )?;
            }
            Ok(())
        })?;
        let (nus, l1s): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|(_, b, _, l1)| b.nu_min.zip(*l1))
            .unzip();
        let summary = StabilitySummary {
            points: rows.len(),
            bracket_failures: rows
                .iter()
                .filter(|(_, b, ..)| b.bracket_failure)
                .map(|r| r.0)
                .collect(),
            lower_bracket: rows
                .iter()
                .filter(|(_, b, ..)| b.lower_bracket)
                .map(|r| r.0)
                .collect(),
            spearman_nu_min_lambda1: spearman(&nus, &l1s),
        };
        art.write_json("summary.json", &summary)
    })
}

#[derive(Debug, Serialize)]
struct FdSummary {
    t_days: f64,
    dt_days: f64,
    samples: Vec<FdSample>,
}

#[derive(Debug, Serialize)]
struct FdSample {
    seed: u64,
    slope: f64,
    tangent_norm: f64,
}

/// Taylor test of the tangent model against the nonlinear model for
/// `fd_samples` smooth random depth perturbations.
fn fdcheck(r: &Resolved, setup: &Setup, man: &mut Manifest, art: &mut Artifacts) -> Result<()> {
    let model = stage(man, "model", || model_for(r, setup))?;
    let state = stage(man, "spin_up", || {
        Ok(spin_up(&model, &ModelState::zero(model.n()), r.spinup, r.dt, r.scheme, LOG_EVERY)?.state)
    })?;
    let samples = stage(man, "taylor_test", || {
        (0..r.fd_samples as u64)
            .map(|i| {
                let seed = r.seed.wrapping_add(i);
                let field = smooth_random_field(&model.dofmap, r.params.l, FD_FIELD_MODES, seed);
                let dh: Vec<f64> = field.iter().zip(&model.depth).map(|(f, h)| f * h).collect();
                let rep = fd_verify(&model, &state, &dh, &r.fd_eps, r.fd_time, r.fd_dt)?;
                art.write(&format!("fd_{i}.csv"), |w| write_fd_csv(&rep, w))?;
                Ok(FdSample {
                    seed,
                    slope: rep.slope,
                    tangent_norm: rep.tangent_norm,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    art.write_json(
        "fd_summary.json",
        &FdSummary {
            t_days: days(r.fd_time),
            dt_days: days(r.fd_dt),
            samples,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_honours_tolerance_and_flags() {
        let b = bisect_nu(100.0, 3000.0, 0.05, |nu| Ok(nu >= 777.0)).unwrap();
        let (hi, lo) = (b.nu_min.unwrap(), b.nu_fail.unwrap());
        assert!(lo < 777.0 && hi >= 777.0);
        assert!((hi - lo) / hi <= 0.05);

        let all = bisect_nu(100.0, 3000.0, 0.05, |_| Ok(true)).unwrap();
        assert!(all.lower_bracket && all.nu_min == Some(100.0));

        let none = bisect_nu(100.0, 3000.0, 0.05, |_| Ok(false)).unwrap();
        assert!(none.bracket_failure && none.nu_min.is_none());
    }

    #[test]
    fn spearman_matches_hand_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        // ranks x = (1, 2, 3, 4), y = (1, 3, 2, 4): 1 - 6·2/(4·15) = 0.8
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 5.0, 2.0, 9.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }
}
