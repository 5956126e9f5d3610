use std::io::Write;
use std::path::Path;

use super::model::{Model, ModelState, Scheme};
use crate::error::{Error, Result};
use crate::linalg::norm2;

/// Energy and enstrophy at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub enstrophy: f64,
}

#[derive(Debug, Clone)]
pub struct SpinUp {
    pub state: ModelState,
    pub log: Vec<DiagnosticsRecord>,
}

fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need dt > 0 and duration >= 0, got dt = {dt}, duration = {duration}"
        )));
    }
    Ok((duration / dt).round() as usize)
}

/// Integrates for `duration` seconds, logging diagnostics every
/// `log_every` steps (and at both ends).
pub fn spin_up(
    model: &Model,
    initial: &ModelState,
    duration: f64,
    dt: f64,
    scheme: Scheme,
    log_every: usize,
) -> Result<SpinUp> {
    let steps = step_count(duration, dt)?;
    let record = |s: &ModelState| {
        let (energy, enstrophy) = model.diagnostics(s);
        DiagnosticsRecord {
            t: s.t,
            energy,
            enstrophy,
        }
    };
    let mut state = initial.clone();
    let mut log = vec![record(&state)];
    let every = log_every.max(1);
    let mut done = 0;
    while done < steps {
        let chunk = every.min(steps - done);
        state = model
            .advance(&state, dt, chunk, scheme)
            .map_err(|e| match e {
                Error::NonFinite { step } => Error::NonFinite { step: done + step },
                other => other,
            })?;
        done += chunk;
        log.push(record(&state));
    }
    Ok(SpinUp { state, log })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub converged: bool,
    /// Model time at which the window criterion was first met.
    pub t_converged: Option<f64>,
    /// `(t, ‖Δω‖ / ‖ω‖)` at the end of each window.
    pub history: Vec<(f64, f64)>,
}

impl StationarityReport {
    pub fn last_change(&self) -> f64 {
        self.history.last().map_or(f64::INFINITY, |h| h.1)
    }
}

/// Integrates in windows of `window` seconds until the relative vorticity
/// change over one window is at most `tol`, or `max_duration` is reached.
pub fn run_to_stationary(
    model: &Model,
    initial: &ModelState,
    max_duration: f64,
    dt: f64,
    window: f64,
    tol: f64,
    scheme: Scheme,
) -> Result<(ModelState, StationarityReport)> {
    let window_steps = step_count(window, dt)?.max(1);
    let max_steps = step_count(max_duration, dt)?;
    let mut state = initial.clone();
    let mut history = Vec::new();
    let mut done = 0;
    while done + window_steps <= max_steps {
        let next = model.advance(&state, dt, window_steps, scheme)?;
        done += window_steps;
        let diff: Vec<f64> = next
            .omega
            .iter()
            .zip(&state.omega)
            .map(|(a, b)| a - b)
            .collect();
        let scale = norm2(&next.omega);
        let change = if scale > 0.0 {
            norm2(&diff) / scale
        } else {
            0.0
        };
        history.push((next.t, change));
        state = next;
        if change <= tol {
            let t = state.t;
            return Ok((
                state,
                StationarityReport {
                    converged: true,
                    t_converged: Some(t),
                    history,
                },
            ));
        }
    }
    Ok((
        state,
        StationarityReport {
            converged: false,
            t_converged: None,
            history,
        },
    ))
}

/// States sampled at a uniform interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    states: Vec<ModelState>,
    dt: f64,
}

impl Trajectory {
    pub fn new(states: Vec<ModelState>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InsufficientData("empty trajectory".into()));
        }
        let dt = if states.len() > 1 {
            states[1].t - states[0].t
        } else {
            0.0
        };
        for w in states.windows(2) {
            let h = w[1].t - w[0].t;
            if !(h > 0.0) || (h - dt).abs() > 1e-9 * dt.abs().max(1.0) {
                return Err(Error::InvalidParameter(format!(
                    "trajectory times must be strictly increasing and uniform (spacing {h} vs {dt})"
                )));
            }
        }
        Ok(Self { states, dt })
    }

    pub fn states(&self) -> &[ModelState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Sample spacing (zero for a single sample).
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    /// Samples `start..=start + len`.
    pub fn window(&self, start: usize, len: usize) -> Result<Trajectory> {
        if start + len >= self.states.len() {
            return Err(Error::InsufficientData(format!(
                "window {start}+{len} exceeds trajectory of {} samples",
                self.states.len()
            )));
        }
        Trajectory::new(self.states[start..=start + len].to_vec())
    }
}

/// Integrates `samples - 1` steps from `initial`, keeping every state.
pub fn integrate_trajectory(
    model: &Model,
    initial: &ModelState,
    samples: usize,
    dt: f64,
    scheme: Scheme,
) -> Result<Trajectory> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    let mut states = Vec::with_capacity(samples);
    states.push(initial.clone());
    for k in 1..samples {
        let next = model.step(&states[k - 1], dt, scheme)?;
        if next.omega.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: k });
        }
        states.push(next);
    }
    Trajectory::new(states)
}

/// Writes a `dof omega psi` table.
pub fn write_snapshot<W: Write>(state: &ModelState, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# t = {:e}", state.t)?;
    writeln!(w, "dof omega psi")?;
    for (k, (o, p)) in state.omega.iter().zip(&state.psi).enumerate() {
        writeln!(w, "{k} {o:e} {p:e}")?;
    }
    Ok(())
}

/// Writes `dof value` lines for any nodal field.
pub fn write_field<W: Write>(name: &str, values: &[f64], mut w: W) -> std::io::Result<()> {
    writeln!(w, "dof {name}")?;
    for (k, v) in values.iter().enumerate() {
        writeln!(w, "{k} {v:e}")?;
    }
    Ok(())
}

pub fn write_diagnostics_csv<W: Write>(log: &[DiagnosticsRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,energy,enstrophy")?;
    for r in log {
        writeln!(w, "{:e},{:e},{:e}", r.t, r.energy, r.enstrophy)?;
    }
    Ok(())
}

/// Writes one snapshot file per sample (`snapshot_00000.txt`, ...) and a
/// `diagnostics.csv` into `dir`.
pub fn save_trajectory(model: &Model, traj: &Trajectory, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut log = Vec::with_capacity(traj.len());
    for (k, s) in traj.states().iter().enumerate() {
        let f = std::fs::File::create(dir.join(format!("snapshot_{k:05}.txt")))?;
        let mut w = std::io::BufWriter::new(f);
        write_snapshot(s, &mut w)?;
        w.flush()?;
        let (energy, enstrophy) = model.diagnostics(s);
        log.push(DiagnosticsRecord {
            t: s.t,
            energy,
            enstrophy,
        });
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join("diagnostics.csv"))?);
    write_diagnostics_csv(&log, &mut w)?;
    w.flush()?;
    Ok(())
}
