use std::io::Write;

use super::TangentOperators;
use crate::dynamics::{integrate_trajectory, Model, ModelState, Scheme};
use crate::error::{Error, Result};
use crate::linalg::norm2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdEntry {
    pub eps: f64,
    /// `‖Δω/ε − δω‖ / ‖δω‖`, or the absolute defect when `δω = 0`.
    pub residual: f64,
    /// Least-squares slope of `log r` against `log ε` over this and all
    /// previous entries (NaN for the first).
    pub slope_so_far: f64,
    /// `‖Δω‖ / ε`
    pub difference_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub entries: Vec<FdEntry>,
    /// `‖δω(T)‖` from the tangent model.
    pub tangent_norm: f64,
    /// Slope over all entries with a positive residual.
    pub slope: f64,
    /// Set when the residual stops decreasing before the smallest `ε`; holds
    /// the `ε` with the smallest residual.
    pub roundoff_floor: Option<f64>,
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(e, r)| *e > 0.0 && *r > 0.0 && r.is_finite())
        .map(|(e, r)| (e.ln(), r.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Taylor test of the tangent model along an explicit-Euler trajectory.
///
/// Starting from `state` (consistent with `model`), the nonlinear model is
/// run for `t_short` with depth `H` and with `H + ε dH`, and compared with
/// the tangent model driven by `χ = dH / H` from `δω = 0`. `eps` values are
/// processed in the given order.
pub fn fd_verify(
    model: &Model,
    state: &ModelState,
    dh: &[f64],
    eps: &[f64],
    t_short: f64,
    dt: f64,
) -> Result<FdReport> {
    let n = model.n();
    let n0 = model.n0();
    if dh.len() != n {
        return Err(Error::DimensionMismatch {
            what: "topography perturbation",
            expected: n,
            found: dh.len(),
        });
    }
    let (lo, hi) = eps
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(l, h), &e| (l.min(e), h.max(e)));
    if eps.iter().any(|e| !(*e > 0.0)) || !(hi / lo >= 100.0 * (1.0 - 1e-12)) {
        return Err(Error::InvalidParameter(
            "eps values must be positive and span at least two decades".into(),
        ));
    }
    if !(dt > 0.0) || !(t_short >= dt) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_short}"
        )));
    }
    let steps = (t_short / dt).round() as usize;

    let base = integrate_trajectory(model, state, steps + 1, dt, Scheme::Euler)?;
    let chi: Vec<f64> = dh.iter().zip(&model.depth).map(|(d, h)| d / h).collect();
    let mut dw = vec![0.0; n0];
    for s in &base.states()[..steps] {
        let op = TangentOperators::new(model, s)?;
        dw = op.euler_step(&dw, &chi, dt);
    }
    let tangent_norm = norm2(&dw);
    let end = &base.states()[steps].omega[..n0];

    let mut entries: Vec<FdEntry> = Vec::with_capacity(eps.len());
    for &e in eps {
        let depth: Vec<f64> = model.depth.iter().zip(dh).map(|(h, d)| h + e * d).collect();
        let mut pert = Model::new(
            model.dofmap.clone(),
            model.core.clone(),
            model.params,
            depth,
            model.forcing.clone(),
        )?;
        pert.terms = model.terms;
        let mut s0 = state.clone();
        s0.psi = pert.solve_streamfunction(&s0.omega)?;
        let out = pert.advance(&s0, dt, steps, Scheme::Euler)?;
        let fd: Vec<f64> = out.omega[..n0]
            .iter()
            .zip(end)
            .map(|(a, b)| (a - b) / e)
            .collect();
        let defect: Vec<f64> = fd.iter().zip(&dw).map(|(a, b)| a - b).collect();
        let residual = if tangent_norm > 0.0 {
            norm2(&defect) / tangent_norm
        } else {
            norm2(&defect)
        };
        let mut pts: Vec<(f64, f64)> = entries.iter().map(|x| (x.eps, x.residual)).collect();
        pts.push((e, residual));
        entries.push(FdEntry {
            eps: e,
            residual,
            slope_so_far: fit_slope(&pts),
            difference_norm: norm2(&fd),
        });
    }
    let pts: Vec<(f64, f64)> = entries.iter().map(|x| (x.eps, x.residual)).collect();
    let smallest = entries
        .iter()
        .min_by(|a, b| a.eps.total_cmp(&b.eps))
        .map(|x| x.eps);
    let best = entries
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .map(|x| x.eps);
    let roundoff_floor = match (best, smallest) {
        (Some(b), Some(s)) if b != s => Some(b),
        _ => None,
    };
    Ok(FdReport {
        slope: fit_slope(&pts),
        entries,
        tangent_norm,
        roundoff_floor,
    })
}

/// CSV with columns `eps,residual,slope_so_far`.
pub fn write_fd_csv<W: Write>(report: &FdReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "eps,residual,slope_so_far")?;
    for e in &report.entries {
        writeln!(w, "{:e},{:e},{:e}", e.eps, e.residual, e.slope_so_far)?;
    }
    Ok(())
}
