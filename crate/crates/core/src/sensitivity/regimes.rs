use rayon::prelude::*;

use super::spectrum::{compute_spectrum, NormOperator};
use super::{build_g_iterative, stationary_g, DEFAULT_DENSE_CAP};
use crate::dynamics::{Model, ModelState, Trajectory};
use crate::error::{Error, Result};
use crate::tangent::TangentOperators;

const MIN_BRANCH: usize = 4;

/// Power-law fit `log λ = a log T + b` on the small-`T` branch.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit {
    pub a: f64,
    pub b: f64,
    /// rms residual of the small-`T` fit (natural log units).
    pub rms: f64,
    /// Geometric mean of the last `T` that still follows the small-`T` law
    /// and the first one that does not; `None` when every point fits.
    pub t_critical: Option<f64>,
    /// Number of leading points that follow the small-`T` law.
    pub branch_len: usize,
    /// Least-squares log-log slope of the points from the breakpoint on.
    pub large_t_slope: Option<f64>,
    /// `(T, λ1)` in ascending `T`.
    pub points: Vec<(f64, f64)>,
}

fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let a = sxy / sxx;
    let b = my - a * mx;
    let rms = (pts.iter().map(|p| (p.1 - a * p.0 - b).powi(2)).sum::<f64>() / n).sqrt();
    (a, b, rms)
}

/// Fits `(T, λ)` pairs. The power law is fitted to the points with
/// `T <= small_t_max`; the breakpoint is the first larger `T` whose residual
/// exceeds three times the fit's rms error (floored at `1e-3` in natural log
/// units). Both branches need at least four points.
pub fn fit_growth(points: &[(f64, f64)], small_t_max: f64) -> Result<GrowthFit> {
    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.iter().any(|p| !(p.0 > 0.0) || !(p.1 > 0.0)) {
        return Err(Error::InvalidParameter(
            "growth fit needs positive T and λ".into(),
        ));
    }
    let small = pts.iter().take_while(|p| p.0 <= small_t_max).count();
    if small < MIN_BRANCH {
        return Err(Error::InsufficientData(format!(
            "{small} points with T <= {small_t_max:e}, need at least {MIN_BRANCH}"
        )));
    }
    let logs: Vec<(f64, f64)> = pts.iter().map(|p| (p.0.ln(), p.1.ln())).collect();
    let (a, b, rms) = linear_fit(&logs[..small]);
    let tol = 3.0 * rms.max(1e-3);
    let len = small
        + logs[small..]
            .iter()
            .take_while(|(x, y)| (y - a * x - b).abs() <= tol)
            .count();
    let (t_critical, large_t_slope) = if len < logs.len() {
        let rest = logs.len() - len;
        if rest < MIN_BRANCH {
            return Err(Error::InsufficientData(format!(
                "only {rest} points past the breakpoint, need at least {MIN_BRANCH}"
            )));
        }
        (
            Some((pts[len - 1].0 * pts[len].0).sqrt()),
            Some(linear_fit(&logs[len..]).0),
        )
    } else {
        (None, None)
    };
    Ok(GrowthFit {
        a,
        b,
        rms,
        t_critical,
        branch_len: len,
        large_t_slope,
        points: pts,
    })
}

/// Leading singular value of the closed-form `G(T)` for every `T` in
/// `t_list`, then [`fit_growth`].
pub fn growth_regime_fit(
    model: &Model,
    state: &ModelState,
    t_list: &[f64],
    small_t_max: f64,
    norm: &NormOperator,
) -> Result<GrowthFit> {
    if model.n0() > DEFAULT_DENSE_CAP {
        return Err(Error::TooLarge {
            size: model.n0(),
            cap: DEFAULT_DENSE_CAP,
        });
    }
    let op = TangentOperators::new(model, state)?;
    let (a, b) = (op.dense_a(), op.dense_b());
    let pts = t_list
        .par_iter()
        .map(|&t| {
            let g = stationary_g(&a, &b, t)?;
            Ok((t, compute_spectrum(&g, norm)?.lambda_max()))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_growth(&pts, small_t_max)
}

/// Leading singular values of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpectrum {
    pub t0: f64,
    pub lambdas: Vec<f64>,
}

/// Splits `traj` into `count` consecutive windows of `window_steps`
/// intervals, builds `G` on each by the Euler recursion and keeps the `top`
/// leading singular values. Results are in window order.
pub fn t0_sweep(
    model: &Model,
    traj: &Trajectory,
    window_steps: usize,
    count: usize,
    norm: &NormOperator,
    top: usize,
) -> Result<Vec<WindowSpectrum>> {
    if window_steps == 0 || count == 0 {
        return Err(Error::InvalidParameter(
            "window length and count must be positive".into(),
        ));
    }
    if count * window_steps > traj.len() - 1 {
        return Err(Error::InsufficientData(format!(
            "{count} windows of {window_steps} steps need {} intervals, trajectory has {}",
            count * window_steps,
            traj.len() - 1
        )));
    }
    let tau = traj.dt();
    (0..count)
        .into_par_iter()
        .map(|w| {
            let sub = traj.window(w * window_steps, window_steps)?;
            let g = build_g_iterative(model, &sub, tau)?;
            let spec = compute_spectrum(&g.g, norm)?;
            Ok(WindowSpectrum {
                t0: g.t0,
                lambdas: spec.singular_values.iter().take(top).copied().collect(),
            })
        })
        .collect()
}
