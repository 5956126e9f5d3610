//! Sensitivity operator `G(t0, T)` mapping relative topography perturbations
//! `χ = δH/H` (all dofs) to the interior vorticity perturbation at `t0 + T`,
//! and its singular spectrum.

mod regimes;
mod spectrum;

pub use regimes::{fit_growth, growth_regime_fit, t0_sweep, GrowthFit, WindowSpectrum};
pub use spectrum::{
    boundary_fraction, compute_spectrum, null_space_report, ControlNorm, NormOperator,
    NullSpaceReport, ResponseNorm, SensitivitySpectrum,
};

use nalgebra::DMatrix;

use crate::dynamics::{Model, ModelState, Trajectory};
use crate::error::{Error, Result};
use crate::linalg::expm_phi1;
use crate::tangent::{stationary_residual, TangentOperators};

/// Largest interior dimension for which the dense exponential is attempted.
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Stationary states must satisfy the steady equations to this relative
/// residual before the closed form is used.
pub const STATIONARY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMode {
    Iterative,
    Stationary,
}

/// Dense `n0 × n` sensitivity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityOperator {
    pub g: DMatrix<f64>,
    pub t0: f64,
    pub t: f64,
    pub mode: GMode,
}

impl SensitivityOperator {
    /// `‖G 1‖ / (‖G‖_F ‖1‖)`, zero for `G = 0`.
    pub fn kernel_defect(&self) -> f64 {
        let ones = nalgebra::DVector::from_element(self.g.ncols(), 1.0);
        let scale = self.g.norm() * ones.norm();
        if scale > 0.0 {
            (&self.g * ones).norm() / scale
        } else {
            0.0
        }
    }
}

fn euler_recursion<'s>(
    model: &Model,
    states: impl Iterator<Item = &'s ModelState>,
    tau: f64,
) -> Result<DMatrix<f64>> {
    let mut g = DMatrix::zeros(model.n0(), model.n());
    for s in states {
        let op = TangentOperators::new(model, s)?;
        let ag = op.apply_a_block(&g);
        let b = op.dense_b();
        g += tau * (ag + b);
    }
    Ok(g)
}

/// `G_{k+1} = G_k + τ (A_k G_k + B_k)` from `G_0 = 0` along every interval of
/// `traj`, whose sample spacing must equal `tau`.
pub fn build_g_iterative(
    model: &Model,
    traj: &Trajectory,
    tau: f64,
) -> Result<SensitivityOperator> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let steps = traj.len() - 1;
    if steps > 0 && (traj.dt() - tau).abs() > 1e-9 * tau {
        return Err(Error::InvalidParameter(format!(
            "trajectory spacing {} s does not match tau = {tau} s",
            traj.dt()
        )));
    }
    let g = euler_recursion(model, traj.states()[..steps].iter(), tau)?;
    Ok(SensitivityOperator {
        g,
        t0: traj.states()[0].t,
        t: steps as f64 * tau,
        mode: GMode::Iterative,
    })
}

/// The recursion with the tangent frozen at `state` for `steps` steps.
pub fn build_g_iterative_frozen(
    model: &Model,
    state: &ModelState,
    tau: f64,
    steps: usize,
) -> Result<SensitivityOperator> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    let g = euler_recursion(model, std::iter::repeat_n(state, steps), tau)?;
    Ok(SensitivityOperator {
        g,
        t0: state.t,
        t: steps as f64 * tau,
        mode: GMode::Iterative,
    })
}

/// `G(T) = T φ1(T A) B`, the exact solution of `Ġ = A G + B`, `G(0) = 0`.
pub fn stationary_g(a: &DMatrix<f64>, b: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "T must be non-negative, got {t}"
        )));
    }
    let (_, g) = expm_phi1(&(a * t), &(b * t))?;
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    Ok(g)
}

/// Closed-form `G(T)` at a verified stationary state.
pub fn build_g_stationary(
    model: &Model,
    state: &ModelState,
    t: f64,
    cap: usize,
) -> Result<SensitivityOperator> {
    if model.n0() > cap {
        return Err(Error::TooLarge {
            size: model.n0(),
            cap,
        });
    }
    let residual = stationary_residual(model, state)?;
    if !(residual <= STATIONARY_TOL) {
        return Err(Error::NotConverged(format!(
            "state is not stationary (relative residual {residual:.3e})"
        )));
    }
    let op = TangentOperators::new(model, state)?;
    build_g_stationary_from(&op, t, cap)
}

/// Closed-form `G(T)` from already linearized operators (no stationarity
/// check).
pub fn build_g_stationary_from(
    op: &TangentOperators<'_>,
    t: f64,
    cap: usize,
) -> Result<SensitivityOperator> {
    if op.n0() > cap {
        return Err(Error::TooLarge { size: op.n0(), cap });
    }
    let g = stationary_g(&op.dense_a(), &op.dense_b(), t)?;
    Ok(SensitivityOperator {
        g,
        t0: op.state_time(),
        t,
        mode: GMode::Stationary,
    })
}
