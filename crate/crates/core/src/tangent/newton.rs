use super::TangentOperators;
use crate::dynamics::{Model, ModelState};
use crate::error::{Error, Result};
use crate::linalg::norm2;

/// `‖dω_I/dt‖` relative to the forcing scale `‖F_I‖` (or to `σ‖ω_I‖` for an
/// unforced model). The streamfunction is recomputed from `omega`.
pub fn stationary_residual(model: &Model, state: &ModelState) -> Result<f64> {
    let (dw, _) = model.tendency(&state.omega)?;
    let scale = model
        .forcing_scale()
        .max(model.params.sigma * norm2(&state.omega[..model.n0()]));
    let r = norm2(&dw);
    Ok(if scale > 0.0 { r / scale } else { r })
}

#[derive(Debug, Clone)]
pub struct StationaryPoint {
    pub state: ModelState,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration on the steady equations, using the dense interior
/// tangent `A` (the exact Jacobian of the tendency) with a halving line
/// search. Stops at relative residual `tol`.
pub fn refine_stationary(
    model: &Model,
    start: &ModelState,
    tol: f64,
    max_iter: usize,
) -> Result<StationaryPoint> {
    let n0 = model.n0();
    let mut state = start.clone();
    state.psi = model.solve_streamfunction(&state.omega)?;
    let mut residual = stationary_residual(model, &state)?;
    let mut iterations = 0;
    while residual > tol {
        if iterations == max_iter {
            return Err(Error::NotConverged(format!(
                "stationary residual {residual:.3e} after {max_iter} Newton steps"
            )));
        }
        iterations += 1;
        let (f, _) = model.tendency(&state.omega)?;
        let a = TangentOperators::new(model, &state)?.dense_a();
        let rhs = nalgebra::DVector::from_iterator(n0, f.iter().map(|v| -v));
        let step = a.lu().solve(&rhs).ok_or_else(|| Error::Solver {
            msg: "singular Jacobian in stationary refinement".into(),
            condition_estimate: f64::INFINITY,
        })?;
        let mut length = 1.0;
        loop {
            let mut omega = state.omega.clone();
            omega[..n0]
                .iter_mut()
                .zip(step.iter())
                .for_each(|(w, d)| *w += length * d);
            let psi = model.solve_streamfunction(&omega)?;
            let trial = ModelState {
                omega,
                psi,
                t: state.t,
            };
            let r = stationary_residual(model, &trial)?;
            if r < residual || length < 1e-3 {
                state = trial;
                residual = r;
                break;
            }
            length *= 0.5;
        }
    }
    Ok(StationaryPoint {
        state,
        residual,
        iterations,
    })
}
