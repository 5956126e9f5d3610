//! Shared fixtures for the criterion benches.

use std::sync::Arc;

use topomode::dynamics::{two_gyre_forcing, Model, ModelParams, ModelState, Scheme};
use topomode::fem::assemble_core;
use topomode::mesh::{reference_quadrature, DofMap, GradedSquare};

pub const DAY: f64 = 86_400.0;
pub const SIDE: f64 = 4.0e6;

pub fn square_dofmap() -> Arc<DofMap> {
    Arc::new(DofMap::new(&GradedSquare::standard(SIDE).build().unwrap()))
}

/// Flat-bottom two-gyre model on the 445-dof square.
pub fn square_model(nu: f64) -> Model {
    let dofmap = square_dofmap();
    let core = Arc::new(assemble_core(&dofmap, &reference_quadrature(4).unwrap()).unwrap());
    let p = ModelParams {
        f0: 1e-4,
        beta: 2e-11,
        sigma: 5e-8,
        nu,
        rho0: 1025.0,
        h0: 500.0,
        l: SIDE,
    };
    let forcing = two_gyre_forcing(&p, 0.11, &dofmap).unwrap();
    let n = dofmap.n();
    Model::new(dofmap, core, p, vec![500.0; n], forcing).unwrap()
}

/// A state after `days` of spin-up from rest.
pub fn spun_up(model: &Model, days: f64) -> ModelState {
    let steps = (days * 10.0).round() as usize;
    model
        .advance(&ModelState::zero(model.n()), 0.1 * DAY, steps, Scheme::Rk4)
        .unwrap()
}
