use std::f64::consts::PI;
use std::sync::Arc;

use topomode::dynamics::{
    integrate_trajectory, run_to_stationary, spin_up, two_gyre_forcing, Forcing, Model,
    ModelParams, ModelState, Scheme, Terms,
};
use topomode::fem::assemble_core;
use topomode::fem::basis::P2Element;
use topomode::linalg::norm2;
use topomode::mesh::{generate_graded_square_mesh, reference_quadrature, DofMap};

const DAY: f64 = 86_400.0;

fn params(l: f64) -> ModelParams {
    ModelParams {
        f0: 1e-4,
        beta: 2e-11,
        sigma: 5e-8,
        nu: 500.0,
        rho0: 1025.0,
        h0: 500.0,
        l,
    }
}

fn model(
    l: f64,
    n: usize,
    ratio: f64,
    depth: impl Fn(f64, f64) -> f64,
    forcing: Option<f64>,
) -> Model {
    let mesh = generate_graded_square_mesh(l, n, ratio).unwrap();
    let dofmap = Arc::new(DofMap::new(&mesh));
    let core = Arc::new(assemble_core(&dofmap, &reference_quadrature(4).unwrap()).unwrap());
    let p = params(l);
    let h = dofmap.interpolate(depth);
    let f = match forcing {
        Some(tau0) => two_gyre_forcing(&p, tau0, &dofmap).unwrap(),
        None => Forcing::zero(dofmap.n()),
    };
    Model::new(dofmap, core, p, h, f).unwrap()
}

fn state_from(m: &Model, omega: impl Fn(f64, f64) -> f64) -> ModelState {
    let mut w = m.dofmap.interpolate(omega);
    for (k, v) in w.iter_mut().enumerate() {
        if m.dofmap.is_boundary(k) {
            *v = 0.0;
        }
    }
    let psi = m.solve_streamfunction(&w).unwrap();
    ModelState {
        omega: w,
        psi,
        t: 0.0,
    }
}

#[test]
fn resting_unforced_ocean_stays_at_rest() {
    let m = model(
        4e6,
        4,
        2.0,
        |x, _| 500.0 + 100.0 * (PI * x / 4e6).sin(),
        None,
    );
    let s = m
        .advance(&ModelState::zero(m.n()), 0.1 * DAY, 20, Scheme::Rk4)
        .unwrap();
    assert!(s.omega.iter().chain(&s.psi).all(|v| *v == 0.0));
}

#[test]
fn friction_alone_decays_exponentially() {
    let mut m = model(4e6, 4, 1.0, |_, _| 500.0, None);
    m.terms = Terms {
        advection: false,
        viscosity: false,
        friction: true,
        forcing: false,
    };
    let s0 = state_from(&m, |x, y| {
        1e-6 * (PI * x / 4e6).sin() * (PI * y / 4e6).sin()
    });
    let dt = DAY;
    let steps = 100;
    let s = m.advance(&s0, dt, steps, Scheme::Rk4).unwrap();
    let decay = (-m.params.sigma * dt * steps as f64).exp();
    for (a, b) in s.omega.iter().zip(&s0.omega) {
        assert!((a - b * decay).abs() <= 1e-10 * b.abs().max(1e-20));
    }
}

#[test]
fn manufactured_streamfunction_converges() {
    // ψ = sin(πx) sin(πy) on the unit square with H = 1 has ω = ∇²ψ = -2π² ψ.
    let errs: Vec<f64> = [4, 8]
        .iter()
        .map(|&n| {
            let m = model(1.0, n, 1.0, |_, _| 1.0, None);
            let exact = m.dofmap.interpolate(|x, y| (PI * x).sin() * (PI * y).sin());
            let s = state_from(&m, |x, y| -2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
            let diff: Vec<f64> = s.psi.iter().zip(&exact).map(|(a, b)| a - b).collect();
            diff.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
        })
        .collect();
    assert!(errs[0] < 2e-2, "coarse error {}", errs[0]);
    // P2 nodal error is O(h^3) or better on uniform meshes
    assert!(errs[1] < errs[0] / 6.0, "errors {errs:?}");
}

#[test]
fn flat_bottom_inversion_matches_stiffness_relation() {
    let m = model(4e6, 5, 3.0, |_, _| 500.0, None);
    let s = state_from(&m, |x, y| {
        1e-6 * (2.0 * PI * x / 4e6).cos() * (PI * y / 4e6).sin()
    });
    let n0 = m.n0();
    let cpsi = m.core.stiffness.mul_vec_block(n0, m.n(), &s.psi);
    let mw = m.core.mass.mul_vec_block(n0, m.n(), &s.omega);
    let r: Vec<f64> = cpsi.iter().zip(&mw).map(|(c, w)| c + 500.0 * w).collect();
    assert!(norm2(&r) <= 1e-9 * 500.0 * norm2(&mw));
    assert!(m.streamfunction_residual(&s) < 1e-10);
}

/// `∫ |∇ψ|² / H` by element-wise quadrature of the P2 fields.
fn energy_by_quadrature(m: &Model, psi: &[f64]) -> f64 {
    let q = reference_quadrature(6).unwrap();
    let coords = m.dofmap.dof_coords();
    let mut e = 0.0;
    for d in m.dofmap.triangle_dofs() {
        let el = P2Element::new([coords[d[0]], coords[d[1]], coords[d[2]]]);
        for (p, w) in q.points.iter().zip(&q.weights) {
            let l = *p;
            let g = el.gradients(l);
            let phi = P2Element::values(l);
            let (mut gx, mut gy, mut ih) = (0.0, 0.0, 0.0);
            for a in 0..6 {
                gx += psi[d[a]] * g[a][0];
                gy += psi[d[a]] * g[a][1];
                ih += m.inv_h[d[a]] * phi[a];
            }
            e += w * el.area * (gx * gx + gy * gy) * ih;
        }
    }
    e
}

#[test]
fn energy_matches_quadrature_and_enstrophy_scales() {
    let l = 4e6;
    let m = model(
        l,
        4,
        2.0,
        |x, y| 500.0 + 200.0 * (PI * x / l).sin() * (PI * y / l).sin(),
        None,
    );
    let s = state_from(&m, |x, y| {
        1e-6 * (PI * x / l).sin() * (2.0 * PI * y / l).sin()
    });
    let (e, z) = m.diagnostics(&s);
    let oracle = energy_by_quadrature(&m, &s.psi);
    assert!((e - oracle).abs() <= 1e-10 * oracle, "{e} vs {oracle}");
    assert!(e > 0.0 && z > 0.0);

    let s3 = state_from(&m, |x, y| {
        3e-6 * (PI * x / l).sin() * (2.0 * PI * y / l).sin()
    });
    let (e3, z3) = m.diagnostics(&s3);
    assert!((e3 / e - 9.0).abs() < 1e-9);
    assert!((z3 / z - 9.0).abs() < 1e-9);
}

#[test]
fn two_gyre_forcing_is_antisymmetric_about_mid_basin() {
    let l = 4e6;
    let mesh = generate_graded_square_mesh(l, 6, 4.0).unwrap();
    let d = DofMap::new(&mesh);
    let perm = d
        .symmetry_permutation(|p| [p[0], l - p[1]], 1e-6 * l)
        .expect("mirror-symmetric mesh");
    let f = two_gyre_forcing(&params(l), 0.11, &d).unwrap();
    let scale = f.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    for (k, &pk) in perm.iter().enumerate() {
        assert!((f.values[k] + f.values[pk]).abs() <= 1e-12 * scale);
    }
}

#[test]
fn spin_up_logs_and_stays_finite() {
    let m = model(4e6, 4, 2.0, |_, _| 500.0, Some(0.11));
    let out = spin_up(
        &m,
        &ModelState::zero(m.n()),
        30.0 * DAY,
        0.1 * DAY,
        Scheme::Rk4,
        50,
    )
    .unwrap();
    assert_eq!(out.log.len(), 1 + 300 / 50);
    assert!((out.state.t - 30.0 * DAY).abs() < 1e-6);
    assert!(out.log.windows(2).all(|w| w[1].t > w[0].t));
    assert!(out.log.last().unwrap().energy > 0.0);
}

#[test]
fn linear_forced_problem_reaches_steady_state() {
    let l = 4e6;
    let mut m = model(l, 4, 1.0, |_, _| 500.0, Some(0.11));
    m.terms.advection = false;
    m.params.sigma = 1e-6;
    let (s, report) = run_to_stationary(
        &m,
        &ModelState::zero(m.n()),
        400.0 * DAY,
        DAY,
        10.0 * DAY,
        1e-6,
        Scheme::Rk4,
    )
    .unwrap();
    assert!(report.converged, "history {:?}", report.history);
    let (dw, _) = m.tendency(&s.omega).unwrap();
    let forcing = m.forcing_scale();
    assert!(norm2(&dw) < 1e-4 * forcing);
}

#[test]
fn trajectory_sampling_is_uniform() {
    let m = model(4e6, 3, 1.0, |_, _| 500.0, Some(0.11));
    let t = integrate_trajectory(&m, &ModelState::zero(m.n()), 11, 0.1 * DAY, Scheme::Rk4).unwrap();
    assert_eq!(t.len(), 11);
    assert!((t.dt() - 0.1 * DAY).abs() < 1e-9);
    let w = t.window(2, 4).unwrap();
    assert_eq!(w.len(), 5);
    assert!(t.window(8, 3).is_err());
}

#[test]
fn euler_and_rk4_agree_for_small_steps() {
    let m = model(4e6, 3, 1.0, |_, _| 500.0, Some(0.11));
    let s0 = ModelState::zero(m.n());
    let a = m.advance(&s0, 0.01 * DAY, 100, Scheme::Euler).unwrap();
    let b = m.advance(&s0, 0.01 * DAY, 100, Scheme::Rk4).unwrap();
    let diff: Vec<f64> = a.omega.iter().zip(&b.omega).map(|(x, y)| x - y).collect();
    assert!(norm2(&diff) < 1e-2 * norm2(&b.omega));
}
