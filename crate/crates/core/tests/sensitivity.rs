use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topomode::dynamics::{
    integrate_trajectory, two_gyre_forcing, Model, ModelParams, ModelState, Scheme, Trajectory,
};
use topomode::fem::assemble_core;
use topomode::mesh::{generate_graded_square_mesh, reference_quadrature, DofMap, GradedSquare};
use topomode::sensitivity::{
    build_g_iterative, build_g_iterative_frozen, build_g_stationary, build_g_stationary_from,
    compute_spectrum, fit_growth, null_space_report, stationary_g, t0_sweep, ControlNorm,
    NormOperator, ResponseNorm,
};
use topomode::tangent::{refine_stationary, TangentOperators};

const DAY: f64 = 86_400.0;
const L: f64 = 4e6;

fn model(n: usize, ratio: f64, nu: f64) -> Model {
    let mesh = generate_graded_square_mesh(L, n, ratio).unwrap();
    let dofmap = Arc::new(DofMap::new(&mesh));
    let core = Arc::new(assemble_core(&dofmap, &reference_quadrature(4).unwrap()).unwrap());
    let p = ModelParams {
        f0: 1e-4,
        beta: 2e-11,
        sigma: 5e-8,
        nu,
        rho0: 1025.0,
        h0: 500.0,
        l: L,
    };
    let h = dofmap.interpolate(|x, y| {
        500.0 + 100.0 * (2.0 * PI * x / L).sin() * (3.0 * PI * y / L).sin()
    });
    let f = two_gyre_forcing(&p, 0.11, &dofmap).unwrap();
    Model::new(dofmap, core, p, h, f).unwrap()
}

fn spun_up(m: &Model, days: f64) -> ModelState {
    m.advance(
        &ModelState::zero(m.n()),
        0.1 * DAY,
        (days * 10.0) as usize,
        Scheme::Rk4,
    )
    .unwrap()
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn constant_trajectory(s: &ModelState, tau: f64, len: usize) -> Trajectory {
    let states = (0..len)
        .map(|k| ModelState {
            t: s.t + k as f64 * tau,
            ..s.clone()
        })
        .collect();
    Trajectory::new(states).unwrap()
}

#[test]
fn recursion_seed_and_first_step() {
    let m = model(3, 2.0, 500.0);
    let s = spun_up(&m, 10.0);
    let tau = 0.1 * DAY;
    let g0 = build_g_iterative_frozen(&m, &s, tau, 0).unwrap();
    assert_eq!(g0.g.shape(), (m.n0(), m.n()));
    assert!(g0.g.iter().all(|v| *v == 0.0));
    let traj = constant_trajectory(&s, tau, 2);
    let g1 = build_g_iterative(&m, &traj, tau).unwrap();
    let b = TangentOperators::new(&m, &s).unwrap().dense_b();
    assert!(rel(&g1.g, &(tau * &b)) < 1e-14);
    assert!(build_g_iterative(&m, &traj, 2.0 * tau).is_err());
}

#[test]
fn iterative_g_matches_tangent_propagation() {
    let m = model(3, 2.0, 500.0);
    let s = spun_up(&m, 30.0);
    let tau = 0.1 * DAY;
    let traj = integrate_trajectory(&m, &s, 4, tau, Scheme::Rk4).unwrap();
    let g = build_g_iterative(&m, &traj, tau).unwrap();
    assert!((g.t - 3.0 * tau).abs() < 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let chi: Vec<f64> = (0..m.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut dw = vec![0.0; m.n0()];
        for st in &traj.states()[..3] {
            dw = TangentOperators::new(&m, st)
                .unwrap()
                .euler_step(&dw, &chi, tau);
        }
        let gc = &g.g * DVector::from_vec(chi);
        let want = DVector::from_vec(dw);
        assert!((&gc - &want).norm() <= 1e-12 * want.norm());
    }
    assert!(g.kernel_defect() < 1e-10);
}

#[test]
fn closed_form_small_t_limit_and_nilpotent_toy() {
    // Early in the spin-up the tangent is still slow enough (‖A‖ T ≪ 1e-6)
    // for the first-order limit to hold at T = 1 s.
    let mesh = GradedSquare::standard(L).build().unwrap();
    let dofmap = Arc::new(DofMap::new(&mesh));
    let core = Arc::new(assemble_core(&dofmap, &reference_quadrature(4).unwrap()).unwrap());
    let p = model(2, 1.0, 500.0).params;
    let f = two_gyre_forcing(&p, 0.11, &dofmap).unwrap();
    let m = Model::new(dofmap.clone(), core, p, vec![500.0; dofmap.n()], f).unwrap();
    let s = spun_up(&m, 5.0);
    let op = TangentOperators::new(&m, &s).unwrap();
    let t = 1.0;
    let g = build_g_stationary_from(&op, t, 2000).unwrap();
    let b = op.dense_b();
    assert!(rel(&(&g.g / t), &b) <= 1e-6);
    // second-order expansion G/T = B + (T/2) A B + O(T²) at any state
    let s = spun_up(&m, 60.0);
    let op = TangentOperators::new(&m, &s).unwrap();
    let (a, b) = (op.dense_a(), op.dense_b());
    let g = build_g_stationary_from(&op, t, 2000).unwrap();
    let expansion = &b + &a * &b * (t / 2.0);
    assert!(rel(&(&g.g / t), &expansion) <= 1e-10);
    assert!(matches!(
        build_g_stationary_from(&op, 1.0, 4),
        Err(topomode::Error::TooLarge { .. })
    ));

    let a = DMatrix::from_row_slice(2, 2, &[0.0, 3.0, 0.0, 0.0]);
    let t = 2.5;
    let got = stationary_g(&a, &DMatrix::identity(2, 2), t).unwrap();
    let want = DMatrix::identity(2, 2) * t + &a * (t * t / 2.0);
    assert!((got - want).norm() < 1e-14);

    let zero = stationary_g(&a, &DMatrix::identity(2, 2), 0.0).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
}

#[test]
fn stationary_builder_requires_a_steady_state() {
    let m = model(3, 1.0, 3000.0);
    let s = spun_up(&m, 5.0);
    assert!(build_g_stationary(&m, &s, DAY, 2000).is_err());
    let steady = refine_stationary(&m, &spun_up(&m, 100.0), 1e-11, 30).unwrap();
    let g = build_g_stationary(&m, &steady.state, DAY, 2000).unwrap();
    assert!(g.kernel_defect() < 1e-10);
}

#[test]
fn iterative_converges_to_closed_form_at_first_order() {
    let m = model(3, 2.0, 500.0);
    let s = spun_up(&m, 20.0);
    let op = TangentOperators::new(&m, &s).unwrap();
    let t = DAY;
    let exact = build_g_stationary_from(&op, t, 2000).unwrap().g;
    let errs: Vec<(f64, f64)> = [64usize, 128, 256]
        .iter()
        .map(|&k| {
            let g = build_g_iterative_frozen(&m, &s, t / k as f64, k).unwrap();
            (t / k as f64, rel(&g.g, &exact))
        })
        .collect();
    for w in errs.windows(2) {
        let slope = (w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln();
        assert!((slope - 1.0).abs() < 0.1, "{errs:?}");
    }
}

#[test]
fn spectrum_of_zero_and_identity_embeddings() {
    let (n0, n) = (4, 7);
    let id = NormOperator::from_forms(DMatrix::identity(n0, n0), DMatrix::identity(n, n)).unwrap();
    let z = compute_spectrum(&DMatrix::zeros(n0, n), &id).unwrap();
    assert!(z.singular_values.iter().all(|v| *v == 0.0));
    assert_eq!(z.null_dim, n);

    let mut e = DMatrix::zeros(n0, n);
    for i in 0..n0 {
        e[(i, i)] = 1.0;
    }
    let sp = compute_spectrum(&e, &id).unwrap();
    for (i, v) in sp.singular_values.iter().enumerate() {
        let want = if i < n0 { 1.0 } else { 0.0 };
        assert!((v - want).abs() < 1e-14);
    }
    assert_eq!(sp.null_dim, n - n0);
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = &a * a.transpose() + DMatrix::identity(n, n) * n as f64;
    (&s + s.transpose()) * 0.5
}

#[test]
fn weighted_spectrum_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (n0, n) = (6, 9);
    let g = DMatrix::from_fn(n0, n, |_, _| rng.random_range(-1.0..1.0));
    let k = random_spd(n0, &mut rng);
    let w = random_spd(n, &mut rng);
    let norm = NormOperator::from_forms(k.clone(), w.clone()).unwrap();
    let sp = compute_spectrum(&g, &norm).unwrap();
    assert!(sp.singular_values.windows(2).all(|p| p[0] >= p[1]));
    assert!(sp.singular_values.iter().all(|v| *v >= 0.0));
    let phi = &sp.right_vectors;
    assert!((phi.transpose() * &w * phi - DMatrix::identity(n, n)).norm() < 1e-10);
    // left vectors: K-orthonormal and G φ_i = λ_i u_i
    let u = &sp.left_vectors;
    assert!((u.transpose() * &k * u - DMatrix::identity(n0, n0)).norm() < 1e-10);
    for i in 0..n0 {
        let lhs = &g * phi.column(i);
        let rhs = u.column(i) * sp.singular_values[i];
        assert!((lhs - rhs).norm() < 1e-10 * sp.lambda_max());
    }
    // scaling both forms leaves the spectrum unchanged
    let scaled = compute_spectrum(&g, &norm.scaled(7.5)).unwrap();
    for (a, b) in scaled.singular_values.iter().zip(&sp.singular_values) {
        assert!((a - b).abs() <= 1e-12 * sp.lambda_max());
    }
    // Rayleigh quotients never exceed λ_max²
    let l2 = sp.lambda_max().powi(2);
    for _ in 0..1000 {
        let d = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let gd = &g * &d;
        let rq = gd.dot(&(&k * &gd)) / d.dot(&(&w * &d));
        assert!(rq <= l2 * (1.0 + 1e-10));
    }
}

#[test]
fn constructed_kernel_is_recovered() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 8;
    let basis = DMatrix::from_fn(n, 2, |_, _| rng.random_range(-1.0..1.0));
    let q = basis.qr().q();
    let proj = DMatrix::identity(n, n) - &q * q.transpose();
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)) * proj;
    let id = NormOperator::from_forms(DMatrix::identity(n, n), DMatrix::identity(n, n)).unwrap();
    let sp = compute_spectrum(&g, &id).unwrap();
    assert_eq!(sp.null_dim, 2);
    let z = sp.null_vectors();
    let cosines = (q.transpose() * &z).svd(false, false).singular_values;
    assert!(cosines.iter().all(|c| (c - 1.0).abs() < 1e-10), "{cosines}");
}

#[test]
fn null_space_of_a_model_operator() {
    let m = model(3, 2.0, 500.0);
    let s = spun_up(&m, 20.0);
    let g = build_g_iterative_frozen(&m, &s, 0.1 * DAY, 8).unwrap();
    let norm = NormOperator::new(&m, ResponseNorm::Enstrophy, ControlNorm::Mass).unwrap();
    let sp = compute_spectrum(&g.g, &norm).unwrap();
    // G has full row rank here, so its kernel is exactly N - N0 dimensional
    // and already contains the constant direction
    assert_eq!(sp.null_dim, m.n() - m.n0());
    let report = null_space_report(&sp, &m.dofmap);
    assert_eq!(report.boundary_dofs, m.n() - m.n0());
    assert!(report.constant_overlap >= 0.99, "{}", report.constant_overlap);
    assert_eq!(report.boundary_fractions.len(), sp.null_dim);
}

#[test]
fn linear_growth_without_dynamics() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let b = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..1.0));
    let a = DMatrix::zeros(3, 3);
    let id = NormOperator::from_forms(DMatrix::identity(3, 3), DMatrix::identity(5, 5)).unwrap();
    let l1 = compute_spectrum(&b, &id).unwrap().lambda_max();
    let pts: Vec<(f64, f64)> = (0..10)
        .map(|i| {
            let t = 10f64.powf(-3.0 + 0.5 * i as f64);
            let g = stationary_g(&a, &b, t).unwrap();
            let l = compute_spectrum(&g, &id).unwrap().lambda_max();
            assert!((l - t * l1).abs() <= 1e-12 * t * l1);
            (t, l)
        })
        .collect();
    let fit = fit_growth(&pts, 1.0).unwrap();
    assert!((fit.a - 1.0).abs() < 1e-10);
    assert!(fit.t_critical.is_none());
    assert!(fit_growth(&pts[..3], 1.0).is_err());
}

#[test]
fn growth_breakpoint_is_located() {
    // λ = T below T = 1, λ = T³ above: the break sits between 1 and 2
    let pts: Vec<(f64, f64)> = [0.01, 0.03, 0.1, 0.3, 0.6, 1.0, 2.0, 4.0, 8.0, 16.0]
        .iter()
        .map(|&t: &f64| (t, if t <= 1.0 { t } else { t.powi(3) }))
        .collect();
    let fit = fit_growth(&pts, 1.0).unwrap();
    assert_eq!(fit.branch_len, 6);
    assert!((fit.t_critical.unwrap() - 2f64.sqrt()).abs() < 1e-12);
    assert!((fit.large_t_slope.unwrap() - 3.0).abs() < 1e-12);
}

#[test]
fn sweep_on_a_steady_trajectory_is_time_invariant() {
    let m = model(3, 2.0, 500.0);
    let s = spun_up(&m, 20.0);
    let tau = 0.1 * DAY;
    let traj = constant_trajectory(&s, tau, 13);
    let norm = NormOperator::new(&m, ResponseNorm::Enstrophy, ControlNorm::Mass).unwrap();
    let windows = t0_sweep(&m, &traj, 4, 3, &norm, 5).unwrap();
    assert_eq!(windows.len(), 3);
    for w in &windows[1..] {
        for (a, b) in w.lambdas.iter().zip(&windows[0].lambdas) {
            assert!((a - b).abs() <= 1e-10 * b);
        }
    }
    assert!(windows[1].t0 > windows[0].t0);
    let single = t0_sweep(&m, &traj, 4, 1, &norm, 5).unwrap();
    let g = build_g_iterative(&m, &traj.window(0, 4).unwrap(), tau).unwrap();
    let sp = compute_spectrum(&g.g, &norm).unwrap();
    assert_eq!(single[0].lambdas, sp.singular_values[..5].to_vec());
    assert!(t0_sweep(&m, &traj, 4, 4, &norm, 5).is_err());
}
