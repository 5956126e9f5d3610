use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;
use topomode::dynamics::{sinusoidal_topography, two_gyre_forcing, Model, ModelParams, ModelState, Scheme};
use topomode::fem::assemble_core;
use topomode::grid::Grid2D;
use topomode::linalg::expm;
use topomode::mesh::{generate_graded_square_mesh, parse_mesh, reference_quadrature, write_mesh, DofMap};
use topomode::sensitivity::{compute_spectrum, NormOperator};
use topomode::tangent::TangentOperators;

const DAY: f64 = 86_400.0;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `∫ x^a y^b` over the reference triangle.
fn monomial_integral(a: u32, b: u32) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 2)
}

fn small_model(n: usize, alpha: f64) -> Model {
    let l = 4e6;
    let mesh = generate_graded_square_mesh(l, n, 2.0).unwrap();
    let dofmap = Arc::new(DofMap::new(&mesh));
    let core = Arc::new(assemble_core(&dofmap, &reference_quadrature(4).unwrap()).unwrap());
    let p = ModelParams {
        f0: 1e-4,
        beta: 2e-11,
        sigma: 5e-8,
        nu: 500.0,
        rho0: 1025.0,
        h0: 500.0,
        l,
    };
    let (h, _) = sinusoidal_topography(alpha, 2, 1, 500.0, l, &dofmap).unwrap();
    let f = two_gyre_forcing(&p, 0.11, &dofmap).unwrap();
    Model::new(dofmap, core, p, h, f).unwrap()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let s: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / s.max(f64::MIN_POSITIVE)
}

fn vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_area_matches_boundary_loop(n in 2usize..7, ratio in 1.0..12.0f64, side in 1.0..1e7f64) {
        let mesh = generate_graded_square_mesh(side, n, ratio).unwrap();
        let a = mesh.area();
        prop_assert!((a - mesh.boundary_enclosed_area()).abs() <= 1e-12 * a);
        prop_assert!((a - side * side).abs() <= 1e-12 * a);
    }

    #[test]
    fn dof_partition_is_interior_first_and_exhaustive(n in 2usize..7, ratio in 1.0..12.0f64) {
        let mesh = generate_graded_square_mesh(1.0, n, ratio).unwrap();
        let d = DofMap::new(&mesh);
        prop_assert_eq!(d.boundary_flags().len(), d.n());
        for k in 0..d.n() {
            prop_assert_eq!(d.is_boundary(k), k >= d.n0());
        }
        // P2 on a closed polygon: one vertex and one midpoint per boundary edge.
        prop_assert_eq!(d.n() - d.n0(), 2 * mesh.boundary_edges().len());
    }

    #[test]
    fn mesh_text_round_trip(n in 2usize..6, ratio in 1.0..10.0f64) {
        let mesh = generate_graded_square_mesh(3.0e6, n, ratio).unwrap();
        let mut buf = Vec::new();
        write_mesh(&mesh, &mut buf).unwrap();
        let back = parse_mesh(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back.vertices(), mesh.vertices());
        prop_assert_eq!(back.triangles(), mesh.triangles());
    }

    #[test]
    fn quadrature_is_exact_up_to_its_degree(
        degree in 1usize..7,
        coeffs in prop::collection::vec(-1.0..1.0f64, 28),
    ) {
        let rule = reference_quadrature(degree).unwrap();
        let terms: Vec<(u32, u32, f64)> = (0..=degree as u32)
            .flat_map(|a| (0..=degree as u32 - a).map(move |b| (a, b)))
            .zip(&coeffs)
            .map(|((a, b), c)| (a, b, *c))
            .collect();
        let exact: f64 = terms.iter().map(|(a, b, c)| c * monomial_integral(*a, *b)).sum();
        let got = rule.integrate_reference(|x, y| {
            terms.iter().map(|(a, b, c)| c * x.powi(*a as i32) * y.powi(*b as i32)).sum()
        });
        let scale: f64 = terms.iter().map(|(a, b, c)| c.abs() * monomial_integral(*a, *b)).sum();
        prop_assert!((got - exact).abs() <= 1e-13 * scale, "{} vs {}", got, exact);
    }

    #[test]
    fn mass_rows_sum_to_basis_integrals(n in 2usize..6, ratio in 1.0..8.0f64) {
        let mesh = generate_graded_square_mesh(2.0, n, ratio).unwrap();
        let d = DofMap::new(&mesh);
        let core = assemble_core(&d, &reference_quadrature(4).unwrap()).unwrap();
        let ones = vec![1.0; d.n()];
        let rows = core.mass.mul_vec(&ones);
        for (r, b) in rows.iter().zip(&core.basis_integrals) {
            prop_assert!((r - b).abs() <= 1e-13 * mesh.area());
        }
        let total: f64 = core.basis_integrals.iter().sum();
        prop_assert!((total - mesh.area()).abs() <= 1e-12 * mesh.area());
    }

    #[test]
    fn bilinear_fields_interpolate_exactly(
        c in prop::array::uniform4(-10.0..10.0f64),
        x in -79.0..-1.0f64,
        y in 11.0..69.0f64,
    ) {
        let f = |x: f64, y: f64| c[0] + c[1] * x + c[2] * y + c[3] * x * y;
        let xs: Vec<f64> = (0..41).map(|i| -80.0 + 2.0 * i as f64).collect();
        let ys: Vec<f64> = (0..31).map(|j| 10.0 + 2.0 * j as f64).collect();
        let g = Grid2D::from_fn(xs, ys, f).unwrap();
        let v = g.interpolate(x, y).unwrap();
        prop_assert!((v - f(x, y)).abs() <= 1e-9 * (1.0 + f(x, y).abs()));
    }

    #[test]
    fn exponential_inverts_under_negation(entries in prop::collection::vec(-3.0..3.0f64, 16)) {
        let z = DMatrix::from_vec(4, 4, entries);
        let prod = expm(&z).unwrap() * expm(&(-&z)).unwrap();
        prop_assert!((prod - DMatrix::<f64>::identity(4, 4)).norm() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tangent_blocks_are_linear(
        alpha in -200.0..200.0f64,
        a in -5.0..5.0f64,
        seed_x in vector(88),
        seed_y in vector(88),
    ) {
        let m = small_model(3, alpha);
        let s = m.advance(&ModelState::zero(m.n()), 0.1 * DAY, 20, Scheme::Rk4).unwrap();
        let op = TangentOperators::new(&m, &s).unwrap();
        let (n, n0) = (m.n(), m.n0());
        let x: Vec<f64> = seed_x.iter().cycle().take(n).copied().collect();
        let y: Vec<f64> = seed_y.iter().cycle().take(n).copied().collect();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();

        let (bx, by) = (op.apply_b(&x), op.apply_b(&y));
        let expect: Vec<f64> = bx.iter().zip(&by).map(|(u, v)| a * u + v).collect();
        prop_assert!(rel(&op.apply_b(&comb), &expect) <= 1e-12);

        let (ax, ay) = (op.apply_a(&x[..n0]), op.apply_a(&y[..n0]));
        let expect: Vec<f64> = ax.iter().zip(&ay).map(|(u, v)| a * u + v).collect();
        prop_assert!(rel(&op.apply_a(&comb[..n0]), &expect) <= 1e-12);

        // One Euler step from rest is exactly tau times B.
        let tau = 0.1 * DAY;
        let step = op.euler_step(&vec![0.0; n0], &x, tau);
        let tb: Vec<f64> = bx.iter().map(|v| tau * v).collect();
        prop_assert_eq!(step, tb);
    }

    #[test]
    fn spectrum_is_sorted_and_invariant_to_common_scaling(
        entries in prop::collection::vec(-1.0..1.0f64, 12),
        c in 1e-3..1e3f64,
        diag_k in prop::collection::vec(0.5..2.0f64, 3),
        diag_w in prop::collection::vec(0.5..2.0f64, 4),
    ) {
        let g = DMatrix::from_vec(3, 4, entries);
        let k = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag_k));
        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag_w));
        let norm = NormOperator::from_forms(k, w).unwrap();
        let sp = compute_spectrum(&g, &norm).unwrap();
        let sv = &sp.singular_values;
        prop_assert!(sv.windows(2).all(|p| p[0] >= p[1]));
        prop_assert!(sv.iter().all(|v| *v >= 0.0));
        // Right vectors are W-orthonormal.
        let gram = sp.right_vectors.transpose() * &norm.control * &sp.right_vectors;
        prop_assert!((gram - DMatrix::<f64>::identity(4, 4)).norm() <= 1e-10);

        let scaled = compute_spectrum(&g, &norm.scaled(c)).unwrap();
        for (a, b) in sv.iter().zip(&scaled.singular_values) {
            prop_assert!((a - b).abs() <= 1e-12 * sv[0].max(f64::MIN_POSITIVE));
        }
    }
}
