//! P2 finite-element operators: mass and stiffness matrices, the Jacobian
//! triple-product tensor, the topography-weighted elliptic matrix, the
//! topography-perturbation matrix and the linearization blocks of the
//! advection term.

mod assemble;
pub mod basis;
mod tensor;

pub use assemble::{
    assemble_core, assemble_hmat, assemble_pmat, assemble_tangent_blocks, assemble_weighted,
    potential_vorticity, FemCore, TangentBlocks, WeightedOperators,
};
pub use tensor::TripleTensor;

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::mesh::DofMap;

/// A scalar field to be sampled at the dof coordinates.
pub enum Field<'a> {
    Function(&'a dyn Fn(f64, f64) -> f64),
    Grid(&'a Grid2D),
}

/// Point values of `field` at every dof (collocation, not a projection).
pub fn interpolate_nodal(field: Field<'_>, dofmap: &DofMap) -> Result<Vec<f64>> {
    match field {
        Field::Function(f) => Ok(dofmap.interpolate(f)),
        Field::Grid(g) => dofmap
            .dof_coords()
            .iter()
            .map(|p| g.interpolate(p[0], p[1]))
            .collect(),
    }
}

/// Value of the P2 expansion with nodal values `coeffs` at barycentric
/// coordinates `l` inside triangle `t`.
pub fn eval_on_triangle(dofmap: &DofMap, t: usize, coeffs: &[f64], l: [f64; 3]) -> Result<f64> {
    if coeffs.len() != dofmap.n() {
        return Err(Error::DimensionMismatch {
            what: "nodal coefficients",
            expected: dofmap.n(),
            found: coeffs.len(),
        });
    }
    let d = dofmap.triangle_dofs()[t];
    let c = [
        coeffs[d[0]],
        coeffs[d[1]],
        coeffs[d[2]],
        coeffs[d[3]],
        coeffs[d[4]],
        coeffs[d[5]],
    ];
    Ok(basis::eval_local(&c, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_graded_square_mesh, reference_quadrature, DofMap};

    fn setup(n: usize, ratio: f64) -> (DofMap, FemCore) {
        let mesh = generate_graded_square_mesh(1.0, n, ratio).unwrap();
        let d = DofMap::new(&mesh);
        let core = assemble_core(&d, &reference_quadrature(4).unwrap()).unwrap();
        (d, core)
    }

    #[test]
    fn mass_partition_of_unity() {
        let (_, core) = setup(3, 2.0);
        let ones = vec![1.0; core.n()];
        let m1 = core.mass.mul_vec(&ones);
        let total: f64 = m1.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for (a, b) in m1.iter().zip(&core.basis_integrals) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn stiffness_annihilates_constants() {
        let (_, core) = setup(3, 2.0);
        let c1 = core.stiffness.mul_vec(&vec![1.0; core.n()]);
        let norm = crate::linalg::norm2(&c1);
        assert!(norm <= 1e-12 * core.stiffness.norm_fro());
    }

    #[test]
    fn jacobian_is_exactly_antisymmetric() {
        let (_, core) = setup(2, 1.0);
        core.jacobian_tensor().for_each(|k, j, i, v| {
            assert_eq!(core.jacobian(k, j, i), -v);
        });
    }

    #[test]
    fn flat_bottom_hmat_is_scaled_stiffness() {
        let (d, core) = setup(3, 2.0);
        let h0 = 500.0;
        let h = assemble_hmat(&core, &vec![1.0 / h0; d.n()]).unwrap();
        let scale = core.stiffness.max_abs() / h0;
        for k in 0..d.n() {
            for (j, v) in core.stiffness.row(k) {
                assert!((h.get(k, j) - v / h0).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn zero_streamfunction_gives_zero_pmat() {
        let (d, core) = setup(2, 1.0);
        let p = assemble_pmat(&core, &vec![1.0; d.n()], &vec![0.0; d.n()]).unwrap();
        assert_eq!(p.max_abs(), 0.0);
    }

    #[test]
    fn rejects_nonpositive_inverse_depth() {
        let (d, core) = setup(2, 1.0);
        let mut h = vec![1.0; d.n()];
        h[3] = 0.0;
        assert!(assemble_hmat(&core, &h).is_err());
    }

    #[test]
    fn low_degree_quadrature_rejected() {
        let mesh = generate_graded_square_mesh(1.0, 2, 1.0).unwrap();
        let d = DofMap::new(&mesh);
        assert!(assemble_core(&d, &reference_quadrature(3).unwrap()).is_err());
    }

    #[test]
    fn interpolation_of_linear_and_constant() {
        let (d, _) = setup(2, 1.0);
        let seven = interpolate_nodal(Field::Function(&|_, _| 7.0), &d).unwrap();
        assert!(seven.iter().all(|&v| v == 7.0));
        let x = interpolate_nodal(Field::Function(&|x, _| x), &d).unwrap();
        for (v, p) in x.iter().zip(d.dof_coords()) {
            assert_eq!(*v, p[0]);
        }
    }
}
