//! Tangent-linear operators of the vorticity model with respect to the
//! vorticity and to relative topography perturbations `χ = δH/H`.
//!
//! Linearizing the semi-discrete model about a consistent state gives
//!
//! `M_II δω̇_I = (-A1 - A2 K - ν C - σ M)_II δω_I + (B1 + A2 Hmat_II⁻¹ P)_I χ`
//!
//! with `K = Hmat_II⁻¹ M_II` and the blocks of
//! [`assemble_tangent_blocks`](crate::fem::assemble_tangent_blocks). The
//! perturbation streamfunction solves `Hmat_II δψ_I = -(M δω)_I + (P χ)_I`.

mod fd;
mod newton;

pub use fd::{fd_verify, write_fd_csv, FdEntry, FdReport};
pub use newton::{refine_stationary, stationary_residual, StationaryPoint};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::dynamics::{Model, ModelState};
use crate::error::{Error, Result};
use crate::fem::{assemble_pmat, assemble_tangent_blocks};
use crate::linalg::{norm2, CsrMatrix};

/// States whose streamfunction residual exceeds this are rejected.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Column chunk used when applying the operators to dense blocks.
const BLOCK: usize = 32;

/// Tangent-linear operators at one state, restricted to interior rows.
///
/// Immutable once built; applications from several threads are safe.
#[derive(Debug, Clone)]
pub struct TangentOperators<'a> {
    model: &'a Model,
    /// `A1_II`, or `None` when advection is switched off.
    a1: Option<CsrMatrix>,
    a2: Option<CsrMatrix>,
    /// `B1_{I,:}`
    b1: Option<CsrMatrix>,
    /// `P_{I,:}`
    p: CsrMatrix,
    state_time: f64,
}

impl<'a> TangentOperators<'a> {
    /// Linearizes `model` about `state`. The state's streamfunction must
    /// solve the elliptic problem to [`CONSISTENCY_TOL`].
    pub fn new(model: &'a Model, state: &ModelState) -> Result<Self> {
        let n = model.n();
        for (what, v) in [
            ("state vorticity", &state.omega),
            ("state streamfunction", &state.psi),
        ] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        let residual = model.streamfunction_residual(state);
        if !(residual <= CONSISTENCY_TOL) {
            return Err(Error::InconsistentState { residual });
        }
        let n0 = model.n0();
        let p = assemble_pmat(&model.core, &model.inv_h, &state.psi)?.leading_block(n0, n);
        let (a1, a2, b1) = if model.terms.advection {
            let q = model.potential_vorticity(&state.omega);
            let blocks = assemble_tangent_blocks(&model.core, &state.psi, &q, &model.inv_h)?;
            (
                Some(blocks.a1.leading_block(n0, n0)),
                Some(blocks.a2.leading_block(n0, n0)),
                Some(blocks.b1.leading_block(n0, n)),
            )
        } else {
            (None, None, None)
        };
        Ok(Self {
            model,
            a1,
            a2,
            b1,
            p,
            state_time: state.t,
        })
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn state_time(&self) -> f64 {
        self.state_time
    }

    pub fn n0(&self) -> usize {
        self.model.n0()
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// `δω̇_I = A δω_I` for an interior vector.
    pub fn apply_a(&self, xi: &[f64]) -> Vec<f64> {
        let n0 = self.n0();
        assert_eq!(xi.len(), n0, "apply_a expects an interior vector");
        let m = self.model;
        let mut rhs = vec![0.0; n0];
        if let (Some(a1), Some(a2)) = (&self.a1, &self.a2) {
            let mut kx = m.mass_interior().mul_vec(xi);
            m.hmat_factor().solve_in_place(&mut kx);
            let t1 = a1.mul_vec(xi);
            let t2 = a2.mul_vec(&kx);
            rhs.iter_mut()
                .zip(t1.iter().zip(&t2))
                .for_each(|(r, (a, b))| *r -= a + b);
        }
        if m.terms.viscosity {
            let c = m.stiffness_interior().mul_vec(xi);
            let nu = m.params.nu;
            rhs.iter_mut().zip(&c).for_each(|(r, v)| *r -= nu * v);
        }
        m.mass_factor().solve_in_place(&mut rhs);
        if m.terms.friction {
            let s = m.params.sigma;
            rhs.iter_mut().zip(xi).for_each(|(r, x)| *r -= s * x);
        }
        rhs
    }

    /// `δω̇_I = B χ` for a full-length relative topography perturbation.
    pub fn apply_b(&self, chi: &[f64]) -> Vec<f64> {
        let n0 = self.n0();
        assert_eq!(chi.len(), self.n(), "apply_b expects a full-length vector");
        let (Some(a2), Some(b1)) = (&self.a2, &self.b1) else {
            return vec![0.0; n0];
        };
        let m = self.model;
        let mut pc = self.p.mul_vec(chi);
        m.hmat_factor().solve_in_place(&mut pc);
        let t2 = a2.mul_vec(&pc);
        let mut rhs = b1.mul_vec(chi);
        rhs.iter_mut().zip(&t2).for_each(|(r, v)| *r += v);
        m.mass_factor().solve_in_place(&mut rhs);
        rhs
    }

    /// `A X` for an interior block `X` (n0 rows).
    pub fn apply_a_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.map_columns(x, |c| self.apply_a(c))
    }

    /// `B X` for a full-length block `X` (n rows).
    pub fn apply_b_block(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.map_columns(x, |c| self.apply_b(c))
    }

    fn map_columns(&self, x: &DMatrix<f64>, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> DMatrix<f64> {
        let n0 = self.n0();
        let chunks: Vec<Vec<f64>> = (0..x.ncols())
            .collect::<Vec<_>>()
            .par_chunks(BLOCK)
            .map(|cols| {
                let mut out = Vec::with_capacity(cols.len() * n0);
                for &c in cols {
                    out.extend(f(x.column(c).as_slice()));
                }
                out
            })
            .collect();
        DMatrix::from_vec(n0, x.ncols(), chunks.concat())
    }

    /// Dense interior `A` (n0 × n0).
    pub fn dense_a(&self) -> DMatrix<f64> {
        self.apply_a_block(&DMatrix::identity(self.n0(), self.n0()))
    }

    /// Dense `B` (n0 × n).
    pub fn dense_b(&self) -> DMatrix<f64> {
        self.apply_b_block(&DMatrix::identity(self.n(), self.n()))
    }

    /// `δψ` (full length, zero boundary) from an interior `δω` and a
    /// full-length `χ`.
    pub fn recover_delta_psi(&self, delta_omega: &[f64], chi: &[f64]) -> Result<Vec<f64>> {
        let n0 = self.n0();
        let n = self.n();
        if delta_omega.len() != n0 {
            return Err(Error::DimensionMismatch {
                what: "interior vorticity perturbation",
                expected: n0,
                found: delta_omega.len(),
            });
        }
        if chi.len() != n {
            return Err(Error::DimensionMismatch {
                what: "topography perturbation",
                expected: n,
                found: chi.len(),
            });
        }
        let mut rhs: Vec<f64> = self
            .model
            .mass_interior()
            .mul_vec(delta_omega)
            .iter()
            .map(|v| -v)
            .collect();
        let p = self.p.mul_vec(chi);
        rhs.iter_mut().zip(&p).for_each(|(r, v)| *r += v);
        self.model.solve_elliptic(&rhs)
    }

    /// One explicit Euler step of the tangent equation.
    pub fn euler_step(&self, delta_omega: &[f64], chi: &[f64], tau: f64) -> Vec<f64> {
        let a = self.apply_a(delta_omega);
        let b = self.apply_b(chi);
        delta_omega
            .iter()
            .zip(a.iter().zip(&b))
            .map(|(d, (x, y))| d + tau * (x + y))
            .collect()
    }

    /// `‖B 1‖` relative to `‖B‖_F ‖1‖` (uses a dense `B`).
    pub fn kernel_defect(&self) -> f64 {
        let ones = vec![1.0; self.n()];
        let b1 = norm2(&self.apply_b(&ones));
        let scale = self.dense_b().norm() * (self.n() as f64).sqrt();
        if scale > 0.0 {
            b1 / scale
        } else {
            b1
        }
    }
}
