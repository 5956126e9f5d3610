use std::sync::Arc;

use super::forcing::{Forcing, ModelParams};
use crate::error::{Error, Result};
use crate::fem::{assemble_hmat, potential_vorticity, FemCore};
use crate::linalg::{norm2, CsrMatrix, SkylineCholesky};
use crate::mesh::DofMap;

/// Nodal vorticity and transport streamfunction at time `t`.
///
/// Both vectors have one entry per dof; boundary entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub omega: Vec<f64>,
    pub psi: Vec<f64>,
    pub t: f64,
}

impl ModelState {
    pub fn zero(n: usize) -> Self {
        Self {
            omega: vec![0.0; n],
            psi: vec![0.0; n],
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Rk4,
}

/// Switches for the individual tendency terms. All on by default; test
/// harnesses turn terms off to isolate one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub advection: bool,
    pub viscosity: bool,
    pub friction: bool,
    pub forcing: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            advection: true,
            viscosity: true,
            friction: true,
            forcing: true,
        }
    }
}

/// Discrete barotropic vorticity model on a fixed mesh and topography.
///
/// Semi-discrete equations for the interior vorticity `ω_I`:
///
/// `M_II dω_I/dt = -N_I(ψ, q) - ν C_II ω_I - σ M_II ω_I + (M F)_I`
///
/// with `N_k = Σ_ij ψ_i q_j ⟨J(p_i, p_j), p_k⟩`, nodal
/// `q = (ω + f0 + β y) / H`, and the streamfunction from
/// `Hmat_II ψ_I = -(M ω)_I`, where `Hmat` is the Galerkin matrix of
/// `-∇·(1/H)∇`.
#[derive(Debug, Clone)]
pub struct Model {
    pub dofmap: Arc<DofMap>,
    pub core: Arc<FemCore>,
    pub params: ModelParams,
    pub depth: Vec<f64>,
    pub inv_h: Vec<f64>,
    pub hmat: CsrMatrix,
    pub forcing: Forcing,
    pub terms: Terms,
    hmat_ii: CsrMatrix,
    hmat_factor: SkylineCholesky,
    mass_ii: CsrMatrix,
    mass_factor: SkylineCholesky,
    stiff_ii: CsrMatrix,
    /// `(M F)_I`
    forcing_load: Vec<f64>,
}

impl Model {
    pub fn new(
        dofmap: Arc<DofMap>,
        core: Arc<FemCore>,
        params: ModelParams,
        depth: Vec<f64>,
        forcing: Forcing,
    ) -> Result<Self> {
        params.validate()?;
        let n = dofmap.n();
        let n0 = dofmap.n0();
        if core.n() != n {
            return Err(Error::DimensionMismatch {
                what: "operators vs dof map",
                expected: n,
                found: core.n(),
            });
        }
        for (what, len) in [("depth", depth.len()), ("forcing", forcing.values.len())] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: n,
                    found: len,
                });
            }
        }
        if let Some(v) = depth.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-positive depth {v}")));
        }
        let inv_h: Vec<f64> = depth.iter().map(|h| 1.0 / h).collect();
        let hmat = assemble_hmat(&core, &inv_h)?;
        let hmat_ii = hmat.leading_block(n0, n0);
        let hmat_factor = SkylineCholesky::factor(&hmat_ii).map_err(|e| Error::Solver {
            msg: format!("elliptic operator: {e}"),
            condition_estimate: f64::INFINITY,
        })?;
        let mass_ii = core.mass.leading_block(n0, n0);
        let mass_factor = SkylineCholesky::factor(&mass_ii)?;
        let stiff_ii = core.stiffness.leading_block(n0, n0);
        let forcing_load = core.mass.mul_vec_block(n0, n, &forcing.values);
        Ok(Self {
            dofmap,
            core,
            params,
            depth,
            inv_h,
            hmat,
            forcing,
            terms: Terms::default(),
            hmat_ii,
            hmat_factor,
            mass_ii,
            mass_factor,
            stiff_ii,
            forcing_load,
        })
    }

    pub fn n(&self) -> usize {
        self.dofmap.n()
    }

    pub fn n0(&self) -> usize {
        self.dofmap.n0()
    }

    pub fn hmat_interior(&self) -> &CsrMatrix {
        &self.hmat_ii
    }

    pub fn hmat_factor(&self) -> &SkylineCholesky {
        &self.hmat_factor
    }

    pub fn mass_interior(&self) -> &CsrMatrix {
        &self.mass_ii
    }

    pub fn mass_factor(&self) -> &SkylineCholesky {
        &self.mass_factor
    }

    pub fn stiffness_interior(&self) -> &CsrMatrix {
        &self.stiff_ii
    }

    pub fn forcing_load(&self) -> &[f64] {
        &self.forcing_load
    }

    /// Nodal potential vorticity `(ω + f0 + β y) / H`.
    pub fn potential_vorticity(&self, omega: &[f64]) -> Vec<f64> {
        potential_vorticity(
            &self.dofmap,
            omega,
            self.params.f0,
            self.params.beta,
            &self.inv_h,
        )
    }

    /// Solves `Hmat_II ψ_I = rhs_I` and returns the full-length field with a
    /// zero boundary. Up to two rounds of iterative refinement are applied
    /// while the relative residual exceeds `1e-10`.
    pub fn solve_elliptic(&self, rhs_interior: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs_interior.len(), self.n0());
        let mut x = self.hmat_factor.solve(rhs_interior);
        let scale = norm2(rhs_interior);
        if scale > 0.0 {
            let residual = |x: &[f64]| -> Vec<f64> {
                let ax = self.hmat_ii.mul_vec(x);
                rhs_interior.iter().zip(&ax).map(|(b, a)| b - a).collect()
            };
            let mut r = residual(&x);
            for _ in 0..2 {
                if norm2(&r) <= 1e-10 * scale {
                    break;
                }
                let dx = self.hmat_factor.solve(&r);
                x.iter_mut().zip(&dx).for_each(|(a, d)| *a += d);
                r = residual(&x);
            }
            let rel = norm2(&r) / scale;
            if rel > 1e-10 {
                return Err(Error::Solver {
                    msg: format!("streamfunction residual {rel:.3e}"),
                    condition_estimate: self.hmat_factor.condition_estimate(),
                });
            }
        }
        x.resize(self.n(), 0.0);
        Ok(x)
    }

    /// Streamfunction of a vorticity field (boundary entries of `omega` are
    /// ignored and treated as zero).
    pub fn solve_streamfunction(&self, omega: &[f64]) -> Result<Vec<f64>> {
        let n0 = self.n0();
        let rhs: Vec<f64> = self
            .mass_ii
            .mul_vec(&omega[..n0])
            .iter()
            .map(|v| -v)
            .collect();
        self.solve_elliptic(&rhs)
    }

    /// `‖(Hmat ψ + M ω)_I‖ / ‖(M ω)_I‖`, or the absolute residual when `ω = 0`.
    pub fn streamfunction_residual(&self, state: &ModelState) -> f64 {
        let n0 = self.n0();
        let n = self.n();
        let hp = self.hmat.mul_vec_block(n0, n, &state.psi);
        let mw = self.core.mass.mul_vec_block(n0, n, &state.omega);
        let r: Vec<f64> = hp.iter().zip(&mw).map(|(a, b)| a + b).collect();
        let s = norm2(&mw);
        if s > 0.0 {
            norm2(&r) / s
        } else {
            norm2(&r)
        }
    }

    /// Interior tendency `dω_I/dt` and the streamfunction of `omega`.
    pub fn tendency(&self, omega: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let psi = self.solve_streamfunction(omega)?;
        let dw = self.tendency_with_psi(omega, &psi);
        Ok((dw, psi))
    }

    /// Tendency for a given (consistent) streamfunction.
    pub fn tendency_with_psi(&self, omega: &[f64], psi: &[f64]) -> Vec<f64> {
        let n0 = self.n0();
        let mut rhs = vec![0.0; n0];
        if self.terms.advection {
            let q = self.potential_vorticity(omega);
            let adv = self.core.jacobian_form(psi, &q);
            rhs.iter_mut().zip(&adv[..n0]).for_each(|(r, a)| *r -= a);
        }
        if self.terms.viscosity {
            let c = self.stiff_ii.mul_vec(&omega[..n0]);
            let nu = self.params.nu;
            rhs.iter_mut().zip(&c).for_each(|(r, v)| *r -= nu * v);
        }
        if self.terms.forcing {
            rhs.iter_mut()
                .zip(&self.forcing_load)
                .for_each(|(r, f)| *r += f);
        }
        self.mass_factor.solve_in_place(&mut rhs);
        if self.terms.friction {
            let s = self.params.sigma;
            rhs.iter_mut()
                .zip(&omega[..n0])
                .for_each(|(r, w)| *r -= s * w);
        }
        rhs
    }

    /// Interior dof norm of the forcing tendency `‖F_I‖`; the reference scale
    /// for stationarity residuals.
    pub fn forcing_scale(&self) -> f64 {
        norm2(&self.forcing.values[..self.n0()])
    }

    /// One explicit step of length `dt`. `state.psi` must be the
    /// streamfunction of `state.omega`.
    pub fn step(&self, state: &ModelState, dt: f64, scheme: Scheme) -> Result<ModelState> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let n0 = self.n0();
        let n = self.n();
        let w0 = &state.omega[..n0];
        let combine = |base: &[f64], k: &[f64], c: f64| -> Vec<f64> {
            let mut v: Vec<f64> = base.iter().zip(k).map(|(a, b)| a + c * b).collect();
            v.resize(n, 0.0);
            v
        };
        let omega = match scheme {
            Scheme::Euler => {
                let k1 = self.tendency_with_psi(&state.omega, &state.psi);
                combine(w0, &k1, dt)
            }
            Scheme::Rk4 => {
                let k1 = self.tendency_with_psi(&state.omega, &state.psi);
                let (k2, _) = self.tendency(&combine(w0, &k1, 0.5 * dt))?;
                let (k3, _) = self.tendency(&combine(w0, &k2, 0.5 * dt))?;
                let (k4, _) = self.tendency(&combine(w0, &k3, dt))?;
                let mut v: Vec<f64> = (0..n0)
                    .map(|i| w0[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect();
                v.resize(n, 0.0);
                v
            }
        };
        let psi = self.solve_streamfunction(&omega)?;
        Ok(ModelState {
            omega,
            psi,
            t: state.t + dt,
        })
    }

    /// Advances `steps` times; aborts on the first non-finite value with the
    /// number of completed steps.
    pub fn advance(
        &self,
        state: &ModelState,
        dt: f64,
        steps: usize,
        scheme: Scheme,
    ) -> Result<ModelState> {
        self.check_cfl(state, dt);
        let mut s = state.clone();
        for k in 0..steps {
            s = self.step(&s, dt, scheme)?;
            if s.omega.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { step: k + 1 });
            }
        }
        Ok(s)
    }

    /// Heuristic stability numbers `(advective, diffusive)` for step `dt`:
    /// `max |u| dt / d` and `ν dt / d²` over elements, where `d` is half the
    /// element diameter (the P2 node spacing) and `|u| = |∇ψ| / H` at the
    /// element centroid.
    pub fn cfl_numbers(&self, state: &ModelState, dt: f64) -> (f64, f64) {
        let coords = self.dofmap.dof_coords();
        let mut adv: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for dofs in self.dofmap.triangle_dofs() {
            let p = [coords[dofs[0]], coords[dofs[1]], coords[dofs[2]]];
            let el = crate::fem::basis::P2Element::new(p);
            let g = el.gradients([1.0 / 3.0; 3]);
            let (mut gx, mut gy) = (0.0, 0.0);
            let mut hinv = 0.0;
            for a in 0..6 {
                gx += state.psi[dofs[a]] * g[a][0];
                gy += state.psi[dofs[a]] * g[a][1];
                hinv +=
                    self.inv_h[dofs[a]] * crate::fem::basis::P2Element::values([1.0 / 3.0; 3])[a];
            }
            let d = 0.5
                * [(0, 1), (1, 2), (2, 0)]
                    .iter()
                    .map(|&(i, j)| (p[i][0] - p[j][0]).hypot(p[i][1] - p[j][1]))
                    .fold(0.0, f64::max);
            adv = adv.max(gx.hypot(gy) * hinv * dt / d);
            diff = diff.max(self.params.nu * dt / (d * d));
        }
        (adv, diff)
    }

    fn check_cfl(&self, state: &ModelState, dt: f64) {
        let (adv, diff) = self.cfl_numbers(state, dt);
        if adv > 1.0 || diff > 0.5 {
            log::warn!("time step {dt} s may be unstable: advective number {adv:.3}, diffusive number {diff:.3}");
        }
    }

    /// `(energy, enstrophy)` with energy `-ψᵀ M ω = ψᵀ Hmat ψ = ∫ |∇ψ|² / H`
    /// and enstrophy `ωᵀ M ω`.
    pub fn diagnostics(&self, state: &ModelState) -> (f64, f64) {
        let mw = self.core.mass.mul_vec(&state.omega);
        let energy = -crate::linalg::dot(&state.psi, &mw);
        let enstrophy = crate::linalg::dot(&state.omega, &mw);
        (energy, enstrophy)
    }
}
