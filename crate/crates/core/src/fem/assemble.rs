use std::collections::BTreeMap;

use rayon::prelude::*;

use super::basis::P2Element;
use super::tensor::TripleTensor;
use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::mesh::{DofMap, QuadratureRule};

/// State-independent operators of a mesh.
///
/// Dofs follow the [`DofMap`] numbering (interior first).
#[derive(Debug, Clone, PartialEq)]
pub struct FemCore {
    /// `M[k][j] = ∫ p_k p_j`
    pub mass: CsrMatrix,
    /// `C[k][j] = ∫ ∇p_k · ∇p_j`
    pub stiffness: CsrMatrix,
    /// `∫ p_k`
    pub basis_integrals: Vec<f64>,
    /// `⟨J(p_i, p_j), p_k⟩` stored in slot `(k, j)` with third index `i`.
    jacobian: TripleTensor,
    /// `⟨p_m ∇p_j · ∇p_k⟩` stored in slot `(k, m)` with third index `j`.
    weighted_laplacian: TripleTensor,
    n0: usize,
    quadrature_degree: usize,
}

struct ElementArrays {
    dofs: [usize; 6],
    mass: [[f64; 6]; 6],
    stiff: [[f64; 6]; 6],
    integral: [f64; 6],
    /// `jac[a][b][c] = ∫ (∇p_b × ∇p_c) p_a`, exactly antisymmetric in (b, c)
    jac: [[[f64; 6]; 6]; 6],
    /// `wl[a][c][b] = ∫ p_c ∇p_b · ∇p_a`
    wl: [[[f64; 6]; 6]; 6],
}

fn element_arrays(dofmap: &DofMap, t: usize, quad: &QuadratureRule) -> ElementArrays {
    let dofs = dofmap.triangle_dofs()[t];
    let c = dofmap.dof_coords();
    let el = P2Element::new([c[dofs[0]], c[dofs[1]], c[dofs[2]]]);
    let mut out = ElementArrays {
        dofs,
        mass: [[0.0; 6]; 6],
        stiff: [[0.0; 6]; 6],
        integral: [0.0; 6],
        jac: [[[0.0; 6]; 6]; 6],
        wl: [[[0.0; 6]; 6]; 6],
    };
    for (l, &w) in quad.points.iter().zip(&quad.weights) {
        let w = w * el.area;
        let v = P2Element::values(*l);
        let g = el.gradients(*l);
        for a in 0..6 {
            out.integral[a] += w * v[a];
            for b in 0..6 {
                out.mass[a][b] += w * v[a] * v[b];
                let gg = g[a][0] * g[b][0] + g[a][1] * g[b][1];
                out.stiff[a][b] += w * gg;
                for cc in 0..6 {
                    out.wl[a][cc][b] += w * v[cc] * gg;
                }
            }
            for b in 0..6 {
                for cc in (b + 1)..6 {
                    out.jac[a][b][cc] += w * v[a] * (g[b][0] * g[cc][1] - g[b][1] * g[cc][0]);
                }
            }
        }
    }
    for a in 0..6 {
        for b in 0..6 {
            for cc in (b + 1)..6 {
                out.jac[a][cc][b] = -out.jac[a][b][cc];
            }
        }
    }
    out
}

/// Assembles mass, stiffness, the Jacobian triple-product tensor and the
/// weighted-Laplacian tensor used for the topography-dependent operators.
///
/// Element integrals are evaluated in parallel and merged in element order,
/// so repeated assemblies are bitwise identical.
pub fn assemble_core(dofmap: &DofMap, quad: &QuadratureRule) -> Result<FemCore> {
    if quad.degree < 4 {
        return Err(Error::InvalidParameter(format!(
            "triple products need a quadrature of degree >= 4, got {}",
            quad.degree
        )));
    }
    let n = dofmap.n();
    let locals: Vec<ElementArrays> = (0..dofmap.triangle_dofs().len())
        .into_par_iter()
        .map(|t| element_arrays(dofmap, t, quad))
        .collect();

    let mut mass_t = Vec::with_capacity(36 * locals.len());
    let mut stiff_t = Vec::with_capacity(36 * locals.len());
    let mut integrals = vec![0.0; n];
    let mut jac: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut wl: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    for e in &locals {
        let d = &e.dofs;
        for a in 0..6 {
            integrals[d[a]] += e.integral[a];
            for b in 0..6 {
                mass_t.push((d[a], d[b], e.mass[a][b]));
                stiff_t.push((d[a], d[b], e.stiff[a][b]));
                for cc in 0..6 {
                    // slot (k = a, j = cc), third i = b
                    if b != cc {
                        *jac.entry((d[a], d[cc], d[b])).or_insert(0.0) += e.jac[a][b][cc];
                    }
                    // slot (k = a, m = cc), third j = b
                    *wl.entry((d[a], d[cc], d[b])).or_insert(0.0) += e.wl[a][cc][b];
                }
            }
        }
    }
    Ok(FemCore {
        mass: CsrMatrix::from_triplets(n, n, &mass_t),
        stiffness: CsrMatrix::from_triplets(n, n, &stiff_t),
        basis_integrals: integrals,
        jacobian: TripleTensor::from_sorted(n, &jac),
        weighted_laplacian: TripleTensor::from_sorted(n, &wl),
        n0: dofmap.n0(),
        quadrature_degree: quad.degree,
    })
}

impl FemCore {
    pub fn n(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn quadrature_degree(&self) -> usize {
        self.quadrature_degree
    }

    /// `⟨J(p_i, p_j), p_k⟩`
    pub fn jacobian(&self, k: usize, i: usize, j: usize) -> f64 {
        self.jacobian.get(k, j, i)
    }

    pub fn jacobian_tensor(&self) -> &TripleTensor {
        &self.jacobian
    }

    /// `⟨p_m ∇p_j · ∇p_k⟩`
    pub fn weighted_laplacian(&self, k: usize, m: usize, j: usize) -> f64 {
        self.weighted_laplacian.get(k, m, j)
    }

    /// `N_k = Σ_ij a_i b_j ⟨J(p_i, p_j), p_k⟩`, the Galerkin projection of
    /// `J(a, b)` for nodal expansions `a` and `b`.
    pub fn jacobian_form(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        self.jacobian.contract_both(a, b)
    }
}

/// Topography-weighted elliptic operator `Hmat[k][j] = Σ_m h_m ⟨p_m ∇p_j·∇p_k⟩`
/// for nodal `h = 1/H`. Symmetric positive semi-definite; its interior block
/// is positive definite.
pub fn assemble_hmat(core: &FemCore, inv_h: &[f64]) -> Result<CsrMatrix> {
    check_inv_h(core, inv_h)?;
    let n = core.n();
    let mut trip = Vec::with_capacity(core.weighted_laplacian.nnz());
    core.weighted_laplacian
        .for_each(|k, m, j, v| trip.push((k, j, inv_h[m] * v)));
    Ok(CsrMatrix::from_triplets(n, n, &trip))
}

/// `Pmat[k][m] = h_m Σ_j ψ_j ⟨p_m ∇p_j·∇p_k⟩`, so that `Pmat χ` is the
/// Galerkin form of `∇·(χ/H ∇ψ)` with a nodal product `χ h`.
pub fn assemble_pmat(core: &FemCore, inv_h: &[f64], psi: &[f64]) -> Result<CsrMatrix> {
    check_inv_h(core, inv_h)?;
    check_len(core, psi, "psi")?;
    Ok(core.weighted_laplacian.contract_third(psi, Some(inv_h)))
}

fn check_len(core: &FemCore, v: &[f64], what: &'static str) -> Result<()> {
    if v.len() != core.n() {
        return Err(Error::DimensionMismatch {
            what,
            expected: core.n(),
            found: v.len(),
        });
    }
    Ok(())
}

fn check_inv_h(core: &FemCore, inv_h: &[f64]) -> Result<()> {
    check_len(core, inv_h, "inverse depth")?;
    if let Some((k, v)) = inv_h
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0) || !v.is_finite())
    {
        return Err(Error::InvalidParameter(format!(
            "inverse depth must be positive and finite, dof {k} has {v}"
        )));
    }
    Ok(())
}

/// The elliptic operator and the topography-perturbation operator at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedOperators {
    pub hmat: CsrMatrix,
    pub pmat: CsrMatrix,
}

pub fn assemble_weighted(core: &FemCore, inv_h: &[f64], psi: &[f64]) -> Result<WeightedOperators> {
    Ok(WeightedOperators {
        hmat: assemble_hmat(core, inv_h)?,
        pmat: assemble_pmat(core, inv_h, psi)?,
    })
}

/// Nodal potential-vorticity coefficient `q = (ω + f0 + β y) / H`.
pub fn potential_vorticity(
    dofmap: &DofMap,
    omega: &[f64],
    f0: f64,
    beta: f64,
    inv_h: &[f64],
) -> Vec<f64> {
    dofmap
        .dof_coords()
        .iter()
        .zip(omega)
        .zip(inv_h)
        .map(|((p, w), h)| (w + f0 + beta * p[1]) * h)
        .collect()
}

/// Linearization blocks of the Jacobian term at a state.
///
/// With `T[k][i][j] = ⟨J(p_i, p_j), p_k⟩`, `h = 1/H` and `q` the nodal
/// potential vorticity:
/// `A1[k][j] = Σ_i ψ_i h_j T[k][i][j]`, `A2[k][j] = Σ_i q_i T[k][i][j]`,
/// `B1[k][j] = Σ_i ψ_i q_j T[k][i][j]`. The fourth block has the same formula
/// as `A2` and is served by [`TangentBlocks::b2`].
///
/// `A1 ξ` is the Galerkin form of `J(ψ, ξ/H)`, `A2 η` that of `J(q, η)` and
/// `B1 χ` that of `J(ψ, q χ)`, all with positive sign.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentBlocks {
    pub a1: CsrMatrix,
    pub a2: CsrMatrix,
    pub b1: CsrMatrix,
}

impl TangentBlocks {
    pub fn b2(&self) -> &CsrMatrix {
        &self.a2
    }
}

pub fn assemble_tangent_blocks(
    core: &FemCore,
    psi: &[f64],
    q: &[f64],
    inv_h: &[f64],
) -> Result<TangentBlocks> {
    check_len(core, psi, "psi")?;
    check_len(core, q, "potential vorticity")?;
    check_len(core, inv_h, "inverse depth")?;
    let t = &core.jacobian;
    Ok(TangentBlocks {
        a1: t.contract_third(psi, Some(inv_h)),
        a2: t.contract_third(q, None),
        b1: t.contract_third(psi, Some(q)),
    })
}
