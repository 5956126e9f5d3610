use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::dynamics::Model;
use crate::error::{Error, Result};
use crate::mesh::DofMap;

/// Singular values below `NULL_THRESHOLD · λ_max` count as zero.
pub const NULL_THRESHOLD: f64 = 1e-10;

/// Boundary-mass fraction from which a null vector counts as boundary
/// localized.
pub const BOUNDARY_FRACTION: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseNorm {
    /// `δωᵀ M_II δω`
    Enstrophy,
    /// `δωᵀ M_II C_II⁻¹ M_II δω`, the discrete inverse-Laplacian form.
    Energy,
    /// Raw coefficients.
    Euclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlNorm {
    /// `χᵀ M χ` with the full consistent mass matrix.
    Mass,
    Euclidean,
}

/// Quadratic forms on the response (interior, `K`) and control (all dofs,
/// `W`) sides.
#[derive(Debug, Clone, PartialEq)]
pub struct NormOperator {
    pub response: DMatrix<f64>,
    pub control: DMatrix<f64>,
}

impl NormOperator {
    pub fn new(model: &Model, response: ResponseNorm, control: ControlNorm) -> Result<Self> {
        let (n, n0) = (model.n(), model.n0());
        let mass_ii = model.mass_interior().to_dense();
        let response = match response {
            ResponseNorm::Enstrophy => mass_ii,
            ResponseNorm::Euclidean => DMatrix::identity(n0, n0),
            ResponseNorm::Energy => {
                let c = Cholesky::new(model.stiffness_interior().to_dense())
                    .ok_or_else(|| Error::NotPositiveDefinite("interior stiffness".into()))?;
                let k = &mass_ii * c.solve(&mass_ii);
                (&k + k.transpose()) * 0.5
            }
        };
        let control = match control {
            ControlNorm::Mass => model.core.mass.to_dense(),
            ControlNorm::Euclidean => DMatrix::identity(n, n),
        };
        Ok(Self { response, control })
    }

    pub fn from_forms(response: DMatrix<f64>, control: DMatrix<f64>) -> Result<Self> {
        for (what, m) in [("response form", &response), ("control form", &control)] {
            if !m.is_square() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: m.nrows(),
                    found: m.ncols(),
                });
            }
            let asym = (m - m.transpose()).norm();
            if asym > 1e-12 * m.norm() {
                return Err(Error::InvalidParameter(format!("{what} is not symmetric")));
            }
        }
        Ok(Self { response, control })
    }

    /// Both forms multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            response: &self.response * c,
            control: &self.control * c,
        }
    }
}

/// Singular triplets of `G` between the `K` and `W` inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySpectrum {
    /// Descending, one per control dof (zeros past the response dimension).
    pub singular_values: Vec<f64>,
    /// Columns `φ_i` (n × n), `W`-orthonormal.
    pub right_vectors: DMatrix<f64>,
    /// Columns (n0 × n0), `K`-orthonormal for nonzero singular values.
    pub left_vectors: DMatrix<f64>,
    pub null_dim: usize,
    /// Absolute threshold used for `null_dim`.
    pub threshold: f64,
}

impl SensitivitySpectrum {
    pub fn lambda_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Columns of the right vectors below the null threshold.
    pub fn null_vectors(&self) -> DMatrix<f64> {
        let n = self.right_vectors.nrows();
        let start = self.singular_values.len() - self.null_dim;
        self.right_vectors
            .view((0, start), (n, self.null_dim))
            .into_owned()
    }

    /// CSV `index,singular_value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,singular_value")?;
        for (i, s) in self.singular_values.iter().enumerate() {
            writeln!(w, "{},{:e}", i + 1, s)?;
        }
        Ok(())
    }
}

fn factor(form: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    Cholesky::new(form.clone())
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// SVD of `R G S⁻¹` with `K = RᵀR` and `W = SᵀS`. `G` is zero-padded to a
/// square matrix so that the full control space is resolved.
pub fn compute_spectrum(g: &DMatrix<f64>, norm: &NormOperator) -> Result<SensitivitySpectrum> {
    let (n0, n) = g.shape();
    if norm.response.nrows() != n0 || norm.control.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "norm forms vs G",
            expected: n0 * n,
            found: norm.response.nrows() * norm.control.nrows(),
        });
    }
    if n0 > n {
        return Err(Error::InvalidParameter(
            "G has more rows than columns".into(),
        ));
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { step: 0 });
    }
    let lk = factor(&norm.response, "response form")?;
    let lw = factor(&norm.control, "control form")?;
    // Y = G S⁻¹  ⇔  L_w Yᵀ = Gᵀ
    let yt = lw
        .solve_lower_triangular(&g.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("control form".into()))?;
    let x = lk.transpose() * yt.transpose();
    let mut padded = DMatrix::zeros(n, n);
    padded.view_mut((0, 0), (n0, n)).copy_from(&x);
    let svd = padded.svd(true, true);
    let u = svd
        .u
        .ok_or(Error::NotConverged("SVD left vectors".into()))?;
    let vt = svd
        .v_t
        .ok_or(Error::NotConverged("SVD right vectors".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .total_cmp(&svd.singular_values[a])
            .then(a.cmp(&b))
    });

    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i].max(0.0))
        .collect();
    let v_sorted = DMatrix::from_fn(n, n, |r, c| vt[(order[c], r)]);
    let right_vectors = lw
        .tr_solve_lower_triangular(&v_sorted)
        .ok_or_else(|| Error::NotPositiveDefinite("control form".into()))?;
    let u_top = DMatrix::from_fn(n0, n0, |r, c| u[(r, order[c])]);
    let left_vectors = lk
        .tr_solve_lower_triangular(&u_top)
        .ok_or_else(|| Error::NotPositiveDefinite("response form".into()))?;

    let lmax = singular_values[0];
    let threshold = NULL_THRESHOLD * lmax;
    let null_dim = singular_values.iter().filter(|&&s| s <= threshold).count();
    Ok(SensitivitySpectrum {
        singular_values,
        right_vectors,
        left_vectors,
        null_dim,
        threshold,
    })
}

/// Structure of the near-null right singular space.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpaceReport {
    pub null_dim: usize,
    /// `N - N0`, the number of boundary dofs.
    pub boundary_dofs: usize,
    /// Cosine between the constant vector and its projection on the null
    /// space.
    pub constant_overlap: f64,
    /// Boundary-mass fractions of the null basis rotated to maximize them,
    /// descending.
    pub boundary_fractions: Vec<f64>,
    /// Rotated null basis (n × null_dim), Euclidean-orthonormal, columns in
    /// the order of `boundary_fractions`.
    pub rotated_basis: DMatrix<f64>,
}

impl NullSpaceReport {
    /// Rotated null vectors with boundary fraction at least `0.99`.
    pub fn boundary_localized(&self) -> usize {
        self.boundary_fractions
            .iter()
            .filter(|&&f| f >= BOUNDARY_FRACTION)
            .count()
    }

    /// Near-null modes that are not boundary localized (the least
    /// sensitive interior patterns).
    pub fn interior_modes(&self) -> usize {
        self.null_dim - self.boundary_localized()
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "null_dim {}", self.null_dim)?;
        writeln!(w, "boundary_dofs {}", self.boundary_dofs)?;
        writeln!(w, "boundary_localized {}", self.boundary_localized())?;
        writeln!(w, "interior_modes {}", self.interior_modes())?;
        writeln!(w, "constant_overlap {:.12}", self.constant_overlap)?;
        writeln!(w, "boundary_fractions")?;
        for f in &self.boundary_fractions {
            writeln!(w, "{f:.12}")?;
        }
        Ok(())
    }
}

/// Boundary fraction of `v`: `Σ_boundary v_k² / Σ v_k²`.
pub fn boundary_fraction(v: &[f64], dofmap: &DofMap) -> f64 {
    let total: f64 = v.iter().map(|x| x * x).sum();
    let b: f64 = v
        .iter()
        .enumerate()
        .filter(|(k, _)| dofmap.is_boundary(*k))
        .map(|(_, x)| x * x)
        .sum();
    if total > 0.0 {
        b / total
    } else {
        0.0
    }
}

pub fn null_space_report(spectrum: &SensitivitySpectrum, dofmap: &DofMap) -> NullSpaceReport {
    let n = dofmap.n();
    let z = spectrum.null_vectors();
    let k = z.ncols();
    let boundary_dofs = n - dofmap.n0();
    if k == 0 {
        return NullSpaceReport {
            null_dim: 0,
            boundary_dofs,
            constant_overlap: 0.0,
            boundary_fractions: Vec::new(),
            rotated_basis: DMatrix::zeros(n, 0),
        };
    }
    let q = z.qr().q();
    let ones = DVector::from_element(n, 1.0);
    let proj = &q * (q.transpose() * &ones);
    let constant_overlap = proj.norm() / ones.norm();

    let d = DMatrix::from_fn(n, 1, |r, _| if dofmap.is_boundary(r) { 1.0 } else { 0.0 });
    let qd = DMatrix::from_fn(n, k, |r, c| q[(r, c)] * d[(r, 0)]);
    let e = q.transpose() * qd;
    let eig = SymmetricEigen::<f64, Dyn>::new((&e + e.transpose()) * 0.5);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let boundary_fractions = order
        .iter()
        .map(|&i| eig.eigenvalues[i].clamp(0.0, 1.0))
        .collect();
    let y = DMatrix::from_fn(k, k, |r, c| eig.eigenvectors[(r, order[c])]);
    NullSpaceReport {
        null_dim: k,
        boundary_dofs,
        constant_overlap,
        boundary_fractions,
        rotated_basis: q * y,
    }
}
