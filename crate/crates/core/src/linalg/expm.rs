//! Dense matrix exponential by scaling and squaring with the degree-13 Padé
//! approximant, plus the action of φ₁(Z) = (e^Z − I)/Z on a block of vectors.
//!
//! `expm_phi1(Z, Y)` evaluates the exponential of the augmented matrix
//! `[[Z, Y], [0, 0]]`, whose upper-right block is `φ₁(Z) Y`, without ever
//! forming the augmented matrix. Every power of the augmented matrix is
//! `[[Zᵏ, Zᵏ⁻¹Y], [0, 0]]`, so the Padé numerator and denominator and the
//! squaring phase can all be carried out on the two blocks separately.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn norm1(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols())
        .map(|c| a.column(c).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaling_exponent(z: &DMatrix<f64>) -> i32 {
    let n = norm1(z);
    if n <= THETA13 {
        0
    } else {
        (n / THETA13).log2().ceil() as i32
    }
}

/// Computes `(e^Z, φ₁(Z) Y)`.
pub fn expm_phi1(z: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "square exponent",
            expected: n,
            found: z.ncols(),
        });
    }
    if y.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "phi1 right-hand block",
            expected: n,
            found: y.nrows(),
        });
    }
    if z.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite exponent".into()));
    }

    let s = scaling_exponent(z);
    let scale = 0.5f64.powi(s);
    let a1 = z * scale;
    let ys = y * scale;
    let b = &PADE13;
    let id = DMatrix::<f64>::identity(n, n);

    let a2 = &a1 * &a1;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    // odd part: U = Z W(Z)
    let w_inner = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let w = &a6 * w_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a1 * &w;
    // even part; its upper-right block cancels in P - Q
    let v_inner = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let q = &v - &u;
    let p = &v + &u;
    let lu = q.lu();
    let mut e = lu
        .solve(&p)
        .ok_or_else(|| Error::NotConverged("singular Padé denominator".into()))?;
    let rhs = (&w * &ys) * 2.0;
    let mut f = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NotConverged("singular Padé denominator".into()))?;

    for _ in 0..s {
        f = &e * &f + &f;
        e = &e * &e;
    }
    if e.iter().chain(f.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NotConverged("non-finite matrix exponential".into()));
    }
    Ok((e, f))
}

/// Matrix exponential.
pub fn expm(z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let empty = DMatrix::<f64>::zeros(z.nrows(), 0);
    expm_phi1(z, &empty).map(|(e, _)| e)
}
