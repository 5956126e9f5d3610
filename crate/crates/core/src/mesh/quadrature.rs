//! Quadrature rules on the reference triangle, in barycentric coordinates with
//! weights normalized to sum to one (multiply by the triangle area).

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// Total polynomial degree integrated exactly.
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integral of `f(x, y)` over the reference triangle (0,0), (1,0), (0,1).
    pub fn integrate_reference(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        0.5 * self
            .points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p[1], p[2]))
            .sum::<f64>()
    }
}

/// Rule exact for bivariate polynomials of total degree `degree` (1 to 6).
pub fn reference_quadrature(degree: usize) -> Result<QuadratureRule> {
    match degree {
        1 => Ok(QuadratureRule {
            degree: 1,
            points: vec![[1.0 / 3.0; 3]],
            weights: vec![1.0],
        }),
        2 => Ok(QuadratureRule {
            degree: 2,
            points: vec![[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
            weights: vec![1.0 / 3.0; 3],
        }),
        3 => Ok(conical_product(3)),
        4 | 5 => Ok(radon7()),
        6 => Ok(conical_product(6)),
        _ => Err(Error::InvalidParameter(format!(
            "quadrature degree {degree} not in 1..=6"
        ))),
    }
}

/// Seven-point rule of degree 5 with closed-form nodes.
fn radon7() -> QuadratureRule {
    let s15 = 15f64.sqrt();
    let a = (6.0 - s15) / 21.0;
    let b = (6.0 + s15) / 21.0;
    let wa = (155.0 - s15) / 1200.0;
    let wb = (155.0 + s15) / 1200.0;
    let orbit = |t: f64| {
        let u = 1.0 - 2.0 * t;
        [[u, t, t], [t, u, t], [t, t, u]]
    };
    let mut points = vec![[1.0 / 3.0; 3]];
    let mut weights = vec![9.0 / 40.0];
    for (t, w) in [(a, wa), (b, wb)] {
        for p in orbit(t) {
            points.push(p);
            weights.push(w);
        }
    }
    QuadratureRule {
        degree: 5,
        points,
        weights,
    }
}

/// Collapsed Gauss-Legendre product rule through the map
/// `x = u, y = v (1 - u)` from the unit square.
fn conical_product(degree: usize) -> QuadratureRule {
    let n = (degree + 2).div_ceil(2);
    let (nodes, w) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in nodes.iter().zip(&w) {
        for (v, wv) in nodes.iter().zip(&w) {
            let x = *u;
            let y = v * (1.0 - u);
            points.push([1.0 - x - y, x, y]);
            // reference area 1/2 folded into normalization
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    QuadratureRule {
        degree,
        points,
        weights,
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x.push(0.5 * (1.0 - z));
        w.push(1.0 / ((1.0 - z * z) * dp * dp));
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, dp)
}
