//! Quadratic Lagrange basis on a triangle, in barycentric coordinates.
//!
//! Local ordering: vertex functions 0, 1, 2, then the midpoint functions of
//! edges (0,1), (1,2), (2,0).

use crate::mesh::Point;

#[derive(Debug, Clone, Copy)]
pub struct P2Element {
    pub area: f64,
    /// Constant gradients of the three barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl P2Element {
    pub fn new(p: [Point; 3]) -> Self {
        let [p0, p1, p2] = p;
        let twice = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let g = |a: Point, b: Point| [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice];
        Self {
            area: 0.5 * twice,
            grad_lambda: [g(p1, p2), g(p2, p0), g(p0, p1)],
        }
    }

    pub fn values(l: [f64; 3]) -> [f64; 6] {
        [
            l[0] * (2.0 * l[0] - 1.0),
            l[1] * (2.0 * l[1] - 1.0),
            l[2] * (2.0 * l[2] - 1.0),
            4.0 * l[0] * l[1],
            4.0 * l[1] * l[2],
            4.0 * l[2] * l[0],
        ]
    }

    pub fn gradients(&self, l: [f64; 3]) -> [[f64; 2]; 6] {
        let g = &self.grad_lambda;
        let lin = |a: f64, ga: [f64; 2], b: f64, gb: [f64; 2]| {
            [4.0 * (a * gb[0] + b * ga[0]), 4.0 * (a * gb[1] + b * ga[1])]
        };
        let vert = |k: usize| {
            let s = 4.0 * l[k] - 1.0;
            [s * g[k][0], s * g[k][1]]
        };
        [
            vert(0),
            vert(1),
            vert(2),
            lin(l[0], g[0], l[1], g[1]),
            lin(l[1], g[1], l[2], g[2]),
            lin(l[2], g[2], l[0], g[0]),
        ]
    }
}

/// Value of a P2 expansion with local coefficients `c` at barycentric `l`.
pub fn eval_local(c: &[f64; 6], l: [f64; 3]) -> f64 {
    P2Element::values(l).iter().zip(c).map(|(p, a)| p * a).sum()
}
