//! Triangulations of the basin, their P2 degree-of-freedom layout and the
//! reference quadrature rules used by assembly.

mod dofmap;
mod generate;
mod io;
mod quadrature;

use std::collections::HashMap;

pub use dofmap::{build_dof_map, DofMap};
pub use generate::{generate_graded_square_mesh, GradedSquare};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use quadrature::{reference_quadrature, QuadratureRule};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// A conforming, positively oriented triangulation.
///
/// Construction through [`Mesh::new`] validates every invariant; triangles
/// with clockwise orientation are flipped, boundary edges are re-oriented to
/// run counter-clockwise around the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<[usize; 2]>,
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    pub fn new(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<[usize; 2]>,
    ) -> Result<Self> {
        let nv = vertices.len();
        if vertices
            .iter()
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::InvalidParameter(
                "non-finite vertex coordinate".into(),
            ));
        }
        for t in &triangles {
            for &v in t {
                if v >= nv {
                    return Err(Error::BadVertexIndex { line: 0, index: v });
                }
            }
        }
        for e in &boundary_edges {
            for &v in e {
                if v >= nv {
                    return Err(Error::BadVertexIndex { line: 0, index: v });
                }
            }
        }

        let (lo, hi) = bounding_box(&vertices);
        let scale = ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2)).max(f64::MIN_POSITIVE);
        for (k, t) in triangles.iter_mut().enumerate() {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::DegenerateTriangle(k));
            }
            let a = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if a.abs() <= 1e-14 * scale {
                return Err(Error::DegenerateTriangle(k));
            }
            if a < 0.0 {
                t.swap(1, 2);
            }
        }

        // directed edge -> owning triangle count per undirected key
        let mut edges: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        for t in &triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.entry(edge_key(a, b)).or_default().push((a, b));
            }
        }
        let mut mesh_boundary: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut keys: Vec<_> = edges.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let uses = &edges[&key];
            match uses.len() {
                1 => {
                    mesh_boundary.insert(key, uses[0]);
                }
                2 => {
                    if uses[0] == uses[1] {
                        return Err(Error::NonConforming {
                            edge: key,
                            msg: "neighbouring triangles overlap (inconsistent orientation)".into(),
                        });
                    }
                }
                n => {
                    return Err(Error::NonConforming {
                        edge: key,
                        msg: format!("edge shared by {n} triangles"),
                    })
                }
            }
        }

        let mut oriented = Vec::with_capacity(boundary_edges.len());
        let mut seen = HashMap::new();
        for e in &boundary_edges {
            let key = edge_key(e[0], e[1]);
            match mesh_boundary.get(&key) {
                Some(&(a, b)) => {
                    if seen.insert(key, ()).is_some() {
                        return Err(Error::NonConforming {
                            edge: key,
                            msg: "boundary edge listed twice".into(),
                        });
                    }
                    oriented.push([a, b]);
                }
                None => {
                    return Err(Error::NonConforming {
                        edge: key,
                        msg: if edges.contains_key(&key) {
                            "listed boundary edge is interior".into()
                        } else {
                            "listed boundary edge belongs to no triangle".into()
                        },
                    })
                }
            }
        }
        if let Some(missing) = mesh_boundary.keys().filter(|k| !seen.contains_key(k)).min() {
            return Err(Error::NonConforming {
                edge: *missing,
                msg: "edge bounds one triangle but is missing from the boundary list".into(),
            });
        }

        // closed loops: every boundary vertex has one incoming and one outgoing edge
        let mut out_deg: HashMap<usize, usize> = HashMap::new();
        let mut in_deg: HashMap<usize, usize> = HashMap::new();
        for e in &oriented {
            *out_deg.entry(e[0]).or_default() += 1;
            *in_deg.entry(e[1]).or_default() += 1;
        }
        for e in &oriented {
            for v in e {
                if out_deg.get(v) != Some(&1) || in_deg.get(v) != Some(&1) {
                    return Err(Error::NonConforming {
                        edge: edge_key(e[0], e[1]),
                        msg: format!("boundary does not form closed loops at vertex {v}"),
                    });
                }
            }
        }

        let mesh = Mesh {
            vertices,
            triangles,
            boundary_edges: oriented,
        };
        let area = mesh.area();
        let enclosed = mesh.boundary_enclosed_area();
        if (area - enclosed).abs() > 1e-12 * area.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::NonConforming {
                edge: edge_key(mesh.boundary_edges[0][0], mesh.boundary_edges[0][1]),
                msg: format!("triangle area {area:e} differs from enclosed area {enclosed:e}"),
            });
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Longest edge of triangle `t`.
    pub fn triangle_diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let d = |i: usize, j: usize| {
            let (p, q) = (self.vertices[i], self.vertices[j]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        d(a, b).max(d(b, c)).max(d(c, a))
    }

    pub fn triangle_centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(p[0] + q[0] + r[0]) / 3.0, (p[1] + q[1] + r[1]) / 3.0]
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Shoelace area enclosed by the oriented boundary loops.
    pub fn boundary_enclosed_area(&self) -> f64 {
        0.5 * self
            .boundary_edges
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(&self.vertices)
    }

    /// Applies a coordinate map to every vertex. The map must preserve
    /// orientation; the result is re-validated.
    pub fn map_coordinates(&self, f: impl Fn(Point) -> Point) -> Result<Mesh> {
        Mesh::new(
            self.vertices.iter().map(|&p| f(p)).collect(),
            self.triangles.clone(),
            self.boundary_edges.clone(),
        )
    }
}

fn bounding_box(v: &[Point]) -> (Point, Point) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in v {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    (lo, hi)
}
