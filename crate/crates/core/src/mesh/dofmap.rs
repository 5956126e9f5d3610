//! P2 degrees of freedom: one per vertex and one per edge midpoint.
//!
//! Numbering is interior-first: interior vertices (in vertex order), then
//! interior edge midpoints (edges in order of first appearance when scanning
//! triangles and their local edges (0,1), (1,2), (2,0)), then boundary
//! vertices, then boundary edge midpoints. Dofs `0..n0` are interior.

use std::collections::HashMap;

use super::{Mesh, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    dof_coords: Vec<Point>,
    triangle_dofs: Vec<[usize; 6]>,
    boundary_flags: Vec<bool>,
    vertex_dofs: Vec<usize>,
    n0: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> Self {
        let nv = mesh.vertex_count();
        let mut on_boundary = vec![false; nv];
        let mut boundary_edge = HashMap::new();
        for e in mesh.boundary_edges() {
            on_boundary[e[0]] = true;
            on_boundary[e[1]] = true;
            boundary_edge.insert((e[0].min(e[1]), e[0].max(e[1])), ());
        }

        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut tri_edges = Vec::with_capacity(mesh.triangle_count());
        for t in mesh.triangles() {
            let mut ids = [0usize; 3];
            for (k, (a, b)) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
                .into_iter()
                .enumerate()
            {
                let key = (a.min(b), a.max(b));
                ids[k] = *edge_id.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            tri_edges.push(ids);
        }

        let edge_on_boundary: Vec<bool> = edges
            .iter()
            .map(|k| boundary_edge.contains_key(k))
            .collect();
        let mut vertex_dofs = vec![usize::MAX; nv];
        let mut edge_dofs = vec![usize::MAX; edges.len()];
        let mut next = 0;
        for v in 0..nv {
            if !on_boundary[v] {
                vertex_dofs[v] = next;
                next += 1;
            }
        }
        for (e, &b) in edge_on_boundary.iter().enumerate() {
            if !b {
                edge_dofs[e] = next;
                next += 1;
            }
        }
        let n0 = next;
        for v in 0..nv {
            if on_boundary[v] {
                vertex_dofs[v] = next;
                next += 1;
            }
        }
        for (e, &b) in edge_on_boundary.iter().enumerate() {
            if b {
                edge_dofs[e] = next;
                next += 1;
            }
        }
        let n = next;

        let verts = mesh.vertices();
        let mut dof_coords = vec![[0.0; 2]; n];
        for v in 0..nv {
            dof_coords[vertex_dofs[v]] = verts[v];
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            let (p, q) = (verts[a], verts[b]);
            dof_coords[edge_dofs[e]] = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        }
        let triangle_dofs = mesh
            .triangles()
            .iter()
            .zip(&tri_edges)
            .map(|(t, e)| {
                [
                    vertex_dofs[t[0]],
                    vertex_dofs[t[1]],
                    vertex_dofs[t[2]],
                    edge_dofs[e[0]],
                    edge_dofs[e[1]],
                    edge_dofs[e[2]],
                ]
            })
            .collect();
        let boundary_flags = (0..n).map(|d| d >= n0).collect();
        Self {
            dof_coords,
            triangle_dofs,
            boundary_flags,
            vertex_dofs,
            n0,
        }
    }

    /// Total number of dofs.
    pub fn n(&self) -> usize {
        self.dof_coords.len()
    }

    /// Number of interior dofs; they occupy indices `0..n0`.
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn dof_coords(&self) -> &[Point] {
        &self.dof_coords
    }

    /// Per triangle: the three vertex dofs followed by the midpoints of
    /// local edges (0,1), (1,2), (2,0).
    pub fn triangle_dofs(&self) -> &[[usize; 6]] {
        &self.triangle_dofs
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary_flags
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        dof >= self.n0
    }

    pub fn vertex_dof(&self, vertex: usize) -> usize {
        self.vertex_dofs[vertex]
    }

    /// Nodal values of `f` at every dof.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.dof_coords.iter().map(|p| f(p[0], p[1])).collect()
    }

    /// Permutation `perm` with `coords[perm[d]] = map(coords[d])`, if the dof
    /// set is invariant under `map` up to `tol` (absolute, per coordinate).
    pub fn symmetry_permutation(
        &self,
        map: impl Fn(Point) -> Point,
        tol: f64,
    ) -> Option<Vec<usize>> {
        let key = |p: Point| ((p[0] / tol).round() as i64, (p[1] / tol).round() as i64);
        let mut index: HashMap<(i64, i64), usize> = HashMap::new();
        for (d, &p) in self.dof_coords.iter().enumerate() {
            index.insert(key(p), d);
        }
        self.dof_coords
            .iter()
            .map(|&p| {
                let q = map(p);
                let (kx, ky) = key(q);
                // neighbouring buckets cover rounding at bucket edges
                (-1..=1)
                    .flat_map(|dx| (-1..=1).map(move |dy| (kx + dx, ky + dy)))
                    .filter_map(|k| index.get(&k).copied())
                    .find(|&d| {
                        let r = self.dof_coords[d];
                        (r[0] - q[0]).abs() <= tol && (r[1] - q[1]).abs() <= tol
                    })
            })
            .collect()
    }
}

pub fn build_dof_map(mesh: &Mesh) -> DofMap {
    DofMap::new(mesh)
}
