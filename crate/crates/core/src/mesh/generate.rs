//! Structured-strip triangulations of a square with geometric grading in x.
//!
//! The square is cut into vertical strips whose widths grow geometrically
//! from west to east. Every strip boundary line carries an even number of
//! uniformly spaced nodes, and each strip is triangulated by zipping the two
//! node columns together. Only the southern half is zipped; the northern half
//! is its mirror image, so the mesh is exactly symmetric under y -> L - y.

use super::{Mesh, Point};
use crate::error::{Error, Result};

/// Parameters of a graded square mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedSquare {
    pub side_length: f64,
    /// Number of cells across the side at the coarse (eastern) resolution.
    pub n_coarse: usize,
    /// Coarse-to-fine element size ratio.
    pub grading_ratio: f64,
    /// Forces the number of strips; the widths keep the grading ratio and are
    /// rescaled to fill the side.
    pub strips: Option<usize>,
    /// Forces the number of y-segments on the western and eastern lines
    /// (interpolated geometrically in between). Values are rounded to even.
    pub y_segments: Option<(usize, usize)>,
}

impl GradedSquare {
    pub fn new(side_length: f64, n_coarse: usize, grading_ratio: f64) -> Self {
        Self {
            side_length,
            n_coarse,
            grading_ratio,
            strips: None,
            y_segments: None,
        }
    }

    /// Coarse preset sized like the published square-basin triangulation:
    /// 202 triangles, 445 P2 nodes and an 8:1 west-east strip width contrast.
    /// Elements near the western wall are anisotropic.
    pub fn standard(side_length: f64) -> Self {
        Self {
            side_length,
            n_coarse: 10,
            grading_ratio: 8.0,
            strips: Some(9),
            y_segments: Some((14, 8)),
        }
    }

    pub fn build(&self) -> Result<Mesh> {
        let l = self.side_length;
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "side length must be positive, got {l}"
            )));
        }
        if self.n_coarse < 2 {
            return Err(Error::InvalidParameter(format!(
                "n_coarse must be at least 2, got {}",
                self.n_coarse
            )));
        }
        if !(self.grading_ratio >= 1.0) || !self.grading_ratio.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grading ratio must be >= 1, got {}",
                self.grading_ratio
            )));
        }
        if self.strips == Some(0) {
            return Err(Error::InvalidParameter(
                "at least one strip is required".into(),
            ));
        }
        if let Some((w, e)) = self.y_segments {
            if w == 0 || e == 0 {
                return Err(Error::InvalidParameter(
                    "y segment counts must be positive".into(),
                ));
            }
        }

        let widths = self.strip_widths();
        let nx = widths.len();
        let mut xs = Vec::with_capacity(nx + 1);
        xs.push(0.0);
        for w in &widths {
            xs.push(xs.last().unwrap() + w);
        }
        xs[nx] = l;

        // Line i takes the width of the strip to its west, so the finest
        // strip has matching node columns and right-isosceles elements.
        let local: Vec<f64> = (0..=nx).map(|i| widths[i.saturating_sub(1)]).collect();
        let segments: Vec<usize> = match self.y_segments {
            None => local.iter().map(|h| even_round(l / h)).collect(),
            Some((west, east)) => {
                let (h0, h1) = (local[0], local[nx]);
                local
                    .iter()
                    .zip(&xs)
                    .map(|(h, x)| {
                        let s = if (h1 / h0 - 1.0).abs() > 1e-12 {
                            (h / h0).ln() / (h1 / h0).ln()
                        } else {
                            x / l
                        };
                        even_round(west as f64 * (east as f64 / west as f64).powf(s))
                    })
                    .collect()
            }
        };
        Ok(zip_strips(l, &xs, &segments))
    }

    fn strip_widths(&self) -> Vec<f64> {
        let l = self.side_length;
        let ratio = self.grading_ratio;
        let h_east = l / self.n_coarse as f64;
        let nx = match self.strips {
            Some(n) => n,
            None if ratio == 1.0 => self.n_coarse,
            None => {
                let h_west = h_east / ratio;
                let r = (l - h_west) / (l - h_east);
                ((1.0 + ratio.ln() / r.ln()).round() as usize).max(2)
            }
        };
        let r = if nx > 1 {
            ratio.powf(1.0 / (nx - 1) as f64)
        } else {
            1.0
        };
        let raw: Vec<f64> = (0..nx).map(|k| r.powi(k as i32)).collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w * l / total).collect()
    }
}

fn even_round(v: f64) -> usize {
    (2.0 * (v / 2.0).round()).max(2.0) as usize
}

fn zip_strips(l: f64, xs: &[f64], segments: &[usize]) -> Mesh {
    let mut offset = Vec::with_capacity(xs.len());
    let mut vertices: Vec<Point> = Vec::new();
    for (x, &m) in xs.iter().zip(segments) {
        offset.push(vertices.len());
        for j in 0..=m {
            let y = if j == m { l } else { l * j as f64 / m as f64 };
            vertices.push([*x, y]);
        }
    }
    let id = |line: usize, j: usize| offset[line] + j;

    let mut triangles = Vec::new();
    for s in 0..xs.len() - 1 {
        let (ml, mr) = (segments[s], segments[s + 1]);
        let (p, q) = (ml / 2, mr / 2);
        let yl = |i: usize| i as f64 / ml as f64;
        let yr = |j: usize| j as f64 / mr as f64;
        let mut lower = Vec::with_capacity(p + q);
        let (mut i, mut j) = (0, 0);
        while i < p || j < q {
            let advance_left = if i == p {
                false
            } else if j == q {
                true
            } else {
                yl(i + 1) <= yr(j + 1)
            };
            if advance_left {
                lower.push([(s, i), (s + 1, j), (s, i + 1)]);
                i += 1;
            } else {
                lower.push([(s, i), (s + 1, j), (s + 1, j + 1)]);
                j += 1;
            }
        }
        let mirror = |(line, k): (usize, usize)| (line, segments[line] - k);
        for t in &lower {
            triangles.push([id(t[0].0, t[0].1), id(t[1].0, t[1].1), id(t[2].0, t[2].1)]);
        }
        for t in &lower {
            let [a, b, c] = t.map(mirror);
            triangles.push([id(a.0, a.1), id(c.0, c.1), id(b.0, b.1)]);
        }
    }

    let nx = xs.len() - 1;
    let mut boundary = Vec::new();
    for i in 0..nx {
        boundary.push([id(i, 0), id(i + 1, 0)]);
    }
    for j in 0..segments[nx] {
        boundary.push([id(nx, j), id(nx, j + 1)]);
    }
    for i in (0..nx).rev() {
        boundary.push([id(i + 1, segments[i + 1]), id(i, segments[i])]);
    }
    for j in (0..segments[0]).rev() {
        boundary.push([id(0, j + 1), id(0, j)]);
    }
    Mesh::new(vertices, triangles, boundary).expect("strip triangulation is conforming")
}

/// Conforming triangulation of `[0, L]^2` whose elements near `x = 0` are
/// about `grading_ratio` times smaller than those near `x = L` (which have
/// size `L / n_coarse`).
pub fn generate_graded_square_mesh(
    side_length: f64,
    n_coarse: usize,
    grading_ratio: f64,
) -> Result<Mesh> {
    GradedSquare::new(side_length, n_coarse, grading_ratio).build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_square_has_eight_equal_triangles() {
        let m = generate_graded_square_mesh(1.0, 2, 1.0).unwrap();
        assert_eq!(m.triangle_count(), 8);
        for t in 0..8 {
            assert!((m.triangle_area(t) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn boundary_starts_at_origin_and_runs_counter_clockwise() {
        let m = generate_graded_square_mesh(2.0, 3, 2.0).unwrap();
        let first = m.boundary_edges()[0];
        assert_eq!(m.vertices()[first[0]], [0.0, 0.0]);
        assert!(m.boundary_enclosed_area() > 0.0);
        assert!((m.area() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mesh_is_mirror_symmetric_in_y() {
        let m = generate_graded_square_mesh(1.0, 4, 3.0).unwrap();
        let mut pts: Vec<(i64, i64)> = m
            .vertices()
            .iter()
            .map(|p| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64))
            .collect();
        let mut mirrored: Vec<(i64, i64)> =
            pts.iter().map(|&(x, y)| (x, 1_000_000_000 - y)).collect();
        pts.sort_unstable();
        mirrored.sort_unstable();
        assert_eq!(pts, mirrored);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_graded_square_mesh(0.0, 4, 2.0).is_err());
        assert!(generate_graded_square_mesh(-1.0, 4, 2.0).is_err());
        assert!(generate_graded_square_mesh(1.0, 1, 2.0).is_err());
        assert!(generate_graded_square_mesh(1.0, 4, 0.5).is_err());
    }
}
