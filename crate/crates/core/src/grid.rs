//! Rectilinear gridded data with bilinear interpolation.
//!
//! Text format:
//!
//! ```text
//! GRID2D v1
//! NX 3
//! 0 1 2
//! NY 2
//! 10 20
//! VALUES
//! 1 2 3
//! 4 5 6
//! ```
//!
//! Axis values must be strictly increasing. `VALUES` holds `NY` rows of `NX`
//! numbers, row `j` at `y = ys[j]`. Line breaks inside a section are free and
//! `#` starts a comment.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Row-major, `values[j * nx + i]` at `(xs[i], ys[j])`.
    values: Vec<f64>,
}

impl Grid2D {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        for (name, axis) in [("x", &xs), ("y", &ys)] {
            if axis.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "{name} axis needs at least 2 points"
                )));
            }
            if axis.windows(2).any(|w| !(w[1] > w[0])) || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} axis must be strictly increasing"
                )));
            }
        }
        if values.len() != xs.len() * ys.len() {
            return Err(Error::DimensionMismatch {
                what: "grid values",
                expected: xs.len() * ys.len(),
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be finite".into()));
        }
        Ok(Self { xs, ys, values })
    }

    /// Samples `f` on the tensor grid.
    pub fn from_fn(xs: Vec<f64>, ys: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let values = ys
            .iter()
            .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(xs, ys, values)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.xs.len() + i]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.xs[0]
            && x <= *self.xs.last().unwrap()
            && y >= self.ys[0]
            && y <= *self.ys.last().unwrap()
    }

    fn cell(axis: &[f64], v: f64) -> usize {
        // last index with axis[i] <= v, clamped so that i + 1 is valid
        axis.partition_point(|a| *a <= v)
            .saturating_sub(1)
            .min(axis.len() - 2)
    }

    /// Bilinear interpolation; points outside the axes' hull are an error.
    pub fn interpolate(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(Error::OutsideGrid { x, y });
        }
        let i = Self::cell(&self.xs, x);
        let j = Self::cell(&self.ys, y);
        let tx = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        let ty = (y - self.ys[j]) / (self.ys[j + 1] - self.ys[j]);
        let v00 = self.at(i, j);
        let v10 = self.at(i + 1, j);
        let v01 = self.at(i, j + 1);
        let v11 = self.at(i + 1, j + 1);
        Ok((1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11))
    }

    /// Same axes, values transformed pointwise by `f(x, y, value)`.
    pub fn map(&self, f: impl Fn(f64, f64, f64) -> f64) -> Result<Grid2D> {
        let nx = self.xs.len();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(p, &v)| f(self.xs[p % nx], self.ys[p / nx], v))
            .collect();
        Grid2D::new(self.xs.clone(), self.ys.clone(), values)
    }
}

struct Tokens<'a> {
    inner: Box<dyn Iterator<Item = (usize, &'a str)> + 'a>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: Box::new(text.lines().enumerate().flat_map(|(i, l)| {
                l.split('#')
                    .next()
                    .unwrap_or("")
                    .split_whitespace()
                    .map(move |t| (i + 1, t))
            })),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.inner.next().ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }

    fn keyword(&mut self, key: &str) -> Result<()> {
        let (line, t) = self.next(key)?;
        if t != key {
            return Err(Error::Parse {
                line,
                msg: format!("expected '{key}', found '{t}'"),
            });
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, t) = self.next(what)?;
        t.parse().map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse '{t}' as {what}"),
        })
    }
}

pub fn parse_grid(text: &str) -> Result<Grid2D> {
    let mut tok = Tokens::new(text);
    let (line, a) = tok.next("header")?;
    let (_, b) = tok.next("header version")?;
    if a != "GRID2D" || b != "v1" {
        return Err(Error::Parse {
            line,
            msg: "expected header 'GRID2D v1'".into(),
        });
    }
    tok.keyword("NX")?;
    let nx: usize = tok.parse("count")?;
    let xs = (0..nx)
        .map(|_| tok.parse("number"))
        .collect::<Result<Vec<f64>>>()?;
    tok.keyword("NY")?;
    let ny: usize = tok.parse("count")?;
    let ys = (0..ny)
        .map(|_| tok.parse("number"))
        .collect::<Result<Vec<f64>>>()?;
    tok.keyword("VALUES")?;
    let values = (0..nx * ny)
        .map(|_| tok.parse("number"))
        .collect::<Result<Vec<f64>>>()?;
    if let Ok((line, t)) = tok.next("") {
        return Err(Error::Parse {
            line,
            msg: format!("unexpected trailing token '{t}'"),
        });
    }
    Grid2D::new(xs, ys, values)
}

pub fn load_grid(path: impl AsRef<Path>) -> Result<Grid2D> {
    parse_grid(&std::fs::read_to_string(path)?)
}

pub fn write_grid<W: Write>(grid: &Grid2D, mut w: W) -> std::io::Result<()> {
    writeln!(w, "GRID2D v1")?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    writeln!(w, "NX {}", grid.xs.len())?;
    writeln!(w, "{}", join(&grid.xs))?;
    writeln!(w, "NY {}", grid.ys.len())?;
    writeln!(w, "{}", join(&grid.ys))?;
    writeln!(w, "VALUES")?;
    for row in grid.values.chunks(grid.xs.len()) {
        writeln!(w, "{}", join(row))?;
    }
    Ok(())
}

pub fn save_grid(grid: &Grid2D, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_grid(grid, &mut w)?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_for_bilinear_data() {
        let g = Grid2D::from_fn(vec![0.0, 1.0, 3.0], vec![-1.0, 2.0], |x, y| {
            1.0 + 2.0 * x - y + 0.5 * x * y
        })
        .unwrap();
        for &(x, y) in &[(0.5, 0.0), (2.9, 1.9), (3.0, 2.0), (0.0, -1.0)] {
            let want = 1.0 + 2.0 * x - y + 0.5 * x * y;
            assert!((g.interpolate(x, y).unwrap() - want).abs() < 1e-14);
        }
        assert!(matches!(
            g.interpolate(3.1, 0.0),
            Err(Error::OutsideGrid { .. })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let g = Grid2D::from_fn(vec![0.0, 0.25, 1.0], vec![5.0, 6.0], |x, y| x * 0.1 + y).unwrap();
        let mut buf = Vec::new();
        write_grid(&g, &mut buf).unwrap();
        let back = parse_grid(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_unsorted_axis() {
        assert!(Grid2D::new(vec![0.0, 0.0], vec![0.0, 1.0], vec![0.0; 4]).is_err());
        assert!(parse_grid("GRID2D v1\nNX 2\n0 1\nNY 2\n0 1\nVALUES\n1 2 3\n").is_err());
    }
}
