//! Plain-text mesh format.
//!
//! ```text
//! MESH2D v1
//! NV 4
//! 0 0
//! 1 0
//! 1 1
//! 0 1
//! NT 2
//! 0 1 2
//! 0 2 3
//! NB 4
//! 0 1
//! 1 2
//! 2 3
//! 3 0
//! ```
//!
//! Tokens are whitespace separated, `#` starts a comment, vertex indices are
//! zero-based. Coordinates are written with the shortest representation that
//! parses back to the same `f64`.

use std::io::Write;
use std::path::Path;

use super::{Mesh, Point};
use crate::error::{Error, Result};

const HEADER: &str = "MESH2D v1";

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with comments stripped, with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if !body.is_empty() {
                return Some((i + 1, body));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_content().ok_or_else(|| Error::Parse {
            line: self.last + 1,
            msg: format!("unexpected end of file, expected {what}"),
        })
    }
}

fn parse_tokens<T: std::str::FromStr, const K: usize>(line: usize, body: &str) -> Result<[T; K]> {
    let toks: Vec<&str> = body.split_whitespace().collect();
    if toks.len() != K {
        return Err(Error::Parse {
            line,
            msg: format!("expected {K} values, found {}", toks.len()),
        });
    }
    let mut out = Vec::with_capacity(K);
    for t in toks {
        out.push(t.parse::<T>().map_err(|_| Error::Parse {
            line,
            msg: format!("cannot parse '{t}'"),
        })?);
    }
    out.try_into().map_err(|_| unreachable!())
}

fn section_count(lines: &mut Lines<'_>, key: &str) -> Result<usize> {
    let (line, body) = lines.expect(key)?;
    let mut toks = body.split_whitespace();
    if toks.next() != Some(key) {
        return Err(Error::Parse {
            line,
            msg: format!("expected section '{key} <count>'"),
        });
    }
    let n = toks
        .next()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("missing or invalid count after {key}"),
        })?;
    if toks.next().is_some() {
        return Err(Error::Parse {
            line,
            msg: "trailing tokens after section count".into(),
        });
    }
    Ok(n)
}

/// Parses and validates a mesh from its text form.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (line, header) = lines.expect("header")?;
    if header.split_whitespace().collect::<Vec<_>>()
        != HEADER.split_whitespace().collect::<Vec<_>>()
    {
        return Err(Error::Parse {
            line,
            msg: format!("expected header '{HEADER}'"),
        });
    }

    let nv = section_count(&mut lines, "NV")?;
    let mut vertices: Vec<Point> = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, body) = lines.expect("vertex coordinates")?;
        let p: [f64; 2] = parse_tokens(line, body)?;
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::Parse {
                line,
                msg: "non-finite coordinate".into(),
            });
        }
        vertices.push(p);
    }

    let nt = section_count(&mut lines, "NT")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, body) = lines.expect("triangle vertex indices")?;
        let t: [usize; 3] = parse_tokens(line, body)?;
        if let Some(&bad) = t.iter().find(|&&v| v >= nv) {
            return Err(Error::BadVertexIndex { line, index: bad });
        }
        triangles.push(t);
    }

    let nb = section_count(&mut lines, "NB")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, body) = lines.expect("boundary edge")?;
        let e: [usize; 2] = parse_tokens(line, body)?;
        if let Some(&bad) = e.iter().find(|&&v| v >= nv) {
            return Err(Error::BadVertexIndex { line, index: bad });
        }
        boundary.push(e);
    }
    if let Some((line, _)) = lines.next_content() {
        return Err(Error::Parse {
            line,
            msg: "unexpected content after boundary section".into(),
        });
    }
    Mesh::new(vertices, triangles, boundary)
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh<W: Write>(mesh: &Mesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "NV {}", mesh.vertex_count())?;
    for p in mesh.vertices() {
        writeln!(w, "{} {}", p[0], p[1])?;
    }
    writeln!(w, "NT {}", mesh.triangle_count())?;
    for t in mesh.triangles() {
        writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "NB {}", mesh.boundary_edges().len())?;
    for e in mesh.boundary_edges() {
        writeln!(w, "{} {}", e[0], e[1])?;
    }
    Ok(())
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_mesh(mesh, &mut w)?;
    w.flush()?;
    Ok(())
}
