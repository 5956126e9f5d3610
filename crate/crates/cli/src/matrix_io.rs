//! Dense matrix text format used for sensitivity operators:
//!
//! ```text
//! GMATRIX v1
//! ROWS 2 COLS 3
//! 1 2 3
//! 4 5 6
//! ```
//!
//! `#` starts a comment. Values are row-major; line breaks are free.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, Result};

pub fn write_matrix<W: Write>(m: &DMatrix<f64>, mut w: W) -> std::io::Result<()> {
    writeln!(w, "GMATRIX v1")?;
    writeln!(w, "ROWS {} COLS {}", m.nrows(), m.ncols())?;
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{:e}", m[(r, c)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

fn parse_error(line: usize, msg: impl Into<String>) -> CliError {
    CliError::Model(topomode::Error::Parse {
        line,
        msg: msg.into(),
    })
}

struct Cursor<'a> {
    tokens: std::vec::IntoIter<(usize, &'a str)>,
}

impl<'a> Cursor<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.tokens
            .next()
            .ok_or_else(|| parse_error(0, format!("unexpected end of file, expected {what}")))
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let (line, t) = self.next(word)?;
        if t != word {
            return Err(parse_error(line, format!("expected '{word}', found '{t}'")));
        }
        Ok(())
    }

    fn parse<T: std::str::FromStr>(&mut self, what: &str) -> Result<T> {
        let (line, t) = self.next(what)?;
        t.parse()
            .map_err(|_| parse_error(line, format!("cannot parse '{t}' as {what}")))
    }
}

pub fn parse_matrix(text: &str) -> Result<DMatrix<f64>> {
    let tokens: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .flat_map(|(i, l)| {
            l.split('#')
                .next()
                .unwrap_or("")
                .split_whitespace()
                .map(move |t| (i + 1, t))
        })
        .collect();
    let mut cur = Cursor {
        tokens: tokens.into_iter(),
    };
    cur.keyword("GMATRIX")?;
    cur.keyword("v1")?;
    cur.keyword("ROWS")?;
    let rows: usize = cur.parse("row count")?;
    cur.keyword("COLS")?;
    let cols: usize = cur.parse("column count")?;
    let values = (0..rows * cols)
        .map(|_| cur.parse("number"))
        .collect::<Result<Vec<f64>>>()?;
    if let Some((line, t)) = cur.tokens.next() {
        return Err(parse_error(line, format!("unexpected trailing token '{t}'")));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &values))
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        source: e,
    })?;
    parse_matrix(&text)
}
