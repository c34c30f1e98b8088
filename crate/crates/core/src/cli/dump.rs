//! Field dump: CSV with columns
//! `i,j,u,v,re_psi1,im_psi1,re_psi2,im_psi2,re_psi3,im_psi3`, one row per
//! node in grid order. Floats use shortest round-trip formatting.

use std::io::{Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::ck_solver::StripGrid;
use crate::weierstrass::{SpinorField, SpinorTriple};

pub const HEADER: [&str; 10] =
    ["i", "j", "u", "v", "re_psi1", "im_psi1", "re_psi2", "im_psi2", "re_psi3", "im_psi3"];

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("field dump: {0}")]
    Csv(#[from] csv::Error),
    #[error("field dump: {0}")]
    Io(#[from] std::io::Error),
    #[error("field dump header must be {expected}", expected = HEADER.join(","))]
    Header,
    #[error("field dump line {line}: {message}")]
    Row { line: u64, message: String },
    #[error("field dump has {found} rows, grid needs {expected}")]
    Count { expected: usize, found: usize },
}

pub fn write_field_dump<W: Write>(field: &SpinorField, mut w: W) -> std::io::Result<()> {
    let g = field.grid();
    writeln!(w, "{}", HEADER.join(","))?;
    for (k, p) in field.values().iter().enumerate() {
        let (i, j) = g.node(k);
        write!(w, "{i},{j},{:?},{:?}", g.u(i), g.v(j))?;
        for z in &p.0 {
            write!(w, ",{:?},{:?}", z.re, z.im)?;
        }
        writeln!(w)?;
    }
    w.flush()
}

/// Reads a dump laid out on `grid`. Node coordinates must match the grid to
/// 1e-9; every node must appear exactly once (any order). All nodes come
/// back trusted.
pub fn read_field_dump<R: Read>(grid: &StripGrid, r: R) -> Result<SpinorField, DumpError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    if rdr.headers()?.iter().ne(HEADER.iter().copied()) {
        return Err(DumpError::Header);
    }
    let mut values = vec![SpinorTriple::ZERO; grid.len()];
    let mut seen = vec![false; grid.len()];
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let err = |message: String| DumpError::Row { line, message };
        let int = |c: usize| rec[c].parse::<usize>().map_err(|e| err(format!("{}: {e}", HEADER[c])));
        let num = |c: usize| rec[c].parse::<f64>().map_err(|e| err(format!("{}: {e}", HEADER[c])));
        let (i, j) = (int(0)?, int(1)?);
        if i >= grid.n_u || j >= grid.n_levels() {
            return Err(err(format!("node ({i}, {j}) outside the {}x{} grid", grid.n_u, grid.n_levels())));
        }
        let (u, v) = (num(2)?, num(3)?);
        if (u - grid.u(i)).abs() > 1e-9 || (v - grid.v(j)).abs() > 1e-9 {
            return Err(err(format!("(u, v) = ({u}, {v}) does not match node ({i}, {j})")));
        }
        let k = grid.index(i, j);
        if std::mem::replace(&mut seen[k], true) {
            return Err(err(format!("node ({i}, {j}) repeated")));
        }
        let z = |c: usize| -> Result<Complex64, DumpError> { Ok(Complex64::new(num(c)?, num(c + 1)?)) };
        values[k] = SpinorTriple([z(4)?, z(6)?, z(8)?]);
        rows += 1;
    }
    if rows != grid.len() {
        return Err(DumpError::Count { expected: grid.len(), found: rows });
    }
    SpinorField::new(grid.clone(), values, vec![true; grid.len()])
        .map_err(|e| DumpError::Row { line: 0, message: e.to_string() })
}
