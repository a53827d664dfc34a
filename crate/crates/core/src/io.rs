//! Dense complex matrix text format.
//!
//! ```text
//! <rows> <aux> <model_tag>
//! re,im re,im ...      (one line per row, row-major)
//! ```
//!
//! For covariances the header is `M r model_tag` and the body is `M × M`;
//! for pilots it is `L n model_tag` with an `L × n` body. Numbers are written
//! with the shortest representation that round-trips exactly.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::covgen::{CovarianceModel, CovarianceProfile};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, C64};
use crate::pilots::{PilotModel, PilotSet};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub matrix: CMatrix,
    pub aux: usize,
    pub tag: String,
}

pub fn write_dense<W: Write>(mut out: W, matrix: &CMatrix, aux: usize, tag: &str) -> Result<()> {
    writeln!(out, "{} {} {}", matrix.nrows(), aux, tag)?;
    let mut line = String::new();
    for i in 0..matrix.nrows() {
        line.clear();
        for j in 0..matrix.ncols() {
            if j > 0 {
                line.push(' ');
            }
            let z = matrix[(i, j)];
            write!(line, "{:?},{:?}", z.re, z.im).expect("writing to a String");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_dense<R: BufRead>(input: R) -> Result<DenseMatrix> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(s) => !s.trim().is_empty(),
        Err(_) => true,
    });
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let header = header?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::Parse { line: 1, msg: format!("expected `rows aux tag`, got {header:?}") });
    }
    let parse_usize = |s: &str| {
        s.parse::<usize>().map_err(|e| Error::Parse { line: 1, msg: format!("{s:?}: {e}") })
    };
    let rows = parse_usize(fields[0])?;
    let aux = parse_usize(fields[1])?;
    let tag = fields[2].to_string();
    let mut data: Vec<Vec<C64>> = Vec::with_capacity(rows);
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let row = line
            .split_whitespace()
            .map(|tok| parse_entry(tok).map_err(|msg| Error::Parse { line: lineno, msg }))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = data.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("row has {} entries, expected {}", row.len(), first.len()),
                });
            }
        }
        data.push(row);
    }
    if data.len() != rows {
        return Err(Error::Parse { line: 1, msg: format!("header announces {rows} rows, found {}", data.len()) });
    }
    let cols = data.first().map_or(0, Vec::len);
    let matrix = CMatrix::from_fn(rows, cols, |i, j| data[i][j]);
    Ok(DenseMatrix { matrix, aux, tag })
}

fn parse_entry(tok: &str) -> std::result::Result<C64, String> {
    let (a, b) = tok.split_once(',').ok_or_else(|| format!("entry {tok:?} is not `re,im`"))?;
    let re = a.parse::<f64>().map_err(|e| format!("{a:?}: {e}"))?;
    let im = b.parse::<f64>().map_err(|e| format!("{b:?}: {e}"))?;
    Ok(C64::new(re, im))
}

pub fn write_covariance(path: &Path, cov: &CovarianceProfile) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(f, &cov.sigma, cov.rank(), cov.model.tag())
}

/// Reads a covariance and keeps the `r` leading eigenpairs announced in the header.
pub fn read_covariance(path: &Path) -> Result<CovarianceProfile> {
    let d = read_dense(std::io::BufReader::new(std::fs::File::open(path)?))?;
    covariance_from_dense(d)
}

pub fn covariance_from_dense(d: DenseMatrix) -> Result<CovarianceProfile> {
    let m = d.matrix.nrows();
    if d.matrix.ncols() != m {
        return Err(Error::dim(format!("covariance must be square, got {m}x{}", d.matrix.ncols())));
    }
    if d.aux == 0 || d.aux > m {
        return Err(Error::domain(format!("rank {} outside [1, {m}]", d.aux)));
    }
    let model = CovarianceModel::from_tag(&d.tag)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("unknown covariance model {:?}", d.tag) })?;
    let (values, vectors) = linalg::hermitian_eigen_desc(&d.matrix);
    let r = d.aux;
    if !(values[r - 1] > 0.0) {
        return Err(Error::domain(format!("covariance has fewer than {r} positive eigenvalues")));
    }
    let mut p = CovarianceProfile::from_eigen(values[..r].to_vec(), vectors.columns(0, r).into_owned(), model)?;
    let mut s = d.matrix;
    linalg::symmetrize(&mut s);
    p.sigma = s;
    Ok(p)
}

pub fn write_pilots(path: &Path, pilots: &PilotSet) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_dense(f, &pilots.matrix, pilots.num_users(), pilots.model.tag())
}

pub fn read_pilots(path: &Path) -> Result<PilotSet> {
    let d = read_dense(std::io::BufReader::new(std::fs::File::open(path)?))?;
    pilots_from_dense(d)
}

pub fn pilots_from_dense(d: DenseMatrix) -> Result<PilotSet> {
    if d.matrix.ncols() != d.aux {
        return Err(Error::dim(format!("header announces {} users, body has {}", d.aux, d.matrix.ncols())));
    }
    let model = PilotModel::from_tag(&d.tag)
        .ok_or_else(|| Error::Parse { line: 1, msg: format!("unknown pilot model {:?}", d.tag) })?;
    Ok(PilotSet { matrix: d.matrix, model, seed: None })
}
