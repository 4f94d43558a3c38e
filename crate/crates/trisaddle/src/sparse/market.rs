//! Matrix Market I/O: coordinate format for sparse matrices (real,
//! general or symmetric) and array format for dense vectors.

use crate::error::{Error, Result};
use crate::sparse::csr::CsrMatrix;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn bad(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

/// Writes a sparse matrix in coordinate format, overwriting the target.
/// With `symmetric = true` the matrix must be numerically symmetric
/// (checked to 1e-12 relative) and only the lower triangle is stored.
pub fn write_matrix(path: &Path, m: &CsrMatrix, symmetric: bool) -> Result<()> {
    if symmetric && !m.is_symmetric(1e-12) {
        return Err(bad("refusing to write an asymmetric matrix as symmetric"));
    }
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(out, "%%MatrixMarket matrix coordinate real {kind}")?;
    let nnz = if symmetric {
        (0..m.nrows())
            .map(|i| m.row(i).0.iter().filter(|&&j| j <= i).count())
            .sum()
    } else {
        m.nnz()
    };
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), nnz)?;
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if symmetric && j > i {
                continue;
            }
            writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Reads a coordinate-format real matrix; symmetric storage is expanded
/// to full storage on the way in.
pub fn read_matrix(path: &Path) -> Result<CsrMatrix> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty file"))??;
    let symmetric = parse_header(&header, "coordinate")?;
    let size_line = next_data_line(&mut lines)?.ok_or_else(|| bad("missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size token '{t}'"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(bad("size line must hold rows, cols, nnz"));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    let mut triplets = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = next_data_line(&mut lines)?.ok_or_else(|| bad("truncated entry list"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(bad(format!("entry line needs i j value, got '{line}'")));
        }
        let i: usize = toks[0].parse().map_err(|_| bad("bad row index"))?;
        let j: usize = toks[1].parse().map_err(|_| bad("bad column index"))?;
        let v: f64 = toks[2].parse().map_err(|_| bad("bad value"))?;
        if i < 1 || i > nrows || j < 1 || j > ncols {
            return Err(bad(format!("entry ({i},{j}) outside {nrows}x{ncols}")));
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    if next_data_line(&mut lines)?.is_some() {
        return Err(bad("trailing data after declared entries"));
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Writes a vector as an n-by-1 array-format matrix.
pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} 1", v.len())?;
    for x in v {
        writeln!(out, "{x:.17e}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().ok_or_else(|| bad("empty file"))??;
    if parse_header(&header, "array")? {
        return Err(bad("symmetric array vectors are not supported"));
    }
    let size_line = next_data_line(&mut lines)?.ok_or_else(|| bad("missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size token '{t}'"))))
        .collect::<Result<_>>()?;
    if dims.len() != 2 || dims[1] != 1 {
        return Err(bad("vector file must declare n 1"));
    }
    let mut v = Vec::with_capacity(dims[0]);
    for _ in 0..dims[0] {
        let line = next_data_line(&mut lines)?.ok_or_else(|| bad("truncated vector"))?;
        v.push(line.trim().parse().map_err(|_| bad("bad vector value"))?);
    }
    Ok(v)
}

/// Returns whether the symmetry field says `symmetric`.
fn parse_header(header: &str, want_format: &str) -> Result<bool> {
    let toks: Vec<String> = header.split_whitespace().map(|t| t.to_lowercase()).collect();
    if toks.len() != 5 || toks[0] != "%%matrixmarket" {
        return Err(bad(format!("unrecognized header '{header}'")));
    }
    if toks[1] != "matrix" {
        return Err(bad(format!("unsupported object '{}'", toks[1])));
    }
    if toks[2] != want_format {
        return Err(bad(format!(
            "expected {want_format} format, found '{}'",
            toks[2]
        )));
    }
    if toks[3] != "real" {
        return Err(bad(format!("unsupported field '{}'", toks[3])));
    }
    match toks[4].as_str() {
        "general" => Ok(false),
        "symmetric" => Ok(true),
        other => Err(bad(format!("unsupported symmetry '{other}'"))),
    }
}

fn next_data_line(
    lines: &mut std::io::Lines<BufReader<std::fs::File>>,
) -> Result<Option<String>> {
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        return Ok(Some(trimmed.to_string()));
    }
    Ok(None)
}
