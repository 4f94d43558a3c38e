use crate::error::{Error, Result};
use crate::sparse::csr::CsrMatrix;
use crate::sparse::dense::DenseMatrix;

/// Orders up to this bound are factored densely; larger ones use the
/// envelope (profile) factorization, which keeps fill inside the skyline
/// of the input. No reordering is applied, so the input ordering is the
/// elimination ordering.
const DENSE_LIMIT: usize = 2000;

/// Symmetry tolerance for the SPD factorization precondition, relative
/// to the largest entry magnitude.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug)]
enum Storage {
    /// Packed row-major lower triangle: entry (i, j) at i*(i+1)/2 + j.
    Dense { l: Vec<f64> },
    /// Row i stored at vals[offsets[i]..offsets[i+1]], covering columns
    /// starts[i]..=i.
    Envelope {
        starts: Vec<usize>,
        offsets: Vec<usize>,
        vals: Vec<f64>,
    },
}

/// Lower-triangular Cholesky factor of an SPD matrix: `A = L L^T`.
#[derive(Debug)]
pub struct CholeskyFactor {
    order: usize,
    storage: Storage,
}

/// Factors a sparse SPD matrix. Symmetry is checked structurally and
/// numerically before any arithmetic; a nonpositive pivot reports the
/// offending row.
pub fn cholesky_factor(m: &CsrMatrix) -> Result<CholeskyFactor> {
    cholesky_factor_with_limit(m, DENSE_LIMIT)
}

pub(crate) fn cholesky_factor_with_limit(m: &CsrMatrix, dense_limit: usize) -> Result<CholeskyFactor> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            "cholesky",
            "square",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if let Some((row, col, gap)) = m.symmetry_violation() {
        if gap > SYMMETRY_TOL * m.max_abs().max(1e-300) {
            return Err(Error::NotSymmetric {
                row,
                col,
                max_asymmetry: gap,
            });
        }
    }
    if m.nrows() <= dense_limit {
        factor_dense_lower(&m.to_dense())
    } else {
        factor_envelope(m)
    }
}

impl CholeskyFactor {
    /// Factors a dense SPD matrix; only the lower triangle is read.
    pub fn factor_dense(m: &DenseMatrix) -> Result<CholeskyFactor> {
        if m.nrows() != m.ncols() {
            return Err(Error::dims(
                "cholesky",
                "square",
                format!("{}x{}", m.nrows(), m.ncols()),
            ));
        }
        factor_dense_lower(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Solves A x = b through the factor (forward then back substitution).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.order {
            return Err(Error::dims("cholesky solve", self.order, b.len()));
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.order);
        let n = self.order;
        match &self.storage {
            Storage::Dense { l } => {
                for i in 0..n {
                    let base = i * (i + 1) / 2;
                    let mut s = x[i];
                    for k in 0..i {
                        s -= l[base + k] * x[k];
                    }
                    x[i] = s / l[base + i];
                }
                for i in (0..n).rev() {
                    let base = i * (i + 1) / 2;
                    x[i] /= l[base + i];
                    let xi = x[i];
                    for k in 0..i {
                        x[k] -= l[base + k] * xi;
                    }
                }
            }
            Storage::Envelope {
                starts,
                offsets,
                vals,
            } => {
                for i in 0..n {
                    let s0 = starts[i];
                    let row = &vals[offsets[i]..offsets[i + 1]];
                    let mut s = x[i];
                    for (k, lv) in (s0..i).zip(row) {
                        s -= lv * x[k];
                    }
                    x[i] = s / row[i - s0];
                }
                for i in (0..n).rev() {
                    let s0 = starts[i];
                    let row = &vals[offsets[i]..offsets[i + 1]];
                    x[i] /= row[i - s0];
                    let xi = x[i];
                    for (k, lv) in (s0..i).zip(row) {
                        x[k] -= lv * xi;
                    }
                }
            }
        }
    }

    /// The factor as a dense lower-triangular matrix (small orders, tests).
    pub fn lower_dense(&self) -> DenseMatrix {
        let n = self.order;
        let mut out = DenseMatrix::zeros(n, n);
        match &self.storage {
            Storage::Dense { l } => {
                for i in 0..n {
                    for j in 0..=i {
                        out.set(i, j, l[i * (i + 1) / 2 + j]);
                    }
                }
            }
            Storage::Envelope {
                starts,
                offsets,
                vals,
            } => {
                for i in 0..n {
                    let row = &vals[offsets[i]..offsets[i + 1]];
                    for (j, v) in (starts[i]..=i).zip(row) {
                        out.set(i, j, *v);
                    }
                }
            }
        }
        out
    }
}

fn factor_dense_lower(m: &DenseMatrix) -> Result<CholeskyFactor> {
    let n = m.nrows();
    let mut l = vec![0.0; n * (n + 1) / 2];
    for i in 0..n {
        let ibase = i * (i + 1) / 2;
        for j in 0..=i {
            let jbase = j * (j + 1) / 2;
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[ibase + k] * l[jbase + k];
            }
            if j < i {
                l[ibase + j] = s / l[jbase + j];
            } else {
                if s <= 0.0 || !s.is_finite() {
                    return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                }
                l[ibase + i] = s.sqrt();
            }
        }
    }
    Ok(CholeskyFactor {
        order: n,
        storage: Storage::Dense { l },
    })
}

fn factor_envelope(m: &CsrMatrix) -> Result<CholeskyFactor> {
    let n = m.nrows();
    // Row profile of the lower triangle; fill stays inside it.
    let mut starts = vec![0usize; n];
    for i in 0..n {
        let (cols, _) = m.row(i);
        starts[i] = cols.iter().copied().find(|&c| c <= i).unwrap_or(i);
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + (i - starts[i] + 1);
    }
    let mut vals = vec![0.0; offsets[n]];
    for i in 0..n {
        let s0 = starts[i];
        let (done, rest) = vals.split_at_mut(offsets[i]);
        let cur = &mut rest[..offsets[i + 1] - offsets[i]];
        let (cols, entries) = m.row(i);
        for (&c, &v) in cols.iter().zip(entries) {
            if c <= i {
                cur[c - s0] = v;
            }
        }
        for j in s0..i {
            let sj = starts[j];
            let rowj = &done[offsets[j]..offsets[j + 1]];
            let lo = s0.max(sj);
            let mut s = cur[j - s0];
            for k in lo..j {
                s -= cur[k - s0] * rowj[k - sj];
            }
            cur[j - s0] = s / rowj[j - sj];
        }
        let mut d = cur[i - s0];
        for k in s0..i {
            d -= cur[k - s0] * cur[k - s0];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { row: i, pivot: d });
        }
        cur[i - s0] = d.sqrt();
    }
    Ok(CholeskyFactor {
        order: n,
        storage: Storage::Envelope {
            starts,
            offsets,
            vals,
        },
    })
}
