use crate::error::{Error, Result};
use crate::sparse::dense::DenseMatrix;

/// Compressed sparse row matrix.
///
/// Invariants, enforced by every constructor:
/// - `row_offsets.len() == nrows + 1`, nondecreasing, last entry equals
///   `col_indices.len() == values.len()`;
/// - column indices are strictly increasing within each row;
/// - builders prune exact zeros, so stored zeros only survive when a
///   caller inserts them through [`CsrMatrix::from_raw`].
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from (row, col, value) triplets. Duplicate positions are
    /// summed; entries that are exactly zero after accumulation are
    /// dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        for &(i, j, _) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::dims(
                    "from_triplets",
                    format!("indices < ({nrows},{ncols})"),
                    format!("({i},{j})"),
                ));
            }
        }
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            per_row[i].push((j, v));
        }
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_offsets.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut k = 0;
            while k < row.len() {
                let j = row[k].0;
                let mut v = 0.0;
                while k < row.len() && row[k].0 == j {
                    v += row[k].1;
                    k += 1;
                }
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds from raw CSR arrays, validating the storage invariants.
    /// Explicit zeros are kept.
    pub fn from_raw(
        nrows: usize,
        ncols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != nrows + 1 {
            return Err(Error::dims(
                "from_raw row_offsets",
                nrows + 1,
                row_offsets.len(),
            ));
        }
        if col_indices.len() != values.len() {
            return Err(Error::dims(
                "from_raw col/values",
                col_indices.len(),
                values.len(),
            ));
        }
        if row_offsets[0] != 0 || *row_offsets.last().unwrap() != col_indices.len() {
            return Err(Error::InvalidArgument(
                "row_offsets must start at 0 and end at nnz".into(),
            ));
        }
        for i in 0..nrows {
            let (lo, hi) = (row_offsets[i], row_offsets[i + 1]);
            if lo > hi {
                return Err(Error::InvalidArgument(format!(
                    "row_offsets decreases at row {i}"
                )));
            }
            for k in lo..hi {
                if col_indices[k] >= ncols {
                    return Err(Error::dims("from_raw col index", ncols, col_indices[k]));
                }
                if k > lo && col_indices[k] <= col_indices[k - 1] {
                    return Err(Error::InvalidArgument(format!(
                        "column indices not strictly increasing in row {i}"
                    )));
                }
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix {
            nrows,
            ncols,
            row_offsets: vec![0; nrows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Diagonal matrix from the given entries; exact zeros are pruned.
    pub fn diag(entries: &[f64]) -> Self {
        let n = entries.len();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for (j, &v) in entries.iter().enumerate() {
            if v != 0.0 {
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            nrows: n,
            ncols: n,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// `scale * tridiag(sub, diag, sup)` of the given size.
    pub fn tridiag(sub: f64, diag: f64, sup: f64, size: usize, scale: f64) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidArgument("tridiag size must be >= 1".into()));
        }
        let mut t = Vec::with_capacity(3 * size);
        for i in 0..size {
            if i > 0 {
                t.push((i, i - 1, scale * sub));
            }
            t.push((i, i, scale * diag));
            if i + 1 < size {
                t.push((i, i + 1, scale * sup));
            }
        }
        CsrMatrix::from_triplets(size, size, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
        (&self.col_indices[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn main_diagonal(&self) -> Vec<f64> {
        let n = self.nrows.min(self.ncols);
        (0..n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.ncols {
            return Err(Error::dims("matvec input", self.ncols, x.len()));
        }
        if y.len() != self.nrows {
            return Err(Error::dims("matvec output", self.nrows, y.len()));
        }
        for i in 0..self.nrows {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            let mut acc = 0.0;
            for k in lo..hi {
                acc += self.values[k] * x[self.col_indices[k]];
            }
            y[i] = acc;
        }
        Ok(())
    }

    pub fn transpose(&self) -> CsrMatrix {
        let nnz = self.nnz();
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut col_indices = vec![0usize; nnz];
        let mut values = vec![0.0; nnz];
        let mut next = counts;
        for i in 0..self.nrows {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            for k in lo..hi {
                let j = self.col_indices[k];
                let dst = next[j];
                col_indices[dst] = i;
                values[dst] = self.values[k];
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sparse-sparse product `self * rhs` with per-row accumulation;
    /// output rows are sorted and exact zeros pruned.
    pub fn matmul(&self, rhs: &CsrMatrix) -> Result<CsrMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::dims("matmul", self.ncols, rhs.nrows));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut acc = vec![0.0; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            let (acols, avals) = self.row(i);
            for (&k, &av) in acols.iter().zip(avals) {
                let (bcols, bvals) = rhs.row(k);
                for (&j, &bv) in bcols.iter().zip(bvals) {
                    if acc[j] == 0.0 && !touched.contains(&j) {
                        touched.push(j);
                    }
                    acc[j] += av * bv;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != 0.0 {
                    col_indices.push(j);
                    values.push(acc[j]);
                }
                acc[j] = 0.0;
            }
            touched.clear();
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Entrywise sum; cancellation to exact zero is pruned.
    pub fn add(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::dims(
                "add",
                format!("{}x{}", self.nrows, self.ncols),
                format!("{}x{}", other.nrows, other.ncols),
            ));
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (ac, av) = self.row(i);
            let (bc, bv) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ac.len() || q < bc.len() {
                let (j, v) = if q >= bc.len() || (p < ac.len() && ac[p] < bc[q]) {
                    let e = (ac[p], av[p]);
                    p += 1;
                    e
                } else if p >= ac.len() || bc[q] < ac[p] {
                    let e = (bc[q], bv[q]);
                    q += 1;
                    e
                } else {
                    let e = (ac[p], av[p] + bv[q]);
                    p += 1;
                    q += 1;
                    e
                };
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        if s == 0.0 {
            return CsrMatrix::zeros(self.nrows, self.ncols);
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= s;
        }
        out
    }

    /// `self * diag(d)`: column `j` scaled by `d[j]`.
    pub fn scale_columns(&self, d: &[f64]) -> Result<CsrMatrix> {
        if d.len() != self.ncols {
            return Err(Error::dims("scale_columns", self.ncols, d.len()));
        }
        let mut out = self.clone();
        for k in 0..out.values.len() {
            out.values[k] *= d[out.col_indices[k]];
        }
        out.prune_zeros();
        Ok(out)
    }

    fn prune_zeros(&mut self) {
        if !self.values.iter().any(|&v| v == 0.0) {
            return;
        }
        let mut row_offsets = Vec::with_capacity(self.nrows + 1);
        let mut col_indices = Vec::with_capacity(self.col_indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        row_offsets.push(0);
        for i in 0..self.nrows {
            let (lo, hi) = (self.row_offsets[i], self.row_offsets[i + 1]);
            for k in lo..hi {
                if self.values[k] != 0.0 {
                    col_indices.push(self.col_indices[k]);
                    values.push(self.values[k]);
                }
            }
            row_offsets.push(col_indices.len());
        }
        self.row_offsets = row_offsets;
        self.col_indices = col_indices;
        self.values = values;
    }

    /// Kronecker product `self (x) other`.
    pub fn kron(&self, other: &CsrMatrix) -> Result<CsrMatrix> {
        let nrows = self
            .nrows
            .checked_mul(other.nrows)
            .ok_or_else(|| Error::IndexOverflow("kron row count".into()))?;
        let ncols = self
            .ncols
            .checked_mul(other.ncols)
            .ok_or_else(|| Error::IndexOverflow("kron column count".into()))?;
        self.nnz()
            .checked_mul(other.nnz())
            .ok_or_else(|| Error::IndexOverflow("kron nnz".into()))?;
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::with_capacity(self.nnz() * other.nnz());
        let mut values = Vec::with_capacity(self.nnz() * other.nnz());
        row_offsets.push(0);
        for ia in 0..self.nrows {
            let (acols, avals) = self.row(ia);
            for ib in 0..other.nrows {
                let (bcols, bvals) = other.row(ib);
                for (&ja, &va) in acols.iter().zip(avals) {
                    let base = ja * other.ncols;
                    for (&jb, &vb) in bcols.iter().zip(bvals) {
                        let v = va * vb;
                        if v != 0.0 {
                            col_indices.push(base + jb);
                            values.push(v);
                        }
                    }
                }
                row_offsets.push(col_indices.len());
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Horizontal concatenation `[m0 m1 ...]`.
    pub fn hstack(parts: &[&CsrMatrix]) -> Result<CsrMatrix> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("hstack of zero matrices".into()));
        }
        let nrows = parts[0].nrows;
        for m in parts {
            if m.nrows != nrows {
                return Err(Error::dims("hstack rows", nrows, m.nrows));
            }
        }
        let ncols = parts.iter().map(|m| m.ncols).sum();
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..nrows {
            let mut offset = 0;
            for m in parts {
                let (cols, vals) = m.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    col_indices.push(offset + j);
                    values.push(v);
                }
                offset += m.ncols;
            }
            row_offsets.push(col_indices.len());
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Vertical concatenation.
    pub fn vstack(parts: &[&CsrMatrix]) -> Result<CsrMatrix> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("vstack of zero matrices".into()));
        }
        let ncols = parts[0].ncols;
        for m in parts {
            if m.ncols != ncols {
                return Err(Error::dims("vstack cols", ncols, m.ncols));
            }
        }
        let nrows = parts.iter().map(|m| m.nrows).sum();
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for m in parts {
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                col_indices.extend_from_slice(cols);
                values.extend_from_slice(vals);
                row_offsets.push(col_indices.len());
            }
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn block_diag(parts: &[&CsrMatrix]) -> Result<CsrMatrix> {
        if parts.is_empty() {
            return Err(Error::InvalidArgument("block_diag of zero matrices".into()));
        }
        let nrows = parts.iter().map(|m| m.nrows).sum();
        let ncols = parts.iter().map(|m| m.ncols).sum();
        let mut row_offsets = Vec::with_capacity(nrows + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        let mut col_base = 0;
        for m in parts {
            for i in 0..m.nrows {
                let (cols, vals) = m.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    col_indices.push(col_base + j);
                    values.push(v);
                }
                row_offsets.push(col_indices.len());
            }
            col_base += m.ncols;
        }
        Ok(CsrMatrix {
            nrows,
            ncols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                d.set(i, j, v);
            }
        }
        d
    }

    /// Converts from dense, pruning exact zeros.
    pub fn from_dense(d: &DenseMatrix) -> CsrMatrix {
        let mut row_offsets = Vec::with_capacity(d.nrows() + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                let v = d.get(i, j);
                if v != 0.0 {
                    col_indices.push(j);
                    values.push(v);
                }
            }
            row_offsets.push(col_indices.len());
        }
        CsrMatrix {
            nrows: d.nrows(),
            ncols: d.ncols(),
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Symmetry check: structural and numeric, `tol` relative to the
    /// largest entry magnitude.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_violation().is_none_or(|(_, _, gap)| {
            gap <= tol * self.max_abs().max(1e-300)
        })
    }

    /// Largest `|a_ij - a_ji|` with its position, or `None` for an
    /// exactly symmetric matrix.
    pub fn symmetry_violation(&self) -> Option<(usize, usize, f64)> {
        if self.nrows != self.ncols {
            return Some((0, 0, f64::INFINITY));
        }
        let t = self.transpose();
        let mut worst: Option<(usize, usize, f64)> = None;
        for i in 0..self.nrows {
            let (c1, v1) = self.row(i);
            let (c2, v2) = t.row(i);
            let (mut p, mut q) = (0, 0);
            while p < c1.len() || q < c2.len() {
                let (j, gap) = if q >= c2.len() || (p < c1.len() && c1[p] < c2[q]) {
                    let e = (c1[p], v1[p].abs());
                    p += 1;
                    e
                } else if p >= c1.len() || c2[q] < c1[p] {
                    let e = (c2[q], v2[q].abs());
                    q += 1;
                    e
                } else {
                    let e = (c1[p], (v1[p] - v2[q]).abs());
                    p += 1;
                    q += 1;
                    e
                };
                if gap > 0.0 && worst.map_or(true, |(_, _, w)| gap > w) {
                    worst = Some((i, j, gap));
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dense_of(m: &CsrMatrix) -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m.get(i, j)).collect())
            .collect()
    }

    #[test]
    fn triplets_accumulate_and_prune() {
        let m = CsrMatrix::from_triplets(
            2,
            3,
            &[(0, 2, 2.0), (0, 0, 1.0), (1, 1, 3.0), (1, 1, -3.0), (0, 2, 0.5)],
        )
        .unwrap();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 0), 1.0);
        assert_eq!(m.get(0, 2), 2.5);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.row_offsets(), &[0, 2, 2]);
    }

    #[test]
    fn triplets_out_of_range() {
        assert!(CsrMatrix::from_triplets(2, 2, &[(2, 0, 1.0)]).is_err());
        assert!(CsrMatrix::from_triplets(2, 2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn from_raw_validates() {
        // unsorted columns rejected
        assert!(CsrMatrix::from_raw(1, 3, vec![0, 2], vec![1, 0], vec![1.0, 2.0]).is_err());
        // duplicate column rejected
        assert!(CsrMatrix::from_raw(1, 3, vec![0, 2], vec![1, 1], vec![1.0, 2.0]).is_err());
        // explicit zero allowed
        let m = CsrMatrix::from_raw(1, 3, vec![0, 1], vec![1], vec![0.0]).unwrap();
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn matvec_matches_hand_result() {
        // [[1,0,2],[0,3,0]] * (1,1,1) = (3,3)
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap();
        let y = m.matvec(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(y, vec![3.0, 3.0]);
        assert!(m.matvec(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn transpose_matches_dense() {
        let m =
            CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.nrows(), 3);
        assert_eq!(t.ncols(), 2);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), t.get(j, i));
            }
        }
    }

    #[test]
    fn tridiag_builder() {
        // (1/h) * tridiag(0, 1, -1) at size 3
        let h = 0.25;
        let f = CsrMatrix::tridiag(0.0, 1.0, -1.0, 3, 1.0 / h).unwrap();
        let expect = [[4.0, -4.0, 0.0], [0.0, 4.0, -4.0], [0.0, 0.0, 4.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(f.get(i, j), expect[i][j]);
            }
        }
        assert!(CsrMatrix::tridiag(1.0, 2.0, 1.0, 0, 1.0).is_err());
    }

    #[test]
    fn kron_identity_pattern() {
        let swap = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        let k = CsrMatrix::identity(2).kron(&swap).unwrap();
        // two copies of the swap on the block diagonal
        let expect = [
            [0.0, 1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.get(i, j), expect[i][j]);
            }
        }
    }

    #[test]
    fn matmul_matches_dense_oracle() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, -2.0), (1, 0, 0.5), (2, 1, 3.0)],
        )
        .unwrap();
        let b =
            CsrMatrix::from_triplets(2, 3, &[(0, 0, 2.0), (0, 2, 1.0), (1, 1, -1.0)]).unwrap();
        let c = a.matmul(&b).unwrap();
        let (da, db, dc) = (dense_of(&a), dense_of(&b), dense_of(&c));
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..2 {
                    s += da[i][k] * db[k][j];
                }
                assert!((dc[i][j] - s).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matmul_prunes_cancellation() {
        // [1 1] * [1; -1] = [0], stored empty
        let a = CsrMatrix::from_triplets(1, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        let b = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.nnz(), 0);
    }

    #[test]
    fn stack_and_block_diag() {
        let a = CsrMatrix::identity(2);
        let b = CsrMatrix::from_triplets(2, 1, &[(0, 0, 5.0)]).unwrap();
        let h = CsrMatrix::hstack(&[&a, &b]).unwrap();
        assert_eq!(h.ncols(), 3);
        assert_eq!(h.get(0, 2), 5.0);
        let v = CsrMatrix::vstack(&[&a, &a]).unwrap();
        assert_eq!(v.nrows(), 4);
        assert_eq!(v.get(3, 1), 1.0);
        let d = CsrMatrix::block_diag(&[&a, &b]).unwrap();
        assert_eq!((d.nrows(), d.ncols()), (4, 3));
        assert_eq!(d.get(2, 2), 5.0);
        assert_eq!(d.get(2, 0), 0.0);
    }

    #[test]
    fn symmetry_detection() {
        let s = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0), (0, 0, 2.0)]).unwrap();
        assert!(s.is_symmetric(1e-12));
        let ns = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-6)]).unwrap();
        assert!(!ns.is_symmetric(1e-12));
        assert!(ns.is_symmetric(1e-5));
    }

    #[test]
    fn scale_columns_matches_dense() {
        let a = CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0)]).unwrap();
        let s = a.scale_columns(&[2.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.get(0, 0), 2.0);
        assert_eq!(s.get(0, 2), -2.0);
        // column scaled by zero is pruned
        assert_eq!(s.nnz(), 2);
    }

    fn small_matrix() -> impl Strategy<Value = CsrMatrix> {
        (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
            proptest::collection::vec((0..r, 0..c, -5.0f64..5.0), 0..12)
                .prop_map(move |t| CsrMatrix::from_triplets(r, c, &t).unwrap())
        })
    }

    proptest! {
        #[test]
        fn transpose_is_involutive(m in small_matrix()) {
            prop_assert_eq!(&m.transpose().transpose(), &m);
        }

        #[test]
        fn kron_matches_dense((a, b) in (small_matrix(), small_matrix())) {
            let k = a.kron(&b).unwrap();
            for i in 0..k.nrows() {
                for j in 0..k.ncols() {
                    let expect = a.get(i / b.nrows(), j / b.ncols()) * b.get(i % b.nrows(), j % b.ncols());
                    prop_assert!((k.get(i, j) - expect).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn add_matches_dense((a, b) in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| (
            proptest::collection::vec((0..r, 0..c, -5.0f64..5.0), 0..12)
                .prop_map(move |t| CsrMatrix::from_triplets(r, c, &t).unwrap()),
            proptest::collection::vec((0..r, 0..c, -5.0f64..5.0), 0..12)
                .prop_map(move |t| CsrMatrix::from_triplets(r, c, &t).unwrap()),
        ))) {
            let s = a.add(&b).unwrap();
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    prop_assert!((s.get(i, j) - (a.get(i, j) + b.get(i, j))).abs() <= 1e-12);
                }
            }
        }
    }
}
