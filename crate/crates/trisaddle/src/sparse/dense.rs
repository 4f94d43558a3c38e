use crate::error::{Error, Result};

/// Row-major dense matrix. Used for small-order work: direct oracles,
/// Schur complements of modest size, eigenanalysis workspaces.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("from_rows: no rows".into()));
        }
        let ncols = rows[0].len();
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::InvalidArgument("from_rows: ragged rows".into()));
        }
        Ok(DenseMatrix {
            nrows: rows.len(),
            ncols,
            data: rows.concat(),
        })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn row_slice(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).sum()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::dims("dense matvec", self.ncols, x.len()));
        }
        Ok((0..self.nrows)
            .map(|i| {
                self.row_slice(i)
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::dims("dense matmul", self.ncols, rhs.nrows));
        }
        let mut out = DenseMatrix::zeros(self.nrows, rhs.ncols);
        for i in 0..self.nrows {
            for k in 0..self.ncols {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..rhs.ncols {
                    out.data[i * rhs.ncols + j] += aik * rhs.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// Numerical rank via row echelon reduction with partial pivoting;
    /// `tol` is relative to the largest entry magnitude.
    pub fn rank(&self, tol: f64) -> usize {
        let mut m = self.clone();
        let threshold = tol * m.max_abs().max(1.0);
        let mut rank = 0;
        let mut pivot_row = 0;
        for col in 0..m.ncols {
            if pivot_row >= m.nrows {
                break;
            }
            let mut best = pivot_row;
            for r in pivot_row + 1..m.nrows {
                if m.get(r, col).abs() > m.get(best, col).abs() {
                    best = r;
                }
            }
            if m.get(best, col).abs() <= threshold {
                continue;
            }
            m.swap_rows(pivot_row, best);
            let piv = m.get(pivot_row, col);
            for r in pivot_row + 1..m.nrows {
                let factor = m.get(r, col) / piv;
                if factor != 0.0 {
                    for c in col..m.ncols {
                        let v = m.get(r, c) - factor * m.get(pivot_row, c);
                        m.set(r, c, v);
                    }
                }
            }
            rank += 1;
            pivot_row += 1;
        }
        rank
    }

    /// Basis for the right nullspace via reduced row echelon form.
    /// Vectors are returned unnormalized; callers wanting high accuracy
    /// should project and renormalize.
    pub fn nullspace(&self, tol: f64) -> Vec<Vec<f64>> {
        let mut m = self.clone();
        let threshold = tol * m.max_abs().max(1.0);
        let mut pivots: Vec<usize> = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.ncols {
            if pivot_row >= m.nrows {
                break;
            }
            let mut best = pivot_row;
            for r in pivot_row + 1..m.nrows {
                if m.get(r, col).abs() > m.get(best, col).abs() {
                    best = r;
                }
            }
            if m.get(best, col).abs() <= threshold {
                continue;
            }
            m.swap_rows(pivot_row, best);
            let piv = m.get(pivot_row, col);
            for c in col..m.ncols {
                m.set(pivot_row, c, m.get(pivot_row, c) / piv);
            }
            for r in 0..m.nrows {
                if r == pivot_row {
                    continue;
                }
                let factor = m.get(r, col);
                if factor != 0.0 {
                    for c in col..m.ncols {
                        let v = m.get(r, c) - factor * m.get(pivot_row, c);
                        m.set(r, c, v);
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        let free: Vec<usize> = (0..m.ncols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![0.0; m.ncols];
                x[f] = 1.0;
                for (r, &p) in pivots.iter().enumerate() {
                    x[p] = -m.get(r, f);
                }
                x
            })
            .collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.ncols {
            self.data.swap(a * self.ncols + c, b * self.ncols + c);
        }
    }
}

/// LU factorization with partial pivoting, for the direct-solve oracle.
pub struct DenseLu {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(m: &DenseMatrix) -> Result<DenseLu> {
        if m.nrows != m.ncols {
            return Err(Error::dims("lu factor", "square", format!("{}x{}", m.nrows, m.ncols)));
        }
        let n = m.nrows;
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut best = k;
            for r in k + 1..n {
                if lu.get(r, k).abs() > lu.get(best, k).abs() {
                    best = r;
                }
            }
            if lu.get(best, k) == 0.0 {
                return Err(Error::Singular(k));
            }
            lu.swap_rows(k, best);
            perm.swap(k, best);
            let piv = lu.get(k, k);
            for r in k + 1..n {
                let factor = lu.get(r, k) / piv;
                lu.set(r, k, factor);
                if factor != 0.0 {
                    for c in k + 1..n {
                        let v = lu.get(r, c) - factor * lu.get(k, c);
                        lu.set(r, c, v);
                    }
                }
            }
        }
        Ok(DenseLu { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::dims("lu solve", self.n, b.len()));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..self.n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for j in i + 1..self.n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        Ok(x)
    }
}

/// One-shot dense solve; factors every call.
pub fn dense_solve(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DenseLu::factor(m)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_hand_system() {
        // [[2,1],[1,3]] x = (3,5) -> x = (4/5, 7/5)
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = dense_solve(&m, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn lu_detects_singular() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(DenseLu::factor(&m), Err(Error::Singular(_))));
    }

    #[test]
    fn lu_residual_small_on_random_system() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 25;
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.random_range(-1.0..1.0));
            }
            // diagonal dominance keeps the test system comfortably regular
            m.set(i, i, m.get(i, i) + (n as f64));
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = dense_solve(&m, &b).unwrap();
        let r = m.matvec(&x).unwrap();
        let err: f64 = r.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "residual {err}");
    }

    #[test]
    fn rank_of_rectangular() {
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0], // row0 + row1
        ])
        .unwrap();
        assert_eq!(m.rank(1e-10), 2);
        assert_eq!(DenseMatrix::identity(4).rank(1e-10), 4);
        assert_eq!(DenseMatrix::zeros(3, 5).rank(1e-10), 0);
    }

    #[test]
    fn nullspace_spans_kernel() {
        // B = [1 1 0; 0 0 1] has kernel spanned by (1,-1,0)
        let b = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]).unwrap();
        let ns = b.nullspace(1e-12);
        assert_eq!(ns.len(), 1);
        let bx = b.matvec(&ns[0]).unwrap();
        assert!(bx.iter().all(|v| v.abs() < 1e-12));
        assert!(ns[0].iter().any(|v| v.abs() > 0.5));
    }
}
