//! Deterministic benchmark problem generators.
//!
//! Two structured families and one randomized small-instance generator.
//! The first family has Kronecker-structured Poisson-type blocks on a p x p
//! grid; the second mixes a Gaussian-kernel Gram block with graded diagonal
//! blocks and incidence-like coupling. Both emit the positive-semidefinite
//! (nonsymmetric) form with the right-hand side chosen so the all-ones
//! vector is the exact solution, which is what the iteration-error column
//! of the benchmark tables is measured against.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::saddle::{SaddlePointSystem, SystemForm};
use crate::sparse::CsrMatrix;

/// Grid parameter for the Kronecker family. Implies mesh size
/// h = 1/(p+1) and dimensions n = 2p^2, m = l = p^2.
#[derive(Clone, Copy, Debug)]
pub struct Example1Config {
    pub p: usize,
}

impl Example1Config {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.p as f64 + 1.0)
    }

    pub fn n(&self) -> usize {
        2 * self.p * self.p
    }

    pub fn m(&self) -> usize {
        self.p * self.p
    }

    pub fn l(&self) -> usize {
        self.p * self.p
    }
}

/// Grid parameter for the kernel family. Implies pt = p^2, ph = p(p+1)
/// and dimensions n = ph + 4 pt, m = 2 pt, l = ph.
#[derive(Clone, Copy, Debug)]
pub struct Example2Config {
    pub p: usize,
}

/// Largest p the kernel family accepts; the Gram block grows as p^4 work.
pub const EXAMPLE2_MAX_P: usize = 64;

impl Example2Config {
    pub fn new(p: usize) -> Self {
        Self { p }
    }

    pub fn p_tilde(&self) -> usize {
        self.p * self.p
    }

    pub fn p_hat(&self) -> usize {
        self.p * (self.p + 1)
    }

    pub fn n(&self) -> usize {
        self.p_hat() + 4 * self.p_tilde()
    }

    pub fn m(&self) -> usize {
        2 * self.p_tilde()
    }

    pub fn l(&self) -> usize {
        self.p_hat()
    }
}

/// f = A 1 + B^T 1, g = B 1 + C^T 1, h = C 1, so ones solve the assembled
/// system exactly in either form.
fn ones_rhs(
    a: &CsrMatrix,
    b: &CsrMatrix,
    c: &CsrMatrix,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let ones_n = vec![1.0; a.nrows()];
    let ones_m = vec![1.0; b.nrows()];
    let ones_l = vec![1.0; c.nrows()];
    let mut f = a.matvec(&ones_n)?;
    for (fi, bi) in f.iter_mut().zip(b.transpose().matvec(&ones_m)?) {
        *fi += bi;
    }
    let mut g = b.matvec(&ones_n)?;
    for (gi, ci) in g.iter_mut().zip(c.transpose().matvec(&ones_l)?) {
        *gi += ci;
    }
    let h = c.matvec(&ones_m)?;
    Ok((f, g, h))
}

/// Kronecker-structured family on a p x p grid:
/// A = blkdiag(I (x) T + T (x) I, I (x) T + T (x) I) with
/// T = (1/h^2) tridiag(-1, 2, -1), B = [I (x) F, F (x) I] with
/// F = (1/h) upper bidiagonal (1, -1), and C = E (x) F with
/// E = diag(1, p+1, ..., p^2 - p + 1).
pub fn gen_example1(cfg: &Example1Config) -> Result<SaddlePointSystem> {
    let p = cfg.p;
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "example 1 needs p >= 2, got {p}"
        )));
    }
    let h = cfg.h();
    let t = CsrMatrix::tridiag(-1.0, 2.0, -1.0, p, 1.0 / (h * h))?;
    let f_mat = CsrMatrix::tridiag(0.0, 1.0, -1.0, p, 1.0 / h)?;
    let e_diag: Vec<f64> = (0..p).map(|k| (1 + k * p) as f64).collect();
    let e = CsrMatrix::diag(&e_diag);
    let eye = CsrMatrix::identity(p);

    let lap = eye.kron(&t)?.add(&t.kron(&eye)?)?;
    let a = CsrMatrix::block_diag(&[&lap, &lap])?;
    let b = CsrMatrix::hstack(&[&eye.kron(&f_mat)?, &f_mat.kron(&eye)?])?;
    let c = e.kron(&f_mat)?;

    let (f, g, h_rhs) = ones_rhs(&a, &b, &c)?;
    SaddlePointSystem::assemble(a, b, c, f, g, h_rhs, SystemForm::Nonsymmetric)
}

/// Gaussian kernel matrix with entries exp(-2((i/3)^2 + (j/3)^2)) for
/// 1-based i, j. Entries whose exponent drops below -760 are skipped: exp
/// already underflows to exact zero well before that, so the skip changes
/// nothing numerically and keeps the matrix sparse.
pub(crate) fn gaussian_kernel(order: usize) -> CsrMatrix {
    let mut triplets = Vec::new();
    for i in 1..=order {
        let ei = -2.0 * (i as f64 / 3.0) * (i as f64 / 3.0);
        if ei < -760.0 {
            break;
        }
        for j in 1..=order {
            let exponent = ei - 2.0 * (j as f64 / 3.0) * (j as f64 / 3.0);
            if exponent < -760.0 {
                break;
            }
            triplets.push((i - 1, j - 1, exponent.exp()));
        }
    }
    CsrMatrix::from_triplets(order, order, &triplets).expect("kernel triplets are in range")
}

/// Kernel family: A = blkdiag(2 W^T W + I, D2, D3) with the Gaussian W and
/// graded diagonals D2, D3; B = [E, -I, I] and C = E^T where E stacks
/// Ehat (x) I over I (x) Ehat, Ehat the p x (p+1) bidiagonal (2, -1).
pub fn gen_example2(cfg: &Example2Config) -> Result<SaddlePointSystem> {
    let p = cfg.p;
    if p < 2 {
        return Err(Error::InvalidArgument(format!(
            "example 2 needs p >= 2, got {p}"
        )));
    }
    if p > EXAMPLE2_MAX_P {
        return Err(Error::OrderGuard {
            order: p,
            limit: EXAMPLE2_MAX_P,
        });
    }
    let pt = cfg.p_tilde();
    let ph = cfg.p_hat();

    let w = gaussian_kernel(ph);
    let block1 = w
        .transpose()
        .matmul(&w)?
        .scaled(2.0)
        .add(&CsrMatrix::identity(ph))?;
    let d2: Vec<f64> = (1..=2 * pt)
        .map(|j| {
            if j <= pt {
                1.0
            } else {
                1e-5 * ((j - pt) * (j - pt)) as f64
            }
        })
        .collect();
    let d3: Vec<f64> = (1..=2 * pt)
        .map(|j| 1e-5 * ((j + pt) * (j + pt)) as f64)
        .collect();
    let a = CsrMatrix::block_diag(&[&block1, &CsrMatrix::diag(&d2), &CsrMatrix::diag(&d3)])?;

    let mut ehat_t = Vec::with_capacity(2 * p);
    for i in 0..p {
        ehat_t.push((i, i, 2.0));
        ehat_t.push((i, i + 1, -1.0));
    }
    let ehat = CsrMatrix::from_triplets(p, p + 1, &ehat_t)?;
    let eye_p = CsrMatrix::identity(p);
    let e = CsrMatrix::vstack(&[&ehat.kron(&eye_p)?, &eye_p.kron(&ehat)?])?;

    let eye_m = CsrMatrix::identity(2 * pt);
    let b = CsrMatrix::hstack(&[&e, &eye_m.scaled(-1.0), &eye_m])?;
    let c = e.transpose();

    let (f, g, h) = ones_rhs(&a, &b, &c)?;
    SaddlePointSystem::assemble(a, b, c, f, g, h, SystemForm::Nonsymmetric)
}

const RANK_RETRY_LIMIT: usize = 20;

/// Random dense-backed instance for property tests: A = G^T G + I with G
/// uniform in [-1, 1), and B, C redrawn until the dense rank oracle
/// certifies full row rank. Same seed, same system, bit for bit.
pub fn gen_random_small(n: usize, m: usize, l: usize, seed: u64) -> Result<SaddlePointSystem> {
    if !(1 <= l && l <= m && m <= n) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= l <= m <= n, got n={n}, m={m}, l={l}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rows: usize, cols: usize, rng: &mut ChaCha8Rng| -> Result<CsrMatrix> {
        let mut t = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                t.push((i, j, rng.random_range(-1.0..1.0)));
            }
        }
        CsrMatrix::from_triplets(rows, cols, &t)
    };

    let g_mat = draw(n, n, &mut rng)?;
    let a = g_mat
        .transpose()
        .matmul(&g_mat)?
        .add(&CsrMatrix::identity(n))?;

    let mut pair = None;
    for _ in 0..RANK_RETRY_LIMIT {
        let b = draw(m, n, &mut rng)?;
        let c = draw(l, m, &mut rng)?;
        if b.to_dense().rank(1e-10) == m && c.to_dense().rank(1e-10) == l {
            pair = Some((b, c));
            break;
        }
    }
    let (b, c) = pair.ok_or_else(|| {
        Error::RetriesExhausted(format!(
            "no full-rank B, C after {RANK_RETRY_LIMIT} draws for (n={n}, m={m}, l={l})"
        ))
    })?;

    let (f, g, h) = ones_rhs(&a, &b, &c)?;
    SaddlePointSystem::assemble(a, b, c, f, g, h, SystemForm::Nonsymmetric)
}
