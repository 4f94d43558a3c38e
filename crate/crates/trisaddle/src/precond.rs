//! Block preconditioners for the saddle point operator.
//!
//! The headline preconditioner is the shifted-Gram block diagonal
//!
//! ```text
//! M = diag(A, alpha*I + beta*BB', alpha*I + beta*CC'),  alpha, beta > 0
//! ```
//!
//! whose application is three SPD solves and which needs no Schur
//! complement. The baselines it is measured against are the block
//! diagonal pair
//!
//! ```text
//! BD1 = diag(A, S, C S^{-1} C')          S  = B A^{-1} B'   (exact)
//! BD2 = diag(diag(A), S^, C S^^{-1} C')  S^ = B diag(A)^{-1} B'
//! ```
//!
//! and the block triangular family P1/P2/P3 built from the same S^.
//! The trailing block C S^^{-1} C' is never materialized: it is applied
//! as an operator (two sparse products around a solve with S^) and
//! inverted by an inner CG. Solves with S^ inside that operator always
//! use the Cholesky factor, in both inner modes, so the operator the
//! inner CG sees is a fixed SPD matrix; the inner-mode switch governs
//! the standalone solves (with A, with S^, and the CG tolerances).

use crate::error::{Error, Result};
use crate::krylov::{cg_solve, IterationConfig, Preconditioner, SolveStatus};
use crate::saddle::{BlockVector, SaddlePointSystem};
use crate::sparse::{cholesky_factor, CholeskyFactor, CsrMatrix, DenseMatrix, LinearOperator};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

/// Inner CG stopping rule for inexact applications: residual reduction
/// by 1e-3 or 500 iterations, whichever comes first. Hitting the cap is
/// a normal outcome, not a failure.
pub const INNER_CG_TOL: f64 = 1e-3;
pub const INNER_CG_MAXIT: usize = 500;

/// Tolerance for the trailing-block CG when the application must act
/// like a fixed linear operator.
const EXACT_THIRD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecondKind {
    Identity,
    NewM,
    Bd1,
    Bd2,
    P1,
    P2,
    P3,
}

impl std::fmt::Display for PrecondKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PrecondKind::Identity => "I",
            PrecondKind::NewM => "M",
            PrecondKind::Bd1 => "BD1",
            PrecondKind::Bd2 => "BD2",
            PrecondKind::P1 => "P1",
            PrecondKind::P2 => "P2",
            PrecondKind::P3 => "P3",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for PrecondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "identity" | "none" => Ok(PrecondKind::Identity),
            "m" | "new_m" | "newm" => Ok(PrecondKind::NewM),
            "bd1" => Ok(PrecondKind::Bd1),
            "bd2" => Ok(PrecondKind::Bd2),
            "p1" => Ok(PrecondKind::P1),
            "p2" => Ok(PrecondKind::P2),
            "p3" => Ok(PrecondKind::P3),
            other => Err(Error::InvalidArgument(format!(
                "unknown preconditioner kind '{other}' (expected i, m, bd1, bd2, p1, p2 or p3)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMode {
    ExactCholesky,
    InexactCg,
}

impl std::fmt::Display for InnerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InnerMode::ExactCholesky => "chol",
            InnerMode::InexactCg => "cg",
        })
    }
}

impl std::str::FromStr for InnerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "chol" | "cholesky" | "exact" => Ok(InnerMode::ExactCholesky),
            "cg" | "inexact" => Ok(InnerMode::InexactCg),
            other => Err(Error::InvalidArgument(format!(
                "unknown inner mode '{other}' (expected chol or cg)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreconditionerParams {
    pub alpha: f64,
    pub beta: f64,
}

impl PreconditionerParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        let p = PreconditionerParams { alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "alpha must be positive and finite, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "beta must be positive and finite, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// The approximate Schur complement S^ = B diag(A)^{-1} B', its factor,
/// and the blocks needed to invert C S^^{-1} C' iteratively.
struct SchurOperators {
    s_hat: CsrMatrix,
    s_hat_factor: CholeskyFactor,
    c: CsrMatrix,
    ct: CsrMatrix,
}

struct ThirdBlockOp<'a> {
    schur: &'a SchurOperators,
}

impl LinearOperator for ThirdBlockOp<'_> {
    fn nrows(&self) -> usize {
        self.schur.c.nrows()
    }

    fn ncols(&self) -> usize {
        self.schur.c.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let t = self.schur.ct.matvec(x).unwrap();
        let u = self.schur.s_hat_factor.solve(&t).unwrap();
        let v = self.schur.c.matvec(&u).unwrap();
        y.copy_from_slice(&v);
    }
}

impl SchurOperators {
    fn build(s: &SaddlePointSystem) -> Result<Self> {
        let inv = inverse_diagonal(s.a())?;
        let scaled = s.b().scale_columns(&inv)?;
        let s_hat = scaled.matmul(s.bt())?;
        let s_hat_factor = cholesky_factor(&s_hat)?;
        Ok(SchurOperators {
            s_hat,
            s_hat_factor,
            c: s.c().clone(),
            ct: s.ct().clone(),
        })
    }

    fn solve_s_hat(&self, rhs: &[f64], mode: InnerMode, tally: &AtomicU64) -> Result<Vec<f64>> {
        match mode {
            InnerMode::ExactCholesky => self.s_hat_factor.solve(rhs),
            InnerMode::InexactCg => inner_cg(&self.s_hat, rhs, INNER_CG_TOL, INNER_CG_MAXIT, tally),
        }
    }

    /// z with (C S^^{-1} C') z = rhs, by CG on the operator form.
    fn invert_third(&self, rhs: &[f64], mode: InnerMode, tally: &AtomicU64) -> Result<Vec<f64>> {
        let op = ThirdBlockOp { schur: self };
        let (tol, maxit) = match mode {
            InnerMode::ExactCholesky => (EXACT_THIRD_TOL, 2 * self.c.nrows() + 100),
            InnerMode::InexactCg => (INNER_CG_TOL, INNER_CG_MAXIT),
        };
        inner_cg(&op, rhs, tol, maxit, tally)
    }
}

fn inverse_diagonal(a: &CsrMatrix) -> Result<Vec<f64>> {
    let diag = a.main_diagonal();
    for (i, d) in diag.iter().enumerate() {
        if !(*d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { row: i, pivot: *d });
        }
    }
    Ok(diag.iter().map(|d| 1.0 / d).collect())
}

fn inner_cg(
    op: &dyn LinearOperator,
    rhs: &[f64],
    tol: f64,
    maxit: usize,
    tally: &AtomicU64,
) -> Result<Vec<f64>> {
    let cfg = IterationConfig {
        tol,
        maxit,
        restart: None,
        record_history: false,
    };
    let (x, report) = cg_solve(op, rhs, &cfg)?;
    tally.fetch_add(report.iterations as u64, Ordering::Relaxed);
    match report.status {
        SolveStatus::Converged | SolveStatus::MaxIterations => Ok(x),
        _ => Err(Error::InnerSolve(
            report
                .failure_detail
                .unwrap_or_else(|| "inner conjugate gradient broke down".into()),
        )),
    }
}

enum State {
    Identity,
    NewM {
        a: CsrMatrix,
        block2: CsrMatrix,
        block3: CsrMatrix,
        // present iff the inner mode is exact
        factors: Option<Box<(CholeskyFactor, CholeskyFactor, CholeskyFactor)>>,
    },
    Bd1 {
        a_factor: CholeskyFactor,
        s_factor: CholeskyFactor,
        third_factor: CholeskyFactor,
    },
    Bd2 {
        inv_diag: Vec<f64>,
        schur: SchurOperators,
    },
    Triangular {
        a: CsrMatrix,
        a_factor: Option<CholeskyFactor>,
        b: CsrMatrix,
        bt: CsrMatrix,
        schur: SchurOperators,
    },
}

/// A built preconditioner. Immutable after construction; applications
/// allocate call-local scratch, so instances may be shared across
/// threads (the inner-iteration tally is atomic).
pub struct PreconditionerInstance {
    kind: PrecondKind,
    params: Option<PreconditionerParams>,
    inner_mode: InnerMode,
    state: State,
    setup_seconds: f64,
    n: usize,
    m: usize,
    l: usize,
    inner_iterations: AtomicU64,
}

impl PreconditionerInstance {
    pub fn kind(&self) -> PrecondKind {
        self.kind
    }

    pub fn params(&self) -> Option<PreconditionerParams> {
        self.params
    }

    pub fn inner_mode(&self) -> InnerMode {
        self.inner_mode
    }

    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    pub fn block_dims(&self) -> (usize, usize, usize) {
        (self.n, self.m, self.l)
    }

    /// Inner CG iterations accumulated across all applications so far.
    pub fn inner_iterations(&self) -> u64 {
        self.inner_iterations.load(Ordering::Relaxed)
    }

    pub fn reset_inner_iterations(&self) {
        self.inner_iterations.store(0, Ordering::Relaxed);
    }

    pub fn apply(&self, r: &BlockVector) -> Result<BlockVector> {
        let (n, m, l) = (self.n, self.m, self.l);
        if r.x.len() != n || r.y.len() != m || r.z.len() != l {
            return Err(Error::dims(
                "preconditioner apply",
                format!("({n},{m},{l})"),
                format!("({},{},{})", r.x.len(), r.y.len(), r.z.len()),
            ));
        }
        let tally = &self.inner_iterations;
        match &self.state {
            State::Identity => Ok(r.clone()),
            State::NewM {
                a,
                block2,
                block3,
                factors,
            } => match factors {
                Some(f) => Ok(BlockVector {
                    x: f.0.solve(&r.x)?,
                    y: f.1.solve(&r.y)?,
                    z: f.2.solve(&r.z)?,
                }),
                None => Ok(BlockVector {
                    x: inner_cg(a, &r.x, INNER_CG_TOL, INNER_CG_MAXIT, tally)?,
                    y: inner_cg(block2, &r.y, INNER_CG_TOL, INNER_CG_MAXIT, tally)?,
                    z: inner_cg(block3, &r.z, INNER_CG_TOL, INNER_CG_MAXIT, tally)?,
                }),
            },
            State::Bd1 {
                a_factor,
                s_factor,
                third_factor,
            } => Ok(BlockVector {
                x: a_factor.solve(&r.x)?,
                y: s_factor.solve(&r.y)?,
                z: third_factor.solve(&r.z)?,
            }),
            State::Bd2 { inv_diag, schur } => {
                let x: Vec<f64> = r.x.iter().zip(inv_diag).map(|(v, d)| v * d).collect();
                let y = schur.solve_s_hat(&r.y, self.inner_mode, tally)?;
                let z = schur.invert_third(&r.z, self.inner_mode, tally)?;
                Ok(BlockVector { x, y, z })
            }
            State::Triangular {
                a,
                a_factor,
                b,
                bt,
                schur,
            } => {
                let solve_a = |rhs: &[f64]| -> Result<Vec<f64>> {
                    match a_factor {
                        Some(f) => f.solve(rhs),
                        None => inner_cg(a, rhs, INNER_CG_TOL, INNER_CG_MAXIT, tally),
                    }
                };
                let t = schur.invert_third(&r.z, self.inner_mode, tally)?;
                match self.kind {
                    PrecondKind::P1 | PrecondKind::P2 => {
                        let z3: Vec<f64> = if self.kind == PrecondKind::P2 {
                            t
                        } else {
                            t.iter().map(|v| -v).collect()
                        };
                        let z1 = solve_a(&r.x)?;
                        // middle row: -S^ z2 = r2 - B z1 - C' z3
                        let bz1 = b.matvec(&z1)?;
                        let ctz3 = schur.ct.matvec(&z3)?;
                        let rhs2: Vec<f64> = (0..m).map(|i| bz1[i] + ctz3[i] - r.y[i]).collect();
                        let z2 = schur.solve_s_hat(&rhs2, self.inner_mode, tally)?;
                        Ok(BlockVector {
                            x: z1,
                            y: z2,
                            z: z3,
                        })
                    }
                    PrecondKind::P3 => {
                        let z3: Vec<f64> = t.iter().map(|v| -v).collect();
                        // leading 2x2 block by elimination through A
                        let w = solve_a(&r.x)?;
                        let bw = b.matvec(&w)?;
                        let ctz3 = schur.ct.matvec(&z3)?;
                        let rhs2: Vec<f64> = (0..m).map(|i| r.y[i] - bw[i] - ctz3[i]).collect();
                        let s2 = schur.solve_s_hat(&rhs2, self.inner_mode, tally)?;
                        let z2: Vec<f64> = s2.iter().map(|v| -v).collect();
                        let btz2 = bt.matvec(&z2)?;
                        let rhs1: Vec<f64> = (0..n).map(|i| r.x[i] - btz2[i]).collect();
                        let z1 = solve_a(&rhs1)?;
                        Ok(BlockVector {
                            x: z1,
                            y: z2,
                            z: z3,
                        })
                    }
                    _ => unreachable!("triangular state only built for P1, P2, P3"),
                }
            }
        }
    }
}

impl Preconditioner for PreconditionerInstance {
    fn order(&self) -> usize {
        self.n + self.m + self.l
    }

    fn apply_precond(&self, r: &[f64], z: &mut [f64]) -> Result<()> {
        let br = BlockVector::from_flat(r, self.n, self.m, self.l)?;
        let bz = self.apply(&br)?;
        z[..self.n].copy_from_slice(&bz.x);
        z[self.n..self.n + self.m].copy_from_slice(&bz.y);
        z[self.n + self.m..].copy_from_slice(&bz.z);
        Ok(())
    }
}

/// Uniform dispatch used by the benchmark harness.
pub fn build_preconditioner(
    s: &SaddlePointSystem,
    kind: PrecondKind,
    params: Option<PreconditionerParams>,
    inner_mode: InnerMode,
) -> Result<PreconditionerInstance> {
    match kind {
        PrecondKind::Identity => Ok(build_identity(s)),
        PrecondKind::NewM => {
            let p = params.ok_or_else(|| {
                Error::InvalidArgument("preconditioner m requires alpha and beta".into())
            })?;
            build_m(s, p, inner_mode)
        }
        PrecondKind::Bd1 | PrecondKind::Bd2 => build_bd(s, kind, inner_mode),
        PrecondKind::P1 | PrecondKind::P2 | PrecondKind::P3 => build_p123(s, kind, inner_mode),
    }
}

pub fn build_identity(s: &SaddlePointSystem) -> PreconditionerInstance {
    PreconditionerInstance {
        kind: PrecondKind::Identity,
        params: None,
        inner_mode: InnerMode::ExactCholesky,
        state: State::Identity,
        setup_seconds: 0.0,
        n: s.n(),
        m: s.m(),
        l: s.l(),
        inner_iterations: AtomicU64::new(0),
    }
}

/// Builds the shifted-Gram block diagonal
/// diag(A, alpha*I + beta*BB', alpha*I + beta*CC').
pub fn build_m(
    s: &SaddlePointSystem,
    params: PreconditionerParams,
    inner_mode: InnerMode,
) -> Result<PreconditionerInstance> {
    params.validate()?;
    let start = Instant::now();
    let (m, l) = (s.m(), s.l());
    let bbt = s.b().matmul(s.bt())?;
    let cct = s.c().matmul(s.ct())?;
    let block2 = CsrMatrix::identity(m)
        .scaled(params.alpha)
        .add(&bbt.scaled(params.beta))?;
    let block3 = CsrMatrix::identity(l)
        .scaled(params.alpha)
        .add(&cct.scaled(params.beta))?;
    let factors = match inner_mode {
        InnerMode::ExactCholesky => Some(Box::new((
            cholesky_factor(s.a())?,
            cholesky_factor(&block2)?,
            cholesky_factor(&block3)?,
        ))),
        InnerMode::InexactCg => None,
    };
    Ok(PreconditionerInstance {
        kind: PrecondKind::NewM,
        params: Some(params),
        inner_mode,
        state: State::NewM {
            a: s.a().clone(),
            block2,
            block3,
            factors,
        },
        setup_seconds: start.elapsed().as_secs_f64(),
        n: s.n(),
        m,
        l,
        inner_iterations: AtomicU64::new(0),
    })
}

/// Builds a block diagonal baseline. BD1 uses the exact Schur
/// complement, materialized densely through solves with A, and only
/// supports the exact inner mode; BD2 uses S^ and supports both.
pub fn build_bd(
    s: &SaddlePointSystem,
    variant: PrecondKind,
    inner_mode: InnerMode,
) -> Result<PreconditionerInstance> {
    let start = Instant::now();
    let state = match variant {
        PrecondKind::Bd1 => {
            if inner_mode == InnerMode::InexactCg {
                return Err(Error::UnsupportedMode(
                    "bd1 nests solves with A inside Schur solves; only the exact mode is defined"
                        .into(),
                ));
            }
            let a_factor = cholesky_factor(s.a())?;
            let s_dense = materialize_spd(s.m(), s.n(), s.b(), |col| a_factor.solve(col))?;
            let s_factor = cholesky_factor(&CsrMatrix::from_dense(&s_dense))?;
            let third_dense = materialize_spd(s.l(), s.m(), s.c(), |col| s_factor.solve(col))?;
            let third_factor = cholesky_factor(&CsrMatrix::from_dense(&third_dense))?;
            State::Bd1 {
                a_factor,
                s_factor,
                third_factor,
            }
        }
        PrecondKind::Bd2 => State::Bd2 {
            inv_diag: inverse_diagonal(s.a())?,
            schur: SchurOperators::build(s)?,
        },
        other => {
            return Err(Error::InvalidArgument(format!(
                "build_bd expects bd1 or bd2, got {other}"
            )))
        }
    };
    Ok(PreconditionerInstance {
        kind: variant,
        params: None,
        inner_mode,
        state,
        setup_seconds: start.elapsed().as_secs_f64(),
        n: s.n(),
        m: s.m(),
        l: s.l(),
        inner_iterations: AtomicU64::new(0),
    })
}

/// G K^{-1} G' as a dense matrix, one solve per row of G, symmetrized
/// to scrub solver round-off before factorization.
fn materialize_spd<F>(rows: usize, inner: usize, g: &CsrMatrix, solve: F) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut out = DenseMatrix::zeros(rows, rows);
    let mut col = vec![0.0; inner];
    for j in 0..rows {
        col.iter_mut().for_each(|v| *v = 0.0);
        let (cols, vals) = g.row(j);
        for (&k, &v) in cols.iter().zip(vals) {
            col[k] = v;
        }
        let t = solve(&col)?;
        let gj = g.matvec(&t)?;
        for i in 0..rows {
            out.set(i, j, gj[i]);
        }
    }
    for i in 0..rows {
        for j in 0..i {
            let avg = 0.5 * (out.get(i, j) + out.get(j, i));
            out.set(i, j, avg);
            out.set(j, i, avg);
        }
    }
    Ok(out)
}

/// Builds a block triangular baseline (P1, P2 or P3) around S^.
pub fn build_p123(
    s: &SaddlePointSystem,
    variant: PrecondKind,
    inner_mode: InnerMode,
) -> Result<PreconditionerInstance> {
    if !matches!(variant, PrecondKind::P1 | PrecondKind::P2 | PrecondKind::P3) {
        return Err(Error::InvalidArgument(format!(
            "build_p123 expects p1, p2 or p3, got {variant}"
        )));
    }
    let start = Instant::now();
    let schur = SchurOperators::build(s)?;
    let a_factor = match inner_mode {
        InnerMode::ExactCholesky => Some(cholesky_factor(s.a())?),
        InnerMode::InexactCg => None,
    };
    Ok(PreconditionerInstance {
        kind: variant,
        params: None,
        inner_mode,
        state: State::Triangular {
            a: s.a().clone(),
            a_factor,
            b: s.b().clone(),
            bt: s.bt().clone(),
            schur,
        },
        setup_seconds: start.elapsed().as_secs_f64(),
        n: s.n(),
        m: s.m(),
        l: s.l(),
        inner_iterations: AtomicU64::new(0),
    })
}

/// Kind-agnostic application; identical to calling `inst.apply(r)`.
pub fn apply_preconditioner(
    inst: &PreconditionerInstance,
    r: &BlockVector,
) -> Result<BlockVector> {
    inst.apply(r)
}
