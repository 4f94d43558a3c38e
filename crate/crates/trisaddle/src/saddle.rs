//! The three-by-three block system and its metrics.
//!
//! Two operator forms share one set of blocks. With `A` symmetric
//! positive definite, `B` (m-by-n) and `C` (l-by-m) of full row rank:
//!
//! ```text
//! Symmetric                      Nonsymmetric (positive semidefinite)
//! [ A   B'  0 ] [x]   [f]        [  A   B'   0 ] [x]   [ f]
//! [ B   0   C'] [y] = [g]        [ -B   0  -C' ] [y] = [-g]
//! [ 0   C   0 ] [z]   [h]        [  0   C    0 ] [z]   [ h]
//! ```
//!
//! Negating the middle equation maps solutions of one form to the other,
//! so the stored right-hand side blocks `(f, g, h)` are form-independent.

use crate::error::{Error, Result};
use crate::sparse::vecops::norm2;
use crate::sparse::{market, CsrMatrix, LinearOperator};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemForm {
    Symmetric,
    Nonsymmetric,
}

/// Solution or residual vector split into its three blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl BlockVector {
    pub fn zeros(n: usize, m: usize, l: usize) -> Self {
        BlockVector {
            x: vec![0.0; n],
            y: vec![0.0; m],
            z: vec![0.0; l],
        }
    }

    pub fn from_flat(v: &[f64], n: usize, m: usize, l: usize) -> Result<Self> {
        if v.len() != n + m + l {
            return Err(Error::dims("BlockVector::from_flat", n + m + l, v.len()));
        }
        Ok(BlockVector {
            x: v[..n].to_vec(),
            y: v[n..n + m].to_vec(),
            z: v[n + m..].to_vec(),
        })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.x);
        out.extend_from_slice(&self.y);
        out.extend_from_slice(&self.z);
        out
    }

    pub fn len(&self) -> usize {
        self.x.len() + self.y.len() + self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assembled block system. Construction validates shapes and the
/// symmetry of `A`; positive definiteness and row ranks are assumed and
/// surface later (factorization failures, rank oracles in generators).
#[derive(Clone, Debug)]
pub struct SaddlePointSystem {
    a: CsrMatrix,
    b: CsrMatrix,
    c: CsrMatrix,
    bt: CsrMatrix,
    ct: CsrMatrix,
    f: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    form: SystemForm,
}

impl SaddlePointSystem {
    pub fn assemble(
        a: CsrMatrix,
        b: CsrMatrix,
        c: CsrMatrix,
        f: Vec<f64>,
        g: Vec<f64>,
        h: Vec<f64>,
        form: SystemForm,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::dims("assemble: A", "square", format!("{}x{}", n, a.ncols())));
        }
        if let Some((row, col, gap)) = a.symmetry_violation() {
            if gap > 1e-12 * a.max_abs().max(1e-300) {
                return Err(Error::NotSymmetric {
                    row,
                    col,
                    max_asymmetry: gap,
                });
            }
        }
        let (m, l) = (b.nrows(), c.nrows());
        if b.ncols() != n {
            return Err(Error::dims("assemble: B columns", n, b.ncols()));
        }
        if c.ncols() != m {
            return Err(Error::dims("assemble: C columns", m, c.ncols()));
        }
        if !(1 <= l && l <= m && m <= n) {
            return Err(Error::InvalidArgument(format!(
                "block sizes must satisfy 1 <= l <= m <= n, got n={n} m={m} l={l}"
            )));
        }
        if f.len() != n || g.len() != m || h.len() != l {
            return Err(Error::dims(
                "assemble: rhs blocks",
                format!("({n},{m},{l})"),
                format!("({},{},{})", f.len(), g.len(), h.len()),
            ));
        }
        let bt = b.transpose();
        let ct = c.transpose();
        Ok(SaddlePointSystem {
            a,
            b,
            c,
            bt,
            ct,
            f,
            g,
            h,
            form,
        })
    }

    pub fn a(&self) -> &CsrMatrix {
        &self.a
    }

    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    pub fn c(&self) -> &CsrMatrix {
        &self.c
    }

    pub fn bt(&self) -> &CsrMatrix {
        &self.bt
    }

    pub fn ct(&self) -> &CsrMatrix {
        &self.ct
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.nrows()
    }

    pub fn l(&self) -> usize {
        self.c.nrows()
    }

    pub fn total_order(&self) -> usize {
        self.n() + self.m() + self.l()
    }

    pub fn form(&self) -> SystemForm {
        self.form
    }

    /// Same blocks under the other operator form.
    pub fn with_form(&self, form: SystemForm) -> SaddlePointSystem {
        let mut s = self.clone();
        s.form = form;
        s
    }

    /// Right-hand side of the assembled operator for the current form.
    pub fn rhs_vector(&self) -> Vec<f64> {
        let mut rhs = Vec::with_capacity(self.total_order());
        rhs.extend_from_slice(&self.f);
        match self.form {
            SystemForm::Symmetric => rhs.extend_from_slice(&self.g),
            SystemForm::Nonsymmetric => rhs.extend(self.g.iter().map(|v| -v)),
        }
        rhs.extend_from_slice(&self.h);
        rhs
    }

    /// Block operator application in the current form.
    pub fn apply_operator(&self, v: &BlockVector) -> Result<BlockVector> {
        let (n, m, l) = (self.n(), self.m(), self.l());
        if v.x.len() != n || v.y.len() != m || v.z.len() != l {
            return Err(Error::dims(
                "apply_operator",
                format!("({n},{m},{l})"),
                format!("({},{},{})", v.x.len(), v.y.len(), v.z.len()),
            ));
        }
        let mut out = BlockVector::zeros(n, m, l);
        let flat_in = v.to_flat();
        let mut flat_out = vec![0.0; self.total_order()];
        self.apply_flat(&flat_in, &mut flat_out);
        out.x.copy_from_slice(&flat_out[..n]);
        out.y.copy_from_slice(&flat_out[n..n + m]);
        out.z.copy_from_slice(&flat_out[n + m..]);
        Ok(out)
    }

    /// Flat-slice operator application; lengths must equal the total order.
    pub fn apply_flat(&self, input: &[f64], out: &mut [f64]) {
        let (n, m, l) = (self.n(), self.m(), self.l());
        assert_eq!(input.len(), n + m + l);
        assert_eq!(out.len(), n + m + l);
        let (xs, rest) = input.split_at(n);
        let (ys, zs) = rest.split_at(m);
        let (o1, rest) = out.split_at_mut(n);
        let (o2, o3) = rest.split_at_mut(m);
        // o1 = A x + B' y
        self.a.matvec_into(xs, o1).unwrap();
        accumulate(&self.bt, ys, o1, 1.0);
        // o2 = +-(B x + C' z)
        self.b.matvec_into(xs, o2).unwrap();
        accumulate(&self.ct, zs, o2, 1.0);
        if self.form == SystemForm::Nonsymmetric {
            for v in o2.iter_mut() {
                *v = -*v;
            }
        }
        // o3 = C y
        self.c.matvec_into(ys, o3).unwrap();
        let _ = l;
    }

    /// The operator as one sparse matrix, mostly for direct oracles and
    /// dense analysis.
    pub fn to_monolithic(&self) -> Result<CsrMatrix> {
        let (n, m, l) = (self.n(), self.m(), self.l());
        let zero_nl = CsrMatrix::zeros(n, l);
        let zero_mm = CsrMatrix::zeros(m, m);
        let zero_ln = CsrMatrix::zeros(l, n);
        let zero_ll = CsrMatrix::zeros(l, l);
        let row1 = CsrMatrix::hstack(&[&self.a, &self.bt, &zero_nl])?;
        let (b_mid, ct_mid) = match self.form {
            SystemForm::Symmetric => (self.b.clone(), self.ct.clone()),
            SystemForm::Nonsymmetric => (self.b.scaled(-1.0), self.ct.scaled(-1.0)),
        };
        let row2 = CsrMatrix::hstack(&[&b_mid, &zero_mm, &ct_mid])?;
        let row3 = CsrMatrix::hstack(&[&zero_ln, &self.c, &zero_ll])?;
        CsrMatrix::vstack(&[&row1, &row2, &row3])
    }
}

fn accumulate(m: &CsrMatrix, x: &[f64], out: &mut [f64], scale: f64) {
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        let mut acc = 0.0;
        for (&j, &v) in cols.iter().zip(vals) {
            acc += v * x[j];
        }
        out[i] += scale * acc;
    }
}

/// Borrowed view implementing [`LinearOperator`] for the Krylov solvers.
pub struct SystemOperator<'a> {
    s: &'a SaddlePointSystem,
}

impl<'a> SystemOperator<'a> {
    pub fn new(s: &'a SaddlePointSystem) -> Self {
        SystemOperator { s }
    }
}

impl LinearOperator for SystemOperator<'_> {
    fn nrows(&self) -> usize {
        self.s.total_order()
    }

    fn ncols(&self) -> usize {
        self.s.total_order()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.s.apply_flat(x, y);
    }
}

/// Solution-quality metrics of an approximate solution.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct SolveMetrics {
    /// ||rhs - Op u|| / ||rhs||, with denominator 1 for a zero rhs.
    pub relative_residual: f64,
    /// ||u - u_star|| / ||u_star||, when a reference solution is given.
    pub relative_error: Option<f64>,
}

pub fn residual_metrics(
    s: &SaddlePointSystem,
    u: &[f64],
    u_star: Option<&[f64]>,
) -> Result<SolveMetrics> {
    let order = s.total_order();
    if u.len() != order {
        return Err(Error::dims("residual_metrics", order, u.len()));
    }
    let rhs = s.rhs_vector();
    let mut op_u = vec![0.0; order];
    s.apply_flat(u, &mut op_u);
    let diff: Vec<f64> = rhs.iter().zip(&op_u).map(|(r, a)| r - a).collect();
    let rhs_norm = norm2(&rhs);
    let denom = if rhs_norm == 0.0 { 1.0 } else { rhs_norm };
    let relative_residual = norm2(&diff) / denom;
    let relative_error = match u_star {
        None => None,
        Some(star) => {
            if star.len() != order {
                return Err(Error::dims("residual_metrics u_star", order, star.len()));
            }
            let err: Vec<f64> = u.iter().zip(star).map(|(a, b)| a - b).collect();
            let star_norm = norm2(star);
            let d = if star_norm == 0.0 { 1.0 } else { star_norm };
            Some(norm2(&err) / d)
        }
    };
    Ok(SolveMetrics {
        relative_residual,
        relative_error,
    })
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    n: usize,
    m: usize,
    l: usize,
    form: SystemForm,
}

/// Writes the system as a directory of Matrix Market files plus a JSON
/// manifest. Existing files are overwritten.
pub fn export_system(s: &SaddlePointSystem, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    market::write_matrix(&dir.join("a.mtx"), s.a(), true)?;
    market::write_matrix(&dir.join("b.mtx"), s.b(), false)?;
    market::write_matrix(&dir.join("c.mtx"), s.c(), false)?;
    market::write_vector(&dir.join("f.mtx"), s.f())?;
    market::write_vector(&dir.join("g.mtx"), s.g())?;
    market::write_vector(&dir.join("h.mtx"), s.h())?;
    let manifest = Manifest {
        n: s.n(),
        m: s.m(),
        l: s.l(),
        form: s.form(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

/// Reads a directory written by [`export_system`]; assembly validation
/// runs again on the way in.
pub fn import_system(dir: &Path) -> Result<SaddlePointSystem> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let a = market::read_matrix(&dir.join("a.mtx"))?;
    let b = market::read_matrix(&dir.join("b.mtx"))?;
    let c = market::read_matrix(&dir.join("c.mtx"))?;
    let f = market::read_vector(&dir.join("f.mtx"))?;
    let g = market::read_vector(&dir.join("g.mtx"))?;
    let h = market::read_vector(&dir.join("h.mtx"))?;
    let s = SaddlePointSystem::assemble(a, b, c, f, g, h, manifest.form)?;
    if s.n() != manifest.n || s.m() != manifest.m || s.l() != manifest.l {
        return Err(Error::InvalidArgument(
            "manifest dimensions disagree with matrix files".into(),
        ));
    }
    Ok(s)
}
