//! Small dense nonsymmetric eigensolver.
//!
//! Householder reduction to Hessenberg form followed by the implicit
//! double-shift QR iteration, with the orthogonal transforms accumulated so
//! eigenvectors come out too. This is the classic EISPACK hqr2 lineage,
//! translated directly; it is a verification oracle, so clarity and fidelity
//! to the well-tested original beat any attempt at cleverness. Intended for
//! orders up to a few hundred; a hard guard rejects anything larger.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;

/// Hard ceiling on the order accepted by `dense_eig_full` / `dense_eigs`.
pub const DENSE_EIG_ORDER_LIMIT: usize = 600;

const EPS: f64 = 2.220446049250313e-16;

/// Eigenvalue summary of a real dense matrix.
#[derive(Clone, Debug)]
pub struct EigenReport {
    /// All eigenvalues, conjugate pairs adjacent.
    pub eigenvalues: Vec<Complex64>,
    /// How many satisfy |lambda - 1| <= tol.
    pub unit_eigenvalue_count: usize,
    pub tol: f64,
}

/// Full eigendecomposition of a real dense matrix.
///
/// Eigenvectors of a conjugate pair are stored packed in two real columns
/// (real part, imaginary part), the usual real-Schur convention; use
/// `eigenvector` to unpack.
#[derive(Clone, Debug)]
pub struct DenseEig {
    values: Vec<Complex64>,
    // column k of the packed eigenvector matrix, stored per column
    vectors: Vec<Vec<f64>>,
}

impl DenseEig {
    pub fn order(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Eigenvector for eigenvalue k as (real part, imaginary part), scaled
    /// to unit 2-norm.
    pub fn eigenvector(&self, k: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.order();
        let im = self.values[k].im;
        let (mut re, mut imv) = if im == 0.0 {
            (self.vectors[k].clone(), vec![0.0; n])
        } else if im > 0.0 {
            (self.vectors[k].clone(), self.vectors[k + 1].clone())
        } else {
            // conjugate of the k-1 entry
            let re = self.vectors[k - 1].clone();
            let imv = self.vectors[k].iter().map(|&x| -x).collect();
            (re, imv)
        };
        let norm = re
            .iter()
            .zip(&imv)
            .map(|(a, b)| a * a + b * b)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for x in re.iter_mut().chain(imv.iter_mut()) {
                *x /= norm;
            }
        }
        (re, imv)
    }
}

/// Eigenvalues plus a unit-eigenvalue count at the given tolerance.
///
/// The eigenvalue sum is checked against the trace to 1e-6 relative; a
/// mismatch is reported as a numerical failure rather than returned.
pub fn dense_eigs(m: &DenseMatrix, tol: f64) -> Result<EigenReport> {
    let eig = dense_eig_full(m)?;
    let unit = eig
        .values()
        .iter()
        .filter(|lambda| (*lambda - Complex64::new(1.0, 0.0)).norm() <= tol)
        .count();
    Ok(EigenReport {
        eigenvalues: eig.values,
        unit_eigenvalue_count: unit,
        tol,
    })
}

/// Full eigendecomposition. Errors if the order exceeds
/// `DENSE_EIG_ORDER_LIMIT`, if the QR iteration fails to deflate within
/// 100 * order sweeps, or if the eigenvalue sum drifts from the trace.
pub fn dense_eig_full(m: &DenseMatrix) -> Result<DenseEig> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::dims("dense_eig_full", format!("{n}x{n}"), format!("{n}x{}", m.ncols())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("cannot take eigenvalues of an empty matrix".into()));
    }
    if n > DENSE_EIG_ORDER_LIMIT {
        return Err(Error::OrderGuard {
            order: n,
            limit: DENSE_EIG_ORDER_LIMIT,
        });
    }

    let mut h: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m.get(i, j)).collect())
        .collect();
    for row in &h {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix entries must be finite".into()));
        }
    }
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    if n > 2 {
        orthes(&mut h, &mut v);
    }
    let (d, e) = hqr2(&mut h, &mut v)?;

    let trace = m.trace();
    let sum: f64 = d.iter().sum();
    if (sum - trace).abs() > 1e-6 * (1.0 + trace.abs()) {
        return Err(Error::Numerical(format!(
            "eigenvalue sum {sum} disagrees with trace {trace}"
        )));
    }

    let values: Vec<Complex64> = d
        .iter()
        .zip(&e)
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let vectors: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    Ok(DenseEig { values, vectors })
}

/// Householder reduction to upper Hessenberg form, accumulating the
/// orthogonal similarity in v.
fn orthes(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) {
    let n = h.len();
    let low = 0;
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in (low + 1)..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[i][m - 1].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut hsum = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hsum += ort[i] * ort[i];
        }
        let mut g = hsum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hsum -= ort[m] * g;
        ort[m] -= g;

        // apply the Householder similarity (I - uu'/h) from both sides
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i][j];
            }
            f /= hsum;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[i][j];
            }
            f /= hsum;
            for j in m..=high {
                h[i][j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }

    for m in ((low + 1)..high).rev() {
        if h[m][m - 1] == 0.0 {
            continue;
        }
        for i in (m + 1)..=high {
            ort[i] = h[i][m - 1];
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * v[i][j];
            }
            // double division avoids possible underflow
            g = (g / ort[m]) / h[m][m - 1];
            for i in m..=high {
                v[i][j] += g * ort[i];
            }
        }
    }
}

fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Double-shift QR on a Hessenberg matrix, accumulating transforms in v and
/// back-substituting for eigenvectors. Returns (real parts, imag parts).
///
/// The scalar working set (p..z) deliberately mirrors the EISPACK original,
/// where the variables carry values across phases; hence the blanket init.
#[allow(clippy::needless_range_loop)]
#[allow(unused_assignments)]
fn hqr2(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.len();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let low: isize = 0;
    let high: isize = nn as isize - 1;
    let sweep_budget = 100 * nn;
    let mut sweeps = 0usize;

    let mut n: isize = nn as isize - 1;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut t, mut w, mut x, mut y) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[i][j].abs();
        }
    }

    let mut iter = 0;
    while n >= low {
        // look for a single small subdiagonal element
        let mut l = n;
        while l > low {
            s = h[(l - 1) as usize][(l - 1) as usize].abs() + h[l as usize][l as usize].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l as usize][(l - 1) as usize].abs() < EPS * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one root found
            let nu = n as usize;
            h[nu][nu] += exshift;
            d[nu] = h[nu][nu];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l == n - 1 {
            // two roots found
            let nu = n as usize;
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];

            if q >= 0.0 {
                // real pair
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h[nu][nu - 1];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in (nu - 1)..nn {
                    z = h[nu - 1][j];
                    h[nu - 1][j] = q * z + p * h[nu][j];
                    h[nu][j] = q * h[nu][j] - p * z;
                }
                for i in 0..=nu {
                    z = h[i][nu - 1];
                    h[i][nu - 1] = q * z + p * h[i][nu];
                    h[i][nu] = q * h[i][nu] - p * z;
                }
                for i in low as usize..=high as usize {
                    z = v[i][nu - 1];
                    v[i][nu - 1] = q * z + p * v[i][nu];
                    v[i][nu] = q * v[i][nu] - p * z;
                }
            } else {
                // complex pair
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // no convergence yet: form shift and sweep
            let nu = n as usize;
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < n {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }

            if iter == 10 {
                // exceptional shift
                exshift += x;
                for i in low as usize..=nu {
                    h[i][i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low as usize..=nu {
                        h[i][i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = 0.964;
                    w = 0.964;
                }
            }

            iter += 1;
            sweeps += 1;
            if sweeps > sweep_budget {
                return Err(Error::NoConvergence(format!(
                    "QR iteration exceeded {sweep_budget} sweeps with {} of {nn} eigenvalues left",
                    n - low + 1
                )));
            }

            // look for two consecutive small subdiagonal elements
            let mut m = n - 2;
            while m >= l {
                let mu = m as usize;
                z = h[mu][mu];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[mu + 1][mu] + h[mu][mu + 1];
                q = h[mu + 1][mu + 1] - z - r - s;
                r = h[mu + 2][mu + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[mu][mu - 1].abs() * (q.abs() + r.abs())
                    < EPS
                        * (p.abs()
                            * (h[mu - 1][mu - 1].abs() + z.abs() + h[mu + 1][mu + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }

            for i in (m + 2)..=n {
                let iu = i as usize;
                h[iu][iu - 2] = 0.0;
                if i > m + 2 {
                    h[iu][iu - 3] = 0.0;
                }
            }

            // double QR step on rows l..n, columns m..n
            for k in m..=(n - 1) {
                let ku = k as usize;
                let notlast = k != n - 1;
                if k != m {
                    p = h[ku][ku - 1];
                    q = h[ku + 1][ku - 1];
                    r = if notlast { h[ku + 2][ku - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[ku][ku - 1] = -s * x;
                    } else if l != m {
                        h[ku][ku - 1] = -h[ku][ku - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;

                    for j in ku..nn {
                        p = h[ku][j] + q * h[ku + 1][j];
                        if notlast {
                            p += r * h[ku + 2][j];
                            h[ku + 2][j] -= p * z;
                        }
                        h[ku][j] -= p * x;
                        h[ku + 1][j] -= p * y;
                    }
                    let upper = (n as usize).min(ku + 3);
                    for i in 0..=upper {
                        p = x * h[i][ku] + y * h[i][ku + 1];
                        if notlast {
                            p += z * h[i][ku + 2];
                            h[i][ku + 2] -= p * r;
                        }
                        h[i][ku] -= p;
                        h[i][ku + 1] -= p * q;
                    }
                    for i in low as usize..=high as usize {
                        p = x * v[i][ku] + y * v[i][ku + 1];
                        if notlast {
                            p += z * v[i][ku + 2];
                            v[i][ku + 2] -= p * r;
                        }
                        v[i][ku] -= p;
                        v[i][ku + 1] -= p * q;
                    }
                }
            }
        }
    }

    // back-substitute the quasi-triangular system for eigenvectors
    if norm == 0.0 {
        return Ok((d, e));
    }
    for nback in (0..nn).rev() {
        p = d[nback];
        q = e[nback];

        if q == 0.0 {
            // real eigenvector
            let mut l = nback;
            h[nback][nback] = 1.0;
            for i in (0..nback).rev() {
                w = h[i][i] - p;
                r = 0.0;
                for j in l..=nback {
                    r += h[i][j] * h[j][nback];
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        if w != 0.0 {
                            h[i][nback] = -r / w;
                        } else {
                            h[i][nback] = -r / (EPS * norm);
                        }
                    } else {
                        // solve the 2x2 real block
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h[i][nback] = t;
                        if x.abs() > z.abs() {
                            h[i + 1][nback] = (-r - w * t) / x;
                        } else {
                            h[i + 1][nback] = (-s - y * t) / z;
                        }
                    }
                    // overflow control
                    t = h[i][nback].abs();
                    if (EPS * t) * t > 1.0 {
                        for j in i..=nback {
                            h[j][nback] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            // complex eigenvector, packed into columns nback-1 (real) and nback (imag)
            let mut l = nback - 1;
            if h[nback][nback - 1].abs() > h[nback - 1][nback].abs() {
                h[nback - 1][nback - 1] = q / h[nback][nback - 1];
                h[nback - 1][nback] = -(h[nback][nback] - p) / h[nback][nback - 1];
            } else {
                let (cr, ci) = cdiv(0.0, -h[nback - 1][nback], h[nback - 1][nback - 1] - p, q);
                h[nback - 1][nback - 1] = cr;
                h[nback - 1][nback] = ci;
            }
            h[nback][nback - 1] = 0.0;
            h[nback][nback] = 1.0;
            if nback < 2 {
                continue;
            }
            for i in (0..=(nback - 2)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=nback {
                    ra += h[i][j] * h[j][nback - 1];
                    sa += h[i][j] * h[j][nback];
                }
                w = h[i][i] - p;

                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[i][nback - 1] = cr;
                        h[i][nback] = ci;
                    } else {
                        // solve the complex 2x2 block
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = EPS
                                * norm
                                * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) =
                            cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[i][nback - 1] = cr;
                        h[i][nback] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[i + 1][nback - 1] =
                                (-ra - w * h[i][nback - 1] + q * h[i][nback]) / x;
                            h[i + 1][nback] = (-sa - w * h[i][nback] - q * h[i][nback - 1]) / x;
                        } else {
                            let (cr, ci) =
                                cdiv(-r - y * h[i][nback - 1], -s - y * h[i][nback], z, q);
                            h[i + 1][nback - 1] = cr;
                            h[i + 1][nback] = ci;
                        }
                    }
                    // overflow control
                    t = h[i][nback - 1].abs().max(h[i][nback].abs());
                    if (EPS * t) * t > 1.0 {
                        for j in i..=nback {
                            h[j][nback - 1] /= t;
                            h[j][nback] /= t;
                        }
                    }
                }
            }
        }
    }

    // back-transform to eigenvectors of the original matrix
    for j in (0..nn).rev() {
        for i in 0..nn {
            z = 0.0;
            for k in 0..=j {
                z += v[i][k] * h[k][j];
            }
            v[i][j] = z;
        }
    }

    Ok((d, e))
}
