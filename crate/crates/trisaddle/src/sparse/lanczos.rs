use crate::error::{Error, Result};
use crate::sparse::csr::CsrMatrix;
use crate::sparse::dense::DenseMatrix;
use crate::sparse::vecops::{axpy, dot, norm2};
use rand::Rng;
use rand::SeedableRng;

/// Extreme eigenvalue estimates of a symmetric matrix.
///
/// Estimates are Rayleigh quotients of the converged Ritz vectors, so
/// they always lie inside the true spectrum interval.
#[derive(Clone, Copy, Debug)]
pub struct EigBounds {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lanczos with full reorthogonalization for the extreme eigenvalues of
/// a symmetric matrix. The start vector comes from a fixed-seed stream,
/// so results are reproducible run to run.
pub fn extreme_eigs_symmetric(m: &CsrMatrix, tol: f64, maxit: usize) -> Result<EigBounds> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            "extreme_eigs_symmetric",
            "square",
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    if let Some((row, col, gap)) = m.symmetry_violation() {
        if gap > 1e-12 * m.max_abs().max(1e-300) {
            return Err(Error::NotSymmetric {
                row,
                col,
                max_asymmetry: gap,
            });
        }
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("lanczos tol must be > 0".into()));
    }
    if maxit == 0 {
        return Err(Error::InvalidArgument("lanczos maxit must be >= 1".into()));
    }
    let n = m.nrows();
    if n == 1 {
        let a = m.get(0, 0);
        return Ok(EigBounds {
            lambda_min: a,
            lambda_max: a,
            iterations: 0,
            converged: true,
        });
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x4c41_4e43);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut v = random_unit(&mut rng, n);
    let mut w = vec![0.0; n];
    let breakdown_floor = 1e-14;
    let steps_cap = maxit.min(n);
    let mut converged = false;
    let mut steps = 0;

    while steps < steps_cap {
        m.matvec_into(&v, &mut w)?;
        if let Some(b) = betas.last() {
            let prev = &basis[basis.len() - 1];
            axpy(-b, prev, &mut w);
        }
        let a = dot(&v, &w);
        axpy(-a, &v, &mut w);
        basis.push(std::mem::replace(&mut v, Vec::new()));
        alphas.push(a);
        reorthogonalize(&mut w, &basis);
        let b = norm2(&w);
        steps += 1;

        let scale = alphas.iter().fold(0.0f64, |s, x| s.max(x.abs()))
            .max(betas.iter().fold(0.0f64, |s, x| s.max(x.abs())))
            .max(breakdown_floor);
        if b <= breakdown_floor * scale {
            // invariant subspace found
            if basis.len() >= n {
                converged = true;
                break;
            }
            match fresh_direction(&mut rng, &basis, n) {
                Some(nv) => {
                    betas.push(0.0);
                    v = nv;
                }
                None => {
                    converged = true;
                    break;
                }
            }
        } else {
            betas.push(b);
            v = w.iter().map(|x| x / b).collect();
        }

        let check = steps == steps_cap || steps <= 64 || steps % 8 == 0;
        if check && ritz_converged(&alphas, &betas, tol)? {
            converged = true;
            break;
        }
    }

    let k = alphas.len();
    let (_, vt) = tridiag_eig(&alphas, &betas[..k - 1])?;
    let rq_min = ritz_rayleigh(m, &basis, &vt, 0)?;
    let rq_max = ritz_rayleigh(m, &basis, &vt, k - 1)?;
    Ok(EigBounds {
        lambda_min: rq_min.min(rq_max),
        lambda_max: rq_max.max(rq_min),
        iterations: steps,
        converged,
    })
}

fn random_unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nv = norm2(&v);
        if nv > 1e-3 {
            return v.iter().map(|x| x / nv).collect();
        }
    }
}

/// One orthogonalization pass against the whole basis, with a second
/// pass when cancellation ate most of the vector.
fn reorthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    let before = norm2(w);
    for q in basis {
        let c = dot(q, w);
        axpy(-c, q, w);
    }
    if norm2(w) < 0.7 * before {
        for q in basis {
            let c = dot(q, w);
            axpy(-c, q, w);
        }
    }
}

fn fresh_direction(rng: &mut impl Rng, basis: &[Vec<f64>], n: usize) -> Option<Vec<f64>> {
    for _ in 0..20 {
        let mut v = random_unit(rng, n);
        reorthogonalize(&mut v, basis);
        let nv = norm2(&v);
        if nv > 1e-8 {
            for x in &mut v {
                *x /= nv;
            }
            return Some(v);
        }
    }
    None
}

fn ritz_converged(alphas: &[f64], betas: &[f64], tol: f64) -> Result<bool> {
    let k = alphas.len();
    let coupling = if betas.len() >= k { betas[k - 1] } else { 0.0 };
    let (theta, vt) = tridiag_eig(alphas, &betas[..k - 1])?;
    let scale = theta
        .iter()
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1e-300);
    let res_min = (coupling * vt.get(k - 1, 0)).abs();
    let res_max = (coupling * vt.get(k - 1, k - 1)).abs();
    Ok(res_min <= tol * scale && res_max <= tol * scale)
}

fn ritz_rayleigh(
    m: &CsrMatrix,
    basis: &[Vec<f64>],
    vt: &DenseMatrix,
    col: usize,
) -> Result<f64> {
    let n = basis[0].len();
    let mut x = vec![0.0; n];
    for (j, q) in basis.iter().enumerate() {
        axpy(vt.get(j, col), q, &mut x);
    }
    let nx = norm2(&x);
    for v in &mut x {
        *v /= nx;
    }
    let ax = m.matvec(&x)?;
    Ok(dot(&x, &ax))
}

/// Eigendecomposition of a symmetric tridiagonal matrix by the implicit
/// QL iteration; eigenvalues ascend, `v` columns hold eigenvectors.
pub(crate) fn tridiag_eig(diag: &[f64], sub: &[f64]) -> Result<(Vec<f64>, DenseMatrix)> {
    let n = diag.len();
    assert!(sub.len() + 1 == n || (n == 0 && sub.is_empty()));
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(sub);
    let mut v = DenseMatrix::identity(n);

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > 50 {
                    return Err(Error::NoConvergence(
                        "tridiagonal QL exceeded 50 sweeps".into(),
                    ));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for i in l + 2..n {
                    d[i] -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let gi = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * gi;
                    d[i + 1] = h + s * (c * gi + s * d[i]);
                    for k in 0..n {
                        h = v.get(k, i + 1);
                        v.set(k, i + 1, s * v.get(k, i) + c * h);
                        v.set(k, i, c * v.get(k, i) - s * h);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        for j in i + 1..n {
            if d[j] < d[k] {
                k = j;
            }
        }
        if k != i {
            d.swap(i, k);
            for j in 0..n {
                let t = v.get(j, i);
                v.set(j, i, v.get(j, k));
                v.set(j, k, t);
            }
        }
    }
    Ok((d, v))
}
