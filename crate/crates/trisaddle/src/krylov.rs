//! Krylov solvers: conjugate gradients and (flexible) GMRES.
//!
//! GMRES preconditions from the right, so the residual being driven down
//! is that of the original system and histories are comparable across
//! preconditioners. Both GMRES variants run the same Arnoldi recurrence
//! with modified Gram-Schmidt (one corrective pass when cancellation is
//! detected) and Givens rotations; the flexible variant additionally
//! stores each preconditioned direction and assembles the update from
//! those, which is what lets it tolerate preconditioners whose action is
//! itself an inner iteration. With a fixed (linear, deterministic)
//! preconditioner the two variants perform identical arithmetic per step
//! and produce identical residual histories.
//!
//! Convergence is declared on the rotation-based residual estimate and
//! then confirmed against a freshly computed true residual; if the
//! estimate was optimistic the iteration continues. Reported
//! `final_relative_residual` values are always true residuals.

use crate::error::{Error, Result};
use crate::sparse::vecops::{all_finite, axpy, dot, norm2};
use crate::sparse::LinearOperator;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Breakdown,
    InnerSolveFailure,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    /// Matrix-vector products with the system operator, not counting
    /// residual confirmations.
    pub iterations: usize,
    /// Relative residuals: the initial one, then one per iteration.
    /// Empty when recording is off.
    pub residual_history: Vec<f64>,
    /// True relative residual of the returned iterate.
    pub final_relative_residual: f64,
    pub failure_detail: Option<String>,
}

#[derive(Clone, Copy, Debug)]
pub struct IterationConfig {
    /// Relative residual target.
    pub tol: f64,
    /// Iteration cap across all restart cycles.
    pub maxit: usize,
    /// GMRES restart length; `None` means no restarting. Ignored by CG.
    pub restart: Option<usize>,
    pub record_history: bool,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            tol: 1e-6,
            maxit: 1000,
            restart: None,
            record_history: true,
        }
    }
}

impl IterationConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive and finite, got {}",
                self.tol
            )));
        }
        if self.maxit == 0 {
            return Err(Error::InvalidArgument("maxit must be at least 1".into()));
        }
        if self.restart == Some(0) {
            return Err(Error::InvalidArgument("restart length must be at least 1".into()));
        }
        Ok(())
    }
}

/// Action of an invertible operator M as z := M^{-1} r. Applications
/// must be deterministic so solver runs are reproducible.
pub trait Preconditioner {
    fn order(&self) -> usize;
    fn apply_precond(&self, r: &[f64], z: &mut [f64]) -> Result<()>;
}

fn check_system(
    name: &str,
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: Option<&dyn Preconditioner>,
) -> Result<usize> {
    let n = op.nrows();
    if op.ncols() != n {
        return Err(Error::dims(
            format!("{name}: operator"),
            "square",
            format!("{}x{}", n, op.ncols()),
        ));
    }
    if rhs.len() != n {
        return Err(Error::dims(format!("{name}: rhs"), n, rhs.len()));
    }
    if let Some(p) = precond {
        if p.order() != n {
            return Err(Error::dims(format!("{name}: preconditioner"), n, p.order()));
        }
    }
    Ok(n)
}

fn trivial_report(n: usize, record: bool) -> (Vec<f64>, SolveReport) {
    (
        vec![0.0; n],
        SolveReport {
            status: SolveStatus::Converged,
            iterations: 0,
            residual_history: if record { vec![0.0] } else { Vec::new() },
            final_relative_residual: 0.0,
            failure_detail: None,
        },
    )
}

/// c, s with [c s; -s c] * [a; b] = [r; 0].
fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

/// Unpreconditioned conjugate gradients for symmetric positive definite
/// operators. A nonpositive curvature p'Ap ends the run with
/// `Breakdown`. Hitting `maxit` is reported, not an error; callers using
/// CG as an inner solve treat a capped run as a usable approximation.
pub fn cg_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    config: &IterationConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let n = check_system("cg", op, rhs, None)?;
    let denom = norm2(rhs);
    if denom == 0.0 {
        return Ok(trivial_report(n, config.record_history));
    }
    let tol_abs = config.tol * denom;
    let mut history = Vec::new();
    if config.record_history {
        history.push(1.0);
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut ap = vec![0.0; n];
    let finish = |x: Vec<f64>,
                  status: SolveStatus,
                  iterations: usize,
                  history: Vec<f64>,
                  detail: Option<String>,
                  buf: &mut Vec<f64>| {
        op.apply(&x, buf);
        let mut res = 0.0;
        for i in 0..n {
            let d = rhs[i] - buf[i];
            res += d * d;
        }
        let final_rel = res.sqrt() / denom;
        (
            x,
            SolveReport {
                status,
                iterations,
                residual_history: history,
                final_relative_residual: final_rel,
                failure_detail: detail,
            },
        )
    };
    for it in 1..=config.maxit {
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !pap.is_finite() || pap <= 0.0 {
            let detail = format!("nonpositive curvature p'Ap = {pap} at iteration {it}");
            return Ok(finish(x, SolveStatus::Breakdown, it - 1, history, Some(detail), &mut ap));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let est = rr_new.sqrt() / denom;
        if config.record_history {
            history.push(est);
        }
        if !est.is_finite() {
            let detail = format!("non-finite residual at iteration {it}");
            return Ok(finish(x, SolveStatus::Breakdown, it, history, Some(detail), &mut ap));
        }
        if est <= config.tol {
            op.apply(&x, &mut ap);
            let mut res = 0.0;
            for i in 0..n {
                let d = rhs[i] - ap[i];
                res += d * d;
            }
            let true_res = res.sqrt();
            if true_res <= tol_abs {
                return Ok((
                    x,
                    SolveReport {
                        status: SolveStatus::Converged,
                        iterations: it,
                        residual_history: history,
                        final_relative_residual: true_res / denom,
                        failure_detail: None,
                    },
                ));
            }
            // the recurrence residual drifted optimistic; keep going
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Ok(finish(x, SolveStatus::MaxIterations, config.maxit, history, None, &mut ap))
}

/// GMRES with optional right preconditioning.
pub fn gmres_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: Option<&dyn Preconditioner>,
    config: &IterationConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    arnoldi_solve(op, rhs, precond, config, false)
}

/// Flexible GMRES: same recurrence as [`gmres_solve`], but the solution
/// update is built from the stored preconditioned directions.
pub fn fgmres_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: Option<&dyn Preconditioner>,
    config: &IterationConfig,
) -> Result<(Vec<f64>, SolveReport)> {
    arnoldi_solve(op, rhs, precond, config, true)
}

fn arnoldi_solve(
    op: &dyn LinearOperator,
    rhs: &[f64],
    precond: Option<&dyn Preconditioner>,
    config: &IterationConfig,
    flexible: bool,
) -> Result<(Vec<f64>, SolveReport)> {
    config.validate()?;
    let name = if flexible { "fgmres" } else { "gmres" };
    let n = check_system(name, op, rhs, precond)?;
    let denom = norm2(rhs);
    if denom == 0.0 {
        return Ok(trivial_report(n, config.record_history));
    }
    let tol_abs = config.tol * denom;
    let cycle_len = config.restart.unwrap_or(config.maxit);
    let mut history = Vec::new();
    let mut pushed_initial = false;
    let mut x = vec![0.0; n];
    let mut total_steps = 0usize;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let report = |status: SolveStatus,
                  iterations: usize,
                  history: Vec<f64>,
                  final_rel: f64,
                  detail: Option<String>| SolveReport {
        status,
        iterations,
        residual_history: history,
        final_relative_residual: final_rel,
        failure_detail: detail,
    };

    loop {
        op.apply(&x, &mut w);
        for i in 0..n {
            resid[i] = rhs[i] - w[i];
        }
        let beta = norm2(&resid);
        if !pushed_initial {
            if config.record_history {
                history.push(beta / denom);
            }
            pushed_initial = true;
        }
        if beta <= tol_abs {
            let final_rel = beta / denom;
            return Ok((x, report(SolveStatus::Converged, total_steps, history, final_rel, None)));
        }
        if !beta.is_finite() {
            return Ok((
                x,
                report(
                    SolveStatus::Breakdown,
                    total_steps,
                    history,
                    f64::NAN,
                    Some("non-finite residual at cycle start".into()),
                ),
            ));
        }
        let this_cycle = cycle_len.min(config.maxit - total_steps);
        let inv_beta = 1.0 / beta;
        let mut vbasis: Vec<Vec<f64>> = vec![resid.iter().map(|v| v * inv_beta).collect()];
        let mut zbasis: Vec<Vec<f64>> = Vec::new();
        // columns of R (the rotated Hessenberg), column j holding rows 0..=j
        let mut rcols: Vec<Vec<f64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<f64> = Vec::new();
        let mut g = vec![beta];
        let mut restart_candidate: Option<Vec<f64>> = None;

        for j in 0..this_cycle {
            total_steps += 1;
            match precond {
                None => z.copy_from_slice(&vbasis[j]),
                Some(p) => {
                    if let Err(e) = p.apply_precond(&vbasis[j], &mut z) {
                        op.apply(&x, &mut w);
                        for i in 0..n {
                            resid[i] = rhs[i] - w[i];
                        }
                        let final_rel = norm2(&resid) / denom;
                        return Ok((
                            x,
                            report(
                                SolveStatus::InnerSolveFailure,
                                total_steps,
                                history,
                                final_rel,
                                Some(format!("preconditioner failed at iteration {total_steps}: {e}")),
                            ),
                        ));
                    }
                }
            }
            if flexible {
                zbasis.push(z.clone());
            }
            op.apply(&z, &mut w);
            let pre = norm2(&w);
            let mut h = vec![0.0; j + 2];
            for i in 0..=j {
                let hij = dot(&vbasis[i], &w);
                axpy(-hij, &vbasis[i], &mut w);
                h[i] = hij;
            }
            let mut post = norm2(&w);
            // one corrective pass recovers orthogonality lost to cancellation
            if post < 0.7 * pre {
                for i in 0..=j {
                    let corr = dot(&vbasis[i], &w);
                    axpy(-corr, &vbasis[i], &mut w);
                    h[i] += corr;
                }
                post = norm2(&w);
            }
            h[j + 1] = post;
            if !all_finite(&h) {
                return Ok((
                    x,
                    report(
                        SolveStatus::Breakdown,
                        total_steps,
                        history,
                        f64::NAN,
                        Some(format!("non-finite Hessenberg column at iteration {total_steps}")),
                    ),
                ));
            }
            let happy = post <= 1e-14 * pre.max(f64::MIN_POSITIVE);
            if !happy {
                let inv = 1.0 / post;
                vbasis.push(w.iter().map(|v| v * inv).collect());
            }
            for i in 0..j {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let (cj, sj) = givens(h[j], h[j + 1]);
            h[j] = cj * h[j] + sj * h[j + 1];
            cs.push(cj);
            sn.push(sj);
            let gj = g[j];
            g[j] = cj * gj;
            g.push(-sj * gj);
            rcols.push(h[..=j].to_vec());
            let estimate = g[j + 1].abs();
            if config.record_history {
                history.push(estimate / denom);
            }
            let last_step = j + 1 == this_cycle || total_steps == config.maxit;
            if estimate <= tol_abs || happy || last_step {
                let k = j + 1;
                let mut y = g[..k].to_vec();
                let mut singular = false;
                for row in (0..k).rev() {
                    let mut s = y[row];
                    for col in row + 1..k {
                        s -= rcols[col][row] * y[col];
                    }
                    let d = rcols[row][row];
                    if d == 0.0 || !d.is_finite() {
                        singular = true;
                        break;
                    }
                    y[row] = s / d;
                }
                if singular {
                    return Ok((
                        x,
                        report(
                            SolveStatus::Breakdown,
                            total_steps,
                            history,
                            f64::NAN,
                            Some("singular projected system".into()),
                        ),
                    ));
                }
                let mut xc = x.clone();
                if flexible {
                    for (col, zc) in zbasis.iter().enumerate() {
                        axpy(y[col], zc, &mut xc);
                    }
                } else {
                    let mut u = vec![0.0; n];
                    for (col, yc) in y.iter().enumerate() {
                        axpy(*yc, &vbasis[col], &mut u);
                    }
                    match precond {
                        None => axpy(1.0, &u, &mut xc),
                        Some(p) => {
                            if let Err(e) = p.apply_precond(&u, &mut z) {
                                op.apply(&x, &mut w);
                                for i in 0..n {
                                    resid[i] = rhs[i] - w[i];
                                }
                                let final_rel = norm2(&resid) / denom;
                                return Ok((
                                    x,
                                    report(
                                        SolveStatus::InnerSolveFailure,
                                        total_steps,
                                        history,
                                        final_rel,
                                        Some(format!("preconditioner failed in update: {e}")),
                                    ),
                                ));
                            }
                            axpy(1.0, &z, &mut xc);
                        }
                    }
                }
                op.apply(&xc, &mut w);
                for i in 0..n {
                    resid[i] = rhs[i] - w[i];
                }
                let true_res = norm2(&resid);
                if true_res <= tol_abs {
                    let final_rel = true_res / denom;
                    return Ok((
                        xc,
                        report(SolveStatus::Converged, total_steps, history, final_rel, None),
                    ));
                }
                if happy {
                    let final_rel = true_res / denom;
                    return Ok((
                        xc,
                        report(
                            SolveStatus::Breakdown,
                            total_steps,
                            history,
                            final_rel,
                            Some("Krylov space exhausted before reaching the tolerance".into()),
                        ),
                    ));
                }
                if total_steps == config.maxit {
                    let final_rel = true_res / denom;
                    return Ok((
                        xc,
                        report(SolveStatus::MaxIterations, total_steps, history, final_rel, None),
                    ));
                }
                if j + 1 == this_cycle {
                    restart_candidate = Some(xc);
                }
                // otherwise the estimate was optimistic: keep iterating
            }
        }
        // restart: continue from the best iterate of the finished cycle
        x = restart_candidate.expect("cycle end always forms a candidate");
    }
}
