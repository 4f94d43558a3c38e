//! Rayleigh-quotient pair (p, q), its a-priori interval, and the parameter
//! suggestions derived from extreme eigenvalue estimates.
//!
//! For a test vector y the pair is
//!   p = y*(B A^{-1} B^T)y / y*((aI + b BB^T))y
//!   q = y*(C^T (aI + b CC^T)^{-1} C)y / y*((aI + b BB^T))y
//! with a = alpha, b = beta. Every non-unit eigenvalue of the preconditioned
//! operator solves the cubic built from the (p, q) of its own y-block, so
//! these quotients are the whole story for clustering.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::precond::PreconditionerParams;
use crate::saddle::SaddlePointSystem;
use crate::sparse::{cholesky_factor, extreme_eigs_symmetric, CholeskyFactor, CsrMatrix, EigBounds};
use crate::sparse::vecops::{dot, norm2};
use crate::spectral::poly::ClusterCase;

/// A computed quotient pair together with the vector that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralQuantities {
    pub p: f64,
    pub q: f64,
    pub y_used: Vec<f64>,
}

/// The ten constants feeding parameter selection: unprimed for the
/// p + q > 1 regime, primed for p + q <= 1.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CaseConstants {
    pub eta: f64,
    pub theta: f64,
    pub kappa: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub eta_p: f64,
    pub theta_p: f64,
    pub kappa_p: f64,
    pub gamma_p: f64,
    pub zeta_p: f64,
}

/// Extreme eigenvalue estimates for the four matrices the analysis needs.
struct SpectraSummary {
    a: EigBounds,
    bbt: EigBounds,
    cct: EigBounds,
    /// smallest eigenvalue of C^T C: zero exactly when l < m, else the
    /// smallest eigenvalue of CC^T (the nonzero spectra coincide)
    ctc_min: f64,
}

fn lanczos_settings(order: usize) -> (f64, usize) {
    (1e-8, (5 * order).min(500).max(1))
}

fn estimate_spectra(s: &SaddlePointSystem) -> Result<SpectraSummary> {
    let bbt = s.b().matmul(s.bt())?;
    let cct = s.c().matmul(s.ct())?;

    let run = |name: &str, m: &CsrMatrix| -> Result<EigBounds> {
        let (tol, maxit) = lanczos_settings(m.nrows());
        let est = extreme_eigs_symmetric(m, tol, maxit)?;
        if !est.converged {
            return Err(Error::NoConvergence(format!(
                "extreme eigenvalues of {name} did not settle in {} iterations \
                 (partial estimates: min {:.6e}, max {:.6e})",
                est.iterations, est.lambda_min, est.lambda_max
            )));
        }
        Ok(est)
    };

    let a = run("A", s.a())?;
    let bbt = run("BB^T", &bbt)?;
    let cct = run("CC^T", &cct)?;
    let ctc_min = if s.l() < s.m() { 0.0 } else { cct.lambda_min };
    Ok(SpectraSummary {
        a,
        bbt,
        cct,
        ctc_min,
    })
}

/// Reusable evaluator for (p, q): the two Cholesky factorizations are built
/// once and shared across however many test vectors are thrown at it.
pub struct PqSampler<'a> {
    system: &'a SaddlePointSystem,
    a_factor: CholeskyFactor,
    third_factor: CholeskyFactor,
    params: PreconditionerParams,
}

impl<'a> PqSampler<'a> {
    pub fn new(system: &'a SaddlePointSystem, params: PreconditionerParams) -> Result<Self> {
        params.validate()?;
        let a_factor = cholesky_factor(system.a())?;
        let cct = s_gram(system.c(), system.ct())?;
        let shifted = CsrMatrix::identity(system.l())
            .scaled(params.alpha)
            .add(&cct.scaled(params.beta))?;
        let third_factor = cholesky_factor(&shifted)?;
        Ok(Self {
            system,
            a_factor,
            third_factor,
            params,
        })
    }

    pub fn params(&self) -> PreconditionerParams {
        self.params
    }

    /// (p, q) for a real test vector of length m.
    pub fn compute(&self, y: &[f64]) -> Result<SpectralQuantities> {
        let (p, q) = self.compute_complex(y, None)?;
        Ok(SpectralQuantities {
            p,
            q,
            y_used: y.to_vec(),
        })
    }

    /// (p, q) for a complex test vector given as real and imaginary parts.
    /// For a real symmetric form, y*Ky is the sum of the forms of the two
    /// parts, so the quotients come out real and nonnegative.
    pub fn compute_complex(&self, y_re: &[f64], y_im: Option<&[f64]>) -> Result<(f64, f64)> {
        let m = self.system.m();
        if y_re.len() != m || y_im.is_some_and(|v| v.len() != m) {
            return Err(Error::dims(
                "compute_pq: y",
                format!("length {m}"),
                format!(
                    "length {}{}",
                    y_re.len(),
                    y_im.map(|v| format!(" / {}", v.len())).unwrap_or_default()
                ),
            ));
        }
        let mut norm_sq = dot(y_re, y_re);
        if let Some(yi) = y_im {
            norm_sq += dot(yi, yi);
        }
        if norm_sq == 0.0 {
            return Err(Error::InvalidArgument(
                "compute_pq requires a nonzero test vector".into(),
            ));
        }

        let mut denom = 0.0;
        let mut p_num = 0.0;
        let mut q_num = 0.0;
        let parts: [Option<&[f64]>; 2] = [Some(y_re), y_im];
        for part in parts.into_iter().flatten() {
            let u = self.system.bt().matvec(part)?;
            denom += self.params.alpha * dot(part, part) + self.params.beta * dot(&u, &u);
            let t = self.a_factor.solve(&u)?;
            p_num += dot(&u, &t);
            let w = self.system.c().matvec(part)?;
            let v = self.third_factor.solve(&w)?;
            q_num += dot(&w, &v);
        }
        // the quotients are nonnegative by construction; round-off can leak
        // a sign on degenerate vectors, so clamp
        Ok(((p_num / denom).max(0.0), (q_num / denom).max(0.0)))
    }

    /// (p, q) at `count` points drawn uniformly from the unit sphere of
    /// dimension m, from a fixed seed.
    pub fn sample_unit_sphere(&self, count: usize, seed: u64) -> Result<Vec<SpectralQuantities>> {
        let m = self.system.m();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            let mut y: Vec<f64> = (0..m)
                .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect();
            let norm = norm2(&y);
            if norm < 1e-12 {
                continue;
            }
            for x in &mut y {
                *x /= norm;
            }
            out.push(self.compute(&y)?);
        }
        Ok(out)
    }
}

fn s_gram(c: &CsrMatrix, ct: &CsrMatrix) -> Result<CsrMatrix> {
    c.matmul(ct)
}

/// One-shot (p, q) for a single test vector. Building the factorizations
/// dominates, so use `PqSampler` directly when evaluating many vectors.
pub fn compute_pq(
    s: &SaddlePointSystem,
    params: PreconditionerParams,
    y: &[f64],
) -> Result<SpectralQuantities> {
    PqSampler::new(s, params)?.compute(y)
}

/// A-priori interval [lo, hi] containing p + q for every nonzero y, from
/// extreme eigenvalue estimates of A, BB^T, CC^T and C^T C.
pub fn pq_sum_interval(
    s: &SaddlePointSystem,
    params: PreconditionerParams,
) -> Result<(f64, f64)> {
    params.validate()?;
    let sp = estimate_spectra(s)?;
    let alpha = params.alpha;
    let beta = params.beta;
    let lo = (sp.bbt.lambda_min / sp.a.lambda_max
        + sp.ctc_min / (alpha + beta * sp.cct.lambda_max))
        / (alpha + beta * sp.bbt.lambda_max);
    let hi = (sp.bbt.lambda_max / sp.a.lambda_min
        + sp.cct.lambda_max / (alpha + beta * sp.cct.lambda_min))
        / (alpha + beta * sp.bbt.lambda_min);
    Ok((lo, hi))
}

/// The constants for both parameter-selection regimes, from the same
/// eigenvalue estimates `pq_sum_interval` uses.
pub fn case_constants(s: &SaddlePointSystem) -> Result<CaseConstants> {
    let sp = estimate_spectra(s)?;
    let eta = sp.bbt.lambda_max + sp.cct.lambda_max;
    let theta = sp.bbt.lambda_max * sp.cct.lambda_max;
    let kappa = sp.bbt.lambda_min / sp.a.lambda_max;
    let gamma = kappa * sp.cct.lambda_max;
    let zeta = sp.ctc_min;
    let eta_p = sp.bbt.lambda_min + sp.cct.lambda_min;
    let theta_p = sp.cct.lambda_min * sp.bbt.lambda_min;
    let kappa_p = sp.bbt.lambda_max / sp.a.lambda_min;
    let gamma_p = kappa_p * sp.cct.lambda_min;
    let zeta_p = sp.cct.lambda_max;
    Ok(CaseConstants {
        eta,
        theta,
        kappa,
        gamma,
        zeta,
        eta_p,
        theta_p,
        kappa_p,
        gamma_p,
        zeta_p,
    })
}

/// Parameters that push every (p, q) into the requested regime.
///
/// `ClusterCase::One` returns beta = kappa/eta and alpha at the midpoint of
/// the admissible open interval, alpha = 0.5 sqrt(gamma kappa / eta -
/// theta kappa^2 / eta^2 + zeta); any alpha in that interval forces
/// p + q > 1. `ClusterCase::Two` returns beta' = kappa'/eta' and alpha'
/// exactly at the lower limit sqrt(gamma' kappa' / eta' - theta' kappa'^2 /
/// eta'^2 + zeta'); any alpha at or above it forces p + q <= 1.
pub fn suggest_parameters(s: &SaddlePointSystem, case: ClusterCase) -> Result<PreconditionerParams> {
    let c = case_constants(s)?;
    let (beta, radicand) = match case {
        ClusterCase::One => (
            c.kappa / c.eta,
            c.gamma * c.kappa / c.eta - c.theta * c.kappa * c.kappa / (c.eta * c.eta) + c.zeta,
        ),
        ClusterCase::Two => (
            c.kappa_p / c.eta_p,
            c.gamma_p * c.kappa_p / c.eta_p
                - c.theta_p * c.kappa_p * c.kappa_p / (c.eta_p * c.eta_p)
                + c.zeta_p,
        ),
    };
    if radicand <= 0.0 || !radicand.is_finite() {
        return Err(Error::Numerical(format!(
            "case {case} radicand {radicand:.6e} is not positive; \
             eigenvalue estimates are inconsistent"
        )));
    }
    let alpha = match case {
        ClusterCase::One => 0.5 * radicand.sqrt(),
        ClusterCase::Two => radicand.sqrt(),
    };
    PreconditionerParams::new(alpha, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::saddle::SystemForm;
    use crate::sparse::dense_solve;
    use rand::Rng;

    fn identity_system(m: usize) -> SaddlePointSystem {
        let eye = CsrMatrix::identity(m);
        SaddlePointSystem::assemble(
            eye.clone(),
            eye.clone(),
            eye,
            vec![1.0; m],
            vec![1.0; m],
            vec![1.0; m],
            SystemForm::Nonsymmetric,
        )
        .unwrap()
    }

    /// Random full-rank system with SPD A, same shape conventions as the
    /// generators: A = G^T G + 2I.
    fn random_system(n: usize, m: usize, l: usize, seed: u64) -> SaddlePointSystem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |rows: usize, cols: usize| -> CsrMatrix {
            let mut t = Vec::new();
            for i in 0..rows {
                for j in 0..cols {
                    t.push((i, j, rng.random_range(-1.0..1.0)));
                }
            }
            CsrMatrix::from_triplets(rows, cols, &t).unwrap()
        };
        let g = draw(n, n);
        let a = g
            .transpose()
            .matmul(&g)
            .unwrap()
            .add(&CsrMatrix::identity(n).scaled(2.0))
            .unwrap();
        let b = draw(m, n);
        let c = draw(l, m);
        assert_eq!(b.to_dense().rank(1e-10), m);
        assert_eq!(c.to_dense().rank(1e-10), l);
        SaddlePointSystem::assemble(
            a,
            b,
            c,
            vec![1.0; n],
            vec![1.0; m],
            vec![1.0; l],
            SystemForm::Nonsymmetric,
        )
        .unwrap()
    }

    #[test]
    fn identity_blocks_give_half_and_quarter() {
        let s = identity_system(3);
        let params = PreconditionerParams::new(1.0, 1.0).unwrap();
        let mut y = vec![0.0; 3];
        y[0] = 1.0;
        let sq = compute_pq(&s, params, &y).unwrap();
        assert!((sq.p - 0.5).abs() < 1e-14);
        assert!((sq.q - 0.25).abs() < 1e-14);
        assert_eq!(sq.y_used, y);
    }

    #[test]
    fn quotients_are_scale_invariant() {
        let s = random_system(8, 4, 2, 11);
        let sampler = PqSampler::new(&s, PreconditionerParams::new(0.3, 1.7).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let scaled: Vec<f64> = y.iter().map(|x| x * 10.0).collect();
            let a = sampler.compute(&y).unwrap();
            let b = sampler.compute(&scaled).unwrap();
            assert!((a.p - b.p).abs() <= 1e-12 * (1.0 + a.p));
            assert!((a.q - b.q).abs() <= 1e-12 * (1.0 + a.q));
        }
    }

    #[test]
    fn quotients_match_dense_oracle() {
        let s = random_system(9, 5, 3, 23);
        let params = PreconditionerParams::new(0.05, 2.0).unwrap();
        let sampler = PqSampler::new(&s, params).unwrap();

        let a_dense = s.a().to_dense();
        let bbt = s.b().matmul(s.bt()).unwrap().to_dense();
        let cct = s.c().matmul(s.ct()).unwrap();
        let third = CsrMatrix::identity(3)
            .scaled(params.alpha)
            .add(&cct.scaled(params.beta))
            .unwrap()
            .to_dense();

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let y: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = sampler.compute(&y).unwrap();

            let u = s.bt().matvec(&y).unwrap();
            let t = dense_solve(&a_dense, &u).unwrap();
            let p_num = dot(&u, &t);
            let w = s.c().matvec(&y).unwrap();
            let v = dense_solve(&third, &w).unwrap();
            let q_num = dot(&w, &v);
            let mut denom = params.alpha * dot(&y, &y);
            let by = bbt.matvec(&y).unwrap();
            denom += params.beta * dot(&y, &by);

            assert!((got.p - p_num / denom).abs() < 1e-10 * (1.0 + got.p));
            assert!((got.q - q_num / denom).abs() < 1e-10 * (1.0 + got.q));
        }
    }

    #[test]
    fn complex_vector_reduces_to_sum_of_parts() {
        let s = random_system(8, 4, 2, 31);
        let sampler = PqSampler::new(&s, PreconditionerParams::new(0.5, 1.0).unwrap()).unwrap();
        // purely imaginary vector must agree with the same real vector
        let y = vec![0.4, -1.2, 0.7, 0.1];
        let zeros = vec![0.0; 4];
        let real = sampler.compute_complex(&y, None).unwrap();
        let imag = sampler.compute_complex(&zeros, Some(&y)).unwrap();
        assert!((real.0 - imag.0).abs() < 1e-14);
        assert!((real.1 - imag.1).abs() < 1e-14);
    }

    #[test]
    fn zero_and_misshapen_vectors_are_rejected() {
        let s = identity_system(3);
        let params = PreconditionerParams::new(1.0, 1.0).unwrap();
        assert!(compute_pq(&s, params, &[0.0, 0.0, 0.0]).is_err());
        assert!(compute_pq(&s, params, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identity_interval_collapses_to_three_quarters() {
        let s = identity_system(4);
        let params = PreconditionerParams::new(1.0, 1.0).unwrap();
        let (lo, hi) = pq_sum_interval(&s, params).unwrap();
        assert!((lo - 0.75).abs() < 1e-9);
        assert!((hi - 0.75).abs() < 1e-9);

        let sampler = PqSampler::new(&s, params).unwrap();
        for sq in sampler.sample_unit_sphere(25, 3).unwrap() {
            assert!((sq.p + sq.q - 0.75).abs() < 1e-12);
        }
    }

    #[test]
    fn sampled_sums_stay_inside_interval() {
        let s = random_system(10, 5, 3, 47);
        let params = PreconditionerParams::new(0.01, 1.0).unwrap();
        let (lo, hi) = pq_sum_interval(&s, params).unwrap();
        assert!(lo <= hi);
        let widen = 1e-6;
        let sampler = PqSampler::new(&s, params).unwrap();
        for sq in sampler.sample_unit_sphere(100, 9).unwrap() {
            let sum = sq.p + sq.q;
            assert!(
                sum >= lo * (1.0 - widen) - widen * 1e-6 && sum <= hi * (1.0 + widen),
                "p+q = {sum} outside [{lo}, {hi}]"
            );
        }
    }

    #[test]
    fn interval_upper_end_decreases_in_alpha() {
        let s = random_system(10, 5, 3, 47);
        let (_, hi_small) = pq_sum_interval(&s, PreconditionerParams::new(0.5, 1.0).unwrap()).unwrap();
        let (_, hi_large) = pq_sum_interval(&s, PreconditionerParams::new(1.0, 1.0).unwrap()).unwrap();
        assert!(hi_large < hi_small);
    }

    #[test]
    fn identity_case_constants_and_suggestions() {
        let s = identity_system(3);
        let c = case_constants(&s).unwrap();
        for (got, want) in [
            (c.eta, 2.0),
            (c.theta, 1.0),
            (c.kappa, 1.0),
            (c.gamma, 1.0),
            (c.zeta, 1.0),
            (c.eta_p, 2.0),
            (c.theta_p, 1.0),
            (c.kappa_p, 1.0),
            (c.gamma_p, 1.0),
            (c.zeta_p, 1.0),
        ] {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }

        let one = suggest_parameters(&s, ClusterCase::One).unwrap();
        assert!((one.beta - 0.5).abs() < 1e-9);
        assert!((one.alpha - 0.5 * 1.25f64.sqrt()).abs() < 1e-9);

        let two = suggest_parameters(&s, ClusterCase::Two).unwrap();
        assert!((two.beta - 0.5).abs() < 1e-9);
        assert!((two.alpha - 1.25f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn suggestions_land_in_their_regimes_on_a_random_system() {
        let s = random_system(12, 6, 6, 91);
        for (case, check) in [
            (ClusterCase::One, (|sum: f64| sum > 1.0) as fn(f64) -> bool),
            (ClusterCase::Two, |sum: f64| sum <= 1.0 + 1e-12),
        ] {
            let params = suggest_parameters(&s, case).unwrap();
            let sampler = PqSampler::new(&s, params).unwrap();
            for sq in sampler.sample_unit_sphere(200, 17).unwrap() {
                assert!(check(sq.p + sq.q), "case {case}: p+q = {}", sq.p + sq.q);
            }
        }
    }
}
