//! Monic polynomials and classical root-modulus enclosures.
//!
//! Everything downstream of the preconditioned-operator analysis reduces to
//! locating the roots of a monic cubic. The four bound families implemented
//! here (Cauchy, Montel, Carmichael-Mason, Frobenius) all enclose every root
//! of a monic polynomial in an annulus computed from coefficient moduli
//! alone. `clustering_bounds` is the Cauchy annulus of the shifted cubic; the
//! two are kept algebraically identical by delegation, not by re-deriving the
//! closed forms.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sparse::DenseMatrix;
use crate::spectral::eig::dense_eig_full;

/// Classical coefficient-based root enclosure families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Cauchy,
    Montel,
    CarmichaelMason,
    Frobenius,
}

/// Which clustering regime a (p, q) pair falls in: `One` when p + q > 1,
/// `Two` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterCase {
    One,
    Two,
}

impl std::fmt::Display for ClusterCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ClusterCase::One => write!(f, "I"),
            ClusterCase::Two => write!(f, "II"),
        }
    }
}

/// An annulus `lower <= |root| <= upper` containing every root.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RootBounds {
    pub family: BoundFamily,
    pub lower: f64,
    pub upper: f64,
}

/// z^n + a_{n-1} z^{n-1} + ... + a_1 z + a_0 with the leading 1 implicit.
///
/// Coefficients are stored lowest degree first: `coefficients()[k]` is a_k.
/// Degree >= 2 is enforced at construction; the bound formulas below are
/// stated for that range.
#[derive(Clone, Debug)]
pub struct MonicPolynomial {
    coeffs: Vec<Complex64>,
}

impl MonicPolynomial {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "monic polynomial degree must be at least 2, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument(
                "polynomial coefficients must be finite".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[f64]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// a_0 .. a_{n-1}, lowest degree first.
    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    /// Horner evaluation of the full monic polynomial at z.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// Companion matrix (real coefficients only): subdiagonal of ones, last
    /// column -a_0..-a_{n-1}. Its eigenvalues are the roots.
    pub fn companion(&self) -> Result<DenseMatrix> {
        if !self.is_real() {
            return Err(Error::InvalidArgument(
                "companion matrix requires real coefficients".into(),
            ));
        }
        let n = self.degree();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 1..n {
            m.set(i, i - 1, 1.0);
        }
        for i in 0..n {
            m.set(i, n - 1, -self.coeffs[i].re);
        }
        Ok(m)
    }

    /// All roots, via the companion-matrix eigensolver. Real coefficients
    /// only; complex-coefficient polynomials are out of scope here.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let eig = dense_eig_full(&self.companion()?)?;
        Ok(eig.values().to_vec())
    }
}

/// Root-modulus enclosure for `poly` in the chosen family. Every root z
/// satisfies `lower <= |z| <= upper`; `lower` is zero exactly when a_0 = 0.
pub fn root_bounds(poly: &MonicPolynomial, family: BoundFamily) -> RootBounds {
    let m: Vec<f64> = poly.coeffs.iter().map(|c| c.norm()).collect();
    let n = m.len();
    let m0 = m[0];
    let (lower, upper) = match family {
        BoundFamily::Cauchy => {
            // lower: |a0| / max{1, |a0|+|a1|, ..., |a0|+|a_{n-1}|}
            // upper: max{|a0|, 1+|a1|, ..., 1+|a_{n-1}|}
            let mut denom: f64 = 1.0;
            let mut upper = m0;
            for &mk in &m[1..n] {
                denom = denom.max(m0 + mk);
                upper = upper.max(1.0 + mk);
            }
            (m0 / denom, upper)
        }
        BoundFamily::Montel => {
            // lower: |a0| / max{|a0|, 1 + sum_{k>=1} |a_k|}
            // upper: max{1, sum_k |a_k|}
            let tail: f64 = m[1..n].iter().sum();
            let denom = m0.max(1.0 + tail);
            (m0 / denom, 1.0_f64.max(m0 + tail))
        }
        BoundFamily::CarmichaelMason => {
            // s = 1 + sum_k |a_k|^2 (a_0 included); annulus [|a0|/sqrt(s), sqrt(s)]
            let s: f64 = 1.0 + m.iter().map(|mk| mk * mk).sum::<f64>();
            (m0 / s.sqrt(), s.sqrt())
        }
        BoundFamily::Frobenius => {
            let tail_sq: f64 = m[1..n].iter().map(|mk| mk * mk).sum();
            let nm1 = (n - 1) as f64;
            let lower = m0 / (1.0 + nm1 * m0 * m0 + tail_sq).sqrt();
            let upper = (nm1 + m0 * m0 + tail_sq).sqrt();
            (lower, upper)
        }
    };
    RootBounds {
        family,
        lower,
        upper,
    }
}

/// The cubic tying a non-unit eigenvalue of the preconditioned operator to
/// the quotient pair (p, q).
///
/// `centered = false`: the cubic in the eigenvalue itself,
/// lambda^3 - lambda^2 + (p+q) lambda - q.
/// `centered = true`: the same cubic in mu = lambda - 1,
/// mu^3 + 2 mu^2 + (1+p+q) mu + p.
pub fn cubic_from_pq(p: f64, q: f64, centered: bool) -> MonicPolynomial {
    let coeffs = if centered {
        [p, 1.0 + p + q, 2.0]
    } else {
        [-q, p + q, -1.0]
    };
    MonicPolynomial::from_real(&coeffs).expect("cubic has degree 3")
}

/// Annulus containing |lambda - 1| for every non-unit eigenvalue of the
/// preconditioned operator with quotients (p, q).
///
/// Case One (p + q > 1): [p/(1+2p+q), 2+p+q), upper bound strict.
/// Case Two (p + q <= 1): [p/(2+p), 3].
/// Both are exactly the Cauchy enclosure of the centered cubic, so this
/// delegates rather than restating the closed forms.
pub fn clustering_bounds(p: f64, q: f64) -> (f64, f64, ClusterCase) {
    let bounds = root_bounds(&cubic_from_pq(p, q, true), BoundFamily::Cauchy);
    let case = if p + q > 1.0 {
        ClusterCase::One
    } else {
        ClusterCase::Two
    };
    (bounds.lower, bounds.upper, case)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FAMILIES: [BoundFamily; 4] = [
        BoundFamily::Cauchy,
        BoundFamily::Montel,
        BoundFamily::CarmichaelMason,
        BoundFamily::Frobenius,
    ];

    /// Closed-form roots of z^3 + b z^2 + c z + d, for cross-checking the
    /// companion-matrix path. Depressed-cubic Cardano with the trigonometric
    /// branch for three real roots.
    pub(super) fn cardano_roots(b: f64, c: f64, d: f64) -> Vec<Complex64> {
        let p = c - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
        let shift = -b / 3.0;
        let half_q = q / 2.0;
        let disc = half_q * half_q + p * p * p / 27.0;
        let ts: Vec<Complex64> = if disc > 0.0 {
            // one real root, one conjugate pair
            let sq = disc.sqrt();
            let u = (-half_q + sq).cbrt();
            let v = (-half_q - sq).cbrt();
            let re = -(u + v) / 2.0;
            let im = (u - v) * 3f64.sqrt() / 2.0;
            vec![
                Complex64::new(u + v, 0.0),
                Complex64::new(re, im),
                Complex64::new(re, -im),
            ]
        } else if p == 0.0 {
            // triple real root
            let t = (-q).cbrt();
            vec![Complex64::new(t, 0.0); 3]
        } else {
            // three real roots
            let r = (-p / 3.0).sqrt();
            let arg = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0);
            let theta = arg.acos();
            (0..3)
                .map(|k| {
                    let t = 2.0 * r * (theta / 3.0 - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                    Complex64::new(t, 0.0)
                })
                .collect()
        };
        ts.into_iter().map(|t| t + shift).collect()
    }

    fn sort_roots(mut roots: Vec<Complex64>) -> Vec<Complex64> {
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap()
                .then(a.im.partial_cmp(&b.im).unwrap())
        });
        roots
    }

    fn assert_roots_close(got: &[Complex64], want: &[Complex64], tol: f64) {
        assert_eq!(got.len(), want.len());
        let got = sort_roots(got.to_vec());
        let want = sort_roots(want.to_vec());
        for (g, w) in got.iter().zip(&want) {
            assert!(
                (g - w).norm() <= tol,
                "root mismatch: {g} vs {w} (tol {tol})"
            );
        }
    }

    #[test]
    fn degree_below_two_is_rejected() {
        assert!(MonicPolynomial::from_real(&[1.0]).is_err());
        assert!(MonicPolynomial::from_real(&[]).is_err());
        assert!(MonicPolynomial::from_real(&[1.0, 2.0]).is_ok());
    }

    #[test]
    fn cauchy_is_tight_on_unit_circle_pair() {
        // z^2 - 1: both bounds collapse to 1, and the roots sit on them.
        let poly = MonicPolynomial::from_real(&[-1.0, 0.0]).unwrap();
        let b = root_bounds(&poly, BoundFamily::Cauchy);
        assert_eq!(b.lower, 1.0);
        assert_eq!(b.upper, 1.0);
    }

    #[test]
    fn centered_cubic_at_origin() {
        // p = q = 0: mu (mu + 1)^2, roots {0, -1, -1}, Cauchy annulus [0, 3].
        let poly = cubic_from_pq(0.0, 0.0, true);
        let b = root_bounds(&poly, BoundFamily::Cauchy);
        assert_eq!(b.lower, 0.0);
        assert_eq!(b.upper, 3.0);
        // -1 is a double root, so recovery is only sqrt(eps)-accurate
        let roots = poly.roots().unwrap();
        assert_roots_close(
            &roots,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
            1e-6,
        );
    }

    #[test]
    fn lower_bound_is_zero_iff_constant_term_vanishes() {
        let with_zero = MonicPolynomial::from_real(&[0.0, 2.0, 3.0]).unwrap();
        let without = MonicPolynomial::from_real(&[0.5, 2.0, 3.0]).unwrap();
        for family in FAMILIES {
            assert_eq!(root_bounds(&with_zero, family).lower, 0.0);
            let b = root_bounds(&without, family);
            assert!(b.lower > 0.0);
            assert!(b.lower <= b.upper);
        }
    }

    #[test]
    fn all_families_enclose_companion_roots() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for _ in 0..200 {
            let coeffs: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
            let poly = MonicPolynomial::from_real(&coeffs).unwrap();
            let roots = poly.roots().unwrap();
            for family in FAMILIES {
                let b = root_bounds(&poly, family);
                assert!(b.lower <= b.upper);
                for r in &roots {
                    let modulus = r.norm();
                    assert!(
                        modulus >= b.lower * (1.0 - 1e-10) - 1e-10
                            && modulus <= b.upper * (1.0 + 1e-10) + 1e-10,
                        "{family:?}: |{r}| = {modulus} outside [{}, {}] for {coeffs:?}",
                        b.lower,
                        b.upper
                    );
                }
            }
        }
    }

    #[test]
    fn cardano_matches_known_factorization() {
        // (z-1)(z-2)(z-3) = z^3 - 6z^2 + 11z - 6
        let roots = cardano_roots(-6.0, 11.0, -6.0);
        assert_roots_close(
            &roots,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(3.0, 0.0),
            ],
            1e-12,
        );
    }

    #[test]
    fn companion_roots_match_cardano() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let b = rng.random_range(-4.0..4.0);
            let c = rng.random_range(-4.0..4.0);
            let d = rng.random_range(-4.0..4.0);
            let poly = MonicPolynomial::from_real(&[d, c, b]).unwrap();
            assert_roots_close(&poly.roots().unwrap(), &cardano_roots(b, c, d), 1e-8);
        }
    }

    #[test]
    fn shifted_cubic_roots_are_translated() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let p = rng.random_range(0.0..4.0);
            let q = rng.random_range(0.0..4.0);
            let centered = cubic_from_pq(p, q, true).roots().unwrap();
            let plain = cubic_from_pq(p, q, false).roots().unwrap();
            let shifted: Vec<Complex64> =
                centered.iter().map(|mu| mu + Complex64::new(1.0, 0.0)).collect();
            assert_roots_close(&plain, &shifted, 1e-10);
        }
    }

    #[test]
    fn vieta_relations_hold_for_eigenvalue_cubic() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..50 {
            let p = rng.random_range(0.0..3.0);
            let q = rng.random_range(0.0..3.0);
            let roots = cubic_from_pq(p, q, false).roots().unwrap();
            let sum: Complex64 = roots.iter().sum();
            let product: Complex64 = roots.iter().product();
            let pairwise = roots[0] * roots[1] + roots[0] * roots[2] + roots[1] * roots[2];
            assert!((sum - Complex64::new(1.0, 0.0)).norm() < 1e-8);
            assert!((product - Complex64::new(q, 0.0)).norm() < 1e-8);
            assert!((pairwise - Complex64::new(p + q, 0.0)).norm() < 1e-8);
        }
    }

    #[test]
    fn clustering_bounds_match_direct_formulas() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        for _ in 0..200 {
            let p = rng.random_range(0.0..5.0);
            let q = rng.random_range(0.0..5.0);
            let (lower, upper, case) = clustering_bounds(p, q);
            // the closed forms, with summations mirroring root_bounds
            let (dl, du) = if p + q > 1.0 {
                assert_eq!(case, ClusterCase::One);
                (p / (p + (1.0 + p + q)), 1.0 + (1.0 + p + q))
            } else {
                assert_eq!(case, ClusterCase::Two);
                (p / (p + 2.0), 3.0)
            };
            assert!((lower - dl).abs() <= 1e-15 * (1.0 + dl.abs()), "{lower} vs {dl}");
            assert!((upper - du).abs() <= 1e-15 * (1.0 + du.abs()), "{upper} vs {du}");
        }
    }

    #[test]
    fn clustering_examples_and_root_containment() {
        let (lo, hi, case) = clustering_bounds(0.0, 0.0);
        assert_eq!((lo, hi, case), (0.0, 3.0, ClusterCase::Two));
        let (lo, hi, case) = clustering_bounds(1.0, 1.0);
        assert_eq!(case, ClusterCase::One);
        assert!((lo - 0.25).abs() < 1e-15);
        assert!((hi - 4.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(555);
        for _ in 0..100 {
            let p = rng.random_range(0.0..4.0);
            let q = rng.random_range(0.0..4.0);
            let (lo, hi, _) = clustering_bounds(p, q);
            for mu in cubic_from_pq(p, q, true).roots().unwrap() {
                let modulus = mu.norm();
                assert!(modulus >= lo * (1.0 - 1e-10) - 1e-12);
                assert!(modulus <= hi * (1.0 + 1e-10) + 1e-12);
            }
        }
    }

    #[test]
    fn complex_coefficients_have_bounds_but_no_companion() {
        let poly = MonicPolynomial::new(vec![
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, -1.0),
        ])
        .unwrap();
        let b = root_bounds(&poly, BoundFamily::Montel);
        assert!(b.lower > 0.0 && b.lower <= b.upper);
        assert!(poly.roots().is_err());
    }

    #[test]
    fn eval_is_monic_horner() {
        let poly = MonicPolynomial::from_real(&[-6.0, 11.0, -6.0]).unwrap();
        for z in [1.0, 2.0, 3.0] {
            assert!(poly.eval(Complex64::new(z, 0.0)).norm() < 1e-12);
        }
        assert!((poly.eval(Complex64::new(0.0, 0.0)) - Complex64::new(-6.0, 0.0)).norm() < 1e-15);
    }
}
