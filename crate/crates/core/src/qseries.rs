//! q-Pochhammer symbols, Gaussian binomials, the product polynomial
//! `Φ_n(X, q) = Π_{k=1}^n (X - q^{2k-1})`, and numeric checks of the
//! identities relating them (MacMahon, finite Jacobi, triple product).
//!
//! Everything is generic over [`Scalar`], so the same code runs in floating
//! point and in exact rational arithmetic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QSeriesError {
    #[error("degenerate q: (q;q) factor vanishes in [{m} choose {n}]")]
    DegenerateQ { m: usize, n: usize },
    #[error("domain error: {0}")]
    Domain(String),
}

/// `(x; q)_n = Π_{i=1}^n (1 - x q^{i-1})`.
pub fn q_pochhammer<S: Scalar>(x: &S, q: &S, n: usize) -> S {
    let mut acc = S::one();
    let mut xq = x.clone();
    for _ in 0..n {
        acc = acc * (S::one() - xq.clone());
        xq = xq * q.clone();
    }
    acc
}

/// Gaussian binomial `[m choose n]_q = (q;q)_m / ((q;q)_n (q;q)_{m-n})`,
/// evaluated as `Π_{i=1}^{n} (1 - q^{m-n+i}) / (1 - q^i)`. Zero for `n > m`.
pub fn q_binomial<S: Scalar>(m: usize, n: usize, q: &S) -> Result<S, QSeriesError> {
    if n > m {
        return Ok(S::zero());
    }
    let k = n.min(m - n);
    let mut num = S::one();
    let mut den = S::one();
    let mut qi = S::one();
    for _ in 0..k {
        qi = qi * q.clone();
        den = den * (S::one() - qi.clone());
    }
    let mut top = q.powu((m - k) as u32);
    for _ in 0..k {
        top = top * q.clone();
        num = num * (S::one() - top.clone());
    }
    if den.is_zero() {
        return Err(QSeriesError::DegenerateQ { m, n });
    }
    Ok(num / den)
}

/// Dense polynomial, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial<S> {
    pub coeffs: Vec<S>,
}

impl<S: Scalar> Polynomial<S> {
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &S) -> S {
        self.coeffs
            .iter()
            .rev()
            .fold(S::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    /// Multiply in place by `(X - root)`.
    pub fn mul_linear(&mut self, root: &S) {
        let mut next = vec![S::zero(); self.coeffs.len() + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            next[i + 1] = next[i + 1].clone() + c.clone();
            next[i] = next[i].clone() - root.clone() * c.clone();
        }
        self.coeffs = next;
    }
}

/// Coefficients of `Φ_n(X, q) = Π_{k=1}^n (X - q^{2k-1})`.
pub fn phi_polynomial<S: Scalar>(n: usize, q: &S) -> Polynomial<S> {
    let mut p = Polynomial {
        coeffs: vec![S::one()],
    };
    let q2 = q.clone() * q.clone();
    let mut root = q.clone();
    for _ in 0..n {
        p.mul_linear(&root);
        root = root * q2.clone();
    }
    p
}

/// Laurent polynomial `Σ c_i x^{min_degree + i}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaurentPolynomial<S> {
    pub min_degree: i64,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> LaurentPolynomial<S> {
    pub fn coeff(&self, k: i64) -> S {
        let idx = k - self.min_degree;
        if idx < 0 {
            return S::zero();
        }
        self.coeffs.get(idx as usize).cloned().unwrap_or_else(S::zero)
    }

    pub fn max_degree(&self) -> i64 {
        self.min_degree + self.coeffs.len() as i64 - 1
    }
}

/// `Σ a_i a_{i+1} / Σ a_i²` over the coefficients of `Φ_n`, against
/// `-q(1 - q^{2n}) / (1 - q^{2n+2})`.
pub fn phi_ratio_identity_check<S: Scalar>(n: usize, q: &S) -> Result<(S, S), QSeriesError> {
    if n == 0 {
        return Err(QSeriesError::Domain("need n >= 1".into()));
    }
    let (sum_sq, sum_adj) = coefficient_sums(n, q);
    let rhs_den = S::one() - q.powu(2 * n as u32 + 2);
    if sum_sq.is_zero() || rhs_den.is_zero() {
        return Err(QSeriesError::Domain("vanishing denominator at |q| = 1".into()));
    }
    let lhs = sum_adj / sum_sq;
    let rhs = -q.clone() * (S::one() - q.powu(2 * n as u32)) / rhs_den;
    Ok((lhs, rhs))
}

/// Both sides of
/// `(zq; q)_m (z⁻¹; q)_n = Σ_{k=-n}^{m} (-1)^k q^{k(k+1)/2} z^k [m+n choose n+k]_q`.
pub fn macmahon_check<S: Scalar>(m: usize, n: usize, q: &S, z: &S) -> Result<(S, S), QSeriesError> {
    if z.is_zero() {
        return Err(QSeriesError::Domain("z must be nonzero".into()));
    }
    let zinv = S::one() / z.clone();
    let lhs = q_pochhammer(&(z.clone() * q.clone()), q, m) * q_pochhammer(&zinv, q, n);
    let mut rhs = S::zero();
    for k in -(n as i64)..=(m as i64) {
        let sign = if k.rem_euclid(2) == 0 { S::one() } else { -S::one() };
        // k(k+1)/2 ≥ 0 for every integer k
        let tri = (k * (k + 1) / 2) as u32;
        let zk = z.powi_signed(k).expect("z is nonzero");
        let binom = q_binomial(m + n, (n as i64 + k) as usize, q)?;
        rhs = rhs + sign * q.powu(tri) * zk * binom;
    }
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteJacobiReport<S> {
    /// `Φ_n(x, q) Φ_n(1/x, q)`, degrees `-n..=n`.
    pub lhs: LaurentPolynomial<S>,
    /// `Σ_k (-1)^k q^{k²} [2n choose n+k]_{q²} x^k`.
    pub rhs: LaurentPolynomial<S>,
    pub max_error: f64,
}

impl<S: Scalar> FiniteJacobiReport<S> {
    /// Degrees at which the two sides differ (exactly, in rational mode).
    pub fn discrepancies(&self) -> Vec<i64> {
        (self.lhs.min_degree..=self.lhs.max_degree())
            .filter(|&k| self.lhs.coeff(k) != self.rhs.coeff(k))
            .collect()
    }
}

pub fn finite_jacobi_check<S: Scalar>(n: usize, q: &S) -> Result<FiniteJacobiReport<S>, QSeriesError> {
    let a = phi_polynomial(n, q).coeffs;
    let ni = n as i64;
    let mut lhs = vec![S::zero(); 2 * n + 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, aj) in a.iter().enumerate() {
            let k = (i as i64 - j as i64 + ni) as usize;
            lhs[k] = lhs[k].clone() + ai.clone() * aj.clone();
        }
    }
    let q2 = q.clone() * q.clone();
    let mut rhs = Vec::with_capacity(2 * n + 1);
    for k in -ni..=ni {
        let sign = if k.rem_euclid(2) == 0 { S::one() } else { -S::one() };
        let binom = q_binomial(2 * n, (ni + k) as usize, &q2)?;
        rhs.push(sign * q.powu((k * k) as u32) * binom);
    }
    let max_error = lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l.clone() - r.clone()).magnitude())
        .fold(0.0, f64::max);
    Ok(FiniteJacobiReport {
        lhs: LaurentPolynomial {
            min_degree: -ni,
            coeffs: lhs,
        },
        rhs: LaurentPolynomial {
            min_degree: -ni,
            coeffs: rhs,
        },
        max_error,
    })
}

/// `(Σ a_i², Σ a_i a_{i+1})` over the coefficients of `Φ_n(X, q)`.
pub fn coefficient_sums<S: Scalar>(n: usize, q: &S) -> (S, S) {
    let a = phi_polynomial(n, q).coeffs;
    let sum_sq = a.iter().fold(S::zero(), |acc, x| acc + x.clone() * x.clone());
    let sum_adj = a
        .windows(2)
        .fold(S::zero(), |acc, w| acc + w[0].clone() * w[1].clone());
    (sum_sq, sum_adj)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripleProductReport {
    /// `Π_{k=1}^K |z - ρ^{2k-1}|²`.
    pub lhs: f64,
    /// Real part of `(ρ²;ρ²)_K⁻¹ Σ_{|k|≤K} (-1)^k ρ^{k²} z^k`.
    pub rhs: f64,
    pub imaginary_residue: f64,
    /// `ρ^{2K}`, the order of the neglected tails.
    pub tail_bound: f64,
}

/// Truncated Jacobi triple product on the unit circle.
pub fn jacobi_triple_product_check(
    rho: f64,
    z: Complex64,
    k_max: usize,
) -> Result<TripleProductReport, QSeriesError> {
    if !(0.0..1.0).contains(&rho) {
        return Err(QSeriesError::Domain(format!("need 0 <= rho < 1, got {rho}")));
    }
    if (z.norm() - 1.0).abs() > 1e-12 {
        return Err(QSeriesError::Domain(format!("z = {z} is not on the unit circle")));
    }
    let lhs: f64 = (1..=k_max)
        .map(|k| (z - rho.powi(2 * k as i32 - 1)).norm_sqr())
        .product();
    let r2 = rho * rho;
    let poch = q_pochhammer(&r2, &r2, k_max);
    let kk = k_max as i64;
    let sum: Complex64 = (-kk..=kk)
        .map(|k| {
            let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            sign * rho.powi((k * k) as i32) * z.powi(k as i32)
        })
        .sum();
    let rhs = sum / poch;
    Ok(TripleProductReport {
        lhs,
        rhs: rhs.re,
        imaginary_residue: rhs.im,
        tail_bound: rho.powi(2 * k_max as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{pythagorean_point, rational, ExactComplex};
    use num_rational::BigRational;
    use num_traits::{One, Zero};
    use proptest::prelude::*;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// `[m choose n]_q` through the q-Pascal rule, an independent route.
    fn pascal_binomial(m: usize, n: usize, q: f64) -> f64 {
        let mut row = vec![1.0];
        for mm in 1..=m {
            let mut next = vec![1.0; mm + 1];
            for k in 1..mm {
                next[k] = row[k - 1] + q.powi(k as i32) * row[k];
            }
            row = next;
        }
        row[n]
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(q_pochhammer(&0.3, &0.7, 0), 1.0);
        let half = rational(1, 2);
        assert_eq!(q_pochhammer(&half, &half, 2), rational(3, 8));
        for n in 0..6 {
            assert_eq!(q_pochhammer(&0.0, &0.4, n), 1.0);
        }
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(q_binomial(7, 0, &0.3).unwrap(), 1.0);
        let q = rational(2, 7);
        assert_eq!(q_binomial(2, 1, &q).unwrap(), BigRational::one() + q.clone());
        let near_one = q_binomial(4, 2, &(1.0 + 1e-8)).unwrap();
        assert!((near_one - 6.0).abs() < 1e-6);
        assert_eq!(q_binomial(2, 3, &0.5).unwrap(), 0.0);
        assert_eq!(q_binomial(3, 1, &1.0), Err(QSeriesError::DegenerateQ { m: 3, n: 1 }));
        assert!(q_binomial(4, 2, &-1.0).is_err());
    }

    #[test]
    fn binomial_matches_pascal_rule() {
        for m in 0..12 {
            for n in 0..=m {
                for q in [-0.9, -0.3, 0.0, 0.41, 0.77] {
                    let a = q_binomial(m, n, &q).unwrap();
                    let b = pascal_binomial(m, n, q);
                    assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "m={m} n={n} q={q}");
                }
            }
        }
    }

    #[test]
    fn phi_examples() {
        let q = rational(1, 3);
        assert_eq!(phi_polynomial(1, &q).coeffs, vec![-q.clone(), BigRational::one()]);
        let q3 = q.powu(3);
        assert_eq!(
            phi_polynomial(2, &q).coeffs,
            vec![q.powu(4), -(q.clone() + q3), BigRational::one()]
        );
        assert_eq!(phi_polynomial(0, &q).coeffs, vec![BigRational::one()]);
        let p = phi_polynomial(5, &0.6);
        assert_eq!(p.coeffs[5], 1.0);
        for k in 1..=5 {
            assert!(p.eval(&0.6f64.powi(2 * k - 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn phi_ratio_examples() {
        for q in [-0.7, 0.2, 0.9] {
            let (l, r) = phi_ratio_identity_check(1, &q).unwrap();
            assert!((l + q / (1.0 + q * q)).abs() < 1e-15);
            assert!((l - r).abs() < 1e-15);
        }
        let (l, r) = phi_ratio_identity_check(3, &0.37).unwrap();
        assert!((l - r).abs() < 1e-14);
        assert_eq!(phi_ratio_identity_check(4, &0.0).unwrap(), (0.0, 0.0));
        assert!(phi_ratio_identity_check(2, &1.0).is_err());
        assert!(phi_ratio_identity_check(0, &0.5).is_err());
        let (l, r) = phi_ratio_identity_check(6, &rational(3, 5)).unwrap();
        assert_eq!(l, r);
    }

    #[test]
    fn macmahon_examples() {
        let (l, r) = macmahon_check(0, 0, &0.4, &1.7).unwrap();
        assert_eq!((l, r), (1.0, 1.0));
        let q = rational(2, 9);
        let z = rational(-5, 3);
        let (l, r) = macmahon_check(1, 0, &q, &z).unwrap();
        assert_eq!(l, BigRational::one() - z.clone() * q.clone());
        assert_eq!(l, r);
        let (l, r) = macmahon_check(3, 3, &cx(0.41, 0.0), &Complex64::from_polar(1.0, 0.7)).unwrap();
        assert!((l - r).norm() < 1e-12);
        assert!(macmahon_check(1, 1, &0.5, &0.0).is_err());
    }

    #[test]
    fn macmahon_exact_on_circle() {
        let z: ExactComplex = pythagorean_point(&rational(2, 7));
        let q = ExactComplex::new(rational(1, 3), BigRational::zero());
        for m in 0..4 {
            for n in 0..4 {
                let (l, r) = macmahon_check(m, n, &q, &z).unwrap();
                assert_eq!(l, r);
            }
        }
    }

    #[test]
    fn finite_jacobi_examples() {
        let q = 0.45;
        let rep = finite_jacobi_check(1, &q).unwrap();
        assert_eq!(rep.lhs.min_degree, -1);
        assert!((rep.lhs.coeff(-1) + q).abs() < 1e-16);
        assert!((rep.lhs.coeff(0) - (1.0 + q * q)).abs() < 1e-16);
        assert!((rep.lhs.coeff(1) + q).abs() < 1e-16);
        assert!(rep.max_error < 1e-15);
        assert!(finite_jacobi_check(4, &0.3).unwrap().max_error < 1e-13);
        let zero = finite_jacobi_check(5, &0.0).unwrap();
        assert_eq!(zero.max_error, 0.0);
        assert_eq!(zero.lhs.coeff(0), 1.0);
        assert_eq!(zero.lhs.coeff(2), 0.0);
    }

    #[test]
    fn finite_jacobi_exact_rational() {
        for n in 1..=8 {
            for q in [rational(1, 2), rational(-2, 3), rational(5, 7)] {
                let rep = finite_jacobi_check(n, &q).unwrap();
                assert_eq!(rep.max_error, 0.0);
                assert!(rep.discrepancies().is_empty());
            }
        }
    }

    #[test]
    fn coefficient_sum_examples() {
        let q = rational(1, 2);
        let (sq, adj) = coefficient_sums(1, &q);
        assert_eq!(sq, q_binomial(2, 1, &(q.clone() * q.clone())).unwrap());
        assert_eq!(adj, -q.clone());
        let q2 = q.clone() * q.clone();
        let (sq, adj) = coefficient_sums(2, &q);
        assert_eq!(sq, q_binomial(4, 2, &q2).unwrap());
        assert_eq!(adj, -q.clone() * q_binomial(4, 3, &q2).unwrap());
        assert_eq!(coefficient_sums(3, &0.0), (1.0, 0.0));
    }

    #[test]
    fn triple_product_examples() {
        for z in [cx(1.0, 0.0), cx(-1.0, 0.0), Complex64::from_polar(1.0, 2.1)] {
            let rep = jacobi_triple_product_check(0.5, z, 30).unwrap();
            assert!((rep.lhs - rep.rhs).abs() < 1e-12, "{rep:?}");
            assert!(rep.imaginary_residue.abs() < 1e-12);
        }
        let at_one = jacobi_triple_product_check(0.5, cx(1.0, 0.0), 30).unwrap();
        let at_minus = jacobi_triple_product_check(0.5, cx(-1.0, 0.0), 30).unwrap();
        assert!(at_minus.lhs > at_one.lhs);
        let tiny = jacobi_triple_product_check(1e-9, cx(0.0, 1.0), 5).unwrap();
        assert!((tiny.lhs - 1.0).abs() < 1e-8 && (tiny.rhs - 1.0).abs() < 1e-8);
        assert!(jacobi_triple_product_check(0.5, cx(0.5, 0.0), 5).is_err());
    }

    proptest! {
        #[test]
        fn phi_ratio_identity_holds(n in 1usize..=25, q in -0.95f64..0.95) {
            let (l, r) = phi_ratio_identity_check(n, &q).unwrap();
            prop_assert!((l - r).abs() < 1e-13, "{l} vs {r}");
        }

        #[test]
        fn coefficient_sums_close_the_ratio(n in 1usize..=20, q in -0.9f64..0.9) {
            let (sq, adj) = coefficient_sums(n, &q);
            let q2 = q * q;
            prop_assert!((sq - q_binomial(2 * n, n, &q2).unwrap()).abs() < 1e-12 * sq.abs().max(1.0));
            prop_assert!((adj + q * q_binomial(2 * n, n + 1, &q2).unwrap()).abs() < 1e-12 * sq.abs().max(1.0));
            let (_, rhs) = phi_ratio_identity_check(n, &q).unwrap();
            prop_assert!((adj / sq - rhs).abs() < 1e-13);
        }

        #[test]
        fn finite_jacobi_real(n in 1usize..=12, q in -0.9f64..0.9) {
            prop_assert!(finite_jacobi_check(n, &q).unwrap().max_error < 1e-12);
        }

        #[test]
        fn finite_jacobi_complex(n in 1usize..=12, r in 0.0f64..0.9, t in 0.0f64..std::f64::consts::TAU) {
            let q = Complex64::from_polar(r, t);
            prop_assert!(finite_jacobi_check(n, &q).unwrap().max_error < 1e-12);
        }

        #[test]
        fn macmahon_random(m in 0usize..=6, n in 0usize..=6, q in -0.9f64..0.9, t in 0.0f64..std::f64::consts::TAU, r in 0.5f64..1.5) {
            let z = Complex64::from_polar(r, t);
            let (l, rr) = macmahon_check(m, n, &cx(q, 0.0), &z).unwrap();
            prop_assert!((l - rr).norm() < 1e-12, "{l} vs {rr}");
        }
    }
}
