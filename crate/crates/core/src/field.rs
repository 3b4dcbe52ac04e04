//! External fields V(z) = sum of rho_k z^k over k in [-2 m1, 2 m2], and Laurent
//! polynomials with extended-precision coefficients.

use crate::{Error, Result};
use rug::Float;
use std::collections::BTreeMap;

/// Real Laurent-polynomial external field with positive extreme coefficients,
/// so that exp(-n V) decays superpolynomially at 0 and at infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentField {
    coeffs: BTreeMap<i64, f64>,
    m1: u32,
    m2: u32,
}

impl LaurentField {
    pub fn new(coeffs: BTreeMap<i64, f64>) -> Result<Self> {
        let coeffs: BTreeMap<i64, f64> = coeffs.into_iter().filter(|(_, c)| *c != 0.0).collect();
        let (lo, hi) = match (coeffs.keys().next(), coeffs.keys().next_back()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::BadSupport),
        };
        if lo >= 0 || hi <= 0 || lo % 2 != 0 || hi % 2 != 0 {
            return Err(Error::BadSupport);
        }
        if coeffs[&lo] <= 0.0 || coeffs[&hi] <= 0.0 {
            return Err(Error::BadSupport);
        }
        if coeffs.values().any(|c| !c.is_finite()) {
            return Err(Error::BadSupport);
        }
        Ok(Self { coeffs, m1: (-lo / 2) as u32, m2: (hi / 2) as u32 })
    }

    /// Convenience constructor from (exponent, coefficient) pairs.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().cloned().collect())
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, f64> {
        &self.coeffs
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> u32 {
        self.m2
    }

    /// True when V(-x) = V(x) for all x.
    pub fn is_even(&self) -> bool {
        self.coeffs.keys().all(|k| k % 2 == 0)
    }

    /// The reflected field V(-x) as a field in x.
    pub fn reflected(&self) -> LaurentField {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&k, &c)| (k, if k % 2 == 0 { c } else { -c }))
            .collect();
        LaurentField { coeffs, m1: self.m1, m2: self.m2 }
    }

    /// V(x) and V'(x) at a nonzero real point.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if x == 0.0 {
            return Err(Error::PoleAtOrigin);
        }
        let mut v = 0.0;
        let mut dv = 0.0;
        for (&k, &c) in &self.coeffs {
            let p = x.powi(k as i32);
            v += c * p;
            dv += c * k as f64 * p / x;
        }
        Ok((v, dv))
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).expect("x != 0").0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).expect("x != 0").1
    }

    /// V(z) for complex z off the origin.
    pub fn value_c(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let mut v = num_complex::Complex64::new(0.0, 0.0);
        for (&k, &c) in &self.coeffs {
            v += c * z.powi(k as i32);
        }
        v
    }

    /// V(x) at extended precision.
    pub fn value_mp(&self, x: &Float, prec: u32) -> Float {
        let mut v = Float::with_val(prec, 0);
        for (&k, &c) in &self.coeffs {
            let p = Float::with_val(prec, x.clone().pow_i64(k));
            v += p * Float::with_val(prec, c);
        }
        v
    }
}

trait PowI64 {
    fn pow_i64(self, k: i64) -> Self;
}

impl PowI64 for Float {
    fn pow_i64(self, k: i64) -> Self {
        use rug::ops::Pow;
        self.pow(k as i32)
    }
}

/// Finite two-sided coefficient sequence over a contiguous exponent range
/// [lo, hi], with extended-precision coefficients.
#[derive(Debug, Clone)]
pub struct LaurentPolynomial {
    lo: i64,
    coeffs: Vec<Float>,
}

impl LaurentPolynomial {
    pub fn new(lo: i64, coeffs: Vec<Float>) -> Self {
        assert!(!coeffs.is_empty());
        Self { lo, coeffs }
    }

    pub fn constant(prec: u32, c: f64) -> Self {
        Self { lo: 0, coeffs: vec![Float::with_val(prec, c)] }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, k: i64) -> Float {
        if k < self.lo || k > self.hi() {
            Float::with_val(self.coeffs[0].prec(), 0)
        } else {
            self.coeffs[(k - self.lo) as usize].clone()
        }
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (i64, &Float)> {
        self.coeffs.iter().enumerate().map(move |(i, c)| (self.lo + i as i64, c))
    }

    /// L-degree under the cyclic-base convention: range [-m, m] has L-degree 2m,
    /// range [-m-1, m] has L-degree 2m+1.
    pub fn l_degree(&self) -> i64 {
        let m = self.hi().max(-self.lo - 1);
        if -self.lo > self.hi() {
            2 * m + 1
        } else {
            2 * m
        }
    }

    pub fn eval_mp(&self, x: &Float) -> Float {
        let prec = x.prec().max(self.coeffs[0].prec());
        let mut acc = Float::with_val(prec, 0);
        // Horner over nonnegative part, then the principal part separately.
        for (k, c) in self.coeffs() {
            let p = Float::with_val(prec, x.clone().pow_i64(k));
            acc += p * c;
        }
        acc
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs()
            .map(|(k, c)| c.to_f64() * x.powi(k as i32))
            .sum()
    }

    pub fn eval_c64(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        self.coeffs()
            .map(|(k, c)| z.powi(k as i32) * c.to_f64())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zsq_field() -> LaurentField {
        LaurentField::from_pairs(&[(2, 1.0), (-2, 1.0)]).unwrap()
    }

    #[test]
    fn eval_symmetric_field() {
        let v = zsq_field();
        let (val, der) = v.eval(1.0).unwrap();
        assert_eq!(val, 2.0);
        assert_eq!(der, 0.0);
        let (val, der) = v.eval(2.0).unwrap();
        assert!((val - 4.25).abs() < 1e-15);
        assert!((der - 3.75).abs() < 1e-15);
        let (val, der) = v.eval(-1.0).unwrap();
        assert_eq!(val, 2.0);
        assert_eq!(der, 0.0);
    }

    #[test]
    fn origin_is_rejected() {
        assert!(matches!(zsq_field().eval(0.0), Err(Error::PoleAtOrigin)));
    }

    #[test]
    fn extreme_coefficients_must_be_positive() {
        assert!(LaurentField::from_pairs(&[(2, -1.0), (-2, 1.0)]).is_err());
        assert!(LaurentField::from_pairs(&[(2, 1.0)]).is_err());
        assert!(LaurentField::from_pairs(&[(1, 1.0), (-2, 1.0)]).is_err());
    }

    #[test]
    fn l_degree_convention() {
        let p = LaurentPolynomial::new(-2, vec![Float::with_val(64, 1); 4]); // [-2, 1]
        assert_eq!(p.l_degree(), 4); // max(1, 2-1)=... range [-2,1] sits inside Lambda_4 = [-2,2]
        let q = LaurentPolynomial::new(-3, vec![Float::with_val(64, 1); 6]); // [-3, 2]
        assert_eq!(q.l_degree(), 5); // Lambda_5 = [-3, 2]
    }
}
