//! Extended-precision helpers: a minimal complex type over `rug::Float` and
//! Gauss-Legendre nodes computed at working precision.

use rug::{float::Constant, Float};
use std::ops::{Add, Div, Mul, Neg, Sub};

pub fn f(prec: u32, x: f64) -> Float {
    Float::with_val(prec, x)
}

pub fn pi(prec: u32) -> Float {
    Float::with_val(prec, Constant::Pi)
}

/// Complex number with extended-precision parts. Only the operations the
/// quadrature and linear-algebra paths need.
#[derive(Debug, Clone)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn new(re: Float, im: Float) -> Self {
        Self { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        Self { re: f(prec, 0.0), im: f(prec, 0.0) }
    }

    pub fn from_f64(prec: u32, re: f64, im: f64) -> Self {
        Self { re: f(prec, re), im: f(prec, im) }
    }

    pub fn abs(&self) -> Float {
        let mut t = self.re.clone().square();
        t += self.im.clone().square();
        t.sqrt()
    }

    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn scale(&self, s: &Float) -> Self {
        Self { re: self.re.clone() * s, im: self.im.clone() * s }
    }
}

impl Add for MpComplex {
    type Output = MpComplex;
    fn add(self, o: MpComplex) -> MpComplex {
        MpComplex { re: self.re + o.re, im: self.im + o.im }
    }
}

impl Sub for MpComplex {
    type Output = MpComplex;
    fn sub(self, o: MpComplex) -> MpComplex {
        MpComplex { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Mul for MpComplex {
    type Output = MpComplex;
    fn mul(self, o: MpComplex) -> MpComplex {
        let re = self.re.clone() * &o.re - self.im.clone() * &o.im;
        let im = self.re * &o.im + self.im * &o.re;
        MpComplex { re, im }
    }
}

impl Div for MpComplex {
    type Output = MpComplex;
    fn div(self, o: MpComplex) -> MpComplex {
        let d = o.re.clone().square() + o.im.clone().square();
        let re = (self.re.clone() * &o.re + self.im.clone() * &o.im) / &d;
        let im = (self.im * &o.re - self.re * &o.im) / &d;
        MpComplex { re, im }
    }
}

impl Neg for MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex { re: -self.re, im: -self.im }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] at the requested precision.
/// Newton refinement of Chebyshev initial guesses against the three-term
/// Legendre recurrence.
pub fn gauss_legendre(order: usize, prec: u32) -> (Vec<Float>, Vec<Float>) {
    let work = prec + 32;
    let n = order;
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let pi_w = pi(work);
    for i in 0..(n + 1) / 2 {
        let guess = ((i as f64 + 0.75) / (n as f64 + 0.5) * std::f64::consts::PI).cos();
        let mut x = f(work, guess);
        let mut dp = f(work, 0.0);
        for _ in 0..(work as usize / 8 + 12) {
            let (p, d) = legendre_pair(n, &x, work);
            dp = d;
            let step = p / &dp;
            let mag = step.clone().abs();
            x -= step;
            if mag < Float::with_val(work, 2f64).pow_int(-(prec as i64) - 8) {
                let (p, d) = legendre_pair(n, &x, work);
                dp = d;
                x -= p / &dp;
                break;
            }
        }
        let w = {
            let t = f(work, 1.0) - x.clone().square();
            f(work, 2.0) / (t * dp.clone().square())
        };
        nodes.push(-x.clone());
        weights.push(w.clone());
        if 2 * (i + 1) <= n && i != n - 1 - i {
            nodes.push(x);
            weights.push(w);
        }
    }
    let _ = pi_w;
    let mut idx: Vec<usize> = (0..nodes.len()).collect();
    idx.sort_by(|&a, &b| nodes[a].partial_cmp(&nodes[b]).unwrap());
    let nodes: Vec<Float> = idx.iter().map(|&i| Float::with_val(prec, &nodes[i])).collect();
    let weights: Vec<Float> = idx.iter().map(|&i| Float::with_val(prec, &weights[i])).collect();
    (nodes, weights)
}

fn legendre_pair(n: usize, x: &Float, prec: u32) -> (Float, Float) {
    let mut p0 = f(prec, 1.0);
    let mut p1 = x.clone();
    if n == 0 {
        return (p0, f(prec, 0.0));
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = (x.clone() * &p1 * f(prec, 2.0 * kf - 1.0) - p0.clone() * f(prec, kf - 1.0)) / f(prec, kf);
        p0 = p1;
        p1 = p2;
    }
    // P'_n(x) = n (x P_n - P_{n-1}) / (x^2 - 1)
    let num = (x.clone() * &p1 - &p0) * f(prec, n as f64);
    let den = x.clone().square() - f(prec, 1.0);
    (p1, num / den)
}

trait PowInt {
    fn pow_int(self, k: i64) -> Self;
}

impl PowInt for Float {
    fn pow_int(self, k: i64) -> Self {
        use rug::ops::Pow;
        self.pow(k as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(8, 128);
        // integral of t^6 over [-1,1] = 2/7
        let mut acc = f(128, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            use rug::ops::Pow;
            acc += Float::with_val(128, xi.clone().pow(6)) * wi;
        }
        let err = (acc - Float::with_val(128, 2.0) / Float::with_val(128, 7.0)).abs();
        assert!(err.to_f64() < 1e-35, "err = {}", err.to_f64());
    }

    #[test]
    fn complex_division_round_trip() {
        let a = MpComplex::from_f64(128, 1.25, -0.5);
        let b = MpComplex::from_f64(128, -0.75, 2.0);
        let q = a.clone() / b.clone();
        let back = q * b;
        assert!((back.re.to_f64() - 1.25).abs() < 1e-30);
        assert!((back.im.to_f64() + 0.5).abs() < 1e-30);
    }
}
