//! Quadrature engines: adaptive panel-doubling Gauss-Legendre at extended
//! precision for the moment path, and fixed-order f64 rules for the
//! equilibrium/surface path.

use crate::mp::{f, gauss_legendre, MpComplex};
use rug::Float;

/// Result of an adaptive integration: value and the difference between the two
/// finest refinements, used as a conservative absolute error estimate.
pub struct Estimate {
    pub value: Float,
    pub error: Float,
}

pub struct MpRule {
    pub prec: u32,
    nodes: Vec<Float>,
    weights: Vec<Float>,
}

impl MpRule {
    pub fn new(order: usize, prec: u32) -> Self {
        let (nodes, weights) = gauss_legendre(order, prec);
        Self { prec, nodes, weights }
    }

    fn panel<F: FnMut(&Float) -> Float>(&self, a: &Float, b: &Float, fun: &mut F) -> Float {
        let prec = self.prec;
        let half = Float::with_val(prec, b - a.clone()) / f(prec, 2.0);
        let mid = Float::with_val(prec, a + b.clone()) / f(prec, 2.0);
        let mut acc = f(prec, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            let t = mid.clone() + half.clone() * x;
            acc += fun(&t) * w;
        }
        acc * half
    }

    /// Integrate over [a, b] with m panels.
    fn panels<F: FnMut(&Float) -> Float>(&self, a: &Float, b: &Float, m: usize, fun: &mut F) -> Float {
        let prec = self.prec;
        let width = Float::with_val(prec, b - a.clone()) / f(prec, m as f64);
        let mut acc = f(prec, 0.0);
        for i in 0..m {
            let lo = a.clone() + width.clone() * f(prec, i as f64);
            let hi = a.clone() + width.clone() * f(prec, (i + 1) as f64);
            acc += self.panel(&lo, &hi, fun);
        }
        acc
    }

    /// Panel-doubling until two successive refinements agree to `tol_bits`
    /// relative bits, or the panel budget runs out.
    pub fn adaptive<F: FnMut(&Float) -> Float>(
        &self,
        a: &Float,
        b: &Float,
        tol_bits: u32,
        mut fun: F,
    ) -> Estimate {
        let prec = self.prec;
        let mut m = 2usize;
        let mut prev = self.panels(a, b, m, &mut fun);
        loop {
            m *= 2;
            let cur = self.panels(a, b, m, &mut fun);
            let diff = Float::with_val(prec, &cur - &prev).abs();
            let scale = cur.clone().abs().max(&f(prec, 1e-300));
            let rel = diff.clone() / scale;
            if rel < Float::with_val(prec, 2f64).pow_i(-(tol_bits as i64)) || m >= 4096 {
                return Estimate { value: cur, error: diff };
            }
            prev = cur;
        }
    }

    /// Complex-valued variant with the same refinement policy.
    pub fn adaptive_complex<F: FnMut(&Float) -> MpComplex>(
        &self,
        a: &Float,
        b: &Float,
        tol_bits: u32,
        mut fun: F,
    ) -> (MpComplex, Float) {
        let prec = self.prec;
        let mut m = 2usize;
        let mut prev = self.panels_c(a, b, m, &mut fun);
        loop {
            m *= 2;
            let cur = self.panels_c(a, b, m, &mut fun);
            let diff = (cur.clone() - prev.clone()).abs();
            let scale = cur.abs().max(&f(prec, 1e-300));
            let rel = diff.clone() / scale;
            if rel < Float::with_val(prec, 2f64).pow_i(-(tol_bits as i64)) || m >= 4096 {
                return (cur, diff);
            }
            prev = cur;
        }
    }

    fn panels_c<F: FnMut(&Float) -> MpComplex>(&self, a: &Float, b: &Float, m: usize, fun: &mut F) -> MpComplex {
        let prec = self.prec;
        let width = Float::with_val(prec, b - a.clone()) / f(prec, m as f64);
        let mut acc = MpComplex::zero(prec);
        for i in 0..m {
            let lo = a.clone() + width.clone() * f(prec, i as f64);
            let hi = a.clone() + width.clone() * f(prec, (i + 1) as f64);
            let half = Float::with_val(prec, &hi - &lo) / f(prec, 2.0);
            let mid = Float::with_val(prec, &lo + &hi) / f(prec, 2.0);
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                let t = mid.clone() + half.clone() * x;
                let v = fun(&t);
                acc = acc + v.scale(w).scale(&half);
            }
        }
        acc
    }
}

trait PowI {
    fn pow_i(self, k: i64) -> Self;
}

impl PowI for Float {
    fn pow_i(self, k: i64) -> Self {
        use rug::ops::Pow;
        self.pow(k as i32)
    }
}

/// Fixed-order Gauss-Legendre rule in f64 for the asymptotic path.
#[derive(Debug, Clone)]
pub struct Rule64 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule64 {
    pub fn new(order: usize) -> Self {
        let (n, w) = gauss_legendre(order, 64);
        Rule64 {
            nodes: n.iter().map(|x| x.to_f64()).collect(),
            weights: w.iter().map(|x| x.to_f64()).collect(),
        }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut fun: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * fun(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Panel-doubling refinement in f64, for integrands with mild interior
    /// structure (log singularities after subtraction, near-edge poles).
    pub fn integrate_adaptive<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, tol: f64, mut fun: F) -> f64 {
        let mut m = 1usize;
        let mut prev = self.integrate(a, b, &mut fun);
        loop {
            m *= 2;
            let width = (b - a) / m as f64;
            let mut cur = 0.0;
            for i in 0..m {
                cur += self.integrate(a + i as f64 * width, a + (i + 1) as f64 * width, &mut fun);
            }
            if (cur - prev).abs() <= tol * cur.abs().max(1.0) || m >= 1024 {
                return cur;
            }
            prev = cur;
        }
    }

    pub fn integrate_complex<F: FnMut(f64) -> num_complex::Complex64>(
        &self,
        a: f64,
        b: f64,
        mut fun: F,
    ) -> num_complex::Complex64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| fun(mid + half * x) * w)
            .sum::<num_complex::Complex64>()
            * half
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adaptive_gaussian_integral() {
        let rule = MpRule::new(24, 192);
        // integral of exp(-t^2) over [-8, 8] = sqrt(pi) to ~1e-28
        let est = rule.adaptive(&f(192, -8.0), &f(192, 8.0), 160, |t| {
            (-t.clone().square()).exp()
        });
        let sqrt_pi = crate::mp::pi(192).sqrt();
        let err = (est.value - sqrt_pi).abs().to_f64();
        assert!(err < 1e-27, "err = {err:e}");
    }

    #[test]
    fn f64_rule_smoke() {
        let r = Rule64::new(40);
        let v = r.integrate(0.0, std::f64::consts::PI, |x| x.sin());
        assert!((v - 2.0).abs() < 1e-13);
    }
}
