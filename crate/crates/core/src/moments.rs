//! Strong moments c_k = integral of s^k exp(-n V(s)) over the real line, at
//! extended precision, and the bilinear form they induce.

use crate::field::{LaurentField, LaurentPolynomial};
use crate::mp::f;
use crate::quad::MpRule;
use crate::{Error, Result};
use rug::Float;
use std::collections::BTreeMap;

/// Extended-precision strong-moment table for one (V, n) pair.
pub struct MomentTable {
    pub n: u32,
    pub precision_bits: u32,
    lo: i64,
    hi: i64,
    values: BTreeMap<i64, Float>,
    errors: BTreeMap<i64, Float>,
    field: LaurentField,
}

/// Locate the maximizer and super-polynomial decay window of
/// phi(u) = (k+1) u - n W(u),  W(u) = V(sigma e^u),
/// working in f64 with clamping; the window is then widened by a guard.
fn decay_window(field: &LaurentField, n: u32, k: i64, drop: f64) -> (f64, f64, f64) {
    let phi = |u: f64| -> f64 {
        let s = u.exp();
        let w = field.value(s);
        ((k + 1) as f64) * u - n as f64 * w
    };
    // Coarse scan for the peak. The exponent range where the integrand is
    // representable is modest because W blows up double-exponentially.
    let mut best_u = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut u = -60.0;
    while u <= 60.0 {
        let p = phi(u);
        if p.is_finite() && p > best {
            best = p;
            best_u = u;
        }
        u += 0.05;
    }
    // Golden-section refine around the peak.
    let (mut a, mut b) = (best_u - 0.1, best_u + 0.1);
    for _ in 0..60 {
        let m1 = a + 0.381966 * (b - a);
        let m2 = b - 0.381966 * (b - a);
        if phi(m1) < phi(m2) {
            a = m1;
        } else {
            b = m2;
        }
    }
    let peak_u = 0.5 * (a + b);
    let peak = phi(peak_u);
    // Walk outward until the integrand has dropped by `drop` nats.
    let mut lo = peak_u;
    while phi(lo) > peak - drop && lo > -80.0 {
        lo -= 0.25;
    }
    let mut hi = peak_u;
    while phi(hi) > peak - drop && hi < 80.0 {
        hi += 0.25;
    }
    (lo, hi, peak)
}

/// Decay window for reuse by the Cauchy-transform quadrature.
pub fn decay_window_pub(field: &LaurentField, n: u32, k: i64, drop: f64) -> (f64, f64, f64) {
    decay_window(field, n, k, drop)
}

/// One half-line moment: integral over (0, inf) of s^k exp(-n V(sigma s)) ds,
/// via the substitution s = e^u. The integrand is normalised by its peak value
/// so panel sums stay O(1); the peak factor is restored at result precision.
fn half_moment(
    field: &LaurentField,
    n: u32,
    k: i64,
    sigma: f64,
    rule: &MpRule,
    tol_bits: u32,
) -> (Float, Float) {
    let prec = rule.prec;
    let eff = if sigma < 0.0 { field.reflected() } else { field.clone() };
    let drop = (prec as f64 + 40.0) * std::f64::consts::LN_2;
    let (lo, hi, peak) = decay_window(&eff, n, k, drop);
    let peak_mp = f(prec, peak);
    let nf = f(prec, n as f64);
    let est = rule.adaptive(&f(prec, lo), &f(prec, hi), tol_bits, |u| {
        let s = u.clone().exp();
        let w = eff.value_mp(&s, prec);
        let mut e = f(prec, (k + 1) as f64) * u - nf.clone() * w - &peak_mp;
        e = e.exp();
        e
    });
    let scale = peak_mp.exp();
    (est.value * &scale, est.error * &scale)
}

/// c_k with a certified error estimate. The integral over the real line splits
/// at the origin; each half maps to the whole line by s = e^u, where the
/// integrand vanishes super-polynomially in both directions.
pub fn strong_moment(field: &LaurentField, n: u32, k: i64, precision_bits: u32) -> Result<(Float, Float)> {
    assert!(precision_bits >= 64, "precision_bits >= 64");
    let rule = MpRule::new(32, precision_bits + 64);
    strong_moment_with_rule(field, n, k, precision_bits, &rule)
}

fn strong_moment_with_rule(
    field: &LaurentField,
    n: u32,
    k: i64,
    precision_bits: u32,
    rule: &MpRule,
) -> Result<(Float, Float)> {
    let tol_bits = precision_bits + 16;
    let (pos, err_pos) = half_moment(field, n, k, 1.0, rule, tol_bits);
    let (neg, err_neg) = half_moment(field, n, k, -1.0, rule, tol_bits);
    // integral over (-inf, 0) of s^k e^{-nV(s)} ds = (-1)^k integral over (0, inf) with V(-s)
    let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let value = pos + neg * f(rule.prec, sign);
    let error = err_pos + err_neg;
    let bound = {
        let scale = value.clone().abs().max(&f(rule.prec, 1e-300));
        Float::with_val(rule.prec, 2f64).pow_u32_signed(-(precision_bits as i64) / 2) * scale
    };
    if error > bound {
        return Err(Error::Precision { requested: precision_bits, achieved: error.to_f64() });
    }
    Ok((value, error))
}

trait PowHelp {
    fn pow_u32_signed(self, k: i64) -> Self;
}

impl PowHelp for Float {
    fn pow_u32_signed(self, k: i64) -> Self {
        use rug::ops::Pow;
        self.pow(k as i32)
    }
}

impl MomentTable {
    /// All moments c_k for k in [k_min, k_max], sharing one quadrature rule.
    pub fn build(field: &LaurentField, n: u32, k_min: i64, k_max: i64, precision_bits: u32) -> Result<Self> {
        assert!(k_min <= k_max);
        let rule = MpRule::new(32, precision_bits + 64);
        let mut values = BTreeMap::new();
        let mut errors = BTreeMap::new();
        for k in k_min..=k_max {
            let (v, e) = strong_moment_with_rule(field, n, k, precision_bits, &rule)?;
            values.insert(k, Float::with_val(precision_bits, v));
            errors.insert(k, Float::with_val(64, e));
        }
        Ok(Self { n, precision_bits, lo: k_min, hi: k_max, values, errors, field: field.clone() })
    }

    pub fn range(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn field(&self) -> &LaurentField {
        &self.field
    }

    pub fn get(&self, k: i64) -> Result<&Float> {
        self.values.get(&k).ok_or(Error::MomentRange { k, lo: self.lo, hi: self.hi })
    }

    pub fn error_estimate(&self, k: i64) -> Option<f64> {
        self.errors.get(&k).map(|e| e.to_f64())
    }

    /// <f, g> = sum over exponent pairs of coefficient products times moments.
    pub fn inner_product(&self, fp: &LaurentPolynomial, gp: &LaurentPolynomial) -> Result<Float> {
        let prec = self.precision_bits;
        let mut acc = f(prec, 0.0);
        for (i, ci) in fp.coeffs() {
            for (j, cj) in gp.coeffs() {
                let c = self.get(i + j)?;
                acc += Float::with_val(prec, ci * cj) * c;
            }
        }
        Ok(acc)
    }

    /// <f, z^j>
    pub fn inner_product_monomial(&self, fp: &LaurentPolynomial, j: i64) -> Result<Float> {
        let prec = self.precision_bits;
        let mut acc = f(prec, 0.0);
        for (i, ci) in fp.coeffs() {
            acc += ci * self.get(i + j)?.clone();
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zsq() -> LaurentField {
        LaurentField::from_pairs(&[(2, 1.0), (-2, 1.0)]).unwrap()
    }

    /// Closed form: integral over (0,inf) of e^{-a s^2 - b s^-2} ds
    ///   = (1/2) sqrt(pi/a) exp(-2 sqrt(a b)).
    fn glasser_c0(prec: u32, a: f64, b: f64) -> Float {
        let pi = crate::mp::pi(prec);
        let half = f(prec, 0.5);
        let root = (pi / f(prec, a)).sqrt();
        let arg = -f(prec, 2.0) * (f(prec, a) * f(prec, b)).sqrt();
        half * root * arg.exp()
    }

    /// d/da of the closed form above gives the s^2-weighted integral:
    /// integral over (0,inf) of s^2 e^{-a s^2 - b/s^2} ds
    ///   = (sqrt(pi) / (4 a^{3/2})) (1 + 2 sqrt(a b)) exp(-2 sqrt(a b)).
    fn glasser_c2(prec: u32, a: f64, b: f64) -> Float {
        let pi = crate::mp::pi(prec);
        let sab = (f(prec, a) * f(prec, b)).sqrt();
        let num = pi.sqrt() * (f(prec, 1.0) + f(prec, 2.0) * &sab) * (-f(prec, 2.0) * &sab).exp();
        let den = f(prec, 4.0) * f(prec, a) * f(prec, a).sqrt();
        num / den
    }

    #[test]
    fn c0_matches_closed_form() {
        let (c0, _) = strong_moment(&zsq(), 1, 0, 192).unwrap();
        let exact = glasser_c0(256, 1.0, 1.0) * f(256, 2.0); // both half-lines
        let err = (Float::with_val(256, &c0) - &exact).abs() / exact.clone().abs();
        assert!(err.to_f64() < 1e-50, "relative error {:e}", err.to_f64());
        assert!((c0.to_f64() - 0.23991).abs() < 1e-4);
    }

    #[test]
    fn c2_matches_differentiated_closed_form() {
        let (c2, _) = strong_moment(&zsq(), 1, 2, 192).unwrap();
        let exact = glasser_c2(256, 1.0, 1.0) * f(256, 2.0);
        let err = (Float::with_val(256, &c2) - &exact).abs() / exact.clone().abs();
        assert!(err.to_f64() < 1e-50, "relative error {:e}", err.to_f64());
    }

    #[test]
    fn odd_moments_vanish_for_even_field() {
        for k in [-3i64, -1, 1, 3, 5] {
            let (c, e) = strong_moment(&zsq(), 2, k, 128).unwrap();
            assert!(c.clone().abs().to_f64() <= e.to_f64().max(1e-60), "c_{k} = {:e}", c.to_f64());
        }
    }

    #[test]
    fn table_range_and_errors() {
        let t = MomentTable::build(&zsq(), 4, -20, 20, 128).unwrap();
        assert_eq!(t.range(), (-20, 20));
        for k in -20..=20 {
            let v = t.get(k).unwrap();
            assert!(v.is_finite());
        }
        assert!(t.get(21).is_err());
    }

    #[test]
    fn doubled_precision_agrees() {
        let t1 = MomentTable::build(&zsq(), 4, -8, 8, 128).unwrap();
        let t2 = MomentTable::build(&zsq(), 4, -8, 8, 256).unwrap();
        for k in (-8..=8).step_by(2) {
            let a = t1.get(k).unwrap().to_f64();
            let b = t2.get(k).unwrap().to_f64();
            assert!(((a - b) / b).abs() < 1e-15);
        }
    }

    #[test]
    fn inner_product_bilinear_symmetric() {
        let prec = 128;
        let t = MomentTable::build(&zsq(), 2, -6, 6, prec).unwrap();
        let p = LaurentPolynomial::new(-1, vec![f(prec, 0.5), f(prec, 1.0), f(prec, -2.0)]);
        let q = LaurentPolynomial::new(0, vec![f(prec, 3.0), f(prec, 0.25)]);
        let pq = t.inner_product(&p, &q).unwrap();
        let qp = t.inner_product(&q, &p).unwrap();
        assert_eq!(pq, qp);
        // <1, 1> = c_0 and <z^-1, z> = c_0
        let one = LaurentPolynomial::constant(prec, 1.0);
        let zinv = LaurentPolynomial::new(-1, vec![f(prec, 1.0)]);
        let z = LaurentPolynomial::new(1, vec![f(prec, 1.0)]);
        assert_eq!(t.inner_product(&one, &one).unwrap(), *t.get(0).unwrap());
        assert_eq!(t.inner_product(&zinv, &z).unwrap(), *t.get(0).unwrap());
    }
}
