//! Airy function Ai and its derivative on the complex plane.
//!
//! Two regimes: the Maclaurin series (evaluated in extended precision so the
//! exponential cancellation for oscillatory arguments costs no accuracy), and
//! the Poincare asymptotic series in |arg z| <= 2 pi/3 with the rotation
//! identity Ai(z) = -w Ai(w z) - w^2 Ai(w^2 z), w = exp(2 pi i/3), elsewhere.
//! The crossover radius is 9: at the seam both regimes agree to ~1e-13, which
//! a radius-6 crossover cannot reach because the optimally truncated
//! asymptotic series floors at exp(-4/3 |z|^{3/2}).

use crate::mp::{f, MpComplex};
use num_complex::Complex64;
use rug::Float;

const CROSSOVER: f64 = 9.0;
const SERIES_PREC: u32 = 256;

/// Ai(z) and Ai'(z). Entire functions; the evaluation cap mirrors the
/// asymptotic-only regime beyond |z| = 1e4.
pub fn airy(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() <= CROSSOVER {
        airy_series(z)
    } else {
        airy_asymptotic_rotated(z)
    }
}

/// Maclaurin series at extended precision: Ai = c1 f - c2 g with
/// f = sum a_k z^{3k}, g = sum b_k z^{3k+1},
/// a_k = a_{k-1} / ((3k-1)(3k)), b_k = b_{k-1} / ((3k)(3k+1)).
pub fn airy_series(z: Complex64) -> (Complex64, Complex64) {
    let prec = SERIES_PREC;
    let zc = MpComplex::from_f64(prec, z.re, z.im);
    let z2 = zc.clone() * zc.clone();
    let z3 = z2.clone() * zc.clone();
    let mut a_k = f(prec, 1.0);
    let mut b_k = f(prec, 1.0);
    // z^{3k} and z^{3k-1} running powers (the latter seeded lazily at k=1)
    let mut pow3k = MpComplex::from_f64(prec, 1.0, 0.0);
    let mut fsum = MpComplex::from_f64(prec, 1.0, 0.0);
    let mut gsum = zc.clone();
    let mut fder = MpComplex::zero(prec);
    let mut gder = MpComplex::from_f64(prec, 1.0, 0.0);
    let mut k = 0u32;
    loop {
        k += 1;
        let k3 = 3.0 * k as f64;
        a_k /= f(prec, k3 - 1.0) * f(prec, k3);
        b_k /= f(prec, k3) * f(prec, k3 + 1.0);
        let pow3km1 = pow3k.clone() * z2.clone(); // z^{3k-1}
        pow3k = pow3k * z3.clone(); // z^{3k}
        let f_term = pow3k.clone().scale(&a_k);
        let g_term = (pow3k.clone() * zc.clone()).scale(&b_k); // z^{3k+1}
        fsum = fsum + f_term.clone();
        gsum = gsum + g_term.clone();
        fder = fder + pow3km1.scale(&(a_k.clone() * f(prec, k3)));
        gder = gder + pow3k.clone().scale(&(b_k.clone() * f(prec, k3 + 1.0)));
        let tail = f_term.abs().to_f64() + g_term.abs().to_f64();
        if (k > 8 && tail < 1e-90) || k > 600 {
            break;
        }
    }
    let (c1, c2) = airy_constants(prec);
    let ai = fsum.scale(&c1) - gsum.scale(&c2);
    let aip = fder.scale(&c1) - gder.scale(&c2);
    (ai.to_c64(), aip.to_c64())
}

/// c1 = 3^{-2/3} / Gamma(2/3), c2 = 3^{-1/3} / Gamma(1/3), with the fractional
/// exponents formed at working precision.
fn airy_constants(prec: u32) -> (Float, Float) {
    use rug::ops::Pow;
    let third = f(prec, 1.0) / f(prec, 3.0);
    let two_thirds = f(prec, 2.0) / f(prec, 3.0);
    let g13 = third.clone().gamma();
    let g23 = two_thirds.clone().gamma();
    let c1 = f(prec, 3.0).pow(-two_thirds) / g23;
    let c2 = f(prec, 3.0).pow(-third) / g13;
    (c1, c2)
}

/// Poincare expansion valid in |arg z| <= 2 pi/3 (used away from the negative
/// real axis), with s_k and t_k = -((6k+1)/(6k-1)) s_k.
fn airy_asymptotic_direct(z: Complex64) -> (Complex64, Complex64) {
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let inv = 1.0 / zeta;
    let mut s_sum = Complex64::new(1.0, 0.0);
    let mut t_sum = Complex64::new(1.0, 0.0);
    let mut s_k = 1.0f64;
    let mut pw = Complex64::new(1.0, 0.0);
    let kmax = (zeta.norm().floor() as usize).clamp(8, 60);
    for k in 1..=kmax {
        let kf = k as f64;
        // s_k = s_{k-1} (6k-5)(6k-3)(6k-1) / (216 k (2k-1))
        s_k *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / (216.0 * kf * (2.0 * kf - 1.0));
        let t_k = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * s_k;
        pw *= -inv;
        s_sum += s_k * pw;
        t_sum += t_k * pw;
    }
    let pref = 0.5 / std::f64::consts::PI.sqrt() * (-zeta).exp();
    let ai = pref * z.powf(-0.25) * s_sum;
    let aip = -pref * z.powf(0.25) * t_sum;
    (ai, aip)
}

fn airy_asymptotic_rotated(z: Complex64) -> (Complex64, Complex64) {
    let arg = z.arg();
    let bound = 2.0 * std::f64::consts::PI / 3.0;
    if arg.abs() <= bound {
        airy_asymptotic_direct(z)
    } else {
        // Ai(z) = -w Ai(w z) - w^2 Ai(w^2 z); both rotated arguments fall in
        // the direct sector.
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let w2 = w * w;
        let (a1, a1p) = airy_asymptotic_direct(w * z);
        let (a2, a2p) = airy_asymptotic_direct(w2 * z);
        let ai = -w * a1 - w2 * a2;
        let aip = -w2 * a1p - w * a2p;
        (ai, aip)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_origin() {
        let (ai, aip) = airy(Complex64::new(0.0, 0.0));
        assert!((ai.re - 0.3550280538878172).abs() < 1e-14, "Ai(0) = {}", ai.re);
        assert!((aip.re + 0.2588194037928068).abs() < 1e-14, "Ai'(0) = {}", aip.re);
    }

    #[test]
    fn known_value_at_one() {
        let (ai, aip) = airy(Complex64::new(1.0, 0.0));
        assert!((ai.re - 0.1352924163128814).abs() < 1e-13);
        assert!((aip.re + 0.1591474412967932).abs() < 1e-13);
    }

    #[test]
    fn ode_residual_via_finite_differences() {
        let pts = [
            Complex64::new(1.3, 0.7),
            Complex64::new(-2.1, 0.4),
            Complex64::new(0.2, -1.9),
            Complex64::new(-3.0, -2.5),
            Complex64::new(4.0, 1.0),
        ];
        for z in pts {
            let h = 1.1e-3;
            // five-point second derivative; residual scaled by the local size
            let f = |dz: f64| airy(z + Complex64::new(dz, 0.0)).0;
            let d2 = (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
                / (12.0 * h * h);
            let scale = airy(z).0.norm().max(1.0);
            let res = (d2 - z * airy(z).0).norm() / scale;
            assert!(res < 1e-10, "ODE residual {res:e} at {z}");
        }
    }

    #[test]
    fn connection_identity() {
        let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        for z in [Complex64::new(2.0, 1.0), Complex64::new(-4.0, 3.0), Complex64::new(3.0, -2.0)] {
            let s = airy(z).0 + w * airy(w * z).0 + w * w * airy(w * w * z).0;
            assert!(s.norm() < 1e-12, "connection residual {:e} at {z}", s.norm());
        }
        // larger arguments: residual relative to the dominant term
        for z in [Complex64::new(11.0, -5.0), Complex64::new(-9.0, 2.0)] {
            let t0 = airy(z).0;
            let t1 = w * airy(w * z).0;
            let t2 = w * w * airy(w * w * z).0;
            let scale = t0.norm().max(t1.norm()).max(t2.norm());
            assert!((t0 + t1 + t2).norm() / scale < 1e-12, "relative connection residual at {z}");
        }
    }

    #[test]
    fn seam_agreement() {
        // series vs asymptotic on the crossover annulus
        for k in 0..16 {
            let th = std::f64::consts::PI * (k as f64 / 8.0 - 1.0) * 0.95;
            for r in [8.0, 9.0, 10.0] {
                let z = Complex64::from_polar(r, th);
                let (s, sp) = airy_series(z);
                let (a, ap) = airy_asymptotic_rotated(z);
                let scale = s.norm().max(1e-300);
                let scale_p = sp.norm().max(1e-300);
                assert!((s - a).norm() / scale < 1e-12, "Ai seam {:e} at {z}", (s - a).norm() / scale);
                assert!((sp - ap).norm() / scale_p < 1e-12, "Ai' seam at {z}");
            }
        }
    }
}
