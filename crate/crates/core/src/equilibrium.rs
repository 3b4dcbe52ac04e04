//! Equilibrium measure for the weighted energy with kernel
//! ln(|st| / |s-t|^(2+1/n)) plus external field: support endpoints from the
//! moment conditions, density, g-function, and variational constant.
//!
//! Branch bookkeeping. R(z) denotes the monic product over all 2N+2 endpoints.
//! Two square-root branches appear:
//!  - `sqrt_r_cut(z)`: cuts along the bands, asymptotic to z^(N+1) at infinity
//!    in both half-planes; real on gaps and outside, with boundary values
//!    +- i (-1)^(N+1-j) |R|^(1/2) from above/below on band j.
//!  - the surface branch (cuts along gaps and the arc through infinity) is
//!    sign(Im z) * sqrt_r_cut(z); the surface module owns it.

use crate::field::LaurentField;
use crate::quad::Rule64;
use crate::{Error, Result};
use num_complex::Complex64;

/// Band endpoints b_0 < a_1 < b_1 < ... < b_N < a_{N+1}; bands are
/// (b_{j-1}, a_j), gaps (a_j, b_j), and 0 lies in a gap or outside.
#[derive(Debug, Clone)]
pub struct SupportData {
    /// [b_0, a_1, b_1, a_2, ..., b_N, a_{N+1}]
    pub endpoints: Vec<f64>,
    /// deformation parameter in the (2 + 1/n) exponent
    pub n: u32,
    pub residual_norm: f64,
}

impl SupportData {
    pub fn new(endpoints: Vec<f64>, n: u32) -> Result<Self> {
        let s = Self { endpoints, n, residual_norm: f64::NAN };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.endpoints.len() < 2 || self.endpoints.len() % 2 != 0 {
            return Err(Error::BadSupport);
        }
        for w in self.endpoints.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::BadSupport);
            }
        }
        // 0 must not lie inside any closed band
        for (b, a) in self.bands() {
            if b <= 0.0 && 0.0 <= a {
                return Err(Error::BadSupport);
            }
        }
        Ok(())
    }

    pub fn genus(&self) -> usize {
        self.endpoints.len() / 2 - 1
    }

    /// bands (b_{j-1}, a_j), j = 1..=N+1
    pub fn bands(&self) -> Vec<(f64, f64)> {
        self.endpoints.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    /// finite gaps (a_j, b_j), j = 1..=N
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.endpoints[1..self.endpoints.len() - 1].chunks(2).map(|c| (c[0], c[1])).collect()
    }

    pub fn b(&self, j: usize) -> f64 {
        self.endpoints[2 * j]
    }

    pub fn a(&self, j: usize) -> f64 {
        self.endpoints[2 * j - 1]
    }

    /// sign of -i * (boundary value from above of sqrt_r_cut) on band j (1-based):
    /// (R(x))^{1/2}_+ = i sigma_j |R(x)|^{1/2} with sigma_j = (-1)^(N+1-j).
    pub fn band_sign(&self, j: usize) -> f64 {
        let np1 = self.genus() + 1;
        if (np1 - j) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// number of bands strictly to the right of the origin
    pub fn bands_right_of_zero(&self) -> usize {
        self.bands().iter().filter(|(b, _)| *b > 0.0).count()
    }

    pub fn band_index_of(&self, x: f64) -> Option<usize> {
        self.bands().iter().position(|&(b, a)| b < x && x < a).map(|i| i + 1)
    }

    pub fn in_gap_or_outside(&self, x: f64) -> bool {
        self.band_index_of(x).is_none()
    }

    /// |R(x)| = product over endpoints of |x - r|
    pub fn abs_r(&self, x: f64) -> f64 {
        self.endpoints.iter().map(|&r| (x - r).abs()).product()
    }

    /// sqrt of R with cuts along the bands: product of principal square roots,
    /// asymptotic to z^{N+1} at infinity.
    pub fn sqrt_r_cut(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for &r in &self.endpoints {
            acc *= (z - r).sqrt();
        }
        acc
    }

    /// Boundary value from above on a band; real branch value on gaps and
    /// outside; errors at an endpoint.
    pub fn sqrt_r_plus(&self, x: f64) -> Result<Complex64> {
        if self.endpoints.iter().any(|&r| r == x) {
            return Err(Error::BranchCut("endpoint of the support".into()));
        }
        if let Some(j) = self.band_index_of(x) {
            Ok(Complex64::new(0.0, self.band_sign(j) * self.abs_r(x).sqrt()))
        } else {
            // number of endpoints above x fixes the real sign
            let above = self.endpoints.iter().filter(|&&r| r > x).count();
            let sign = if (above / 2) % 2 == 0 { 1.0 } else { -1.0 };
            Ok(Complex64::new(sign * self.abs_r(x).sqrt(), 0.0))
        }
    }
}

/// Laurent-polynomial coefficients of h (exponents in [-2 m1 - 1, 2 m2 - N - 2]),
/// produced by the residue evaluation of the annulus-contour integral: the
/// expansion of (2/s + V'(s)) / sqrt_r_cut(s) at infinity contributes the
/// non-negative powers, the expansion at the origin the principal part.
#[derive(Debug, Clone)]
pub struct HCoefficients {
    /// coefficient of z^p for p = 0..=p_max
    pub poly: Vec<f64>,
    /// coefficient of z^(-q-1) for q = 0..=2 m1
    pub principal: Vec<f64>,
}

impl HCoefficients {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for &c in &self.poly {
            acc += c * p;
            p *= z;
        }
        let zi = 1.0 / z;
        let mut q = zi;
        for &c in &self.principal {
            acc += c * q;
            q *= zi;
        }
        acc
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.eval(Complex64::new(x, 0.0)).re
    }

    /// dh/dz
    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (p, &c) in self.poly.iter().enumerate() {
            if p > 0 {
                acc += c * p as f64 * x.powi(p as i32 - 1);
            }
        }
        for (q, &c) in self.principal.iter().enumerate() {
            let e = -(q as i32) - 1;
            acc += c * e as f64 * x.powi(e - 1);
        }
        acc
    }
}

/// Series coefficients of prod over roots of (1 - r x)^{-1/2} up to order `len`.
/// With x = 1/s this is the tail of the infinity expansion; with x = s (and r
/// replaced by 1/r) the origin expansion.
fn half_binomial_product(factors: &[f64], len: usize) -> Vec<f64> {
    let mut acc = vec![0.0; len];
    acc[0] = 1.0;
    for &r in factors {
        // (1 - r x)^{-1/2} = sum_k (1/2)_k / k! r^k x^k
        let mut series = vec![0.0; len];
        let mut term = 1.0;
        series[0] = 1.0;
        for k in 1..len {
            term *= (0.5 + (k as f64 - 1.0)) / k as f64 * r;
            series[k] = term;
        }
        let mut next = vec![0.0; len];
        for i in 0..len {
            if acc[i] == 0.0 {
                continue;
            }
            for j in 0..len - i {
                next[i + j] += acc[i] * series[j];
            }
        }
        acc = next;
    }
    acc
}

/// Closed-form h for a Laurent-polynomial field.
pub fn h_coefficients(support: &SupportData, field: &LaurentField) -> HCoefficients {
    let n_gaps = support.genus();
    let m1 = field.m1() as i64;
    let m2 = field.m2() as i64;
    let c = 2.0 + 1.0 / support.n as f64;
    // d_t: coefficient of s^t in 2/s + V'(s)
    let d = |t: i64| -> f64 {
        let mut v = if t == -1 { 2.0 } else { 0.0 };
        if let Some(&rho) = field.coeffs().get(&(t + 1)) {
            v += (t + 1) as f64 * rho;
        }
        v
    };
    let p_max = (2 * m2 - n_gaps as i64 - 2).max(-1);
    let mut poly = Vec::new();
    if p_max >= 0 {
        let len = (2 * m2) as usize + 2;
        let e = half_binomial_product(&support.endpoints, len);
        for p in 0..=p_max {
            // coeff of s^p in (2/s + V') * s^{-(N+1)} * sum_u e_u s^{-u}
            let mut acc = 0.0;
            for (u, &eu) in e.iter().enumerate() {
                let t = p + n_gaps as i64 + 1 + u as i64;
                if t > 2 * m2 - 1 {
                    break;
                }
                acc += d(t) * eu;
            }
            poly.push(acc / c);
        }
    }
    // principal part: 1/sqrt_r_cut(s) = f0inv * sum_u g_u s^u near 0
    let n_plus = support.bands_right_of_zero();
    let abs_prod: f64 = support.endpoints.iter().map(|r| r.abs()).product();
    let f0inv = if n_plus % 2 == 0 { 1.0 } else { -1.0 } / abs_prod.sqrt();
    let len = (2 * m1) as usize + 2;
    let inv_roots: Vec<f64> = support.endpoints.iter().map(|r| 1.0 / r).collect();
    let g = half_binomial_product(&inv_roots, len);
    let mut principal = Vec::new();
    for q in 0..=2 * m1 {
        let mut acc = 0.0;
        for (u, &gu) in g.iter().enumerate() {
            let t = -q - 1 - u as i64;
            if t < -2 * m1 - 1 {
                break;
            }
            acc += d(t) * gu;
        }
        principal.push(f0inv * acc / c);
    }
    HCoefficients { poly, principal }
}

/// Contour-quadrature evaluation of h on two circles enclosing the support in
/// an annulus, as an independent route for cross-checking the closed form.
pub fn h_contour_quadrature(
    support: &SupportData,
    field: &LaurentField,
    z: Complex64,
    radii: (f64, f64),
    points: usize,
) -> Complex64 {
    let (r_in, r_out) = radii;
    let c = 2.0 + 1.0 / support.n as f64;
    let integrand = |s: Complex64| -> Complex64 {
        let vp = {
            let mut acc = Complex64::new(0.0, 0.0);
            for (&k, &rho) in field.coeffs() {
                acc += rho * k as f64 * s.powi(k as i32 - 1);
            }
            acc
        };
        let num = Complex64::new(0.0, 1.0) / std::f64::consts::PI * (2.0 / s + vp);
        num / (support.sqrt_r_cut(s) * (s - z))
    };
    let m = points;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
        let dir = Complex64::new(0.0, th).exp();
        // outer circle, clockwise
        let s_out = r_out * dir;
        acc -= integrand(s_out) * Complex64::new(0.0, 1.0) * s_out;
        // inner circle, counter-clockwise
        let s_in = r_in * dir;
        acc += integrand(s_in) * Complex64::new(0.0, 1.0) * s_in;
    }
    acc *= 2.0 * std::f64::consts::PI / m as f64;
    acc * 0.5 / c
}

/// Shared quadrature order for band/gap integrals.
const BAND_ORDER: usize = 80;

/// integral over band j (1-based) of f(s) / |R(s)|^{1/2} ds with the square
/// root endpoint singularity removed by the cosine substitution.
fn band_integral_inv_sqrt<F: Fn(f64) -> f64>(support: &SupportData, j: usize, rule: &Rule64, f: F) -> f64 {
    let (b, a) = support.bands()[j - 1];
    let mid = 0.5 * (a + b);
    let w = 0.5 * (a - b);
    rule.integrate(0.0, std::f64::consts::PI, |th| {
        let s = mid - w * th.cos();
        let mut rest = 1.0;
        for &r in &support.endpoints {
            if r != a && r != b {
                rest *= (s - r).abs();
            }
        }
        f(s) / rest.sqrt()
    })
}

/// integral over band or gap (lo, hi) of f(s) |R(s)|^{1/2} ds, cosine substitution.
fn segment_integral_sqrt<F: Fn(f64) -> f64>(
    support: &SupportData,
    lo: f64,
    hi: f64,
    rule: &Rule64,
    f: F,
) -> f64 {
    let mid = 0.5 * (hi + lo);
    let w = 0.5 * (hi - lo);
    rule.integrate(0.0, std::f64::consts::PI, |th| {
        let s = mid - w * th.cos();
        let mut rest = 1.0;
        for &r in &support.endpoints {
            if r != lo && r != hi {
                rest *= (s - r).abs();
            }
        }
        let sin = th.sin();
        f(s) * (w * sin) * (w * sin) * rest.sqrt()
    })
}

/// The signed band sums M_p = sum_j sigma_j int_band_j (2/s + V'(s)) s^p / |R|^{1/2} ds.
fn signed_moment_sum(support: &SupportData, field: &LaurentField, p: i64, rule: &Rule64) -> f64 {
    let mut acc = 0.0;
    for j in 1..=support.genus() + 1 {
        let sigma = support.band_sign(j);
        acc += sigma
            * band_integral_inv_sqrt(support, j, rule, |s| {
                let (_, dv) = field.eval(s).expect("band excludes 0");
                (2.0 / s + dv) * s.powi(p as i32)
            });
    }
    acc
}

/// Moment-condition residual vector of length 2(N+1):
/// components 0..=N are the vanishing conditions, component N+1 the
/// normalisation against -(2+1/n), and the last N the gap conditions.
pub fn moment_residuals(support: &SupportData, field: &LaurentField) -> Vec<f64> {
    let rule = Rule64::new(BAND_ORDER);
    let n_gaps = support.genus();
    let c = 2.0 + 1.0 / support.n as f64;
    let mut res = Vec::with_capacity(2 * n_gaps + 2);
    for p in 0..=n_gaps as i64 {
        res.push(signed_moment_sum(support, field, p, &rule));
    }
    res.push(signed_moment_sum(support, field, n_gaps as i64 + 1, &rule) - 2.0 * std::f64::consts::PI * c);
    for (j, &(aj, bj)) in support.gaps().iter().enumerate() {
        let j1 = j + 1;
        let sigma_gap = support.band_sign(j1); // (-1)^(N+1-j) shared by gap j and band j
        let lhs = sigma_gap
            * segment_integral_sqrt(support, aj, bj, &rule, |s| {
                // inner principal-value-free integral over the bands
                let mut w = 0.0;
                for b in 1..=n_gaps + 1 {
                    let sb = support.band_sign(b);
                    w += sb
                        * band_integral_inv_sqrt(support, b, &rule, |xi| {
                            let (_, dv) = field.eval(xi).expect("band excludes 0");
                            (2.0 / xi + dv) / (xi - s)
                        });
                }
                w / (2.0 * std::f64::consts::PI)
            });
        let rhs = (aj / bj).abs().ln() + 0.5 * (field.value(aj) - field.value(bj));
        res.push(lhs - rhs);
    }
    res
}

/// Damped Newton iteration on the moment residuals with a forward-difference
/// Jacobian. Ordering and zero-exclusion guard the line search; a negative
/// density after convergence signals a wrong band count.
pub fn solve_endpoints(field: &LaurentField, n: u32, init: &[f64]) -> Result<SupportData> {
    let mut support = SupportData::new(init.to_vec(), n)?;
    let dim = support.endpoints.len();
    let tol = 1e-11;
    let mut norm = residual_norm(&moment_residuals(&support, field));
    for iter in 0..60 {
        if norm <= tol {
            break;
        }
        let r0 = moment_residuals(&support, field);
        // forward-difference Jacobian
        let mut jac = vec![vec![0.0; dim]; dim];
        for col in 0..dim {
            let h = 1e-7 * support.endpoints[col].abs().max(1.0);
            let mut bumped = support.clone();
            bumped.endpoints[col] += h;
            if bumped.validate().is_err() {
                bumped = support.clone();
                bumped.endpoints[col] -= h;
            }
            let dh = bumped.endpoints[col] - support.endpoints[col];
            let r1 = moment_residuals(&bumped, field);
            for row in 0..dim {
                jac[row][col] = (r1[row] - r0[row]) / dh;
            }
        }
        let step = solve_dense(&jac, &r0).ok_or(Error::NoConvergence { residual: norm, iters: iter })?;
        let mut damping = 1.0;
        let mut advanced = false;
        for _ in 0..30 {
            let mut trial = support.clone();
            for i in 0..dim {
                trial.endpoints[i] -= damping * step[i];
            }
            if trial.validate().is_ok() {
                let trial_norm = residual_norm(&moment_residuals(&trial, field));
                if trial_norm < norm {
                    support = trial;
                    norm = trial_norm;
                    advanced = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !advanced {
            return Err(Error::NoConvergence { residual: norm, iters: iter });
        }
    }
    if norm > tol * 10.0 {
        return Err(Error::NoConvergence { residual: norm, iters: 60 });
    }
    support.residual_norm = norm;
    // regularity check: density nonnegative on every band
    let h = h_coefficients(&support, field);
    let mut min_psi = f64::INFINITY;
    for (j, &(b, a)) in support.bands().iter().enumerate() {
        for k in 1..40 {
            let x = b + (a - b) * k as f64 / 40.0;
            let psi = density_from(&support, &h, x);
            let _ = j;
            if psi < min_psi {
                min_psi = psi;
            }
        }
    }
    if min_psi < -1e-10 {
        let n_now = support.genus();
        return Err(Error::WrongBandCount { min: min_psi, n_hint: if n_now > 0 { n_now - 1 } else { n_now + 1 } });
    }
    Ok(support)
}

fn residual_norm(r: &[f64]) -> f64 {
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = a[i][j];
        }
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    m.lu().solve(&rhs).map(|x| x.as_slice().to_vec())
}

fn density_from(support: &SupportData, h: &HCoefficients, x: f64) -> f64 {
    match support.band_index_of(x) {
        None => 0.0,
        Some(j) => {
            support.band_sign(j) * support.abs_r(x).sqrt() * h.eval_real(x) / (2.0 * std::f64::consts::PI)
        }
    }
}

/// Solved measure with cached closed-form data.
pub struct EquilibriumMeasure {
    pub support: SupportData,
    pub field: LaurentField,
    pub h: HCoefficients,
    /// log-moment Q_o = int ln|s| psi ds
    pub q_o: f64,
    /// variational constant
    pub ell_o: f64,
    /// int over J cap R_+ of psi
    pub psi_plus_mass: f64,
    /// int over J cap R_- of psi
    pub psi_minus_mass: f64,
    /// per-band masses
    pub band_masses: Vec<f64>,
    rule: Rule64,
}

impl EquilibriumMeasure {
    pub fn from_support(support: SupportData, field: LaurentField) -> Result<Self> {
        let h = h_coefficients(&support, &field);
        let rule = Rule64::new(BAND_ORDER);
        let mut me = EquilibriumMeasure {
            support,
            field,
            h,
            q_o: 0.0,
            ell_o: 0.0,
            psi_plus_mass: 0.0,
            psi_minus_mass: 0.0,
            band_masses: Vec::new(),
            rule,
        };
        me.band_masses = (0..me.support.bands().len())
            .map(|i| {
                let (b, a) = me.support.bands()[i];
                me.integrate_density(b, a, |_| 1.0)
            })
            .collect();
        let total: f64 = me.band_masses.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Internal(format!("density mass {total} differs from 1")));
        }
        me.q_o = me
            .support
            .bands()
            .iter()
            .map(|&(b, a)| me.integrate_density(b, a, |s| s.abs().ln()))
            .sum();
        me.psi_plus_mass = me
            .support
            .bands()
            .iter()
            .filter(|&&(b, _)| b > 0.0)
            .map(|&(b, a)| me.integrate_density(b, a, |_| 1.0))
            .sum();
        me.psi_minus_mass = (total - me.psi_plus_mass).max(0.0);
        me.ell_o = me.variational_constant_at(me.reference_point());
        Ok(me)
    }

    pub fn solve(field: &LaurentField, n: u32, init: &[f64]) -> Result<Self> {
        let support = solve_endpoints(field, n, init)?;
        Self::from_support(support, field.clone())
    }

    pub fn deformation(&self) -> f64 {
        2.0 + 1.0 / self.support.n as f64
    }

    /// density psi(x): zero off the bands, sigma_j |R|^{1/2} h / (2 pi) on band j.
    pub fn density(&self, x: f64) -> f64 {
        density_from(&self.support, &self.h, x)
    }

    /// integral over [lo, hi] (inside one band) of f(s) psi(s) ds via the
    /// cosine substitution on the full band, restricted by indicator.
    fn integrate_density<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let j = self
            .support
            .band_index_of(0.5 * (lo + hi))
            .expect("segment must lie inside a band");
        let sigma = self.support.band_sign(j);
        let (b, a) = self.support.bands()[j - 1];
        // map through the band's cosine variable for endpoint regularity
        // s(theta) = mid - w cos(theta) is increasing on [0, pi]
        let w = 0.5 * (a - b);
        let mid = 0.5 * (a + b);
        let th_lo = ((mid - lo) / w).clamp(-1.0, 1.0).acos();
        let th_hi = ((mid - hi) / w).clamp(-1.0, 1.0).acos();
        self.rule.integrate(th_lo, th_hi, |th| {
            let s = mid - w * th.cos();
            let mut rest = 1.0;
            for &r in &self.support.endpoints {
                if r != a && r != b {
                    rest *= (s - r).abs();
                }
            }
            let sin = th.sin();
            sigma * (w * sin) * (w * sin) * rest.sqrt() * self.h.eval_real(s) / (2.0 * std::f64::consts::PI) * f(s)
        })
    }

    /// mass of psi on [x, a_{N+1}] for real x (cumulative from the right).
    pub fn mass_right_of(&self, x: f64) -> f64 {
        let bands = self.support.bands();
        let mut acc = 0.0;
        for (i, &(b, a)) in bands.iter().enumerate() {
            if x <= b {
                acc += self.band_masses[i];
            } else if x < a {
                acc += self.integrate_density(x, a, |_| 1.0);
            }
        }
        acc
    }

    /// int s^k dmu by direct band quadrature.
    pub fn moment_quadrature(&self, k: i64) -> f64 {
        self.support
            .bands()
            .iter()
            .map(|&(b, a)| self.integrate_density(b, a, |s| s.powi(k as i32)))
            .sum()
    }

    /// int s^k dmu via the endpoint closed forms for |k| <= 3 (k != 0), falling
    /// back to quadrature otherwise.
    pub fn moment_closed_form(&self, k: i64) -> f64 {
        let s = &self.support;
        let c = self.deformation();
        let rule = &self.rule;
        let i_p = |p: i64| signed_moment_sum(s, &self.field, p, rule) / std::f64::consts::PI;
        let np1 = s.genus() as i64 + 1;
        let s1: f64 = s.bands().iter().map(|(b, a)| b + a).sum();
        let s2: f64 = s.bands().iter().map(|(b, a)| b * b + a * a).sum();
        let s3: f64 = s.bands().iter().map(|(b, a)| b * b * b + a * a * a).sum();
        let u1: f64 = s.bands().iter().map(|(b, a)| 1.0 / b + 1.0 / a).sum();
        let u2: f64 = s.bands().iter().map(|(b, a)| 1.0 / (b * b) + 1.0 / (a * a)).sum();
        let n_plus = s.bands_right_of_zero();
        let gamma_v = if n_plus % 2 == 0 { 1.0 } else { -1.0 }
            * s.endpoints.iter().map(|r| r.abs()).product::<f64>().sqrt();
        match k {
            0 => 1.0,
            1 => (i_p(np1 + 1) - c * s1) / (2.0 * c),
            2 => (i_p(np1 + 2) - 0.5 * s1 * i_p(np1 + 1) + 0.5 * c * (0.5 * s1 * s1 - s2)) / (2.0 * c),
            3 => {
                (i_p(np1 + 3) - 0.5 * s1 * i_p(np1 + 2)
                    + 0.25 * (0.5 * s1 * s1 - s2) * i_p(np1 + 1)
                    - 0.25 * c * (s1 * s1 * s1 / 6.0 + 4.0 / 3.0 * s3 - s1 * s2))
                    / (2.0 * c)
            }
            -1 => gamma_v * i_p(-1) / (2.0 * c),
            -2 => gamma_v * (i_p(-2) - 0.5 * u1 * i_p(-1)) / (2.0 * c),
            -3 => {
                gamma_v
                    * (i_p(-3) - 0.5 * u1 * i_p(-2) + (0.125 * u1 * u1 - 0.25 * u2) * i_p(-1))
                    / (2.0 * c)
            }
            _ => self.moment_quadrature(k),
        }
    }

    /// int over the bands of ln|x - s| psi(s) ds. An interior singularity is
    /// handled per side by u^2 substitutions that regularise the band-edge
    /// square root, with the remaining ln(1-u) factor integrated on a
    /// geometrically graded mesh.
    pub fn log_kernel(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &(b, a) in &self.support.bands() {
            if b < x && x < a {
                acc += self.log_piece(b, x, a, Side::Left) + self.log_piece(b, x, a, Side::Right);
            } else {
                acc += self.integrate_density(b, a, |s| (s - x).abs().ln());
            }
        }
        acc
    }

    /// One side of a band split at the singular point x: [b, x] (Left) or
    /// [x, a] (Right). The substitution s = edge +- width u^2 puts the band
    /// edge at u = 0 and the singularity at u = 1.
    fn log_piece(&self, b: f64, x: f64, a: f64, side: Side) -> f64 {
        let (edge, width, dir) = match side {
            Side::Left => (b, x - b, 1.0),
            Side::Right => (a, a - x, -1.0),
        };
        let psi = |s: f64| self.density(s);
        // ds = 2 width u du; ln|x - s| = ln(width) + ln(1-u) + ln(1+u)
        let smooth = self.rule.integrate(0.0, 1.0, |u| {
            let s = edge + dir * width * u * u;
            psi(s) * 2.0 * width * u * (width.ln() + (1.0 + u).ln())
        });
        let graded = graded_log_end(&self.rule, |u| {
            let s = edge + dir * width * u * u;
            psi(s) * 2.0 * width * u
        });
        smooth + graded
    }

    fn reference_point(&self) -> f64 {
        let bands = self.support.bands();
        let &(b, a) = bands.last().unwrap();
        0.5 * (b + a)
    }

    /// variational combination 2(2+1/n) int ln|x-s| psi ds - 2 ln|x| - V(x)
    /// - 2(2+1/n) Q_o; zero on the bands, strictly negative off them.
    pub fn variational_residual(&self, x: f64) -> f64 {
        let c = self.deformation();
        2.0 * c * self.log_kernel(x) - 2.0 * x.abs().ln() - self.field.value(x) - self.ell_o - 2.0 * c * self.q_o
    }

    fn variational_constant_at(&self, x: f64) -> f64 {
        let c = self.deformation();
        2.0 * c * self.log_kernel(x) - 2.0 * x.abs().ln() - self.field.value(x) - 2.0 * c * self.q_o
    }

    /// g(z) = int ln((z-s)^(2+1/n) (z s)^{-1}) dmu(s) for z off the ray
    /// (-inf, max(0, a_{N+1})]; ln s carries +i pi for s < 0.
    pub fn g_function(&self, z: Complex64) -> Result<Complex64> {
        let amax = self.support.endpoints.last().unwrap().max(0.0);
        if z.im == 0.0 && z.re <= amax {
            return Err(Error::BranchCut("g is defined off (-inf, max(0, a_N+1)]".into()));
        }
        let c = self.deformation();
        let mut acc = Complex64::new(0.0, 0.0);
        for &(b, a) in &self.support.bands() {
            acc += self.integrate_density_c(b, a, |s| (z - s).ln());
        }
        let log_s_term = Complex64::new(self.q_o, std::f64::consts::PI * self.psi_minus_mass);
        Ok(c * acc - z.ln() - log_s_term)
    }

    fn integrate_density_c<F: Fn(f64) -> Complex64>(&self, b: f64, a: f64, f: F) -> Complex64 {
        let j = self.support.band_index_of(0.5 * (a + b)).unwrap();
        let sigma = self.support.band_sign(j);
        let w = 0.5 * (a - b);
        let mid = 0.5 * (a + b);
        self.rule.integrate_complex(0.0, std::f64::consts::PI, |th| {
            let s = mid - w * th.cos();
            let mut rest = 1.0;
            for &r in &self.support.endpoints {
                if r != a && r != b {
                    rest *= (s - r).abs();
                }
            }
            let sin = th.sin();
            sigma * (w * sin) * (w * sin) * rest.sqrt() * self.h.eval_real(s) / (2.0 * std::f64::consts::PI) * f(s)
        })
    }

    /// Stieltjes transform int psi(s)/(s - z) ds for z off the bands.
    pub fn stieltjes(&self, z: Complex64) -> Complex64 {
        self.support
            .bands()
            .iter()
            .map(|&(b, a)| self.integrate_density_c(b, a, |s| 1.0 / Complex64::new(s - z.re, -z.im)))
            .sum()
    }
}

enum Side {
    Left,
    Right,
}

/// integral over [0, 1] of g(u) ln(1 - u) du on a mesh graded geometrically
/// toward u = 1, where the integrand is analytic panel by panel.
fn graded_log_end<F: Fn(f64) -> f64>(rule: &Rule64, g: F) -> f64 {
    let mut acc = 0.0;
    let mut right = 1.0f64;
    for k in 0..48 {
        let left = 1.0 - 2f64.powi(-(k as i32));
        // first panel is [0, 1/2], then [1/2, 3/4], ...
        let (lo, hi) = (left, 1.0 - 2f64.powi(-(k as i32 + 1)));
        acc += rule.integrate(lo, hi, |u| g(u) * (1.0 - u).ln());
        right = hi;
    }
    // analytic bound on the discarded tail: |g| ~ g(1), tail of ln
    let tail = 1.0 - right;
    acc + g(1.0) * (tail * (tail.ln() - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zsq() -> LaurentField {
        LaurentField::from_pairs(&[(2, 1.0), (-2, 1.0)]).unwrap()
    }

    fn symmetric_support(n: u32) -> SupportData {
        // crude initial guess for V = z^2 + z^{-2}: bands roughly (-1.9, -0.5) and (0.5, 1.9)
        solve_endpoints(&zsq(), n, &[-1.9, -0.55, 0.55, 1.9]).unwrap()
    }

    #[test]
    fn symmetric_endpoints() {
        let s = symmetric_support(8);
        assert!(s.residual_norm < 1e-10, "residual {}", s.residual_norm);
        let e = &s.endpoints;
        assert!((e[0] + e[3]).abs() < 1e-9, "b0 = -a2 violated: {e:?}");
        assert!((e[1] + e[2]).abs() < 1e-9, "a1 = -b1 violated: {e:?}");
    }

    #[test]
    fn density_integrates_to_one() {
        let s = symmetric_support(8);
        let m = EquilibriumMeasure::from_support(s, zsq()).unwrap();
        let total: f64 = m.band_masses.iter().sum();
        assert!((total - 1.0).abs() < 1e-8, "mass = {total}");
        // gap point has zero density
        assert_eq!(m.density(0.0), 0.0);
    }

    #[test]
    fn closed_form_h_matches_contour() {
        let s = symmetric_support(8);
        let m = EquilibriumMeasure::from_support(s, zsq()).unwrap();
        let z = Complex64::new(0.83, 0.21);
        let closed = m.h.eval(z);
        let quad = h_contour_quadrature(&m.support, &m.field, z, (0.1, 8.0), 4000);
        let rel = (closed - quad).norm() / closed.norm();
        assert!(rel < 1e-10, "closed {closed} vs quad {quad}");
    }
}
