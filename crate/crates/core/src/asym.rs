//! Asymptotic evaluation of the odd-degree monic Laurent polynomial, its
//! weighted Cauchy transform, and the norming constant: region classification,
//! the theta-function model solution, the 1/(n+1/2) correction, and the Airy
//! parametrices inside the endpoint discs.

use crate::airy::airy;
use crate::equilibrium::EquilibriumMeasure;
use crate::quad::Rule64;
use crate::surface::{omega_and_phase, theta, theta_truncation, SurfaceData};
use crate::{Error, Result};
use num_complex::Complex64;

type C = Complex64;
pub type M2 = [[C; 2]; 2];

pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn m2_inv(a: &M2) -> M2 {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]]
}

pub fn m2_det(a: &M2) -> C {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn m2_norm(a: &M2) -> f64 {
    a.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn m2_add(a: &M2, b: &M2) -> M2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += b[i][j];
        }
    }
    out
}

fn m2_sub(a: &M2, b: &M2) -> M2 {
    let mut out = *a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] -= b[i][j];
        }
    }
    out
}

fn m2_scale(a: &M2, s: C) -> M2 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

const S1: f64 = 5.0 / 72.0;
const T1: f64 = -7.0 / 72.0;

/// Region tags of the plane decomposition: four bulk regions and the
/// quadrant-labelled endpoint discs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionTag {
    Y1,
    Y2,
    Y3,
    Y4,
    /// disc at b_{j-1}; j in 1..=N+1, l in 1..=4
    OmegaB { j: usize, l: usize },
    /// disc at a_j
    OmegaA { j: usize, l: usize },
}

impl std::fmt::Display for RegionTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegionTag::Y1 => write!(f, "Y1"),
            RegionTag::Y2 => write!(f, "Y2"),
            RegionTag::Y3 => write!(f, "Y3"),
            RegionTag::Y4 => write!(f, "Y4"),
            RegionTag::OmegaB { j, l } => write!(f, "Omega_b({j},{l})"),
            RegionTag::OmegaA { j, l } => write!(f, "Omega_a({j},{l})"),
        }
    }
}

/// Per-endpoint cached data for the correction and the parametrices.
#[derive(Debug, Clone)]
pub struct EndpointData {
    pub x: f64,
    /// true for a right band edge a_j, false for a left edge b_{j-1}
    pub is_a: bool,
    /// band index j in 1..=N+1
    pub j: usize,
    /// exp(i (n + 1/2) mho) with mho the gap phase adjacent on the outward side
    pub mho_phase: C,
    pub eta: f64,
    pub q0: C,
    pub q1: C,
    pub alpha0: C,
    pub alpha1: C,
    pub a_mat: M2,
    pub b_mat: M2,
}

pub struct AsymptoticContext {
    pub measure: EquilibriumMeasure,
    pub surface: SurfaceData,
    pub n: u32,
    pub delta: f64,
    pub omega_vec: Vec<f64>,
    pub e_phase: C,
    trunc: i64,
    pub endpoints: Vec<EndpointData>,
    r0_const: M2,
    th_u0_plus_d: C,
    th_u0_shift_plus_d: C,
    th_mu0_shift_minus_d: C,
    rule: Rule64,
}

impl AsymptoticContext {
    pub fn new(measure: EquilibriumMeasure, surface: SurfaceData, n: u32) -> Result<Self> {
        if measure.support.n != n {
            return Err(Error::Internal("index n must match the deformation parameter".into()));
        }
        let (omega_vec, e_phase) = omega_and_phase(&measure, n);
        let trunc = theta_truncation(&surface.tau, 80);
        let support = measure.support.clone();
        let delta = {
            let mut d = f64::INFINITY;
            for (b, a) in support.bands() {
                d = d.min(a - b);
            }
            for (a, b) in support.gaps() {
                d = d.min(b - a);
            }
            for &e in &support.endpoints {
                d = d.min(e.abs());
            }
            (0.5 * d).min(0.5)
        };
        let mut ctx = AsymptoticContext {
            measure,
            surface,
            n,
            delta,
            omega_vec,
            e_phase,
            trunc,
            endpoints: Vec::new(),
            r0_const: [[C::new(0.0, 0.0); 2]; 2],
            th_u0_plus_d: C::new(0.0, 0.0),
            th_u0_shift_plus_d: C::new(0.0, 0.0),
            th_mu0_shift_minus_d: C::new(0.0, 0.0),
            rule: Rule64::new(60),
        };
        ctx.init_theta_constants();
        ctx.init_endpoints();
        ctx.init_r0_const();
        Ok(ctx)
    }

    fn genus(&self) -> usize {
        self.surface.genus
    }

    pub fn nph(&self) -> f64 {
        self.n as f64 + 0.5
    }

    fn deformation(&self) -> f64 {
        self.measure.deformation()
    }

    /// w -> w - (n + 1/2) Omega / (2 pi)
    fn shift(&self, w: &[C]) -> Vec<C> {
        w.iter()
            .zip(&self.omega_vec)
            .map(|(&wi, &om)| wi - self.nph() * om / (2.0 * std::f64::consts::PI))
            .collect()
    }

    fn theta_at(&self, w: &[C]) -> C {
        theta(w, &self.surface.tau, self.trunc)
    }

    fn init_theta_constants(&mut self) {
        let g = self.genus();
        let u0 = &self.surface.u_plus_zero;
        let d = &self.surface.d_vec;
        let plus: Vec<C> = (0..g).map(|i| u0[i] + d[i]).collect();
        let m_minus: Vec<C> = (0..g).map(|i| -u0[i] - d[i]).collect();
        self.th_u0_plus_d = self.theta_at(&plus);
        self.th_u0_shift_plus_d = self.theta_at(&self.shift(&plus));
        self.th_mu0_shift_minus_d = self.theta_at(&self.shift(&m_minus));
    }

    /// gamma combinations: ((g0^{-1} gamma + g0 gamma^{-1})/2,
    ///                      (g0^{-1} gamma - g0 gamma^{-1})/(2 i))
    fn gamma_combo(&self, z: C) -> (C, C) {
        let g = self.surface.gamma(z);
        let g0 = self.surface.gamma0;
        let plus = (g / g0 + g0 / g) * 0.5;
        let minus = (g / g0 - g0 / g) / C::new(0.0, 2.0);
        (plus, minus)
    }

    /// The four theta ratios of the model solution at Abel-map value u.
    fn theta_ratios(&self, u: &[C]) -> (C, C, C, C) {
        let g = self.genus();
        let d = &self.surface.d_vec;
        let arg = |su: f64, sd: f64| -> Vec<C> { (0..g).map(|i| su * u[i] + sd * d[i]).collect() };
        let e = self.e_phase;
        let m11 = (self.th_u0_plus_d / self.th_u0_shift_plus_d)
            * (self.theta_at(&self.shift(&arg(1.0, 1.0))) / self.theta_at(&arg(1.0, 1.0)))
            / e;
        let m12 = (self.th_u0_plus_d / self.th_u0_shift_plus_d)
            * (self.theta_at(&self.shift(&arg(-1.0, 1.0))) / self.theta_at(&arg(-1.0, 1.0)))
            / e;
        let m21 = (self.th_u0_plus_d / self.th_mu0_shift_minus_d)
            * (self.theta_at(&self.shift(&arg(1.0, -1.0))) / self.theta_at(&arg(1.0, -1.0)))
            * e;
        let m22 = (self.th_u0_plus_d / self.th_mu0_shift_minus_d)
            * (self.theta_at(&self.shift(&arg(-1.0, -1.0))) / self.theta_at(&arg(1.0, 1.0)))
            * e;
        (m11, m12, m21, m22)
    }

    /// Model solution of the limiting Riemann-Hilbert problem.
    pub fn m_infinity(&self, z: C) -> Result<M2> {
        if z.im == 0.0 {
            return Err(Error::BranchCut("model solution on the axis".into()));
        }
        let u = self.surface.abel_map(z)?;
        let (gp, gm) = self.gamma_combo(z);
        let (m11, m12, m21, m22) = self.theta_ratios(&u);
        let frak = [[gp * m11, -gm * m12], [gm * m21, gp * m22]];
        if z.im > 0.0 {
            Ok(frak)
        } else {
            // m = -i frak sigma_2 = [[m12, -m11], [m22, -m21]] entrywise
            Ok([[frak[0][1], -frak[0][0]], [frak[1][1], -frak[1][0]]])
        }
    }

    /// Lattice sums Lambda^{j'} with the direction factor
    /// r = 2 (m, P(xi)) / leth(xi): the term-by-term derivative of the theta
    /// series in the direction of the differential numerators at xi.
    fn lambda_sum(&self, jp: u32, w: &[C], pvec: &[f64], leth: C) -> C {
        let g = self.genus();
        if g == 0 {
            return C::new(0.0, 0.0);
        }
        let t = self.trunc;
        let tau = &self.surface.tau;
        let mut total = C::new(0.0, 0.0);
        let mut m = vec![-t; g];
        loop {
            let mut dot = 0.0;
            for i in 0..g {
                dot += m[i] as f64 * pvec[i];
            }
            let r = 2.0 * dot / leth;
            let mut expo = C::new(0.0, 0.0);
            for i in 0..g {
                expo += 2.0 * std::f64::consts::PI * C::new(0.0, 1.0) * m[i] as f64 * w[i];
                for l in 0..g {
                    expo += std::f64::consts::PI * C::new(0.0, 1.0) * m[i] as f64 * m[l] as f64 * tau[i][l];
                }
            }
            let term = expo.exp() * if jp == 1 { r } else { r * r };
            total += term;
            let mut idx = 0;
            loop {
                m[idx] += 1;
                if m[idx] <= t {
                    break;
                }
                m[idx] = -t;
                idx += 1;
                if idx == g {
                    return total;
                }
            }
        }
    }

    fn init_endpoints(&mut self) {
        let support = self.measure.support.clone();
        let g = self.genus();
        let np1 = g + 1;
        let ends = &support.endpoints;
        let mut list = Vec::with_capacity(ends.len());
        for (idx, &x) in ends.iter().enumerate() {
            let is_a = idx % 2 == 1;
            let j = if is_a { (idx + 1) / 2 } else { idx / 2 + 1 }; // a_j or b_{j-1} with this band index
            // eta: sqrt of the product of |x - r| over the other endpoints
            let eta = ends
                .iter()
                .filter(|&&r| r != x)
                .map(|&r| (x - r).abs())
                .product::<f64>()
                .sqrt();
            // mho index: a_j pairs with gap j, b_{j-1} with gap j-1; 0 at the ends
            let mho_index = if is_a { j } else { j - 1 };
            let mho = if mho_index >= 1 && mho_index <= g { self.omega_vec[mho_index - 1] } else { 0.0 };
            let mho_phase = C::new(0.0, self.nph() * mho).exp();
            // Q0 and Q1
            let (q0, q1) = q0_q1(&support, x, is_a, j);
            // leth
            let leth = leth_value(g, x, is_a, j, eta, np1);
            // alpha-hat coefficients from h at the endpoint
            let h_val = self.measure.h.eval_real(x);
            let h_der = self.measure.h.eval_deriv(x);
            let sign: C = if is_a {
                if j == np1 {
                    C::new(1.0, 0.0)
                } else {
                    C::new(if (g as i64 - j as i64 + 1) % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
                }
            } else if j == 1 {
                // b_0
                C::new(0.0, if g % 2 == 0 { 1.0 } else { -1.0 })
            } else {
                // b_{j-1}, j >= 2: i (-1)^{N - (j-1)}
                C::new(0.0, if (g as i64 - (j as i64 - 1)) % 2 == 0 { 1.0 } else { -1.0 })
            };
            let recip_sum: f64 = ends
                .iter()
                .filter(|&&r| r != x)
                .map(|&r| 1.0 / (x - r))
                .sum();
            let alpha0 = sign * (4.0 / 3.0) * h_val * eta;
            let alpha1 = sign * ((2.0 / 5.0) * h_val * eta * recip_sum + (4.0 / 5.0) * h_der * eta);
            // kappa and aleph/daleth from the boundary Abel values
            let u_end = &self.surface.u_plus_endpoints[idx];
            let (kappa1, kappa2) = self.kappas(u_end);
            let pvec: Vec<f64> = (0..g)
                .map(|row| self.surface.omega_numerator(row, C::new(x, 0.0)).re)
                .collect();
            let aleph_p = self.aleph(u_end, &pvec, leth, 1.0);
            let aleph_m = self.aleph(u_end, &pvec, leth, -1.0);
            let daleth_p = self.daleth(u_end, &pvec, leth, 1.0);
            let daleth_m = self.daleth(u_end, &pvec, leth, -1.0);
            let g0 = self.surface.gamma0;
            let g0sq = C::new(g0 * g0, 0.0);
            let (a_mat, b_mat) = if is_a {
                let a_mat = m2_scale(
                    &[[-kappa1 * kappa2, C::new(0.0, 1.0) * kappa1 * kappa1],
                      [C::new(0.0, 1.0) * kappa2 * kappa2, kappa1 * kappa2]],
                    mho_phase * S1 * q0 / g0sq,
                );
                let b11 = kappa1
                    * kappa2
                    * (-(S1 / g0sq) * (q1 + q0 * (daleth_p + daleth_m))
                        - T1 * (q0 * aleph_p * aleph_m / g0sq + g0sq / q0)
                        + C::new(0.0, S1 + T1) * (aleph_m - aleph_p));
                let b12 = kappa1
                    * kappa1
                    * (C::new(0.0, S1) / g0sq * (q1 + 2.0 * q0 * daleth_p)
                        + C::new(0.0, T1) * (q0 * aleph_p * aleph_p / g0sq - g0sq / q0)
                        - 2.0 * (S1 - T1) * aleph_p);
                let b21 = kappa2
                    * kappa2
                    * (C::new(0.0, S1) / g0sq * (q1 + 2.0 * q0 * daleth_m)
                        + C::new(0.0, T1) * (q0 * aleph_m * aleph_m / g0sq - g0sq / q0)
                        + 2.0 * (S1 - T1) * aleph_m);
                let b22 = kappa1
                    * kappa2
                    * ((S1 / g0sq) * (q1 + q0 * (daleth_p + daleth_m))
                        + T1 * (q0 * aleph_p * aleph_m / g0sq + g0sq / q0)
                        + C::new(0.0, S1 + T1) * (aleph_p - aleph_m));
                let b_mat = m2_scale(&[[b11, b12], [b21, b22]], mho_phase);
                (a_mat, b_mat)
            } else {
                let a_mat = m2_scale(
                    &[[kappa1 * kappa2, C::new(0.0, 1.0) * kappa1 * kappa1],
                      [C::new(0.0, 1.0) * kappa2 * kappa2, -kappa1 * kappa2]],
                    -mho_phase * S1 * g0sq / q0,
                );
                let b11 = kappa1
                    * kappa2
                    * (-(S1 * g0sq / q0) * (daleth_p + daleth_m - q1 / q0)
                        - T1 * g0sq * (q0 + aleph_p * aleph_m / q0)
                        + C::new(0.0, S1 + T1) * (aleph_m - aleph_p));
                let b12 = kappa1
                    * kappa1
                    * (-C::new(0.0, S1) * g0sq / q0 * (2.0 * daleth_p - q1 / q0)
                        + C::new(0.0, T1) * (q0 / g0sq - g0sq * aleph_p * aleph_p / q0)
                        + 2.0 * (S1 - T1) * aleph_p);
                let b21 = kappa2
                    * kappa2
                    * (-C::new(0.0, S1) * g0sq / q0 * (2.0 * daleth_m - q1 / q0)
                        + C::new(0.0, T1) * (q0 / g0sq - g0sq * aleph_m * aleph_m / q0)
                        - 2.0 * (S1 - T1) * aleph_m);
                let b22 = kappa1
                    * kappa2
                    * ((S1 * g0sq / q0) * (daleth_p + daleth_m - q1 / q0)
                        + T1 * g0sq * (q0 + aleph_p * aleph_m / q0)
                        + C::new(0.0, S1 + T1) * (aleph_p - aleph_m));
                let b_mat = m2_scale(&[[b11, b12], [b21, b22]], mho_phase);
                (a_mat, b_mat)
            };
            list.push(EndpointData {
                x,
                is_a,
                j,
                mho_phase,
                eta,
                q0,
                q1,
                alpha0,
                alpha1,
                a_mat,
                b_mat,
            });
        }
        self.endpoints = list;
    }

    /// kappa_1, kappa_2: the model theta ratios at a band endpoint.
    fn kappas(&self, u_end: &[C]) -> (C, C) {
        let g = self.genus();
        let d = &self.surface.d_vec;
        let e = self.e_phase;
        let arg_pp: Vec<C> = (0..g).map(|i| u_end[i] + d[i]).collect();
        let arg_pm: Vec<C> = (0..g).map(|i| u_end[i] - d[i]).collect();
        let u0 = &self.surface.u_plus_zero;
        let m_minus: Vec<C> = (0..g).map(|i| -u0[i] - d[i]).collect();
        let th_mu0_minus = self.theta_at(&m_minus);
        let k1 = (self.th_u0_plus_d / self.th_u0_shift_plus_d)
            * (self.theta_at(&self.shift(&arg_pp)) / self.theta_at(&arg_pp))
            / e;
        let k2 = (th_mu0_minus / self.th_mu0_shift_minus_d)
            * (self.theta_at(&self.shift(&arg_pm)) / self.theta_at(&arg_pm))
            * e;
        (k1, k2)
    }

    /// aleph^{1}_{eps2}(xi): the normalised first theta-derivative combination.
    fn aleph(&self, u_end: &[C], pvec: &[f64], leth: C, eps2: f64) -> C {
        let g = self.genus();
        if g == 0 {
            return C::new(0.0, 0.0);
        }
        let d = &self.surface.d_vec;
        let arg: Vec<C> = (0..g).map(|i| u_end[i] + eps2 * d[i]).collect();
        let arg_shift = self.shift(&arg);
        let lam0 = self.lambda_sum(1, &arg, pvec, leth);
        let lam1 = self.lambda_sum(1, &arg_shift, pvec, leth);
        let u0 = 2.0 * std::f64::consts::PI * lam0;
        let u1 = 2.0 * std::f64::consts::PI * lam1;
        -u0 / self.theta_at(&arg) + u1 / self.theta_at(&arg_shift)
    }

    /// daleth^{1}_{eps2}(xi): second-derivative combination.
    fn daleth(&self, u_end: &[C], pvec: &[f64], leth: C, eps2: f64) -> C {
        let g = self.genus();
        if g == 0 {
            return C::new(0.0, 0.0);
        }
        let d = &self.surface.d_vec;
        let arg: Vec<C> = (0..g).map(|i| u_end[i] + eps2 * d[i]).collect();
        let arg_shift = self.shift(&arg);
        let th0 = self.theta_at(&arg);
        let th1 = self.theta_at(&arg_shift);
        let u0 = 2.0 * std::f64::consts::PI * self.lambda_sum(1, &arg, pvec, leth);
        let u1 = 2.0 * std::f64::consts::PI * self.lambda_sum(1, &arg_shift, pvec, leth);
        let v0 = -2.0 * std::f64::consts::PI * std::f64::consts::PI * self.lambda_sum(2, &arg, pvec, leth);
        let v1 = -2.0 * std::f64::consts::PI * std::f64::consts::PI * self.lambda_sum(2, &arg_shift, pvec, leth);
        -v0 / th0 + v1 / th1 - (u0 / th0) * (u0 / th0) + u0 * u1 / (th0 * th1)
    }

    fn init_r0_const(&mut self) {
        let mut acc = [[C::new(0.0, 0.0); 2]; 2];
        for e in &self.endpoints {
            let a0 = e.alpha0;
            let term = m2_scale(
                &m2_sub(
                    &m2_scale(&e.b_mat, a0),
                    &m2_scale(&e.a_mat, e.alpha1 + a0 / e.x),
                ),
                C::new(1.0, 0.0) / (a0 * a0 * e.x),
            );
            acc = m2_add(&acc, &term);
        }
        self.r0_const = acc;
    }

    /// The 1/(n+1/2) correction away from the discs.
    pub fn r0(&self, z: C) -> M2 {
        let mut acc = self.r0_const;
        for e in &self.endpoints {
            let a0 = e.alpha0;
            let zx = z - e.x;
            let inner = m2_add(
                &m2_scale(&e.a_mat, C::new(1.0, 0.0) / (a0 * zx)),
                &m2_scale(&m2_sub(&m2_scale(&e.b_mat, a0), &m2_scale(&e.a_mat, e.alpha1)), C::new(1.0, 0.0) / (a0 * a0)),
            );
            acc = m2_add(&acc, &m2_scale(&inner, C::new(1.0, 0.0) / zx));
        }
        acc
    }

    /// conformal-map integrals: xi_a(z) = 2 int from a_j to z of F h,
    /// xi_b(z) = 2 int from b_{j-1} to z of F h, along the straight segment
    /// with the branch-point square root pulled out analytically.
    pub fn xi_map(&self, endpoint_idx: usize, z: C) -> C {
        let e = &self.endpoints[endpoint_idx];
        let x0 = e.x;
        let w = z - x0;
        let support = &self.measure.support;
        let h = &self.measure.h;
        // F(s) = sqrt(s - x0) * prod_{r != x0} sqrt(s - r); on the segment
        // s = x0 + w t^2 the first factor is t sqrt(w)
        let integral = self.rule.integrate_complex(0.0, 1.0, |t| {
            let s = x0 + w * (t * t);
            let mut rest = C::new(1.0, 0.0);
            for &r in &support.endpoints {
                if r != x0 {
                    rest *= (s - r).sqrt();
                }
            }
            rest * h.eval(s) * (t * t)
        });
        2.0 * w * w.sqrt() * integral * 2.0
    }

    /// p = ((3/4)(n+1/2) xi)^{2/3}, principal branch.
    fn p_of_xi(&self, xi: C) -> C {
        (0.75 * self.nph() * xi).powf(2.0 / 3.0)
    }

    /// Analytic continuation of the mass integral int from z to a_{N+1} of psi.
    pub fn lens_mass(&self, z: C, band_j: usize) -> C {
        let (b, a) = self.measure.support.bands()[band_j - 1];
        let margin = 0.05 * (a - b);
        let x0 = z.re.clamp(b + margin, a - margin);
        let base = self.measure.mass_right_of(x0);
        let support = &self.measure.support;
        let h = &self.measure.h;
        let dirsign = if z.im >= 0.0 { 1.0 } else { -1.0 };
        let dz = z - x0;
        let line = self.rule.integrate_complex(0.0, 1.0, |t| {
            let s = x0 + dz * t;
            let mut f = C::new(1.0, 0.0);
            for &r in &support.endpoints {
                f *= (s - r).sqrt();
            }
            f * h.eval(s) * dz
        });
        base - dirsign * line / C::new(0.0, 2.0 * std::f64::consts::PI)
    }

    /// Region classification per the disc/lens/half-plane decomposition.
    pub fn classify_region(&self, z: C) -> Result<RegionTag> {
        if z.im == 0.0 {
            return Err(Error::BranchCut("classification on the real axis".into()));
        }
        for (idx, e) in self.endpoints.iter().enumerate() {
            let _ = idx;
            if (z - e.x).norm() < self.delta {
                let upper = z.im > 0.0;
                let right = z.re > e.x;
                let l = if e.is_a {
                    match (upper, right) {
                        (true, true) => 1,
                        (true, false) => 2,
                        (false, false) => 3,
                        (false, true) => 4,
                    }
                } else {
                    match (upper, right) {
                        (true, false) => 1,
                        (true, true) => 2,
                        (false, true) => 3,
                        (false, false) => 4,
                    }
                };
                return Ok(if e.is_a {
                    RegionTag::OmegaA { j: e.j, l }
                } else {
                    RegionTag::OmegaB { j: e.j, l }
                });
            }
        }
        // lens strips around each band
        let lens_width = 2f64.powf(-0.5) * self.delta;
        for (bi, &(b, a)) in self.measure.support.bands().iter().enumerate() {
            if z.re > b && z.re < a && z.im.abs() < lens_width {
                return Ok(if z.im > 0.0 {
                    RegionTag::Y3
                } else {
                    RegionTag::Y4
                });
            }
            let _ = bi;
        }
        Ok(if z.im > 0.0 { RegionTag::Y1 } else { RegionTag::Y2 })
    }

    fn band_of_region(&self, z: C) -> usize {
        let bands = self.measure.support.bands();
        let mut best = 1;
        let mut dist = f64::INFINITY;
        for (i, &(b, a)) in bands.iter().enumerate() {
            let d = if z.re < b {
                b - z.re
            } else if z.re > a {
                z.re - a
            } else {
                0.0
            };
            if d < dist {
                dist = d;
                best = i + 1;
            }
        }
        best
    }

    /// Airy-built local parametrix inside an endpoint disc, written as
    /// m_infinity times a connection matrix whose columns combine Ai at
    /// rotated arguments.
    fn parametrix(&self, z: C, endpoint_idx: usize, l: usize) -> Result<M2> {
        let e = &self.endpoints[endpoint_idx];
        let m = self.m_infinity(z)?;
        let xi = self.xi_map(endpoint_idx, z);
        let p = self.p_of_xi(xi);
        let p14 = p.powf(0.25);
        let p14i = C::new(1.0, 0.0) / p14;
        let omega = C::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        let omega2 = omega * omega;
        let (ai0, aip0) = airy(p);
        let (ai1, aip1) = airy(omega * p);
        let (ai2, aip2) = airy(omega2 * p);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        let half_exp = (0.5 * self.nph() * xi).exp();
        let half_exp_inv = (-0.5 * self.nph() * xi).exp();
        let x1 = C::new(0.0, -sqrt_pi) * half_exp;
        let x2 = sqrt_pi * C::from_polar(1.0, -std::f64::consts::PI / 6.0) * half_exp_inv;
        let i = C::new(0.0, 1.0);
        let u = e.mho_phase;
        let ub = u.conj(); // exp(-i (n+1/2) mho)
        // col-1 coefficient pair (A, B): column = x1 (A m_{k1} + B m_{k2} phase)
        // col-2 pair (Cc, D): column = x2 (Cc m_{k1} phase' + D m_{k2})
        let (a_coef, b_coef, b_phase, c_coef, d_coef, c_phase) = if !e.is_a {
            match l {
                1 => (
                    i * (ai0 * p14 - aip0 * p14i),
                    -(ai0 * p14 + aip0 * p14i),
                    ub,
                    i * (-ai2 * p14 + omega2 * aip2 * p14i),
                    ai2 * p14 + omega2 * aip2 * p14i,
                    u,
                ),
                2 => (
                    i * (-omega * ai1 * p14 + omega2 * aip1 * p14i),
                    omega * ai1 * p14 + omega2 * aip1 * p14i,
                    ub,
                    i * (-ai2 * p14 + omega2 * aip2 * p14i),
                    ai2 * p14 + omega2 * aip2 * p14i,
                    u,
                ),
                3 => (
                    i * (-omega2 * ai2 * p14 + omega * aip2 * p14i),
                    omega2 * ai2 * p14 + omega * aip2 * p14i,
                    u,
                    i * (omega2 * ai1 * p14 - aip1 * p14i),
                    -(omega2 * ai1 * p14 + aip1 * p14i),
                    ub,
                ),
                4 => (
                    i * (ai0 * p14 - aip0 * p14i),
                    -(ai0 * p14 + aip0 * p14i),
                    u,
                    i * (omega2 * ai1 * p14 - aip1 * p14i),
                    -(omega2 * ai1 * p14 + aip1 * p14i),
                    ub,
                ),
                _ => return Err(Error::Internal("sector out of range".into())),
            }
        } else {
            match l {
                1 => (
                    i * (ai0 * p14 - aip0 * p14i),
                    ai0 * p14 + aip0 * p14i,
                    ub,
                    i * (ai2 * p14 - omega2 * aip2 * p14i),
                    ai2 * p14 + omega2 * aip2 * p14i,
                    u,
                ),
                2 => (
                    i * (-omega * ai1 * p14 + omega2 * aip1 * p14i),
                    -(omega * ai1 * p14 + omega2 * aip1 * p14i),
                    ub,
                    i * (ai2 * p14 - omega2 * aip2 * p14i),
                    ai2 * p14 + omega2 * aip2 * p14i,
                    u,
                ),
                3 => (
                    i * (-omega2 * ai2 * p14 + omega * aip2 * p14i),
                    -(omega2 * ai2 * p14 + omega * aip2 * p14i),
                    u,
                    i * (-omega2 * ai1 * p14 + aip1 * p14i),
                    -(omega2 * ai1 * p14 + aip1 * p14i),
                    ub,
                ),
                4 => (
                    i * (ai0 * p14 - aip0 * p14i),
                    ai0 * p14 + aip0 * p14i,
                    u,
                    i * (-omega2 * ai1 * p14 + aip1 * p14i),
                    -(omega2 * ai1 * p14 + aip1 * p14i),
                    ub,
                ),
                _ => return Err(Error::Internal("sector out of range".into())),
            }
        };
        let mut out = [[C::new(0.0, 0.0); 2]; 2];
        for k in 0..2 {
            out[k][0] = x1 * (a_coef * m[k][0] + b_coef * b_phase * m[k][1]);
            out[k][1] = x2 * (c_coef * c_phase * m[k][0] + d_coef * m[k][1]);
        }
        Ok(out)
    }

    /// Parametrix selected by the location of z (for disc-boundary matching
    /// tests); z must lie inside the disc of the given endpoint.
    pub fn parametrix_at(&self, z: C, endpoint_idx: usize) -> Result<M2> {
        let e = &self.endpoints[endpoint_idx];
        let upper = z.im > 0.0;
        let right = z.re > e.x;
        let l = if e.is_a {
            match (upper, right) {
                (true, true) => 1,
                (true, false) => 2,
                (false, false) => 3,
                (false, true) => 4,
            }
        } else {
            match (upper, right) {
                (true, false) => 1,
                (true, true) => 2,
                (false, true) => 3,
                (false, false) => 4,
            }
        };
        self.parametrix(z, endpoint_idx, l)
    }

    fn endpoint_index(&self, is_a: bool, j: usize) -> usize {
        if is_a {
            2 * j - 1
        } else {
            2 * (j - 1)
        }
    }

    /// R0 - R0~ inside a disc: the pole parts get re-subtracted through the
    /// model-solution conjugation.
    fn r0_in_disc(&self, z: C, endpoint_idx: usize) -> Result<M2> {
        let e = &self.endpoints[endpoint_idx];
        let m = self.m_infinity(z)?;
        let minv = m2_inv(&m);
        let xi = self.xi_map(endpoint_idx, z);
        let u = e.mho_phase;
        let ub = u.conj();
        let sgn = if e.is_a { 1.0 } else { -1.0 };
        let core = [
            [C::new(-(S1 + T1), 0.0), C::new(0.0, sgn * (S1 - T1)) * u],
            [C::new(0.0, sgn * (S1 - T1)) * ub, C::new(S1 + T1, 0.0)],
        ];
        let tilde = m2_scale(&m2_mul(&m2_mul(&m, &core), &minv), C::new(1.0, 0.0) / xi);
        Ok(m2_sub(&self.r0(z), &tilde))
    }

    /// Exponential prefactors: E^{+-1} exp(+- n (g - Q_A)) and the second-column
    /// variants with the variational constant.
    fn prefactors(&self, z: C) -> Result<(C, C)> {
        let g = self.measure.g_function(z)?;
        let q = self.q_script(z.im > 0.0);
        let n = self.n as f64;
        let e = self.e_phase;
        if z.im > 0.0 {
            Ok((e * ((g - q) * n).exp(), (1.0 / e) * ((-(g - self.measure.ell_o - q)) * n).exp()))
        } else {
            Ok(((1.0 / e) * ((g - q) * n).exp(), e * ((-(g - self.measure.ell_o - q)) * n).exp()))
        }
    }

    /// Q_A^{+-}
    fn q_script(&self, upper: bool) -> C {
        let m = &self.measure;
        let one_over_n = 1.0 / self.n as f64;
        let re = (1.0 + one_over_n) * m.q_o;
        let im = -std::f64::consts::PI * m.psi_minus_mass
            + if upper { 1.0 } else { -1.0 } * std::f64::consts::PI * self.deformation() * m.psi_plus_mass;
        C::new(re, im)
    }

    /// First row [z pi_{2n+1}(z), weighted Cauchy transform] of the asymptotic
    /// Riemann-Hilbert solution with the 1/(n+1/2) correction included.
    pub fn first_row(&self, z: C) -> Result<(C, C)> {
        let region = self.classify_region(z)?;
        let nph = self.nph();
        let (pre1, pre2) = self.prefactors(z)?;
        let (m, corr): (M2, M2) = match region {
            RegionTag::Y1 | RegionTag::Y2 | RegionTag::Y3 | RegionTag::Y4 => {
                (self.m_infinity(z)?, self.r0(z))
            }
            RegionTag::OmegaB { j, l } => {
                let idx = self.endpoint_index(false, j);
                (self.parametrix(z, idx, l)?, self.r0_in_disc(z, idx)?)
            }
            RegionTag::OmegaA { j, l } => {
                let idx = self.endpoint_index(true, j);
                (self.parametrix(z, idx, l)?, self.r0_in_disc(z, idx)?)
            }
        };
        let c11 = C::new(1.0, 0.0) + corr[0][0] / nph;
        let c12 = corr[0][1] / nph;
        // lens combinations
        let lens = |sign: f64| -> Result<(C, C)> {
            let bj = self.band_of_region(z);
            let mass = self.lens_mass(z, bj);
            let phase = (C::new(0.0, -sign * 4.0 * nph * std::f64::consts::PI) * mass).exp();
            let first = (m[0][0] + sign * m[0][1] * phase) * c11 + (m[1][0] + sign * m[1][1] * phase) * c12;
            let second = m[0][1] * c11 + m[1][1] * c12;
            Ok((pre1 * first, pre2 * second))
        };
        match region {
            RegionTag::Y1 | RegionTag::Y2 | RegionTag::OmegaB { l: 1, .. } | RegionTag::OmegaB { l: 4, .. }
            | RegionTag::OmegaA { l: 1, .. } | RegionTag::OmegaA { l: 4, .. } => {
                let first = m[0][0] * c11 + m[1][0] * c12;
                let second = m[0][1] * c11 + m[1][1] * c12;
                Ok((pre1 * first, pre2 * second))
            }
            RegionTag::Y3 | RegionTag::OmegaB { l: 2, .. } | RegionTag::OmegaA { l: 2, .. } => lens(1.0),
            RegionTag::Y4 | RegionTag::OmegaB { l: 3, .. } | RegionTag::OmegaA { l: 3, .. } => lens(-1.0),
            _ => Err(Error::Internal("sector out of range".into())),
        }
    }

    /// z pi_{2n+1}(z)
    pub fn pi_asym(&self, z: C) -> Result<C> {
        Ok(self.first_row(z)?.0)
    }

    /// z int (s pi(s)) e^{-nV} / (s (s-z)) ds / (2 pi i)
    pub fn cauchy_asym(&self, z: C) -> Result<C> {
        Ok(self.first_row(z)?.1)
    }

    /// Norming-constant asymptotics: (leading, corrected) for xi^{(2n+1)}_{-n-1},
    /// from the theta-ratio formula with the (n+1/2)^{-1} term.
    pub fn xi_asym(&self) -> Result<XiAsym> {
        let g = self.genus();
        let u0 = &self.surface.u_plus_zero;
        let d = &self.surface.d_vec;
        let arg_pp: Vec<C> = (0..g).map(|i| u0[i] + d[i]).collect();
        let arg_mp: Vec<C> = (0..g).map(|i| -u0[i] + d[i]).collect();
        let recip: f64 = self
            .measure
            .support
            .bands()
            .iter()
            .map(|(b, a)| 1.0 / b - 1.0 / a)
            .sum();
        let e2 = self.e_phase * self.e_phase;
        let xi_nat = 2.0 * e2 / recip * (self.theta_at(&self.shift(&arg_pp)) * self.theta_at(&arg_mp))
            / (self.theta_at(&self.shift(&arg_mp)) * self.theta_at(&arg_pp));
        if xi_nat.re <= 0.0 {
            return Err(Error::Internal(format!("norming-ratio factor not positive: {xi_nat}")));
        }
        // Q-natural
        let mut qn = [[C::new(0.0, 0.0); 2]; 2];
        for e in &self.endpoints {
            let a0 = e.alpha0;
            let term = m2_scale(
                &m2_sub(
                    &m2_scale(&e.a_mat, e.alpha1 + 2.0 * a0 / e.x),
                    &m2_scale(&e.b_mat, a0),
                ),
                C::new(1.0, 0.0) / (e.x * e.x * a0 * a0),
            );
            qn = m2_add(&qn, &term);
        }
        let qn = m2_scale(&qn, C::new(0.0, -2.0));
        let ell = self.measure.ell_o;
        let n = self.n as f64;
        let lead_sq = (-(n * ell)).exp() / std::f64::consts::PI * xi_nat.re;
        let corr_sq = lead_sq * (1.0 + (xi_nat.re * qn[0][1].re) / self.nph());
        Ok(XiAsym {
            xi_natural: xi_nat,
            q_natural_12: qn[0][1],
            leading: lead_sq.sqrt(),
            corrected: corr_sq.max(0.0).sqrt(),
        })
    }

    /// phi_{2n+1}(z) = xi * pi(z): corrected norming constant times pi_asym / z.
    pub fn phi_asym(&self, z: C) -> Result<C> {
        let xi = self.xi_asym()?;
        Ok(xi.corrected * self.pi_asym(z)? / z)
    }
}

pub struct XiAsym {
    pub xi_natural: C,
    pub q_natural_12: C,
    pub leading: f64,
    pub corrected: f64,
}

/// Q_0 and Q_1 at an endpoint, the local square-root factors of the conformal
/// maps; i Q_0(b) > 0 and Q_0(a) > 0.
fn q0_q1(support: &crate::equilibrium::SupportData, x: f64, is_a: bool, j: usize) -> (C, C) {
    let g = support.genus();
    let np1 = g + 1;
    let b0 = support.b(0);
    let amax = support.a(np1);
    // interior edges b_k, a_k for k = 1..N
    let bs: Vec<f64> = (1..=g).map(|k| support.b(k)).collect();
    let as_: Vec<f64> = (1..=g).map(|k| support.a(k)).collect();
    if !is_a && j == 1 {
        // b_0
        let mut prod = 1.0 / (amax - b0);
        for k in 0..g {
            prod *= (bs[k] - b0) / (as_[k] - b0);
        }
        let q0 = C::new(0.0, -prod.sqrt());
        let mut s = -1.0 / (b0 - amax);
        for k in 0..g {
            s += 1.0 / (b0 - bs[k]) - 1.0 / (b0 - as_[k]);
        }
        (q0, 0.5 * q0 * s)
    } else if is_a && j == np1 {
        // a_{N+1}
        let mut prod = amax - b0;
        for k in 0..g {
            prod *= (amax - bs[k]) / (amax - as_[k]);
        }
        let q0 = C::new(prod.sqrt(), 0.0);
        let mut s = 1.0 / (amax - b0);
        for k in 0..g {
            s += 1.0 / (amax - bs[k]) - 1.0 / (amax - as_[k]);
        }
        (q0, 0.5 * q0 * s)
    } else if !is_a {
        // b_jp with paper index jp = j - 1 in 1..=N
        let jp = j - 1;
        let bj = x;
        let aj = as_[jp - 1];
        let mut prod = (bj - b0) / ((amax - bj) * (bj - aj));
        for k in 1..jp {
            prod *= (bj - bs[k - 1]) / (bj - as_[k - 1]);
        }
        for l in jp + 1..=g {
            prod *= (bs[l - 1] - bj) / (as_[l - 1] - bj);
        }
        let q0 = C::new(0.0, -prod.sqrt());
        let mut s = 1.0 / (bj - b0) - 1.0 / (bj - amax) - 1.0 / (bj - aj);
        for k in 1..=g {
            if k != jp {
                s += 1.0 / (bj - bs[k - 1]) - 1.0 / (bj - as_[k - 1]);
            }
        }
        (q0, 0.5 * q0 * s)
    } else {
        // a_j with j in 1..=N
        let aj = x;
        let bj = bs[j - 1];
        let mut prod = (aj - b0) * (bj - aj) / (amax - aj);
        for k in 1..j {
            prod *= (aj - bs[k - 1]) / (aj - as_[k - 1]);
        }
        for l in j + 1..=g {
            prod *= (bs[l - 1] - aj) / (as_[l - 1] - aj);
        }
        let q0 = C::new(prod.sqrt(), 0.0);
        let mut s = 1.0 / (aj - b0) - 1.0 / (aj - amax) + 1.0 / (aj - bj);
        for k in 1..=g {
            if k != j {
                s += 1.0 / (aj - bs[k - 1]) - 1.0 / (aj - as_[k - 1]);
            }
        }
        (q0, 0.5 * q0 * s)
    }
}

/// The local square-root normalisation of the differential numerators at an
/// endpoint: leth(b_0) = i (-1)^N eta, leth(a_{N+1}) = eta,
/// leth(b_jp) = i (-1)^{N-jp} eta, leth(a_j) = (-1)^{N-j+1} eta.
fn leth_value(g: usize, _x: f64, is_a: bool, j: usize, eta: f64, np1: usize) -> C {
    if is_a && j == np1 {
        C::new(eta, 0.0)
    } else if is_a {
        let s = if (g as i64 - j as i64 + 1) % 2 == 0 { 1.0 } else { -1.0 };
        C::new(s * eta, 0.0)
    } else if j == 1 {
        let s = if g % 2 == 0 { 1.0 } else { -1.0 };
        C::new(0.0, s * eta)
    } else {
        let jp = j as i64 - 1;
        let s = if (g as i64 - jp) % 2 == 0 { 1.0 } else { -1.0 };
        C::new(0.0, s * eta)
    }
}
