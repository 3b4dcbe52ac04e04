//! Hyperelliptic-surface apparatus for y^2 = R(z) with all branch points real:
//! normalised holomorphic differentials, Riemann period matrix, Abel map,
//! quarter-root Szego-type function, gap zeros, and the Riemann theta function.
//!
//! The surface branch of sqrt(R) used here has cuts along the gaps and the arc
//! through infinity: it equals sign(Im z) * sqrt_r_cut(z) off the axis, is
//! purely imaginary on the bands, and real on the gaps with a sign jump.
//! Alpha cycles encircle the gaps (counter-clockwise, on the upper sheet);
//! beta cycles run from a gap through the exterior arc and back on the lower
//! sheet.

use crate::equilibrium::{EquilibriumMeasure, SupportData};
use crate::quad::Rule64;
use crate::{Error, Result};
use num_complex::Complex64;

const QUAD_ORDER: usize = 80;

/// All genus-level data for one solved support.
pub struct SurfaceData {
    pub support: SupportData,
    /// genus
    pub genus: usize,
    /// c[j][k]: numerator coefficients of the normalised differentials,
    /// omega_j = sum_k c[j][k] z^(N-k-1...) -- row j of the inverse of the
    /// alpha-period matrix. Stored as c[j][k] multiplying z^{genus-1-k}.
    pub c_matrix: Vec<Vec<f64>>,
    /// Riemann period matrix (pure imaginary, -i tau positive definite)
    pub tau: Vec<Vec<Complex64>>,
    /// Abel map values u_+ at every endpoint, indexed like the endpoint list
    pub u_plus_endpoints: Vec<Vec<Complex64>>,
    /// u_+(0)
    pub u_plus_zero: Vec<Complex64>,
    /// gamma(0) = (prod b/a)^{1/4}
    pub gamma0: f64,
    /// one zero per gap of the quarter-root combination
    pub gap_zeros: Vec<f64>,
    /// d vector: sum over gaps of int from a_j to z_j (upper edge)
    pub d_vec: Vec<Complex64>,
    rule: Rule64,
}

impl SurfaceData {
    pub fn build(support: &SupportData) -> Result<Self> {
        let rule = Rule64::new(QUAD_ORDER);
        let genus = support.genus();
        let c_matrix = normalised_differentials(support, &rule)?;
        let tau = period_matrix(support, &c_matrix, &rule)?;
        let gamma0 = gamma0(support);
        let gap_zeros = gap_zeros(support, gamma0)?;
        let mut data = SurfaceData {
            support: support.clone(),
            genus,
            c_matrix,
            tau,
            u_plus_endpoints: Vec::new(),
            u_plus_zero: vec![Complex64::new(0.0, 0.0); genus],
            gamma0,
            gap_zeros,
            d_vec: vec![Complex64::new(0.0, 0.0); genus],
            rule,
        };
        data.u_plus_endpoints = data.abel_boundary_all();
        data.u_plus_zero = data.abel_boundary_at(0.0);
        data.d_vec = data.d_vector();
        Ok(data)
    }

    /// Numerator polynomial of omega_j at z: sum_k c[j][k] z^{genus-1-k}
    pub fn omega_numerator(&self, j: usize, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, &c) in self.c_matrix[j].iter().enumerate() {
            acc += c * z.powi((self.genus - 1 - k) as i32);
        }
        acc
    }

    /// Surface branch of sqrt(R): sign(Im z) * product of principal roots.
    pub fn sqrt_r_surface(&self, z: Complex64) -> Complex64 {
        let s = if z.im >= 0.0 { 1.0 } else { -1.0 };
        s * self.support.sqrt_r_cut(z)
    }

    /// Integrand vector of the differentials at a point off the cuts.
    fn omega_at(&self, z: Complex64) -> Vec<Complex64> {
        let den = self.sqrt_r_surface(z);
        (0..self.genus).map(|j| self.omega_numerator(j, z) / den).collect()
    }

    /// Abel map u(z) = int from a_{N+1} to z of omega along the upper sheet:
    /// a vertical ascent from the base point followed by a horizontal leg and
    /// a vertical descent to z, all staying inside one half-plane.
    pub fn abel_map(&self, z: Complex64) -> Result<Vec<Complex64>> {
        if self.genus == 0 {
            return Ok(Vec::new());
        }
        let base = *self.support.endpoints.last().unwrap();
        if z.im == 0.0 && self.support.endpoints.contains(&z.re) {
            return Err(Error::BranchCut("Abel map at a branch point".into()));
        }
        let height = {
            let span = base - self.support.endpoints[0];
            (0.35 * span).max(2.0 * z.im.abs()).max(0.5)
        };
        let sign = if z.im >= 0.0 { 1.0 } else { -1.0 };
        let h = Complex64::new(0.0, sign * height);
        let mut acc = vec![Complex64::new(0.0, 0.0); self.genus];
        // leg 1: from the branch point straight up, t^2 substitution kills the
        // inverse square root at the base point
        let tmax = height.sqrt();
        for j in 0..self.genus {
            let val = self.rule.integrate_complex(0.0, tmax, |t| {
                let zz = Complex64::new(base, sign * t * t);
                let dz = Complex64::new(0.0, sign * 2.0 * t);
                self.omega_numerator(j, zz) / self.sqrt_r_surface(zz) * dz
            });
            acc[j] += val;
        }
        // leg 2: horizontal at the safe height
        let from = Complex64::new(base, 0.0) + h;
        let to = Complex64::new(z.re, 0.0) + h;
        for j in 0..self.genus {
            acc[j] += self.line_integral(j, from, to);
        }
        // leg 3: vertical down to z
        for j in 0..self.genus {
            acc[j] += self.line_integral(j, to, z);
        }
        Ok(acc)
    }

    fn line_integral(&self, j: usize, from: Complex64, to: Complex64) -> Complex64 {
        let dir = to - from;
        self.rule.integrate_complex(0.0, 1.0, |t| {
            let zz = from + t * dir;
            self.omega_numerator(j, zz) / self.sqrt_r_surface(zz) * dir
        })
    }

    /// Boundary value u_+(x) for real x (from the upper side), by integrating
    /// boundary values along the axis from the base point; exact at branch
    /// points thanks to per-segment cosine substitutions.
    pub fn abel_boundary_at(&self, x: f64) -> Vec<Complex64> {
        self.abel_boundary_side(x, 1.0)
    }

    /// u_-(x): same path with the lower-side boundary values. On bands the two
    /// sides agree; on gaps and exterior rays the real value flips sign.
    pub fn abel_boundary_minus(&self, x: f64) -> Vec<Complex64> {
        self.abel_boundary_side(x, -1.0)
    }

    fn abel_boundary_side(&self, x: f64, side: f64) -> Vec<Complex64> {
        if self.genus == 0 {
            return Vec::new();
        }
        let base = *self.support.endpoints.last().unwrap();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.genus];
        if x >= base {
            for j in 0..self.genus {
                acc[j] = side * self.exterior_segment(j, base, x, 1.0);
            }
            return acc;
        }
        // walk left through alternating bands and gaps
        let mut segments: Vec<(f64, f64, SegKind)> = Vec::new();
        let pts = &self.support.endpoints;
        let mut idx = pts.len() - 1;
        let mut right = base;
        while right > x {
            let kind = if idx == 0 {
                SegKind::ExteriorLeft
            } else if idx % 2 == 1 {
                SegKind::Band
            } else {
                SegKind::Gap
            };
            let left = if idx == 0 { f64::NEG_INFINITY } else { pts[idx - 1] };
            let lo = left.max(x);
            segments.push((lo, right, kind));
            if lo <= x {
                break;
            }
            idx -= 1;
            right = left;
        }
        for (lo, hi, kind) in segments {
            for j in 0..self.genus {
                acc[j] += self.boundary_segment(j, lo, hi, kind, side);
            }
        }
        for v in acc.iter_mut() {
            *v = -*v; // accumulated right-to-left pieces with left-to-right orientation
        }
        acc
    }

    /// integral over [lo, hi] of the boundary value of omega_j from the given
    /// side, where the segment is contained in a single band, gap, or the
    /// exterior ray left of b_0.
    fn boundary_segment(&self, j: usize, lo: f64, hi: f64, kind: SegKind, side: f64) -> Complex64 {
        let support = &self.support;
        match kind {
            SegKind::Band => {
                let bi = support.band_index_of(0.5 * (lo + hi)).expect("inside a band");
                let sigma = support.band_sign(bi);
                let (b, a) = support.bands()[bi - 1];
                let w = 0.5 * (a - b);
                let mid = 0.5 * (a + b);
                let th_lo = ((mid - lo) / w).clamp(-1.0, 1.0).acos();
                let th_hi = ((mid - hi) / w).clamp(-1.0, 1.0).acos();
                // on a band the surface branch is i sigma |R|^{1/2} from either side
                self.rule.integrate_complex(th_lo, th_hi, |th| {
                    let s = mid - w * th.cos();
                    let mut rest = 1.0;
                    for &r in &support.endpoints {
                        if r != a && r != b {
                            rest *= (s - r).abs();
                        }
                    }
                    let num = self.omega_numerator(j, Complex64::new(s, 0.0));
                    num / Complex64::new(0.0, sigma * rest.sqrt())
                })
            }
            SegKind::Gap => {
                let gi = support
                    .gaps()
                    .iter()
                    .position(|&(a, b)| a <= lo + 1e-12 && hi <= b + 1e-12)
                    .expect("inside a gap");
                let (ga, gb) = support.gaps()[gi];
                let sigma = side * support.band_sign(gi + 1); // F = sigma_j |R|^{1/2} on gap j
                let w = 0.5 * (gb - ga);
                let mid = 0.5 * (ga + gb);
                let th_lo = ((mid - lo) / w).clamp(-1.0, 1.0).acos();
                let th_hi = ((mid - hi) / w).clamp(-1.0, 1.0).acos();
                self.rule.integrate_complex(th_lo, th_hi, |th| {
                    let s = mid - w * th.cos();
                    let mut rest = 1.0;
                    for &r in &support.endpoints {
                        if r != ga && r != gb {
                            rest *= (s - r).abs();
                        }
                    }
                    let num = self.omega_numerator(j, Complex64::new(s, 0.0));
                    num / Complex64::new(sigma * rest.sqrt(), 0.0)
                })
            }
            SegKind::ExteriorLeft => {
                // F = (-1)^{N+1} |R|^{1/2} on (-inf, b_0)
                let sign = if (support.genus() + 1) % 2 == 0 { 1.0 } else { -1.0 };
                side * sign * self.exterior_segment(j, hi, lo, -1.0)
            }
        }
    }

    /// integral toward +-infinity from a branch point at `from` to `to`, with
    /// the t^2 substitution; `dir` = +1 runs right of a_{N+1}, -1 left of b_0.
    /// The returned value is oriented from min to max of the two abscissae.
    fn exterior_segment(&self, j: usize, from: f64, to: f64, dir: f64) -> Complex64 {
        let tmax = (to - from).abs().sqrt();
        // the t factors from |R|^{1/2} and from ds cancel; the result is the
        // increasing-s oriented integral for either direction
        self.rule.integrate_complex(0.0, tmax, |t| {
            let s = from + dir * t * t;
            let mut rest = 1.0;
            for &r in &self.support.endpoints {
                if r != from {
                    rest *= (s - r).abs();
                }
            }
            self.omega_numerator(j, Complex64::new(s, 0.0)) / rest.sqrt() * 2.0
        })
    }

    fn abel_boundary_all(&self) -> Vec<Vec<Complex64>> {
        self.support.endpoints.iter().map(|&e| self.abel_boundary_at(e)).collect()
    }

    /// Quarter-root function: the product of per-factor principal quartic
    /// roots (z - b_{k-1})^{1/4} (z - a_k)^{-1/4} is analytic off the bands;
    /// the extra -i in the lower half-plane moves the cuts to the gaps and the
    /// exterior rays, where the jump factor is i.
    pub fn gamma(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (b, a) in self.support.bands() {
            acc *= (z - b).powf(0.25) / (z - a).powf(0.25);
        }
        if z.im < 0.0 {
            acc *= Complex64::new(0.0, -1.0);
        }
        acc
    }

    fn d_vector(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::new(0.0, 0.0); self.genus];
        for (gi, &zj) in self.gap_zeros.iter().enumerate() {
            let (a, _) = self.support.gaps()[gi];
            for j in 0..self.genus {
                d[j] += self.boundary_segment(j, a, zj, SegKind::Gap, 1.0);
            }
        }
        d
    }
}

#[derive(Clone, Copy)]
enum SegKind {
    Band,
    Gap,
    ExteriorLeft,
}

/// gamma(0) = (prod_k b_{k-1}/a_k)^{1/4}, positive by the zero-exclusion rule.
pub fn gamma0(support: &SupportData) -> f64 {
    let mut prod = 1.0;
    for (b, a) in support.bands() {
        prod *= b / a;
    }
    prod.powf(0.25)
}

/// Zeros of Q(z) = prod (z - b_{k-1}) - gamma0^4 prod (z - a_k), one per gap,
/// bracketed by the guaranteed sign change Q(a_j) Q(b_j) < 0.
pub fn gap_zeros(support: &SupportData, g0: f64) -> Result<Vec<f64>> {
    let g4 = g0.powi(4);
    let q = |z: f64| -> f64 {
        let mut pb = 1.0;
        let mut pa = 1.0;
        for (b, a) in support.bands() {
            pb *= z - b;
            pa *= z - a;
        }
        pb - g4 * pa
    };
    let mut zeros = Vec::with_capacity(support.genus());
    for (a, b) in support.gaps() {
        let (mut lo, mut hi) = (a, b);
        let (qa, qb) = (q(lo), q(hi));
        if qa * qb > 0.0 {
            return Err(Error::Internal(format!(
                "gap zero not bracketed in ({a}, {b}): Q = {qa:e}, {qb:e}"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if q(mid) * q(lo) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    Ok(zeros)
}

/// Alpha-period normalisation: the matrix S with
/// S[j][k] = oint over alpha_k of s^j / sqrt(R) ds, reduced to the gap
/// integral -2 int over gap k of s^j / F(s) ds, then inverted.
fn normalised_differentials(support: &SupportData, rule: &Rule64) -> Result<Vec<Vec<f64>>> {
    let g = support.genus();
    if g == 0 {
        return Ok(Vec::new());
    }
    let mut s_mat = nalgebra::DMatrix::<f64>::zeros(g, g);
    for k in 0..g {
        let (ga, gb) = support.gaps()[k];
        let sigma = support.band_sign(k + 1);
        let w = 0.5 * (gb - ga);
        let mid = 0.5 * (ga + gb);
        for j in 0..g {
            // monomial z^{g-1-j} matching the row convention of the numerators
            let pow = (g - 1 - j) as i32;
            let val = rule.integrate(0.0, std::f64::consts::PI, |th| {
                let s = mid - w * th.cos();
                let mut rest = 1.0;
                for &r in &support.endpoints {
                    if r != ga && r != gb {
                        rest *= (s - r).abs();
                    }
                }
                s.powi(pow) / (sigma * rest.sqrt())
            });
            s_mat[(j, k)] = -2.0 * val;
        }
    }
    let inv = s_mat
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned { pivot_ratio: 0.0 })?;
    // row j of inv gives omega_j = sum_k inv[j][k] z^{g-1-k} / sqrt(R)
    let mut c = vec![vec![0.0; g]; g];
    for j in 0..g {
        for k in 0..g {
            c[j][k] = inv[(j, k)];
        }
    }
    Ok(c)
}

/// Beta periods via explicit semicircular contours: from a point on gap j
/// through the lower half-plane to the exterior arc, returning through the
/// upper half-plane on the second sheet.
fn period_matrix(support: &SupportData, c: &[Vec<f64>], rule: &Rule64) -> Result<Vec<Vec<Complex64>>> {
    let g = support.genus();
    if g == 0 {
        return Ok(Vec::new());
    }
    let amax = *support.endpoints.last().unwrap();
    let span = amax - support.endpoints[0];
    let mut tau = vec![vec![Complex64::new(0.0, 0.0); g]; g];
    for jg in 0..g {
        let (ga, gb) = support.gaps()[jg];
        let x_gap = 0.5 * (ga + gb);
        let x_ext = amax + 0.25 * span;
        let center = 0.5 * (x_gap + x_ext);
        let radius = 0.5 * (x_ext - x_gap);
        for ji in 0..g {
            let numerator = |z: Complex64| -> Complex64 {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &ck) in c[ji].iter().enumerate() {
                    acc += ck * z.powi((g - 1 - k) as i32);
                }
                acc
            };
            // lower arc (theta from pi to 2 pi), integrand P / (-F)
            let lower = rule.integrate_complex(std::f64::consts::PI, 2.0 * std::f64::consts::PI, |th| {
                let z = center + radius * Complex64::new(th.cos(), th.sin());
                let dz = radius * Complex64::new(-th.sin(), th.cos());
                numerator(z) / (-support.sqrt_r_cut(z)) * dz
            });
            // upper arc (theta from 0 to pi), second sheet: integrand -P / F
            let upper = rule.integrate_complex(0.0, std::f64::consts::PI, |th| {
                let z = center + radius * Complex64::new(th.cos(), th.sin());
                let dz = radius * Complex64::new(-th.sin(), th.cos());
                -numerator(z) / support.sqrt_r_cut(z) * dz
            });
            tau[ji][jg] = lower + upper;
        }
    }
    // orientation: fix the sign so -i tau is positive definite
    let trace_im: f64 = (0..g).map(|j| tau[j][j].im).sum();
    if trace_im < 0.0 {
        for row in tau.iter_mut() {
            for v in row.iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok(tau)
}

/// Omega vector and unit-modulus phase for index n:
/// Omega_j = 4 pi int from b_j to a_{N+1} of psi, E = exp(2 pi i (n + 1/2) * psi-mass on R_+).
pub fn omega_and_phase(measure: &EquilibriumMeasure, n: u32) -> (Vec<f64>, Complex64) {
    let gaps = measure.support.gaps();
    let omegas: Vec<f64> = gaps
        .iter()
        .map(|&(_, bj)| 4.0 * std::f64::consts::PI * measure.mass_right_of(bj))
        .collect();
    let phase = Complex64::new(
        0.0,
        2.0 * std::f64::consts::PI * (n as f64 + 0.5) * measure.psi_plus_mass,
    )
    .exp();
    (omegas, phase)
}

/// Riemann theta function: sum over the integer lattice of
/// exp(2 pi i (m, w) + pi i (m, tau m)), truncated at |m_i| <= trunc.
pub fn theta(w: &[Complex64], tau: &[Vec<Complex64>], trunc: i64) -> Complex64 {
    let g = w.len();
    if g == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut m = vec![-trunc; g];
    loop {
        let mut exponent = Complex64::new(0.0, 0.0);
        for i in 0..g {
            exponent += 2.0 * std::f64::consts::PI * Complex64::new(0.0, 1.0) * m[i] as f64 * w[i];
            for j in 0..g {
                exponent += std::f64::consts::PI
                    * Complex64::new(0.0, 1.0)
                    * m[i] as f64
                    * m[j] as f64
                    * tau[i][j];
            }
        }
        total += exponent.exp();
        // odometer
        let mut idx = 0;
        loop {
            m[idx] += 1;
            if m[idx] <= trunc {
                break;
            }
            m[idx] = -trunc;
            idx += 1;
            if idx == g {
                return total;
            }
        }
    }
}

/// Truncation radius from the smallest eigenvalue of -i tau for p target bits.
pub fn theta_truncation(tau: &[Vec<Complex64>], p_bits: u32) -> i64 {
    let g = tau.len();
    if g == 0 {
        return 0;
    }
    let mut m = nalgebra::DMatrix::<f64>::zeros(g, g);
    for i in 0..g {
        for j in 0..g {
            m[(i, j)] = tau[i][j].im;
        }
    }
    let eig = m.symmetric_eigenvalues();
    let lambda_min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let p = p_bits as f64 * std::f64::consts::LN_2;
    ((p / (std::f64::consts::PI * lambda_min)).sqrt().ceil() as i64 + 2).max(3)
}
