//! Direct (non-asymptotic) computation of monic and orthonormal Laurent
//! polynomials, Hankel determinants, norming constants, recurrence data, zeros,
//! and the Cauchy transform of the weighted polynomial. Everything here runs at
//! the moment table's precision and serves as the ground truth for the
//! asymptotic path.

use crate::field::LaurentPolynomial;
use crate::moments::MomentTable;
use crate::mp::{f, MpComplex};
use crate::quad::MpRule;
use crate::{Error, Result};
use rug::Float;

/// LU decomposition with partial pivoting over extended-precision entries.
/// Returns the permutation sign and pivots in place.
fn lu_decompose(a: &mut Vec<Vec<Float>>, prec: u32) -> Result<(f64, Vec<usize>)> {
    let n = a.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let mut best = col;
        let mut best_abs = a[col][col].clone().abs();
        for row in col + 1..n {
            let v = a[row][col].clone().abs();
            if v > best_abs {
                best_abs = v;
                best = row;
            }
        }
        if best_abs.is_zero() {
            return Err(Error::IllConditioned { pivot_ratio: 0.0 });
        }
        if best != col {
            a.swap(col, best);
            perm.swap(col, best);
            sign = -sign;
        }
        for row in col + 1..n {
            let factor = Float::with_val(prec, &a[row][col] / &a[col][col]);
            for k in col..n {
                let t = Float::with_val(prec, &factor * &a[col][k]);
                a[row][k] -= t;
            }
        }
    }
    Ok((sign, perm))
}

fn lu_solve(a: &Vec<Vec<Float>>, perm: &[usize], rhs: &[Float], prec: u32) -> Vec<Float> {
    let n = a.len();
    let mut y: Vec<Float> = perm.iter().map(|&p| rhs[p].clone()).collect();
    for i in 0..n {
        for j in 0..i {
            let t = Float::with_val(prec, &a[i][j] * &y[j]);
            y[i] -= t;
        }
    }
    for i in (0..n).rev() {
        for j in i + 1..n {
            let t = Float::with_val(prec, &a[i][j] * &y[j]);
            y[i] -= t;
        }
        y[i] = Float::with_val(prec, &y[i] / &a[i][i]);
    }
    y
}

/// Hankel determinant H^(m)_k of the k x k matrix with entries c_{m+i+j};
/// H^(m)_0 = 1 by convention. LU with partial pivoting; MPFR's exponent range
/// makes the raw value representable, so no log-space bookkeeping is needed.
pub fn hankel_det(m: i64, k: usize, table: &MomentTable) -> Result<Float> {
    let prec = table.precision_bits;
    if k == 0 {
        return Ok(f(prec, 1.0));
    }
    let mut a: Vec<Vec<Float>> = (0..k)
        .map(|i| (0..k).map(|j| table.get(m + (i + j) as i64).cloned()).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let (sign, _) = lu_decompose(&mut a, prec)?;
    let mut det = f(prec, sign);
    for i in 0..k {
        det *= &a[i][i];
    }
    Ok(det)
}

/// Signed log-magnitude of a Hankel determinant, for reporting.
pub fn hankel_logdet(m: i64, k: usize, table: &MomentTable) -> Result<(i32, f64)> {
    let d = hankel_det(m, k, table)?;
    let sign = if d.is_sign_negative() { -1 } else { 1 };
    Ok((sign, d.abs().ln().to_f64()))
}

/// Monic orthogonal Laurent polynomial pi_m, obtained by solving the
/// orthogonality linear system (not by expanding determinants).
///
/// Odd m = 2n+1: range [-n-1, n], coefficient of z^{-n-1} fixed to 1, and
/// <pi, z^l> = 0 for l = -n..n. Even m = 2n: range [-n, n], coefficient of
/// z^n fixed to 1, and <pi, z^l> = 0 for l = -n..n-1.
pub fn monic_olp(m: usize, table: &MomentTable) -> Result<LaurentPolynomial> {
    let prec = table.precision_bits;
    if m == 0 {
        return Ok(LaurentPolynomial::constant(prec, 1.0));
    }
    let n = m / 2;
    let (lo, hi, fixed, eq_lo, eq_hi): (i64, i64, i64, i64, i64) = if m % 2 == 1 {
        (-(n as i64) - 1, n as i64, -(n as i64) - 1, -(n as i64), n as i64)
    } else {
        (-(n as i64), n as i64, n as i64, -(n as i64), n as i64 - 1)
    };
    let unknowns: Vec<i64> = (lo..=hi).filter(|&j| j != fixed).collect();
    let size = unknowns.len();
    let mut a: Vec<Vec<Float>> = Vec::with_capacity(size);
    let mut rhs: Vec<Float> = Vec::with_capacity(size);
    for l in eq_lo..=eq_hi {
        let row: Vec<Float> = unknowns.iter().map(|&j| table.get(j + l).cloned()).collect::<Result<Vec<_>>>()?;
        a.push(row);
        rhs.push(-table.get(fixed + l)?.clone());
    }
    let mut lu = a.clone();
    let (_, perm) = lu_decompose(&mut lu, prec)?;
    // crude conditioning probe from the pivot spread
    let mut pmax = f(prec, 0.0);
    let mut pmin = Float::with_val(prec, f64::INFINITY);
    for i in 0..size {
        let p = lu[i][i].clone().abs();
        if p > pmax {
            pmax = p.clone();
        }
        if p < pmin {
            pmin = p;
        }
    }
    let ratio = (pmin / &pmax).to_f64();
    if ratio < 2f64.powi(-((prec as i32) / 3) * 2) {
        return Err(Error::IllConditioned { pivot_ratio: ratio });
    }
    let x = lu_solve(&lu, &perm, &rhs, prec);
    let mut coeffs: Vec<Float> = Vec::with_capacity((hi - lo + 1) as usize);
    let mut it = x.into_iter();
    for j in lo..=hi {
        if j == fixed {
            coeffs.push(f(prec, 1.0));
        } else {
            coeffs.push(it.next().unwrap());
        }
    }
    Ok(LaurentPolynomial::new(lo, coeffs))
}

/// Leading/trailing data for index n: (xi^(2n)_n, xi^(2n+1)_{-n-1},
/// nu^(2n)_{-n}, nu^(2n+1)_n), from the Hankel-ratio formulas, with the
/// norm identity xi = 1 / ||pi|| checked internally.
pub struct NormingData {
    pub xi_even: Float,
    pub xi_odd: Float,
    pub nu_even: Float,
    pub nu_odd: Float,
}

pub fn norming_and_trailing(n: usize, table: &MomentTable) -> Result<NormingData> {
    let n_i = n as i64;
    let h_e_num = hankel_det(-2 * n_i, 2 * n, table)?;
    let h_e_den = hankel_det(-2 * n_i, 2 * n + 1, table)?;
    let h_o_den = hankel_det(-2 * n_i - 2, 2 * n + 2, table)?;
    let ratio_e = Float::with_val(table.precision_bits, &h_e_num / &h_e_den);
    let ratio_o = Float::with_val(table.precision_bits, &h_e_den / &h_o_den);
    if !(ratio_e.is_sign_positive() && ratio_o.is_sign_positive()) {
        return Err(Error::HankelRatio);
    }
    let xi_even = ratio_e.sqrt();
    let xi_odd = ratio_o.sqrt();
    let nu_even = hankel_det(-2 * n_i + 1, 2 * n, table)? / &h_e_num;
    let nu_odd = -hankel_det(-2 * n_i - 1, 2 * n + 1, table)? / &h_e_den;
    // consistency: xi = 1/||pi|| from the inner product
    let pe = monic_olp(2 * n, table)?;
    let po = monic_olp(2 * n + 1, table)?;
    let norm_e = table.inner_product(&pe, &pe)?.sqrt();
    let norm_o = table.inner_product(&po, &po)?.sqrt();
    let rel_e = ((xi_even.clone() * norm_e) - 1f64).abs().to_f64();
    let rel_o = ((xi_odd.clone() * norm_o) - 1f64).abs().to_f64();
    if rel_e > 1e-8 || rel_o > 1e-8 {
        return Err(Error::Internal(format!(
            "norming consistency: even {rel_e:e}, odd {rel_o:e}"
        )));
    }
    Ok(NormingData { xi_even, xi_odd, nu_even, nu_odd })
}

/// Recurrence coefficients and banded Laurent-Jacobi truncations.
pub struct RecurrenceData {
    /// beta-natural_m, m = 0..=max_m
    pub beta_nat: Vec<Float>,
    /// lambda-natural_m, m = 1..=max_m (index 0 unused, stores lambda_1 = -c_{-1})
    pub lambda_nat: Vec<Float>,
    /// dense truncations of the tri-penta-diagonal pair
    pub j_mat: Vec<Vec<Float>>,
    pub k_mat: Vec<Vec<Float>>,
    pub size: usize,
}

/// Orthonormal OLP phi_m = xi_m pi_m with positive leading coefficient.
pub fn orthonormal_olp(m: usize, table: &MomentTable) -> Result<LaurentPolynomial> {
    let p = monic_olp(m, table)?;
    let norm = table.inner_product(&p, &p)?.sqrt();
    let prec = table.precision_bits;
    let inv = f(prec, 1.0) / norm;
    let coeffs = p.coeffs().map(|(_, c)| Float::with_val(prec, c * &inv)).collect();
    Ok(LaurentPolynomial::new(p.lo(), coeffs))
}

pub fn recurrence_coefficients(max_m: usize, table: &MomentTable) -> Result<RecurrenceData> {
    let prec = table.precision_bits;
    // singularity scan: vanishing H^(-2m -+ 1) flags a singular index
    let sing_tol = Float::with_val(prec, 2f64).pow_signed(-(prec as i64) / 3);
    for m in 1..=max_m / 2 {
        let m_i = m as i64;
        let h1 = hankel_det(-2 * m_i + 1, 2 * m, table)?;
        let h2 = hankel_det(-2 * m_i - 1, 2 * m + 1, table)?;
        let scale1 = row_norm_scale(-2 * m_i + 1, 2 * m, table)?;
        let scale2 = row_norm_scale(-2 * m_i - 1, 2 * m + 1, table)?;
        if h1.clone().abs() < sing_tol.clone() * scale1 {
            return Err(Error::SingularIndex { m: 2 * m, offset: -2 * m_i + 1, size: 2 * m });
        }
        if h2.clone().abs() < sing_tol.clone() * scale2 {
            return Err(Error::SingularIndex { m: 2 * m + 1, offset: -2 * m_i - 1, size: 2 * m + 1 });
        }
    }
    let mut beta = Vec::with_capacity(max_m + 1);
    let mut lambda = vec![f(prec, 0.0); max_m + 1];
    for m in 0..=max_m {
        let n = m / 2;
        let nd = norming_and_trailing(n, table)?;
        beta.push(if m % 2 == 0 { nd.nu_even } else { nd.nu_odd });
    }
    if max_m >= 1 {
        lambda[1] = -table.get(-1)?.clone();
    }
    for m in 0..=max_m {
        if m < 2 {
            continue;
        }
        let mm = ((m as i64) - 2) / 2; // recurrence index: m = 2mm+2 or 2mm+3
        let m_i = mm;
        if m % 2 == 0 {
            // lambda_{2mm+2} = -H^(-2mm-1)_{2mm+2} H^(-2mm)_{2mm} / (H^(-2mm)_{2mm+1} H^(-2mm-1)_{2mm+1})
            let num = hankel_det(-2 * m_i - 1, (2 * m_i + 2) as usize, table)?
                * hankel_det(-2 * m_i, (2 * m_i) as usize, table)?;
            let den = hankel_det(-2 * m_i, (2 * m_i + 1) as usize, table)?
                * hankel_det(-2 * m_i - 1, (2 * m_i + 1) as usize, table)?;
            lambda[m] = -(num / den);
        } else {
            // lambda_{2mm+3}: shift mm -> mm+1 in the odd formula
            // lambda_{2m'+1} = -H^(-2m'-1)_{2m'+1} H^(-2m'+2)_{2m'-1} / (H^(-2m')_{2m'} H^(-2m'+1)_{2m'})
            let mp = m_i + 1;
            let num = hankel_det(-2 * mp - 1, (2 * mp + 1) as usize, table)?
                * hankel_det(-2 * mp + 2, (2 * mp - 1) as usize, table)?;
            let den = hankel_det(-2 * mp, (2 * mp) as usize, table)?
                * hankel_det(-2 * mp + 1, (2 * mp) as usize, table)?;
            lambda[m] = -(num / den);
        }
    }
    // Laurent-Jacobi truncations from inner products against the orthonormal family.
    let size = max_m + 1;
    let phis: Vec<LaurentPolynomial> =
        (0..size).map(|m| orthonormal_olp(m, table)).collect::<Result<Vec<_>>>()?;
    let shift = |p: &LaurentPolynomial, by: i64| -> LaurentPolynomial {
        LaurentPolynomial::new(p.lo() + by, p.coeffs().map(|(_, c)| c.clone()).collect())
    };
    let mut j_mat = vec![vec![f(prec, 0.0); size]; size];
    let mut k_mat = vec![vec![f(prec, 0.0); size]; size];
    for i in 0..size {
        let zp = shift(&phis[i], 1);
        let zm = shift(&phis[i], -1);
        for j in 0..size {
            if (i as i64 - j as i64).abs() <= 2 {
                j_mat[i][j] = table.inner_product(&zp, &phis[j])?;
                k_mat[i][j] = table.inner_product(&zm, &phis[j])?;
            }
        }
    }
    Ok(RecurrenceData { beta_nat: beta, lambda_nat: lambda, j_mat, k_mat, size })
}

fn row_norm_scale(m: i64, k: usize, table: &MomentTable) -> Result<Float> {
    let prec = table.precision_bits;
    if k == 0 {
        return Ok(f(prec, 1.0));
    }
    let mut prod = f(prec, 1.0);
    for i in 0..k {
        let mut norm = f(prec, 0.0);
        for j in 0..k {
            norm += table.get(m + (i + j) as i64)?.clone().square();
        }
        prod *= norm.sqrt();
    }
    Ok(prod)
}

trait PowSigned {
    fn pow_signed(self, k: i64) -> Self;
}

impl PowSigned for Float {
    fn pow_signed(self, k: i64) -> Self {
        use rug::ops::Pow;
        self.pow(k as i32)
    }
}

/// Max interior residual of J K - I over indices at band distance >= bandwidth
/// from the truncation edge. Sizes below the bandwidth have an empty interior
/// and report zero.
pub fn laurent_jacobi_check(rec: &RecurrenceData, prec: u32) -> Float {
    let s = rec.size;
    let bw = 2usize;
    if s <= 2 * bw + 1 {
        return f(prec, 0.0);
    }
    let interior = s - bw;
    let mut worst = f(prec, 0.0);
    for i in 0..interior {
        for j in 0..interior {
            let mut acc = f(prec, 0.0);
            for k in 0..s {
                acc += Float::with_val(prec, &rec.j_mat[i][k] * &rec.k_mat[k][j]);
            }
            if i == j {
                acc -= 1f64;
            }
            let a = acc.abs();
            if a > worst {
                worst = a;
            }
        }
    }
    worst
}

/// Zeros of the ordinary polynomial z^(m or m+1) pi(z): companion-matrix
/// eigenvalues in f64, then Newton polish at table precision. Checks realness,
/// simplicity, nonvanishing, and the expected count.
pub fn olp_zeros(p: &LaurentPolynomial, prec: u32) -> Result<Vec<Float>> {
    // ordinary polynomial coefficients: multiply by z^{-lo}
    let coes: Vec<Float> = p.coeffs().map(|(_, c)| c.clone()).collect();
    let deg = coes.len() - 1;
    let lead = coes[deg].clone();
    if lead.is_zero() {
        return Err(Error::ZeroFinding("zero leading coefficient".into()));
    }
    // companion matrix in f64 (normalized by leading coefficient)
    let mut comp = nalgebra::DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -(coes[i].to_f64() / lead.to_f64());
    }
    let eig = comp.complex_eigenvalues();
    let mut roots: Vec<Float> = Vec::with_capacity(deg);
    for lam in eig.iter() {
        if lam.im.abs() > 1e-6 * (1.0 + lam.re.abs()) {
            return Err(Error::ZeroFinding(format!("complex root {lam}")));
        }
        // Newton polish at extended precision
        let mut x = f(prec, lam.re);
        for _ in 0..64 {
            let (v, d) = poly_eval_dual(&coes, &x, prec);
            if d.is_zero() {
                break;
            }
            let step = v / d;
            let done = step.clone().abs().to_f64() < 1e-3 * 2f64.powi(-(prec as i32) / 2) * (1.0 + x.to_f64().abs());
            x -= step;
            if done {
                break;
            }
        }
        roots.push(x);
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for w in roots.windows(2) {
        let gap = Float::with_val(prec, &w[1] - &w[0]).abs().to_f64();
        if gap < 1e-10 * (1.0 + w[0].to_f64().abs()) {
            return Err(Error::ZeroFinding("repeated root".into()));
        }
    }
    if roots.iter().any(|r| r.clone().abs().to_f64() < 1e-12) {
        return Err(Error::ZeroFinding("root at origin".into()));
    }
    Ok(roots)
}

fn poly_eval_dual(coes: &[Float], x: &Float, prec: u32) -> (Float, Float) {
    let mut v = f(prec, 0.0);
    let mut d = f(prec, 0.0);
    for c in coes.iter().rev() {
        d = d * x + &v;
        v = v * x + c;
    }
    (v, d)
}

/// Cauchy-type transform z * integral of (s pi(s)) e^{-nV(s)} / (s (s - z)) ds / (2 pi i),
/// the (1 2)-entry of the odd-degree Riemann-Hilbert solution, evaluated by the
/// same substitution-based quadrature as the moments.
pub fn cauchy_transform(
    z: num_complex::Complex64,
    p: &LaurentPolynomial,
    table: &MomentTable,
) -> Result<num_complex::Complex64> {
    if z.im.abs() < 1e-8 {
        return Err(Error::AxisProximity { imag: z.im });
    }
    let prec = table.precision_bits.min(320);
    let rule = MpRule::new(32, prec);
    let n = table.n;
    let field = table.field().clone();
    let zc = MpComplex::from_f64(prec, z.re, z.im);
    let mut total = MpComplex::zero(prec);
    let mut err_total = f(prec, 0.0);
    let kmax = p.hi().abs().max(p.lo().abs()) + 1;
    for sigma in [1.0f64, -1.0] {
        let eff = if sigma < 0.0 { field.reflected() } else { field.clone() };
        let drop = (prec as f64 / 2.0 + 60.0) * std::f64::consts::LN_2;
        // widen by the largest monomial growth in |P|
        let (lo, hi, peak) = super::moments::decay_window_pub(&eff, n, kmax, drop);
        let (lo2, hi2, peak2) = super::moments::decay_window_pub(&eff, n, -kmax, drop);
        let lo = lo.min(lo2);
        let hi = hi.max(hi2);
        let peak = peak.max(peak2);
        let peak_mp = f(prec, peak);
        let scale = peak_mp.clone().exp();
        let nf = f(prec, n as f64);
        let (val, err) = rule.adaptive_complex(&f(prec, lo), &f(prec, hi), prec - 32, |u| {
            // s = sigma e^u, ds = sigma e^u du; integrand P(s) e^{-nV(s)} s / (s (s-z)) ds
            //   = P(s) e^{-nV(s)} / (s - z) * sigma e^u du
            let s_abs = u.clone().exp();
            let s = f(prec, sigma) * &s_abs;
            let w = eff.value_mp(&s_abs, prec);
            let damp = (-nf.clone() * w - &peak_mp).exp();
            let pv = p.eval_mp(&s);
            let den = MpComplex::new(s.clone() - &zc.re, -zc.im.clone());
            let num = MpComplex::new(pv * &damp * f(prec, sigma) * &s_abs, f(prec, 0.0));
            num / den
        });
        total = total + val.scale(&scale);
        err_total += err * &scale;
    }
    // prefactor z / (2 pi i)
    let two_pi = 2.0 * std::f64::consts::PI;
    let pref = z / num_complex::Complex64::new(0.0, two_pi);
    let raw = total.to_c64();
    let _ = err_total;
    Ok(pref * raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::LaurentField;

    fn zsq() -> LaurentField {
        LaurentField::from_pairs(&[(2, 1.0), (-2, 1.0)]).unwrap()
    }

    fn table(n: u32, half: i64) -> MomentTable {
        MomentTable::build(&zsq(), n, -half, half, 160).unwrap()
    }

    #[test]
    fn hankel_small_cases() {
        let t = table(1, 6);
        assert_eq!(hankel_det(0, 0, &t).unwrap().to_f64(), 1.0);
        assert_eq!(hankel_det(3, 1, &t).unwrap(), *t.get(3).unwrap());
        // 2x2: H^(-2)_2 = c_{-2} c_0 - c_{-1}^2
        let h = hankel_det(-2, 2, &t).unwrap();
        let want = t.get(-2).unwrap().clone() * t.get(0).unwrap() - t.get(-1).unwrap().clone().square();
        let diff = (h - want).abs().to_f64();
        assert!(diff < 1e-40);
    }

    #[test]
    fn monic_olp_base_cases() {
        let t = table(1, 8);
        let p0 = monic_olp(0, &t).unwrap();
        assert_eq!(p0.lo(), 0);
        assert_eq!(p0.coeff(0).to_f64(), 1.0);
        // symmetric field: pi_1(z) = z^{-1}
        let p1 = monic_olp(1, &t).unwrap();
        assert_eq!(p1.coeff(-1).to_f64(), 1.0);
        assert!(p1.coeff(0).to_f64().abs() < 1e-40);
    }

    #[test]
    fn orthogonality_residuals() {
        let t = table(2, 10);
        let p3 = monic_olp(3, &t).unwrap();
        for j in -1..=1 {
            let r = t.inner_product_monomial(&p3, j).unwrap().abs().to_f64();
            assert!(r < 1e-38, "residual <pi_3, z^{j}> = {r:e}");
        }
    }

    #[test]
    fn norming_matches_definition() {
        let t = table(1, 8);
        let nd = norming_and_trailing(0, &t).unwrap();
        assert!((nd.xi_even.to_f64() - 1.0 / t.get(0).unwrap().to_f64().sqrt()).abs() < 1e-15);
        // xi^(1)_{-1} = (c_0 / (c_{-2} c_0 - c_{-1}^2))^{1/2}
        let c0 = t.get(0).unwrap().to_f64();
        let cm2 = t.get(-2).unwrap().to_f64();
        let cm1 = t.get(-1).unwrap().to_f64();
        let want = (c0 / (cm2 * c0 - cm1 * cm1)).sqrt();
        assert!((nd.xi_odd.to_f64() - want).abs() / want < 1e-12);
        // symmetric field: nu^(1)_0 = 0 (odd moments vanish)
        assert!(nd.nu_odd.to_f64().abs() < 1e-30);
    }

    #[test]
    fn symmetric_field_flags_singular_index() {
        let t = table(2, 12);
        match recurrence_coefficients(4, &t) {
            Err(Error::SingularIndex { .. }) => {}
            other => panic!("expected singular index for even field, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn zeros_of_pi1_with_shift() {
        // asymmetric field so pi_1 has a nonzero trailing coefficient
        let v = LaurentField::from_pairs(&[(2, 1.0), (1, 0.3), (-2, 1.0)]).unwrap();
        let t = MomentTable::build(&v, 1, -8, 8, 160).unwrap();
        let p1 = monic_olp(1, &t).unwrap();
        let nu = p1.coeff(0);
        let zs = olp_zeros(&p1, 160).unwrap();
        assert_eq!(zs.len(), 1);
        let want = -1.0 / nu.to_f64();
        assert!((zs[0].to_f64() - want).abs() < 1e-10 * want.abs());
    }
}
