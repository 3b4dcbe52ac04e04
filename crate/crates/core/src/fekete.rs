//! Weighted Fekete configurations: finite point sets minimising the discrete
//! energy whose continuum limit is the equilibrium measure. Used as an
//! independent oracle for the support solver.

use crate::equilibrium::EquilibriumMeasure;
use crate::field::LaurentField;
use crate::{Error, Result};

/// Discrete energy
///   E(x) = (1/(2m(2m+1))) sum_{j != k} [ -(2+1/n) ln|x_j - x_k| + ln|x_j x_k| ]
///        + (2/(2m+1)) sum_i V(x_i),
/// the kernel being ln(|x_j - x_k|^{1+1/n} |x_k^{-1} - x_j^{-1}|)^{-1} expanded.
pub fn energy(field: &LaurentField, n: u32, points: &[f64]) -> f64 {
    let count = points.len();
    let m = (count - 1) / 2;
    let c = 2.0 + 1.0 / n as f64;
    let norm = 1.0 / (2.0 * m as f64 * (2.0 * m as f64 + 1.0));
    let mut pair = 0.0;
    for j in 0..count {
        for k in 0..count {
            if j != k {
                pair += -c * (points[j] - points[k]).abs().ln()
                    + points[j].abs().ln()
                    + points[k].abs().ln();
            }
        }
    }
    let fieldsum: f64 = points.iter().map(|&x| field.value(x)).sum();
    norm * pair + 2.0 / (2.0 * m as f64 + 1.0) * fieldsum
}

fn gradient(field: &LaurentField, n: u32, points: &[f64], grad: &mut [f64]) {
    let count = points.len();
    let m = (count - 1) / 2;
    let c = 2.0 + 1.0 / n as f64;
    let norm = 1.0 / (2.0 * m as f64 * (2.0 * m as f64 + 1.0));
    for i in 0..count {
        let mut g = 0.0;
        for k in 0..count {
            if k != i {
                g += -2.0 * c / (points[i] - points[k]);
            }
        }
        g += 4.0 * m as f64 / points[i];
        grad[i] = norm * g + 2.0 / (2.0 * m as f64 + 1.0) * field.derivative(points[i]);
    }
}

/// Local minimiser of the discrete energy: damped gradient descent with a
/// sign-crossing guard, then a damped Newton polish on the full Hessian.
/// `count` should be odd (a 2m+1 configuration).
pub fn fekete_points(field: &LaurentField, n: u32, count: usize, init: &[f64]) -> Result<Vec<f64>> {
    assert!(count >= 3, "need at least 3 points");
    assert_eq!(init.len(), count);
    let mut x: Vec<f64> = init.to_vec();
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    check_config(&x)?;
    let mut grad = vec![0.0; count];
    let mut step = 1e-2;
    let mut e = energy(field, n, &x);
    for _ in 0..4000 {
        gradient(field, n, &x, &mut grad);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-6 {
            break;
        }
        let mut advanced = false;
        for _ in 0..40 {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(&xi, &gi)| xi - step * gi).collect();
            if check_config(&trial).is_ok() {
                let et = energy(field, n, &trial);
                if et < e {
                    x = trial;
                    e = et;
                    step *= 1.3;
                    advanced = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    // Newton polish
    for _ in 0..60 {
        gradient(field, n, &x, &mut grad);
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm <= 1e-9 {
            break;
        }
        let hess = hessian(field, n, &x);
        let mut hm = nalgebra::DMatrix::<f64>::zeros(count, count);
        for i in 0..count {
            for j in 0..count {
                hm[(i, j)] = hess[i][j];
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(&grad);
        let Some(delta) = hm.lu().solve(&rhs) else { break };
        let mut damping = 1.0;
        let mut advanced = false;
        for _ in 0..30 {
            let trial: Vec<f64> =
                x.iter().enumerate().map(|(i, &xi)| xi - damping * delta[i]).collect();
            if check_config(&trial).is_ok() {
                let mut gtrial = vec![0.0; count];
                gradient(field, n, &trial, &mut gtrial);
                let gt = gtrial.iter().map(|g| g * g).sum::<f64>().sqrt();
                if gt < gnorm {
                    x = trial;
                    advanced = true;
                    break;
                }
            }
            damping *= 0.5;
        }
        if !advanced {
            break;
        }
    }
    gradient(field, n, &x, &mut grad);
    let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if gnorm > 1e-8 {
        return Err(Error::NoConvergence { residual: gnorm, iters: 4000 });
    }
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(x)
}

fn hessian(field: &LaurentField, n: u32, x: &[f64]) -> Vec<Vec<f64>> {
    let count = x.len();
    let m = (count - 1) / 2;
    let c = 2.0 + 1.0 / n as f64;
    let norm = 1.0 / (2.0 * m as f64 * (2.0 * m as f64 + 1.0));
    let mut h = vec![vec![0.0; count]; count];
    for i in 0..count {
        let mut diag = -4.0 * m as f64 / (x[i] * x[i]);
        for k in 0..count {
            if k != i {
                let d = x[i] - x[k];
                diag += 2.0 * c / (d * d);
                h[i][k] = -norm * 2.0 * c / (d * d);
            }
        }
        // second derivative of the field term
        let eps = 1e-6 * x[i].abs().max(1.0);
        let d2v = (field.derivative(x[i] + eps) - field.derivative(x[i] - eps)) / (2.0 * eps);
        h[i][i] = norm * diag + 2.0 / (2.0 * m as f64 + 1.0) * d2v;
    }
    h
}

fn check_config(x: &[f64]) -> Result<()> {
    for w in x.windows(2) {
        if (w[1] - w[0]).abs() < 1e-12 {
            return Err(Error::DegenerateConfiguration("point collision".into()));
        }
        if w[1] < w[0] {
            return Err(Error::DegenerateConfiguration("ordering flipped".into()));
        }
    }
    if x.iter().any(|&xi| xi.abs() < 1e-12) {
        return Err(Error::DegenerateConfiguration("point crossed the origin".into()));
    }
    Ok(())
}

/// Kolmogorov distance between the empirical CDF of the configuration and the
/// equilibrium-measure CDF.
pub fn kolmogorov_distance(points: &[f64], measure: &EquilibriumMeasure) -> f64 {
    let m = points.len() as f64;
    let mut worst: f64 = 0.0;
    for (i, &x) in points.iter().enumerate() {
        let cdf = 1.0 - measure.mass_right_of(x);
        let lo = i as f64 / m;
        let hi = (i + 1) as f64 / m;
        worst = worst.max((cdf - lo).abs()).max((cdf - hi).abs());
    }
    worst
}

/// Equally-spaced-quantile initial configuration drawn from the solved measure,
/// used both to seed the optimiser and as the energy comparison baseline.
pub fn quantile_init(measure: &EquilibriumMeasure, count: usize) -> Vec<f64> {
    let total: f64 = measure.band_masses.iter().sum();
    let b0 = measure.support.endpoints[0];
    let amax = *measure.support.endpoints.last().unwrap();
    let cdf = |x: f64| total - measure.mass_right_of(x);
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let target = total * (i as f64 + 0.5) / count as f64;
        let (mut lo, mut hi) = (b0, amax);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = 0.5 * (lo + hi);
        // nudge off a gap plateau into the nearest band interior
        if measure.support.band_index_of(x).is_none() {
            let mut best = f64::INFINITY;
            let mut snap = x;
            for &(b, a) in &measure.support.bands() {
                for cand in [b + 1e-6 * (a - b), a - 1e-6 * (a - b)] {
                    if (cand - x).abs() < best {
                        best = (cand - x).abs();
                        snap = cand;
                    }
                }
            }
            x = snap;
        }
        points.push(x);
    }
    points
}
