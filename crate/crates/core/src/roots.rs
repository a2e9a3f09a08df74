//! Simultaneous polynomial root finding (Aberth–Ehrlich).
//!
//! Initial approximations are placed on circles whose radii come from the
//! upper convex hull of `(i, log|c_i|)` (the Newton polygon), so roots of
//! widely different magnitude start on the right scale.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 500;

/// Horner evaluation of `p(z)` and `p'(z)` for ascending coefficients.
pub fn eval_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

fn newton_polygon_radii(coeffs: &[Complex64]) -> Vec<f64> {
    let deg = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    // upper hull, monotone chain
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &pt in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            let cross = (i2 as f64 - i1 as f64) * (pt.1 - y1) - (y2 - y1) * (pt.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let mut radii = Vec::with_capacity(deg);
    for w in hull.windows(2) {
        let (i, yi) = w[0];
        let (k, yk) = w[1];
        let r = ((yi - yk) / (k - i) as f64).exp();
        radii.extend(std::iter::repeat_n(r, k - i));
    }
    // zero low-order coefficients mean roots at the origin; the caller never
    // passes those, but keep the count right
    while radii.len() < deg {
        radii.insert(0, f64::MIN_POSITIVE);
    }
    radii
}

/// All roots of `sum c_i z^i` (ascending coefficients, nonzero leading and
/// constant terms).
pub fn aberth(coeffs: &[Complex64], rel_tol: f64) -> Result<Vec<Complex64>> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    if deg == 1 {
        return Ok(vec![-coeffs[0] / coeffs[1]]);
    }
    let radii = newton_polygon_radii(coeffs);
    let mut z: Vec<Complex64> = radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / deg as f64 + 0.4;
            Complex64::from_polar(r, theta)
        })
        .collect();
    let mut converged = vec![false; deg];
    for _ in 0..MAX_ITERATIONS {
        let mut all_done = true;
        for i in 0..deg {
            if converged[i] {
                continue;
            }
            let (p, dp) = eval_with_derivative(coeffs, z[i]);
            // backward-error stop: the residual is at rounding level
            let zn = z[i].norm();
            let bound: f64 = coeffs.iter().rev().fold(0.0, |acc, c| acc * zn + c.norm());
            if p.norm() <= 4.0 * f64::EPSILON * bound {
                converged[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&j| j != i)
                .map(|j| (z[i] - z[j]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.re.is_finite() || !step.im.is_finite() {
                // nudge off a coincidence and retry
                z[i] *= Complex64::new(1.0 + 1e-7, 1e-7);
                all_done = false;
                continue;
            }
            z[i] -= step;
            if step.norm() <= rel_tol * z[i].norm() {
                converged[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Ok(z);
        }
    }
    Err(Error::ConvergenceFailure { iterations: MAX_ITERATIONS })
}

/// Roots of a real polynomial (ascending coefficients).
pub fn aberth_real(coeffs: &[f64], rel_tol: f64) -> Result<Vec<Complex64>> {
    let c: Vec<Complex64> = coeffs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    aberth(&c, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        v.into_iter().map(|c| c.re).collect()
    }

    #[test]
    fn cubic_with_known_roots() {
        // (z+2)(z+1)(z-3) = z^3 - 7z - 6
        let r = aberth_real(&[-6.0, -7.0, 0.0, 1.0], 1e-15).unwrap();
        let re = sorted_re(r);
        for (got, want) in re.iter().zip([-2.0, -1.0, 3.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn widely_separated_magnitudes() {
        // roots 1e-6, 1e3, -1e3 scaled
        let r1 = 1e-6;
        let r2 = 1e3;
        let r3 = -2e3;
        let c = [
            -r1 * r2 * r3,
            r1 * r2 + r1 * r3 + r2 * r3,
            -(r1 + r2 + r3),
            1.0,
        ];
        let re = sorted_re(aberth_real(&c, 1e-15).unwrap());
        assert!((re[0] - r3).abs() < 1e-9 * r3.abs());
        assert!((re[1] - r1).abs() < 1e-9 * r1);
        assert!((re[2] - r2).abs() < 1e-9 * r2);
    }

    #[test]
    fn complex_roots_of_unity() {
        let mut c = vec![Complex64::new(0.0, 0.0); 7];
        c[0] = Complex64::new(-1.0, 0.0);
        c[6] = Complex64::new(1.0, 0.0);
        let r = aberth(&c, 1e-15).unwrap();
        for z in r {
            assert!((z.powu(6) - 1.0).norm() < 1e-13);
        }
    }
}
