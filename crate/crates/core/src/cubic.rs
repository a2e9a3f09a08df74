//! Closed forms for `p = 2`, `a_0 = 0`, with the symbol built from two
//! prescribed negative critical points: coefficients, branch points, the
//! Cardano expression for `z_0` and the cube-root densities of `rho_1` and
//! `rho_2`. Used as an oracle for the generic pipeline.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::symbol::{build_symbol, SymbolCoeffs};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicParams {
    pub x1: f64,
    pub x2: f64,
}

#[derive(Clone, Debug)]
pub struct CubicSymbol {
    pub params: CubicParams,
    pub sym: SymbolCoeffs,
    pub a1: f64,
    pub a2: f64,
    /// `lambda_1 = r(x_1)`, `lambda_2 = r(x_2)`, `lambda_3 = r(-x_1 - x_2)`.
    pub lambda: [f64; 3],
}

fn validate(p: CubicParams) -> Result<()> {
    if !(p.x1.is_finite() && p.x2.is_finite()) || p.x1 >= p.x2 || p.x2 >= 0.0 {
        return Err(Error::BadOrdering);
    }
    Ok(())
}

/// `a_1 = x_1^2 + x_2^2 + x_1 x_2`, `a_2 = -x_1 x_2 (x_1 + x_2) / 2`.
pub fn cubic_build(params: CubicParams) -> Result<CubicSymbol> {
    validate(params)?;
    let CubicParams { x1, x2 } = params;
    let a1 = x1 * x1 + x2 * x2 + x1 * x2;
    let a2 = -x1 * x2 * (x1 + x2) / 2.0;
    let sym = build_symbol(2, &[0.0, a1, a2])?;
    let lambda = [
        (4.0 * x1 * x1 + x2 * x2 + x1 * x2) / (2.0 * x1),
        (4.0 * x2 * x2 + x1 * x1 + x1 * x2) / (2.0 * x2),
        -(4.0 * x1 * x1 + 4.0 * x2 * x2 + 7.0 * x1 * x2) / (2.0 * (x1 + x2)),
    ];
    Ok(CubicSymbol { params, sym, a1, a2, lambda })
}

impl CubicSymbol {
    pub fn k1(&self, lambda: Complex64) -> Complex64 {
        let (a1, a2) = (self.a1, self.a2);
        36.0 * a1 * a2 * lambda + 8.0 * a1.powi(3) + 108.0 * a2 * a2
    }

    pub fn k2(&self, lambda: Complex64) -> Complex64 {
        let [l1, l2, l3] = self.lambda;
        -4.0 * self.a2 * (lambda - l1) * (lambda - l2) * (lambda - l3)
    }

    pub fn l(&self, lambda: Complex64) -> Complex64 {
        4.0 * (3.0 * self.a2 * lambda + self.a1 * self.a1)
    }

    /// `(k_1 / (6 a_2)^3, l / (36 a_2^2))` at a real point.
    fn kl_real(&self, x: f64) -> (f64, f64) {
        let c = Complex64::new(x, 0.0);
        (self.k1(c).re / (6.0 * self.a2).powi(3), self.l(c).re / (36.0 * self.a2 * self.a2))
    }
}

fn principal_cbrt(w: Complex64) -> Complex64 {
    if w == Complex64::new(0.0, 0.0) {
        w
    } else {
        (w.ln() / 3.0).exp()
    }
}

/// The three values of `(u + l/u)/(6 a_2) - a_1/(3 a_2)` with
/// `u = (-k_1 + 12 sqrt(3) a_2 sqrt(k_2))^{1/3}` over the three cube roots,
/// starting from the principal one.
pub fn cardano_roots(params: CubicParams, lambda: Complex64) -> Result<[Complex64; 3]> {
    let c = cubic_build(params)?;
    let scale = c.lambda.iter().fold(1.0f64, |m, l| m.max(l.abs()));
    if c.lambda.iter().any(|&l| (lambda - l).norm() <= 1e-12 * scale) {
        return Err(Error::BranchPointHit);
    }
    let u0 = principal_cbrt(-c.k1(lambda) + 12.0 * 3f64.sqrt() * c.a2 * c.k2(lambda).sqrt());
    if u0.norm() == 0.0 {
        return Err(Error::BranchPointHit);
    }
    let l = c.l(lambda);
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for (m, slot) in out.iter_mut().enumerate() {
        let u = u0 * Complex64::from_polar(1.0, 2.0 * PI * m as f64 / 3.0);
        *slot = (u + l / u) / (6.0 * c.a2) - c.a1 / (3.0 * c.a2);
    }
    Ok(out)
}

/// `z_0(lambda)` from the Cardano expression. The principal cube root gives
/// `z_0` only on part of the plane (at `lambda = 10` it yields another root),
/// so the cube root whose value has the smallest modulus is taken.
pub fn cubic_z0(params: CubicParams, lambda: Complex64) -> Result<Complex64> {
    let r = cardano_roots(params, lambda)?;
    Ok(*r.iter().min_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap())
}

fn cut_check(k: usize, lo: f64, hi: f64, x: f64) -> Result<()> {
    if !(x > lo && x < hi) {
        return Err(Error::NotInCut { cut: k, x });
    }
    Ok(())
}

/// Density of `rho_1` on `Gamma_1 = [lambda_1, lambda_3]`:
/// `(sqrt(3) / (2 pi)) (A^{1/3} - B^{1/3})` with
/// `A, B = K +- sqrt(K^2 - L^3)`, `K = k_1/(6 a_2)^3`, `L = l/(36 a_2^2)`.
pub fn cubic_rho1_density(params: CubicParams, x: f64) -> Result<f64> {
    let c = cubic_build(params)?;
    cut_check(1, c.lambda[0], c.lambda[2], x)?;
    let (k, l) = c.kl_real(x);
    let s = (k * k - l.powi(3)).max(0.0).sqrt();
    Ok(3f64.sqrt() / (2.0 * PI) * ((k + s).cbrt() - (k - s).cbrt()))
}

/// Density of `rho_2` on `Gamma_2 = (-inf, lambda_2]`:
/// `-(sqrt(3) / (2 pi (x - lambda_2))) ((-K + S)^{1/3} + (K + S)^{1/3})`,
/// `S = sqrt(K^2 - L^3)`.
pub fn cubic_rho2_density(params: CubicParams, x: f64) -> Result<f64> {
    let c = cubic_build(params)?;
    cut_check(2, f64::NEG_INFINITY, c.lambda[1], x)?;
    let (k, l) = c.kl_real(x);
    let s = (k * k - l.powi(3)).max(0.0).sqrt();
    Ok(-3f64.sqrt() / (2.0 * PI * (x - c.lambda[1])) * ((s - k).cbrt() + (k + s).cbrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branches::{rho_density, solve_branches};
    use crate::symbol::critical_structure;

    const P: CubicParams = CubicParams { x1: -2.0, x2: -1.0 };

    #[test]
    fn canonical_parameters() {
        let c = cubic_build(P).unwrap();
        assert_eq!((c.a1, c.a2), (7.0, 3.0));
        assert_eq!(c.lambda[0], -4.75);
        assert_eq!(c.lambda[1], -5.0);
        assert!((c.lambda[2] - 17.0 / 3.0).abs() < 1e-15);
        let cs = critical_structure(&c.sym).unwrap();
        let mut got = cs.lambda.clone();
        let mut want = c.lambda.to_vec();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
        let mut xs = cs.x.clone();
        xs.sort_by(f64::total_cmp);
        for (g, w) in xs.iter().zip([-2.0, -1.0, 3.0]) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn bad_ordering() {
        assert_eq!(cubic_build(CubicParams { x1: -1.0, x2: -2.0 }).unwrap_err(), Error::BadOrdering);
        assert_eq!(cubic_build(CubicParams { x1: -1.0, x2: 0.5 }).unwrap_err(), Error::BadOrdering);
    }

    #[test]
    fn z0_against_generic_solver() {
        let c = cubic_build(P).unwrap();
        for lam in [Complex64::new(10.0, 0.0), Complex64::new(-2.0, 3.0), Complex64::new(30.0, -40.0)] {
            let want = solve_branches(&c.sym, lam).unwrap().z[0];
            let got = cubic_z0(P, lam).unwrap();
            assert!((got - want).norm() < 1e-10 * want.norm(), "{lam}: {got} vs {want}");
            let conj = cubic_z0(P, lam.conj()).unwrap();
            assert!((conj - got.conj()).norm() < 1e-12 * got.norm());
        }
        let far = cubic_z0(P, Complex64::new(1e6, 0.0)).unwrap();
        assert!((far.re * 1e6 - 1.0).abs() < 1e-5);
        assert_eq!(cubic_z0(P, Complex64::new(-5.0, 0.0)).unwrap_err(), Error::BranchPointHit);
        // the principal branch alone is not z_0 everywhere
        let pr = cardano_roots(P, Complex64::new(10.0, 0.0)).unwrap()[0];
        assert!((pr - cubic_z0(P, Complex64::new(10.0, 0.0)).unwrap()).norm() > 0.1);
    }

    #[test]
    fn densities_against_generic() {
        for i in 1..20 {
            let x = -4.75 + (17.0 / 3.0 + 4.75) * i as f64 / 20.0;
            let a = cubic_rho1_density(P, x).unwrap();
            let b = rho_density(&cubic_build(P).unwrap().sym, 1, x).unwrap();
            assert!((a - b).abs() < 1e-8 * b.abs().max(1e-3), "x={x}: {a} vs {b}");
        }
        for x in [-5.1, -6.0, -10.0, -100.0] {
            let a = cubic_rho2_density(P, x).unwrap();
            let b = rho_density(&cubic_build(P).unwrap().sym, 2, x).unwrap();
            assert!((a - b).abs() < 1e-8 * b.abs(), "x={x}: {a} vs {b}");
        }
        assert!(matches!(cubic_rho1_density(P, 6.0), Err(Error::NotInCut { .. })));
        assert!(matches!(cubic_rho2_density(P, -4.9), Err(Error::NotInCut { .. })));
    }

    #[test]
    fn rho2_inverse_square_root_at_branch_point() {
        let d1 = cubic_rho2_density(P, -5.0 - 1e-6).unwrap();
        let d2 = cubic_rho2_density(P, -5.0 - 1e-8).unwrap();
        assert!(((d2 / d1) - 10.0).abs() < 0.01, "{}", d2 / d1);
    }

    #[test]
    fn k_signs_on_gamma1() {
        let c = cubic_build(P).unwrap();
        for i in 1..50 {
            let x = Complex64::new(-4.75 + (17.0 / 3.0 + 4.75) * i as f64 / 50.0, 0.0);
            assert!(c.k2(x).re >= 0.0);
            assert!(c.k1(x).re > 0.0);
        }
    }
}
