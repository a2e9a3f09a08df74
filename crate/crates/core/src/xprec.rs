//! Fixed-point extended precision complex arithmetic.
//!
//! Values are `m * 2^-FRAC_BITS` with arbitrary-size integer mantissas, so
//! every `f64` converts exactly and absolute precision is about 1e-190.
//! Used where double precision cancels completely: Hermite–Padé remainders
//! at large `lambda` and ratio errors at large `n`.

use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::symbol::SymbolCoeffs;

pub const FRAC_BITS: u64 = 640;

#[derive(Clone, Debug, PartialEq)]
pub struct XComplex {
    re: BigInt,
    im: BigInt,
}

fn fixed_from_f64(x: f64) -> BigInt {
    assert!(x.is_finite(), "non-finite value in extended precision");
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(mant) * sign;
    let shift = e + FRAC_BITS as i64;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

fn fixed_to_f64(m: &BigInt) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let bits = m.bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (m.abs() >> drop as usize).to_f64().unwrap_or(f64::INFINITY);
    let e = drop - FRAC_BITS as i64;
    // split the scaling so that intermediate powers stay representable
    let mag = top * 2f64.powi((e / 2) as i32) * 2f64.powi((e - e / 2) as i32);
    if m.is_negative() {
        -mag
    } else {
        mag
    }
}

impl XComplex {
    pub fn zero() -> Self {
        XComplex { re: BigInt::zero(), im: BigInt::zero() }
    }

    pub fn from_f64(x: f64) -> Self {
        XComplex { re: fixed_from_f64(x), im: BigInt::zero() }
    }

    pub fn from_c64(z: Complex64) -> Self {
        XComplex { re: fixed_from_f64(z.re), im: fixed_from_f64(z.im) }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(fixed_to_f64(&self.re), fixed_to_f64(&self.im))
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// Modulus as `f64` (exact up to the final rounding).
    pub fn norm(&self) -> f64 {
        let sq = &self.re * &self.re + &self.im * &self.im;
        let r = sq.sqrt();
        fixed_to_f64(&r)
    }

    pub fn div(&self, other: &XComplex) -> XComplex {
        let den = &other.re * &other.re + &other.im * &other.im;
        assert!(!den.is_zero(), "division by zero in extended precision");
        let nre = &self.re * &other.re + &self.im * &other.im;
        let nim = &self.im * &other.re - &self.re * &other.im;
        XComplex {
            re: (nre << FRAC_BITS as usize) / &den,
            im: (nim << FRAC_BITS as usize) / &den,
        }
    }

    pub fn powu(&self, k: u32) -> XComplex {
        let mut acc = XComplex::from_f64(1.0);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }
}

impl<'a> Add<&'a XComplex> for &'a XComplex {
    type Output = XComplex;
    fn add(self, o: &XComplex) -> XComplex {
        XComplex { re: &self.re + &o.re, im: &self.im + &o.im }
    }
}

impl<'a> Sub<&'a XComplex> for &'a XComplex {
    type Output = XComplex;
    fn sub(self, o: &XComplex) -> XComplex {
        XComplex { re: &self.re - &o.re, im: &self.im - &o.im }
    }
}

impl<'a> Mul<&'a XComplex> for &'a XComplex {
    type Output = XComplex;
    fn mul(self, o: &XComplex) -> XComplex {
        let re = (&self.re * &o.re - &self.im * &o.im) >> FRAC_BITS as usize;
        let im = (&self.re * &o.im + &self.im * &o.re) >> FRAC_BITS as usize;
        XComplex { re, im }
    }
}

impl Neg for XComplex {
    type Output = XComplex;
    fn neg(self) -> XComplex {
        XComplex { re: -self.re, im: -self.im }
    }
}

/// `z_0(lambda)` to extended precision: Newton on
/// `a_p z^{p+1} + ... + a_1 z^2 + (a_0 - lambda) z + 1` started from the
/// double-precision root `seed`.
pub fn z0_extended(sym: &SymbolCoeffs, lambda: Complex64, seed: Complex64) -> XComplex {
    let a = sym.coeffs();
    let mut c: Vec<XComplex> = Vec::with_capacity(a.len() + 1);
    c.push(XComplex::from_f64(1.0));
    c.push(&XComplex::from_f64(a[0]) - &XComplex::from_c64(lambda));
    for &ak in &a[1..] {
        c.push(XComplex::from_f64(ak));
    }
    let mut z = XComplex::from_c64(seed);
    for _ in 0..40 {
        let mut p = XComplex::zero();
        let mut dp = XComplex::zero();
        for ci in c.iter().rev() {
            dp = &(&dp * &z) + &p;
            p = &(&p * &z) + ci;
        }
        if p.is_zero() {
            break;
        }
        let step = p.div(&dp);
        z = &z - &step;
        // converged once the step is at the resolution floor
        if step.re.bits() < 8 && step.im.bits() < 8 {
            break;
        }
    }
    z
}

/// `Q_0(lambda), ..., Q_n(lambda)` by the recurrence in extended precision.
pub fn q_values_extended(sym: &SymbolCoeffs, n: usize, lambda: Complex64) -> Vec<XComplex> {
    let a: Vec<XComplex> = sym.coeffs().iter().map(|&v| XComplex::from_f64(v)).collect();
    let lam = XComplex::from_c64(lambda);
    let p = sym.p();
    let mut q: Vec<XComplex> = vec![XComplex::from_f64(1.0)];
    for m in 0..n {
        let mut next = &(&lam - &a[0]) * &q[m];
        for k in 1..=p {
            if m >= k {
                next = &next - &(&a[k] * &q[m - k]);
            }
        }
        q.push(next);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::build_symbol;

    #[test]
    fn f64_round_trip_is_exact() {
        for &x in &[1.0, -0.1, 3.0e-150, 7.5e150, 1.0 / 3.0] {
            assert_eq!(fixed_to_f64(&fixed_from_f64(x)), x, "{x}");
        }
    }

    #[test]
    fn arithmetic_matches_double() {
        let a = Complex64::new(1.5, -2.25);
        let b = Complex64::new(-0.75, 0.5);
        let xa = XComplex::from_c64(a);
        let xb = XComplex::from_c64(b);
        assert!(((&xa * &xb).to_c64() - a * b).norm() < 1e-15);
        assert!((xa.div(&xb).to_c64() - a / b).norm() < 1e-15);
        assert!(((&xa - &xb).to_c64() - (a - b)).norm() < 1e-15);
    }

    #[test]
    fn chebyshev_z0_resolves_tiny_differences() {
        // z0 = 2(lambda - sqrt(lambda^2 - 1)); check z0^2/4 - lambda z0 + 1 = 0
        let sym = build_symbol(1, &[0.0, 0.25]).unwrap();
        let lam = 1.0e6;
        let seed = Complex64::new(2.0 / (lam + (lam * lam - 1.0f64).sqrt()), 0.0);
        let z = z0_extended(&sym, Complex64::new(lam, 0.0), Complex64::new(1.0 / lam, 0.0));
        assert!((z.to_c64() - seed).norm() < 1e-20);
        let quarter = XComplex::from_f64(0.25);
        let res = &(&(&quarter * &z.powu(2)) - &(&XComplex::from_f64(lam) * &z)) + &XComplex::from_f64(1.0);
        assert!(res.norm() < 1e-150, "residual {}", res.norm());
    }
}
