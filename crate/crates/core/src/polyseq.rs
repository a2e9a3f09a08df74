//! The polynomial sequence of the banded recurrence
//! `lambda Q_n = Q_{n+1} + a_0 Q_n + a_1 Q_{n-1} + ... + a_p Q_{n-p}`,
//! exact moments of the functionals `L_j`, and the real zeros of `Q_n`.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::banded::banded_logdet;
use crate::error::{Error, Result};
use crate::symbol::{critical_structure, SymbolCoeffs};

/// Staircase multi-index `(n_1, ..., n_p)` with `n = mp + k`: the first
/// `k` entries are `m + 1`, the others `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MultiIndex {
    pub n: usize,
    pub components: Vec<usize>,
}

impl MultiIndex {
    /// `n_j`, 1-based.
    pub fn get(&self, j: usize) -> usize {
        self.components[j - 1]
    }

    /// `N_{n,j} = n_{j+1} + ... + n_p`.
    pub fn tail_sum(&self, j: usize) -> usize {
        self.components[j..].iter().sum()
    }
}

pub fn multi_index(n: usize, p: usize) -> MultiIndex {
    let (m, k) = (n / p, n % p);
    let components = (0..p).map(|i| if i < k { m + 1 } else { m }).collect();
    MultiIndex { n, components }
}

pub fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coefficient")
}

fn exact_coeffs(sym: &SymbolCoeffs) -> Vec<BigRational> {
    sym.coeffs().iter().map(|&v| rational(v)).collect()
}

/// Exact ascending coefficient vectors of `Q_0, ..., Q_N`. Symbol entries
/// are taken as the exact binary values of their `f64` representation.
#[derive(Clone, Debug)]
pub struct MonicPolySeq {
    pub sym: SymbolCoeffs,
    pub coeffs: Vec<Vec<BigRational>>,
}

impl MonicPolySeq {
    pub fn max_degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `Q_n` with `Q_m = 0` for negative `m`.
    pub fn q(&self, n: isize) -> &[BigRational] {
        if n < 0 {
            &[]
        } else {
            &self.coeffs[n as usize]
        }
    }

    pub fn q_f64(&self, n: usize) -> Vec<f64> {
        self.coeffs[n].iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Horner evaluation from the stored coefficients.
    pub fn eval_coeffs(&self, n: usize, lambda: Complex64) -> Complex64 {
        self.q_f64(n).iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * lambda + c)
    }
}

fn poly_add(a: &mut Vec<BigRational>, b: &[BigRational], scale: &BigRational) {
    if a.len() < b.len() {
        a.resize(b.len(), BigRational::zero());
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += scale * y;
    }
}

pub fn gen_q(sym: &SymbolCoeffs, n_max: usize) -> MonicPolySeq {
    let a = exact_coeffs(sym);
    let p = sym.p();
    let mut q: Vec<Vec<BigRational>> = vec![vec![BigRational::one()]];
    for n in 0..n_max {
        // lambda Q_n
        let mut next = vec![BigRational::zero()];
        next.extend(q[n].iter().cloned());
        poly_add(&mut next, &q[n], &-&a[0]);
        for k in 1..=p.min(n) {
            poly_add(&mut next, &q[n - k], &-&a[k]);
        }
        q.push(next);
    }
    MonicPolySeq { sym: sym.clone(), coeffs: q }
}

/// `p_n^{(j)} = Q_{n-1} + ... + Q_{n-j}`, indexed `[n][j-1]`.
pub fn gen_companion(seq: &MonicPolySeq) -> Vec<Vec<Vec<BigRational>>> {
    let p = seq.sym.p();
    (0..=seq.max_degree())
        .map(|n| {
            let mut acc: Vec<BigRational> = Vec::new();
            (1..=p)
                .map(|j| {
                    poly_add(&mut acc, seq.q(n as isize - j as isize), &BigRational::one());
                    acc.clone()
                })
                .collect()
        })
        .collect()
}

/// `(A^T)^m e_0` for `m = 0..=m_max`, truncated to the reachable band.
fn transposed_powers(sym: &SymbolCoeffs, m_max: usize) -> Vec<Vec<BigRational>> {
    let a = exact_coeffs(sym);
    let p = sym.p();
    let size = m_max + p + 2;
    let mut w = vec![BigRational::zero(); size];
    w[0] = BigRational::one();
    let mut out = vec![w.clone()];
    for _ in 0..m_max {
        let mut next = vec![BigRational::zero(); size];
        for i in 0..size {
            let mut s = if i > 0 { w[i - 1].clone() } else { BigRational::zero() };
            for (k, ak) in a.iter().enumerate() {
                if i + k < size && !w[i + k].is_zero() {
                    s += ak * &w[i + k];
                }
            }
            next[i] = s;
        }
        w = next;
        out.push(w.clone());
    }
    out
}

/// Exact `L_j(lambda^m)`, `m = 0..=m_max`, with `L_j(z^n) = (A^n v_j, e_0)`
/// and `v_j = e_0 + ... + e_{j-1}`.
pub fn moments(sym: &SymbolCoeffs, j: usize, m_max: usize) -> Vec<BigRational> {
    transposed_powers(sym, m_max)
        .iter()
        .map(|w| w[..j].iter().fold(BigRational::zero(), |acc, v| acc + v))
        .collect()
}

/// Exact `int x^m d mu_k`: `L_1` for `k = 1`, `L_k - L_{k-1}` otherwise.
pub fn mu_moments(sym: &SymbolCoeffs, k: usize, m_max: usize) -> Vec<BigRational> {
    let lk = moments(sym, k, m_max);
    if k == 1 {
        return lk;
    }
    let prev = moments(sym, k - 1, m_max);
    lk.iter().zip(&prev).map(|(a, b)| a - b).collect()
}

/// `L_j(lambda^k Q_n)` exactly.
pub fn functional_of(sym: &SymbolCoeffs, seq: &MonicPolySeq, j: usize, k: usize, n: usize) -> BigRational {
    let mom = moments(sym, j, n + k);
    seq.coeffs[n].iter().enumerate().fold(BigRational::zero(), |acc, (i, c)| acc + c * &mom[i + k])
}

/// `Q_n(lambda)` by running the recurrence on values.
pub fn eval_q(sym: &SymbolCoeffs, n: usize, lambda: Complex64) -> Complex64 {
    eval_q_all(sym, n, lambda)[n]
}

/// `Q_0(lambda), ..., Q_n(lambda)`.
pub fn eval_q_all(sym: &SymbolCoeffs, n: usize, lambda: Complex64) -> Vec<Complex64> {
    let a = sym.coeffs();
    let p = sym.p();
    let mut q = Vec::with_capacity(n + 1);
    q.push(Complex64::new(1.0, 0.0));
    for m in 0..n {
        let mut next = (lambda - a[0]) * q[m];
        for k in 1..=p.min(m) {
            next -= a[k] * q[m - k];
        }
        q.push(next);
    }
    q
}

/// Sign, value and derivative of `Q_n` at real `x`, rescaled so that large
/// degrees neither overflow nor underflow. Returns `(v, d, log_scale)` with
/// `Q_n = v e^{log_scale}`, `Q_n' = d e^{log_scale}`.
pub fn eval_q_real_scaled(sym: &SymbolCoeffs, n: usize, x: f64) -> (f64, f64, f64) {
    let a = sym.coeffs();
    let p = sym.p();
    let mut v = vec![0.0; p + 1];
    let mut d = vec![0.0; p + 1];
    // ring buffers indexed by m mod (p+1)
    v[0] = 1.0;
    let mut log_scale = 0.0;
    for m in 0..n {
        let i = m % (p + 1);
        let mut nv = (x - a[0]) * v[i];
        let mut nd = v[i] + (x - a[0]) * d[i];
        for k in 1..=p.min(m) {
            let j = (m - k) % (p + 1);
            nv -= a[k] * v[j];
            nd -= a[k] * d[j];
        }
        let slot = (m + 1) % (p + 1);
        v[slot] = nv;
        d[slot] = nd;
        let big = v.iter().chain(d.iter()).fold(0.0f64, |acc, t| acc.max(t.abs()));
        if big > 1e150 || (big < 1e-150 && big > 0.0) {
            let s = 1.0 / big;
            v.iter_mut().for_each(|t| *t *= s);
            d.iter_mut().for_each(|t| *t *= s);
            log_scale += big.ln();
        }
    }
    let i = n % (p + 1);
    (v[i], d[i], log_scale)
}

/// `det(lambda I_n - A_n)` by banded LU.
pub fn hessenberg_det(sym: &SymbolCoeffs, n: usize, lambda: Complex64) -> Complex64 {
    let p = sym.p();
    banded_logdet(n, p, 1, |i, j| {
        if i == j {
            lambda - sym.coeffs()[0]
        } else if j == i + 1 {
            Complex64::new(-1.0, 0.0)
        } else {
            Complex64::new(-sym.a_ext((i - j) as isize), 0.0)
        }
    })
    .value()
}

fn q_sign(sym: &SymbolCoeffs, n: usize, x: f64) -> f64 {
    let (v, _, _) = eval_q_real_scaled(sym, n, x);
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn bisect(sym: &SymbolCoeffs, n: usize, mut lo: f64, mut hi: f64, slo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = q_sign(sym, n, mid);
        if s == 0.0 {
            return mid;
        }
        if s == slo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let (v, d, _) = eval_q_real_scaled(sym, n, x);
    let polished = if d != 0.0 { x - v / d } else { x };
    if polished > lo && polished < hi {
        polished
    } else {
        x
    }
}

/// Zero sets of `Q_1, ..., Q_n` (index `m-1` holds the zeros of `Q_m`),
/// each bracketed by the zeros of its predecessor and the ends of `Gamma_1`.
pub fn zeros_table(sym: &SymbolCoeffs, n: usize) -> Result<Vec<Vec<f64>>> {
    let cs = critical_structure(sym)?;
    let (c, r) = cs.gamma1_center_radius();
    let (alpha, beta) = (c - r, c + r);
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::new();
    for m in 1..=n {
        let mut nodes = Vec::with_capacity(prev.len() + 2);
        nodes.push(alpha);
        nodes.extend(prev.iter().copied());
        nodes.push(beta);
        let mut zeros = Vec::with_capacity(m);
        for (i, w) in nodes.windows(2).enumerate() {
            let (sl, sr) = (q_sign(sym, m, w[0]), q_sign(sym, m, w[1]));
            if sl * sr >= 0.0 {
                return Err(Error::InterlacingViolation { degree: m, interval: i });
            }
            zeros.push(bisect(sym, m, w[0], w[1], sl));
        }
        table.push(zeros.clone());
        prev = zeros;
    }
    Ok(table)
}

pub fn zeros_q(sym: &SymbolCoeffs, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(zeros_table(sym, n)?.pop().unwrap())
}

/// Exact rational to `BigInt` numerator/denominator pair, for display.
pub fn rational_parts(r: &BigRational) -> (BigInt, BigInt) {
    (r.numer().clone(), r.denom().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::build_symbol;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cheb() -> SymbolCoeffs {
        build_symbol(1, &[0.0, 0.25]).unwrap()
    }

    fn cubic() -> SymbolCoeffs {
        build_symbol(2, &[0.0, 7.0, 3.0]).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn ints(v: &[i64]) -> Vec<BigRational> {
        v.iter().map(|&x| r(x, 1)).collect()
    }

    #[test]
    fn multi_indices() {
        assert_eq!(multi_index(5, 2).components, vec![3, 2]);
        assert_eq!(multi_index(0, 3).components, vec![0, 0, 0]);
        assert_eq!(multi_index(7, 3).components, vec![3, 2, 2]);
        assert_eq!(multi_index(10, 2).tail_sum(1), 5);
    }

    #[test]
    fn first_polynomials() {
        let s = gen_q(&cubic(), 3);
        assert_eq!(s.coeffs[1], ints(&[0, 1]));
        assert_eq!(s.coeffs[2], ints(&[-7, 0, 1]));
        assert_eq!(s.coeffs[3], ints(&[-3, -14, 0, 1]));
        let c = gen_q(&cheb(), 3);
        // with Q_0 = 1, Q_{-1} = 0 the p = 1 sequence is U_n(x)/2^n
        assert_eq!(c.coeffs[2], vec![r(-1, 4), r(0, 1), r(1, 1)]);
        assert_eq!(c.coeffs[3], vec![r(0, 1), r(-1, 2), r(0, 1), r(1, 1)]);
        let g = gen_q(&build_symbol(2, &[1.5, 2.0, 1.0]).unwrap(), 1);
        assert_eq!(g.coeffs[1], vec![r(-3, 2), r(1, 1)]);
    }

    #[test]
    fn recurrence_residual_vanishes_exactly() {
        let sym = build_symbol(3, &[0.5, 2.0, -1.25, 0.75]).unwrap();
        let s = gen_q(&sym, 25);
        let a = exact_coeffs(&sym);
        for n in 3..25 {
            let mut res = vec![BigRational::zero()];
            res.extend(s.coeffs[n].iter().cloned());
            poly_add(&mut res, &s.coeffs[n + 1], &-BigRational::one());
            poly_add(&mut res, &s.coeffs[n], &-&a[0]);
            for k in 1..=3 {
                poly_add(&mut res, &s.coeffs[n - k], &-&a[k]);
            }
            assert!(res.iter().all(|c| c.is_zero()), "n={n}");
        }
    }

    #[test]
    fn companion_table() {
        let s = gen_q(&cubic(), 5);
        let t = gen_companion(&s);
        assert_eq!(t[1][0], ints(&[1]));
        assert_eq!(t[3][1], ints(&[-7, 1, 1]));
        for n in 2..=5 {
            let mut diff = t[n][1].clone();
            poly_add(&mut diff, &t[n][0], &-BigRational::one());
            let want = s.q(n as isize - 2);
            assert_eq!(&diff[..want.len()], want);
            assert!(diff[want.len()..].iter().all(|c| c.is_zero()));
        }
    }

    #[test]
    fn moment_values() {
        let sym = cubic();
        let m1 = moments(&sym, 1, 4);
        assert_eq!(m1[0], r(1, 1));
        assert_eq!(m1[1], r(0, 1));
        assert_eq!(m1[2], r(7, 1));
        let m2 = moments(&sym, 2, 2);
        assert_eq!(m2[0], r(1, 1));
        let mu2 = mu_moments(&sym, 2, 3);
        assert_eq!(mu2[0], r(0, 1));
        assert_eq!(mu2[1], r(1, 1));
        // Chebyshev: semicircle moments are Catalan numbers times 4^-k
        let c = moments(&cheb(), 1, 8);
        let cat = [1, 1, 2, 5, 14];
        for (k, &ck) in cat.iter().enumerate() {
            assert_eq!(c[2 * k], r(ck, 4i64.pow(k as u32)));
        }
        for k in 0..4 {
            assert!(c[2 * k + 1].is_zero());
        }
    }

    #[test]
    fn exact_multiple_orthogonality() {
        for sym in [cheb(), cubic(), build_symbol(3, &[0.0, 3.0, 3.0, 1.0]).unwrap()] {
            let p = sym.p();
            let s = gen_q(&sym, 15);
            for n in 0..=15 {
                let mi = multi_index(n, p);
                for j in 1..=p {
                    for k in 0..mi.get(j) {
                        assert!(functional_of(&sym, &s, j, k, n).is_zero(), "n={n} j={j} k={k}");
                    }
                    // the next moment does not vanish
                    assert!(!functional_of(&sym, &s, j, mi.get(j), n).is_zero(), "n={n} j={j}");
                }
            }
        }
    }

    #[test]
    fn value_and_coefficient_evaluation_agree() {
        let sym = cubic();
        assert_eq!(eval_q(&sym, 2, Complex64::new(3.0, 0.0)), Complex64::new(2.0, 0.0));
        let s = gen_q(&sym, 20);
        for n in 0..=20 {
            for &l in &[Complex64::new(3.0, 1.0), Complex64::new(-9.0, 0.5), Complex64::new(0.2, -4.0)] {
                let a = eval_q(&sym, n, l);
                let b = s.eval_coeffs(n, l);
                assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0), "n={n} {l}");
            }
        }
    }

    #[test]
    fn hessenberg_determinant_is_q() {
        let sym = cubic();
        for n in 1..=30 {
            for &l in &[Complex64::new(3.0, 1.0), Complex64::new(-7.0, 0.0), Complex64::new(8.0, -2.0)] {
                let d = hessenberg_det(&sym, n, l);
                let q = eval_q(&sym, n, l);
                assert!((d - q).norm() <= 1e-9 * q.norm(), "n={n}");
            }
        }
    }

    #[test]
    fn chebyshev_zeros() {
        // zeros of U_4: cos(k pi / 5)
        let z = zeros_q(&cheb(), 4).unwrap();
        for (i, x) in z.iter().enumerate() {
            let k = 4 - i;
            let want = (k as f64 * PI / 5.0).cos();
            assert!((x - want).abs() < 1e-14);
        }
        let z = zeros_q(&cubic(), 2).unwrap();
        assert!((z[0] + 7f64.sqrt()).abs() < 1e-14 && (z[1] - 7f64.sqrt()).abs() < 1e-14);
        assert_eq!(zeros_q(&build_symbol(2, &[0.5, 7.0, 3.0]).unwrap(), 1).unwrap(), vec![0.5]);
    }

    #[test]
    fn zeros_stay_inside_and_interlace() {
        let sym = cubic();
        let t = zeros_table(&sym, 40).unwrap();
        for (m, z) in t.iter().enumerate() {
            assert_eq!(z.len(), m + 1);
            assert!(z.iter().all(|&x| x > -4.75 && x < 17.0 / 3.0));
            if m > 0 {
                let prev = &t[m - 1];
                for (i, w) in z.windows(2).enumerate() {
                    assert!(w[0] < prev[i] && prev[i] < w[1]);
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn interlacing_for_random_symbols(x1 in -3.0f64..-0.2, gap in 0.1f64..2.0) {
            let x2 = x1 + gap;
            prop_assume!(x2 < -0.05);
            let a1 = x1 * x1 + x2 * x2 + x1 * x2;
            let a2 = -x1 * x2 * (x1 + x2) / 2.0;
            let sym = build_symbol(2, &[0.0, a1, a2]).unwrap();
            let t = zeros_table(&sym, 20).unwrap();
            for m in 1..t.len() {
                for (i, w) in t[m].windows(2).enumerate() {
                    prop_assert!(w[0] < t[m - 1][i] && t[m - 1][i] < w[1]);
                }
            }
        }
    }
}
