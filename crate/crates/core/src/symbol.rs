//! Symbol coefficients, the critical polynomial, branch points and cuts.
//!
//! The symbol is `a(z) = 1/z + a_0 + a_1 z + ... + a_p z^p` and
//! `r(z) = a(1/z)`. Critical points of `r` are the zeros of
//! `q(z) = z^{p+1} - a_1 z^{p-1} - 2 a_2 z^{p-2} - ... - p a_p`, and the
//! finite branch points are `lambda_k = r(x_k)`.
//!
//! Only symbols whose critical points are real, simple, and split `p`
//! against `1` by sign are accepted. The case of `p` positive critical
//! points is reduced to the negative one through `z -> -z`, which maps
//! `a_k -> (-1)^{k+1} a_k`, `x -> -x` and `lambda -> -lambda`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::roots::aberth_real;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolCoeffs {
    p: usize,
    a: Vec<f64>,
}

/// Values of the symbol and its reciprocal transform at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolEval {
    pub a: Complex64,
    pub r: Complex64,
    pub da: Complex64,
    pub dr: Complex64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    PNegative,
    PPositive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    LocalMin,
    LocalMax,
}

/// A spectral cut on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Cut {
    Interval { lo: f64, hi: f64 },
    /// `[end, +inf)` when `toward_positive`, otherwise `(-inf, end]`.
    Ray { end: f64, toward_positive: bool },
}

impl Cut {
    pub fn contains_interior(&self, x: f64) -> bool {
        match *self {
            Cut::Interval { lo, hi } => x > lo && x < hi,
            Cut::Ray { end, toward_positive: true } => x > end,
            Cut::Ray { end, toward_positive: false } => x < end,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Cut::Interval { lo, hi } => x >= lo && x <= hi,
            Cut::Ray { end, toward_positive: true } => x >= end,
            Cut::Ray { end, toward_positive: false } => x <= end,
        }
    }

    /// Euclidean distance from a complex point to the cut.
    pub fn distance(&self, lambda: Complex64) -> f64 {
        let nearest = match *self {
            Cut::Interval { lo, hi } => lambda.re.clamp(lo, hi),
            Cut::Ray { end, toward_positive: true } => lambda.re.max(end),
            Cut::Ray { end, toward_positive: false } => lambda.re.min(end),
        };
        (lambda - Complex64::new(nearest, 0.0)).norm()
    }

    pub fn is_interval(&self) -> bool {
        matches!(self, Cut::Interval { .. })
    }

    /// Finite endpoints, left to right.
    pub fn endpoints(&self) -> Vec<f64> {
        match *self {
            Cut::Interval { lo, hi } => vec![lo, hi],
            Cut::Ray { end, .. } => vec![end],
        }
    }

    /// Gap between two cuts (0 when they meet).
    pub fn gap(&self, other: &Cut) -> f64 {
        let mut best = f64::INFINITY;
        for e in self.endpoints() {
            best = best.min(other.distance(Complex64::new(e, 0.0)));
        }
        for e in other.endpoints() {
            best = best.min(self.distance(Complex64::new(e, 0.0)));
        }
        best
    }

    pub fn negated(&self) -> Cut {
        match *self {
            Cut::Interval { lo, hi } => Cut::Interval { lo: -hi, hi: -lo },
            Cut::Ray { end, toward_positive } => Cut::Ray { end: -end, toward_positive: !toward_positive },
        }
    }
}

/// Critical points, branch points and cuts, indexed as in the usual
/// convention: `x[0] = x_1`, ..., `x[p] = x_{p+1}`, and `cuts[k-1] = Gamma_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalStructure {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    /// `kind[k-1]` for `x_k`; `None` for `k = 1` and `k = p+1`.
    pub kind: Vec<Option<Kind>>,
    pub orientation: Orientation,
    pub cuts: Vec<Cut>,
}

impl CriticalStructure {
    pub fn p(&self) -> usize {
        self.cuts.len()
    }

    /// `Gamma_k`, 1-based.
    pub fn cut(&self, k: usize) -> Cut {
        self.cuts[k - 1]
    }

    /// `lambda_k`, 1-based.
    pub fn branch_point(&self, k: usize) -> f64 {
        self.lambda[k - 1]
    }

    /// Critical point of `a` (not `r`) that produces the endpoint `e` of
    /// `Gamma_k`: the double root of `a(z) = e` there is `1/x_i`.
    pub fn critical_z_for_endpoint(&self, k: usize, e: f64) -> f64 {
        let idx = if k == 1 {
            if (e - self.lambda[0]).abs() <= (e - self.lambda[self.p()]).abs() {
                0
            } else {
                self.p()
            }
        } else {
            k - 1
        };
        1.0 / self.x[idx]
    }

    /// A length scale for the branch points, used in tolerances.
    pub fn scale(&self) -> f64 {
        self.lambda.iter().fold(1.0f64, |m, l| m.max(l.abs()))
    }

    /// Center and half length of `Gamma_1`.
    pub fn gamma1_center_radius(&self) -> (f64, f64) {
        match self.cuts[0] {
            Cut::Interval { lo, hi } => (0.5 * (lo + hi), 0.5 * (hi - lo)),
            _ => unreachable!("Gamma_1 is always an interval"),
        }
    }
}

pub fn build_symbol(p: usize, a: &[f64]) -> Result<SymbolCoeffs> {
    if p == 0 {
        return Err(Error::InvalidArgument("p must be at least 1".into()));
    }
    if a.len() != p + 1 {
        return Err(Error::CoefficientCount { p, expected: p + 1, got: a.len() });
    }
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite { index, value });
    }
    if a[p] == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    Ok(SymbolCoeffs { p, a: a.to_vec() })
}

impl SymbolCoeffs {
    /// Build from a coefficient list, inferring `p = len - 1`.
    pub fn from_coeffs(a: &[f64]) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::CoefficientCount { p: 1, expected: 2, got: a.len() });
        }
        build_symbol(a.len() - 1, a)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// `(a_0, ..., a_p)`.
    pub fn coeffs(&self) -> &[f64] {
        &self.a
    }

    /// `a_k` with the convention `a_{-1} = 1` and zero outside `-1..=p`.
    pub fn a_ext(&self, k: isize) -> f64 {
        if k == -1 {
            1.0
        } else if k < -1 || k as usize > self.p {
            0.0
        } else {
            self.a[k as usize]
        }
    }

    pub fn a_at(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for &c in self.a.iter().rev() {
            s = s * z + c;
        }
        s + z.inv()
    }

    pub fn da_at(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in (1..=self.p).rev() {
            s = s * z + self.a[k] * k as f64;
        }
        s - (z * z).inv()
    }

    pub fn d2a_at(&self, z: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for k in (2..=self.p).rev() {
            s = s * z + self.a[k] * (k * (k - 1)) as f64;
        }
        s + 2.0 * (z * z * z).inv()
    }

    /// `r(x)` for real `x`.
    pub fn r_real(&self, x: f64) -> f64 {
        let w = 1.0 / x;
        let mut s = 0.0;
        for &c in self.a.iter().rev() {
            s = s * w + c;
        }
        s + x
    }

    /// `r''(x)` for real `x`.
    pub fn r2_real(&self, x: f64) -> f64 {
        (1..=self.p)
            .map(|k| (k * (k + 1)) as f64 * self.a[k] * x.powi(-(k as i32) - 2))
            .sum()
    }

    /// The symbol of `a(-z) = -ã(z)`.
    pub fn flipped(&self) -> SymbolCoeffs {
        let a = self
            .a
            .iter()
            .enumerate()
            .map(|(k, &v)| if k % 2 == 0 { -v } else { v })
            .collect();
        SymbolCoeffs { p: self.p, a }
    }

    /// Ascending coefficients of `a_p z^{p+1} + ... + a_1 z^2 + (a_0 - lambda) z + 1`.
    pub fn branch_polynomial(&self, lambda: Complex64) -> Vec<Complex64> {
        let mut c = Vec::with_capacity(self.p + 2);
        c.push(Complex64::new(1.0, 0.0));
        c.push(Complex64::new(self.a[0], 0.0) - lambda);
        for &ak in &self.a[1..] {
            c.push(Complex64::new(ak, 0.0));
        }
        c
    }
}

pub fn eval_symbol(sym: &SymbolCoeffs, z: Complex64) -> Result<SymbolEval> {
    if z == Complex64::new(0.0, 0.0) {
        return Err(Error::DivisionAtZero);
    }
    let w = z.inv();
    let a = sym.a_at(z);
    let r = sym.a_at(w);
    let da = sym.da_at(z);
    // r(z) = a(1/z) so r'(z) = -a'(1/z)/z^2
    let dr = -sym.da_at(w) * w * w;
    Ok(SymbolEval { a, r, da, dr })
}

/// Ascending coefficients of `q`, length `p + 2`.
pub fn critical_polynomial(sym: &SymbolCoeffs) -> Vec<f64> {
    let p = sym.p;
    let mut c = vec![0.0; p + 2];
    c[p + 1] = 1.0;
    for k in 1..=p {
        c[p - k] = -(k as f64) * sym.a[k];
    }
    c
}

fn real_simple_roots(sym: &SymbolCoeffs) -> Result<Vec<f64>> {
    let q = critical_polynomial(sym);
    let roots = aberth_real(&q, 1e-15)?;
    let mut max_imag = 0.0f64;
    for z in &roots {
        if z.im.abs() >= 1e-10 * (1.0 + z.norm()) {
            max_imag = max_imag.max(z.im.abs());
        }
    }
    if max_imag > 0.0 {
        return Err(Error::ComplexCriticalPoints { max_imag });
    }
    let mut x: Vec<f64> = roots.iter().map(|z| z.re).collect();
    // Newton polish in real arithmetic
    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (mut v, mut d) = (0.0, 0.0);
            for &c in q.iter().rev() {
                d = d * *xi + v;
                v = v * *xi + c;
            }
            if d != 0.0 {
                *xi -= v / d;
            }
        }
    }
    x.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if gap <= 1e-8 * scale {
        return Err(Error::MultipleCriticalPoints { gap });
    }
    Ok(x)
}

/// Structure for a symbol with `p` negative critical points (or `p = 1`).
fn negative_structure(sym: &SymbolCoeffs, x: Vec<f64>) -> Result<CriticalStructure> {
    let p = sym.p;
    let lambda: Vec<f64> = x.iter().map(|&v| sym.r_real(v)).collect();
    let mut kind = vec![None; p + 1];
    for k in 1..p {
        let xk = x[k];
        let r2 = sym.r2_real(xk);
        // neighbours: adjacent critical points and the pole at 0
        let mut near = f64::INFINITY;
        for (i, &xi) in x.iter().enumerate() {
            if i != k {
                near = near.min((xi - xk).abs());
            }
        }
        near = near.min(xk.abs());
        let h = 0.25 * near;
        let rk = lambda[k];
        let left = sym.r_real(xk - h);
        let right = sym.r_real(xk + h);
        let by_values = if left > rk && right > rk {
            Some(Kind::LocalMin)
        } else if left < rk && right < rk {
            Some(Kind::LocalMax)
        } else {
            None
        };
        let by_curvature = if r2 > 0.0 {
            Some(Kind::LocalMin)
        } else if r2 < 0.0 {
            Some(Kind::LocalMax)
        } else {
            None
        };
        match (by_values, by_curvature) {
            (Some(a), Some(b)) if a == b => kind[k] = Some(a),
            _ => return Err(Error::MultipleCriticalPoints { gap: near }),
        }
    }
    let mut cuts = Vec::with_capacity(p);
    cuts.push(Cut::Interval { lo: lambda[0], hi: lambda[p] });
    for k in 1..p {
        let toward_positive = kind[k] == Some(Kind::LocalMax);
        cuts.push(Cut::Ray { end: lambda[k], toward_positive });
    }
    Ok(CriticalStructure { x, lambda, kind, orientation: Orientation::PNegative, cuts })
}

pub fn critical_structure(sym: &SymbolCoeffs) -> Result<CriticalStructure> {
    let x = real_simple_roots(sym)?;
    let p = sym.p;
    let negative = x.iter().filter(|&&v| v < 0.0).count();
    let positive = x.len() - negative;
    if p == 1 || negative == p && positive == 1 {
        return negative_structure(sym, x);
    }
    if !(positive == p && negative == 1) {
        return Err(Error::HypothesisViolated { negative, positive });
    }
    let flipped = sym.flipped();
    let xf: Vec<f64> = x.iter().rev().map(|v| -v).collect();
    let s = negative_structure(&flipped, xf)?;
    let kind = s
        .kind
        .iter()
        .map(|k| {
            k.map(|k| match k {
                Kind::LocalMin => Kind::LocalMax,
                Kind::LocalMax => Kind::LocalMin,
            })
        })
        .collect();
    Ok(CriticalStructure {
        x: s.x.iter().map(|v| -v).collect(),
        lambda: s.lambda.iter().map(|v| -v).collect(),
        kind,
        orientation: Orientation::PPositive,
        cuts: s.cuts.iter().map(Cut::negated).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sym(a: &[f64]) -> SymbolCoeffs {
        SymbolCoeffs::from_coeffs(a).unwrap()
    }

    #[test]
    fn build_validates() {
        assert!(build_symbol(2, &[0.0, 7.0, 3.0]).is_ok());
        assert!(build_symbol(1, &[0.0, 0.25]).is_ok());
        assert_eq!(build_symbol(2, &[0.0, 7.0, 0.0]), Err(Error::ZeroLeadingCoefficient));
        assert!(matches!(build_symbol(2, &[0.0, f64::NAN, 1.0]), Err(Error::NonFinite { index: 1, .. })));
        assert!(matches!(build_symbol(2, &[0.0, 1.0]), Err(Error::CoefficientCount { .. })));
    }

    #[test]
    fn eval_known_values() {
        let s = sym(&[0.0, 7.0, 3.0]);
        let e = eval_symbol(&s, Complex64::new(-2.0, 0.0)).unwrap();
        assert!((e.r.re + 4.75).abs() < 1e-14);
        let e = eval_symbol(&s, Complex64::new(3.0, 0.0)).unwrap();
        assert!((e.r.re - 17.0 / 3.0).abs() < 1e-14);
        let c = sym(&[0.0, 0.25]);
        let e = eval_symbol(&c, Complex64::new(0.5, 0.0)).unwrap();
        assert!((e.r.re - 1.0).abs() < 1e-15);
        assert_eq!(eval_symbol(&c, Complex64::new(0.0, 0.0)), Err(Error::DivisionAtZero));
    }

    #[test]
    fn derivative_identity_r_prime_is_q_over_power() {
        let s = sym(&[0.3, 7.0, 3.0]);
        let q = critical_polynomial(&s);
        for z in [Complex64::new(0.7, 0.2), Complex64::new(-1.3, 2.0)] {
            let e = eval_symbol(&s, z).unwrap();
            let mut qz = Complex64::new(0.0, 0.0);
            for &c in q.iter().rev() {
                qz = qz * z + c;
            }
            let want = qz / z.powu(3);
            assert!((e.dr - want).norm() < 1e-13 * want.norm().max(1.0));
        }
    }

    #[test]
    fn critical_polynomials() {
        assert_eq!(critical_polynomial(&sym(&[0.0, 7.0, 3.0])), vec![-6.0, -7.0, 0.0, 1.0]);
        assert_eq!(critical_polynomial(&sym(&[0.0, 0.25])), vec![-0.25, 0.0, 1.0]);
        assert_eq!(critical_polynomial(&sym(&[0.0, 0.0, 0.0, 2.0])), vec![-6.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn cubic_example_structure() {
        let cs = critical_structure(&sym(&[0.0, 7.0, 3.0])).unwrap();
        let want_x = [-2.0, -1.0, 3.0];
        let want_l = [-4.75, -5.0, 17.0 / 3.0];
        for i in 0..3 {
            assert!((cs.x[i] - want_x[i]).abs() < 1e-13);
            assert!((cs.lambda[i] - want_l[i]).abs() < 1e-13);
        }
        assert_eq!(cs.kind[1], Some(Kind::LocalMin));
        assert_eq!(cs.orientation, Orientation::PNegative);
        assert!(matches!(cs.cuts[1], Cut::Ray { toward_positive: false, .. }));
        match cs.cuts[0] {
            Cut::Interval { lo, hi } => {
                assert!((lo + 4.75).abs() < 1e-13 && (hi - 17.0 / 3.0).abs() < 1e-13)
            }
            _ => panic!("Gamma_1 must be an interval"),
        }
    }

    #[test]
    fn chebyshev_structure() {
        let cs = critical_structure(&sym(&[0.0, 0.25])).unwrap();
        assert!((cs.x[0] + 0.5).abs() < 1e-15 && (cs.x[1] - 0.5).abs() < 1e-15);
        assert!((cs.lambda[0] + 1.0).abs() < 1e-15 && (cs.lambda[1] - 1.0).abs() < 1e-15);
        assert_eq!(cs.cuts.len(), 1);
    }

    #[test]
    fn complex_critical_points_rejected() {
        assert!(matches!(
            critical_structure(&sym(&[0.0, -1.0])),
            Err(Error::ComplexCriticalPoints { .. })
        ));
    }

    #[test]
    fn positive_orientation_is_mirror_image() {
        let s = sym(&[0.0, 7.0, 3.0]);
        let f = s.flipped();
        let a = critical_structure(&s).unwrap();
        let b = critical_structure(&f).unwrap();
        assert_eq!(b.orientation, Orientation::PPositive);
        for i in 0..3 {
            assert!((a.x[i] + b.x[i]).abs() < 1e-13);
            assert!((a.lambda[i] + b.lambda[i]).abs() < 1e-12);
        }
        assert_eq!(b.kind[1], Some(Kind::LocalMax));
        assert!(matches!(b.cuts[1], Cut::Ray { toward_positive: true, .. }));
        // usual labeling in the positive case: x_{p+1} < 0 < x_p < ... < x_1
        assert!(b.x[2] < 0.0 && b.x[1] > 0.0 && b.x[0] > b.x[1]);
        match b.cuts[0] {
            Cut::Interval { lo, hi } => assert!((lo - b.lambda[2]).abs() < 1e-12 && (hi - b.lambda[0]).abs() < 1e-12),
            _ => panic!(),
        }
    }

    /// Symbols built from prescribed real critical points `x_1 < ... < x_p < 0 < x_{p+1}`:
    /// `q(z) = prod (z - x_k)` has zero `z^p` coefficient when the last root is `-sum`.
    pub(crate) fn symbol_from_critical_points(neg: &[f64], a0: f64) -> SymbolCoeffs {
        let p = neg.len();
        let last = -neg.iter().sum::<f64>();
        let mut roots = neg.to_vec();
        roots.push(last);
        let mut c = vec![1.0];
        for &r in &roots {
            let mut next = vec![0.0; c.len() + 1];
            for (i, &ci) in c.iter().enumerate() {
                next[i + 1] += ci;
                next[i] -= r * ci;
            }
            c = next;
        }
        // c ascending; q = z^{p+1} - sum k a_k z^{p-k}
        let mut a = vec![a0; p + 1];
        for k in 1..=p {
            a[k] = -c[p - k] / k as f64;
        }
        SymbolCoeffs::from_coeffs(&a).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn critical_points_sum_to_zero_and_are_stationary(
            raw in proptest::collection::vec(0.2f64..3.0, 1..5),
            a0 in -2.0f64..2.0,
        ) {
            let mut neg: Vec<f64> = Vec::new();
            let mut acc = 0.0;
            for v in raw { acc -= v; neg.push(acc); }
            neg.reverse();
            let s = symbol_from_critical_points(&neg, a0);
            let cs = critical_structure(&s).unwrap();
            let scale = cs.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(cs.x.iter().sum::<f64>().abs() < 1e-10 * scale);
            for &xk in &cs.x {
                let e = eval_symbol(&s, Complex64::new(xk, 0.0)).unwrap();
                // r'(x) = 1 - sum k a_k x^{-k-1}; compare to the size of its terms
                let terms: f64 = 1.0 + (1..=s.p()).map(|k| (k as f64 * s.coeffs()[k] * xk.powi(-(k as i32) - 1)).abs()).sum::<f64>();
                prop_assert!(e.dr.norm() < 1e-9 * terms);
            }
            let p = s.p();
            prop_assert!(cs.lambda[0] < cs.lambda[p]);
            for k in 0..p.saturating_sub(1) {
                prop_assert!(cs.cuts[k].gap(&cs.cuts[k + 1]) > 0.0);
            }
            // p = 1 is always read in the negative orientation
            let f = critical_structure(&s.flipped()).unwrap();
            for i in (0..=p).filter(|_| p > 1) {
                prop_assert!((f.x[i] + cs.x[i]).abs() < 1e-9 * scale);
            }
        }
    }
}
