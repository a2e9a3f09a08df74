//! Double-exponential quadrature over the cuts.
//!
//! Finite intervals use tanh-sinh; rays `[e, inf)` / `(-inf, e]` use the
//! exp-sinh map `d = S exp(pi/2 sinh t)` for the distance `d` from the
//! finite end. Each node carries its exact distances to the cut ends, so
//! densities with square-root or inverse-square-root endpoint behaviour
//! can be evaluated without the cancellation in `x - endpoint`.
//!
//! Nodes are organised in nested levels (step `2^-L`); level `L` only adds
//! the odd multiples of its step, so refinement reuses every earlier
//! sample. A [`MeasureHandle`] caches its density on those nodes.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul};
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbol::Cut;

pub const MAX_LEVEL: usize = 10;
const MIN_LEVEL: usize = 3;
const TINY_FRACTION: f64 = 1e-300;
const RAY_FAR: f64 = 1e100;

/// A point of a cut together with its distances to the left and right
/// ends (`inf` on the unbounded side of a ray).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutPoint {
    pub x: f64,
    pub d_lo: f64,
    pub d_hi: f64,
}

impl CutPoint {
    /// Point given only by its abscissa.
    pub fn on(cut: &Cut, x: f64) -> CutPoint {
        match *cut {
            Cut::Interval { lo, hi } => CutPoint { x, d_lo: x - lo, d_hi: hi - x },
            Cut::Ray { end, toward_positive: true } => CutPoint { x, d_lo: x - end, d_hi: f64::INFINITY },
            Cut::Ray { end, toward_positive: false } => CutPoint { x, d_lo: f64::INFINITY, d_hi: end - x },
        }
    }

    pub fn nearest_end_distance(&self) -> f64 {
        self.d_lo.min(self.d_hi)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-10, abs: 1e-14 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Values that can be accumulated by the rules.
pub trait QuadValue: Copy + Send + Sync + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
    fn finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Geometry of a rule: an interval, or a ray with its distance scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Geometry {
    Interval { a: f64, b: f64 },
    Ray { end: f64, toward_positive: bool, scale: f64 },
}

impl Geometry {
    pub fn from_cut(cut: &Cut, scale: f64) -> Geometry {
        match *cut {
            Cut::Interval { lo, hi } => Geometry::Interval { a: lo, b: hi },
            Cut::Ray { end, toward_positive } => Geometry::Ray { end, toward_positive, scale },
        }
    }

    fn t_range(&self) -> (f64, f64) {
        match self {
            Geometry::Interval { .. } => (-6.2, 6.2),
            // d/S in [1e-300, 1e100]
            Geometry::Ray { .. } => (-6.8, 5.7),
        }
    }

    fn node(&self, t: f64) -> Option<(CutPoint, f64)> {
        match *self {
            Geometry::Interval { a, b } => {
                let len = b - a;
                let u = FRAC_PI_2 * t.sinh();
                let e = (-2.0 * u.abs()).exp();
                let near = len * e / (1.0 + e);
                let far = len / (1.0 + e);
                let (d_lo, d_hi) = if u < 0.0 { (near, far) } else { (far, near) };
                if near < TINY_FRACTION * len || near == 0.0 {
                    return None;
                }
                let x = if u < 0.0 { a + d_lo } else { b - d_hi };
                let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
                let w = 0.5 * len * FRAC_PI_2 * t.cosh() * sech2;
                (w > 0.0).then_some((CutPoint { x, d_lo, d_hi }, w))
            }
            Geometry::Ray { end, toward_positive, scale } => {
                let s = FRAC_PI_2 * t.sinh();
                let d = scale * s.exp();
                if !(d >= TINY_FRACTION * scale && d <= RAY_FAR * scale) {
                    return None;
                }
                let w = d * FRAC_PI_2 * t.cosh();
                let pt = if toward_positive {
                    CutPoint { x: end + d, d_lo: d, d_hi: f64::INFINITY }
                } else {
                    CutPoint { x: end - d, d_lo: f64::INFINITY, d_hi: d }
                };
                Some((pt, w))
            }
        }
    }

    /// Nodes introduced at `level` with their step-free weights.
    pub fn level_nodes(&self, level: usize) -> Vec<(CutPoint, f64)> {
        let (t0, t1) = self.t_range();
        let mut out = Vec::new();
        if level == 0 {
            let mut k = t0.ceil() as i64;
            while (k as f64) <= t1 {
                if let Some(n) = self.node(k as f64) {
                    out.push(n);
                }
                k += 1;
            }
        } else {
            let h = 0.5f64.powi(level as i32);
            let mut k = ((t0 / h - 1.0) / 2.0).ceil() as i64;
            loop {
                let t = (2 * k + 1) as f64 * h;
                if t > t1 {
                    break;
                }
                if t >= t0 {
                    if let Some(n) = self.node(t) {
                        out.push(n);
                    }
                }
                k += 1;
            }
        }
        out
    }
}

fn step(level: usize) -> f64 {
    0.5f64.powi(level as i32)
}

/// Adaptive level refinement over `level_values(L)`, which returns the sum
/// of weight * integrand over the nodes introduced at level `L`.
fn refine<T, G>(mut level_values: G, tol: Tolerances, max_level: usize) -> Result<QuadResult<T>>
where
    T: QuadValue,
    G: FnMut(usize) -> Result<(T, usize)>,
{
    let mut acc = T::zero();
    let mut prev: Option<T> = None;
    let mut evaluations = 0;
    let mut last_err = f64::INFINITY;
    let mut est = T::zero();
    for level in 0..=max_level {
        let (s, n) = level_values(level)?;
        evaluations += n;
        acc = acc + s;
        est = acc * step(level);
        if !est.finite() {
            return Err(Error::NoConvergence { estimate: f64::NAN, error: f64::INFINITY });
        }
        if let Some(p) = prev {
            last_err = (est + p * -1.0).magnitude();
            if level >= MIN_LEVEL && last_err <= tol.rel * est.magnitude() + tol.abs {
                return Ok(QuadResult { value: est, error_estimate: last_err, evaluations });
            }
        }
        prev = Some(est);
    }
    Err(Error::NoConvergence { estimate: est.magnitude(), error: last_err })
}

/// Integrate `f` over a geometry with freshly generated nodes.
pub fn integrate_geometry<T, F>(geom: Geometry, f: F, tol: Tolerances) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(&CutPoint) -> Result<T> + Sync,
{
    refine(
        |level| {
            let nodes = geom.level_nodes(level);
            let vals: Vec<Result<T>> = nodes.par_iter().map(|(pt, w)| f(pt).map(|v| v * *w)).collect();
            let mut s = T::zero();
            for v in vals {
                s = s + v?;
            }
            Ok((s, nodes.len()))
        },
        tol,
        MAX_LEVEL,
    )
}

/// tanh-sinh on `[a, b]`; the integrand sees distances to `a` and `b`.
pub fn tanh_sinh<T, F>(a: f64, b: f64, f: F, tol: Tolerances) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(&CutPoint) -> Result<T> + Sync,
{
    integrate_geometry(Geometry::Interval { a, b }, f, tol)
}

pub type DensityFn = dyn Fn(&CutPoint) -> Result<f64> + Send + Sync;

#[derive(Clone, Debug)]
pub struct Sample {
    pub pt: CutPoint,
    pub weight: f64,
    pub density: f64,
}

/// A measure on a cut given by a pointwise density, with the endpoint and
/// tail behaviour needed to decide integrability.
#[derive(Clone)]
pub struct MeasureHandle {
    cut: Cut,
    scale: f64,
    density: Arc<DensityFn>,
    /// Exponents `alpha` with density ~ |x - end|^alpha at the left and
    /// right ends (ignored on the unbounded side of a ray).
    pub endpoint_exponents: (f64, f64),
    /// Density ~ |x|^tau at infinity (rays only).
    pub tail_exponent: Option<f64>,
    pub finite_mass: bool,
    cache: Arc<Vec<OnceLock<std::result::Result<Vec<Sample>, Error>>>>,
}

impl std::fmt::Debug for MeasureHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MeasureHandle")
            .field("cut", &self.cut)
            .field("endpoint_exponents", &self.endpoint_exponents)
            .field("tail_exponent", &self.tail_exponent)
            .field("finite_mass", &self.finite_mass)
            .finish()
    }
}

impl MeasureHandle {
    pub fn new<F>(cut: Cut, scale: f64, endpoint_exponents: (f64, f64), tail_exponent: Option<f64>, density: F) -> Self
    where
        F: Fn(&CutPoint) -> Result<f64> + Send + Sync + 'static,
    {
        let finite_mass = match cut {
            Cut::Interval { .. } => true,
            Cut::Ray { .. } => tail_exponent.map(|t| t < -1.0).unwrap_or(false),
        };
        MeasureHandle {
            cut,
            scale,
            density: Arc::new(density),
            endpoint_exponents,
            tail_exponent,
            finite_mass,
            cache: Arc::new((0..=MAX_LEVEL).map(|_| OnceLock::new()).collect()),
        }
    }

    /// The zero measure on `cut`.
    pub fn zero(cut: Cut, scale: f64) -> Self {
        MeasureHandle::new(cut, scale, (0.0, 0.0), Some(-2.0), |_| Ok(0.0))
    }

    pub fn cut(&self) -> Cut {
        self.cut
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::from_cut(&self.cut, self.scale)
    }

    pub fn density_at(&self, pt: &CutPoint) -> Result<f64> {
        (self.density)(pt)
    }

    pub fn density_fn(&self) -> Arc<DensityFn> {
        self.density.clone()
    }

    /// Density samples on the nodes introduced at `level` (cached).
    pub fn level(&self, level: usize) -> Result<&[Sample]> {
        let slot = &self.cache[level];
        let r = slot.get_or_init(|| {
            let nodes = self.geometry().level_nodes(level);
            let dens: Vec<Result<f64>> = nodes.par_iter().map(|(pt, _)| (self.density)(pt)).collect();
            let mut out = Vec::with_capacity(nodes.len());
            for ((pt, weight), d) in nodes.into_iter().zip(dens) {
                out.push(Sample { pt, weight, density: d? });
            }
            Ok(out)
        });
        match r {
            Ok(v) => Ok(v.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }

    fn check_integrable(&self, tail_growth: f64) -> Result<()> {
        let (l, r) = self.endpoint_exponents;
        let finite_ends: Vec<f64> = match self.cut {
            Cut::Interval { .. } => vec![l, r],
            Cut::Ray { toward_positive: true, .. } => vec![l],
            Cut::Ray { toward_positive: false, .. } => vec![r],
        };
        if let Some(a) = finite_ends.iter().find(|&&a| a <= -1.0) {
            return Err(Error::NonIntegrable { reason: format!("endpoint exponent {a} <= -1") });
        }
        if let Cut::Ray { .. } = self.cut {
            let tau = self.tail_exponent.unwrap_or(0.0);
            if tau + tail_growth >= -1.0 {
                return Err(Error::NonIntegrable {
                    reason: format!("tail exponent {tau} with integrand growth {tail_growth} is not below -1"),
                });
            }
        }
        Ok(())
    }

    /// `int f dmu`, where `f(level, index, point)` may memoise on the node
    /// identity and grows at most like `|x|^tail_growth` on a ray.
    pub fn integrate_nodes<T, F>(&self, f: F, tail_growth: f64, tol: Tolerances) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: Fn(usize, usize, &CutPoint) -> Result<T> + Sync,
    {
        self.check_integrable(tail_growth)?;
        refine(
            |level| {
                let samples = self.level(level)?;
                let vals: Vec<Result<T>> = samples
                    .par_iter()
                    .enumerate()
                    .map(|(i, s)| {
                        if s.density == 0.0 {
                            Ok(T::zero())
                        } else {
                            f(level, i, &s.pt).map(|v| v * (s.weight * s.density))
                        }
                    })
                    .collect();
                let mut acc = T::zero();
                for v in vals {
                    acc = acc + v?;
                }
                Ok((acc, samples.len()))
            },
            tol,
            MAX_LEVEL,
        )
    }

    /// `int f dmu` together with `int |f| d|mu|`; convergence is judged
    /// relative to the latter, so integrals that vanish by cancellation
    /// (orthogonality relations) terminate.
    pub fn integrate_with_scale<T, F>(&self, f: F, tail_growth: f64, rel: f64) -> Result<(QuadResult<T>, f64)>
    where
        T: QuadValue,
        F: Fn(usize, usize, &CutPoint) -> Result<T> + Sync,
    {
        self.check_integrable(tail_growth)?;
        let mut acc = T::zero();
        let mut acc_abs = 0.0;
        let mut prev: Option<T> = None;
        let mut evaluations = 0;
        let mut last_err = f64::INFINITY;
        for level in 0..=MAX_LEVEL {
            let samples = self.level(level)?;
            let vals: Vec<Result<T>> = samples
                .par_iter()
                .enumerate()
                .map(|(i, s)| if s.density == 0.0 { Ok(T::zero()) } else { f(level, i, &s.pt) })
                .collect();
            for (s, v) in samples.iter().zip(vals) {
                let v = v?;
                let w = s.weight * s.density;
                acc = acc + v * w;
                acc_abs += v.magnitude() * w.abs();
            }
            evaluations += samples.len();
            let h = step(level);
            let est = acc * h;
            let scale = acc_abs * h;
            if !est.finite() {
                return Err(Error::NoConvergence { estimate: f64::NAN, error: f64::INFINITY });
            }
            if let Some(p) = prev {
                last_err = (est + p * -1.0).magnitude();
                if level >= MIN_LEVEL && last_err <= rel * scale {
                    return Ok((QuadResult { value: est, error_estimate: last_err, evaluations }, scale));
                }
            }
            prev = Some(est);
        }
        Err(Error::NoConvergence { estimate: (acc * step(MAX_LEVEL)).magnitude(), error: last_err })
    }

    /// `int f dmu` for bounded `f`.
    pub fn integrate<T, F>(&self, f: F) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: Fn(&CutPoint) -> T + Sync,
    {
        self.integrate_nodes(|_, _, pt| Ok(f(pt)), 0.0, Tolerances::default())
    }

    pub fn integrate_with<T, F>(&self, f: F, tail_growth: f64, tol: Tolerances) -> Result<QuadResult<T>>
    where
        T: QuadValue,
        F: Fn(&CutPoint) -> T + Sync,
    {
        self.integrate_nodes(|_, _, pt| Ok(f(pt)), tail_growth, tol)
    }

    pub fn mass(&self) -> Result<f64> {
        Ok(self.integrate(|_| 1.0f64)?.value)
    }

    /// Moment `int x^m dmu`.
    pub fn moment(&self, m: u32) -> Result<f64> {
        Ok(self.integrate_with(|pt| pt.x.powi(m as i32), m as f64, Tolerances::default())?.value)
    }

    /// Cauchy transform `int dmu(x) / (lambda - x)`.
    pub fn cauchy_transform(&self, lambda: Complex64) -> Result<Complex64> {
        cauchy_transform(self, lambda)
    }
}

/// Cauchy transform of a cut measure. Close to the cut (distance below
/// `1e-3 * scale`) the cut is split at the nearest point and a local
/// quadratic interpolant of the density is subtracted and integrated in
/// closed form.
pub fn cauchy_transform(m: &MeasureHandle, lambda: Complex64) -> Result<Complex64> {
    let cut = m.cut();
    let dist = cut.distance(lambda);
    if dist == 0.0 {
        return Err(Error::OnCut);
    }
    if dist >= 1e-3 * m.scale() {
        let r = m.integrate_with(|pt| (lambda - pt.x).inv(), -1.0, Tolerances::default())?;
        return Ok(r.value);
    }
    near_cut_transform(m, lambda)
}

fn near_cut_transform(m: &MeasureHandle, lambda: Complex64) -> Result<Complex64> {
    m.check_integrable(-1.0)?;
    let cut = m.cut();
    let dens = m.density_fn();
    let x0 = match cut {
        Cut::Interval { lo, hi } => lambda.re.clamp(lo, hi),
        Cut::Ray { end, toward_positive: true } => lambda.re.max(end),
        Cut::Ray { end, toward_positive: false } => lambda.re.min(end),
    };
    let base = CutPoint::on(&cut, x0);
    let room = base.nearest_end_distance();
    let w = (0.02 * m.scale()).min(0.5 * room);
    let tol = Tolerances { rel: 1e-11, abs: 1e-15 };
    // pieces measured in cut coordinates so endpoint distances stay exact
    let piece = |a: f64, b: f64, subtract: Option<[f64; 3]>| -> Result<Complex64> {
        if b <= a {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let r = tanh_sinh(
            a,
            b,
            |pt: &CutPoint| -> Result<Complex64> {
                let cp = full_point(&cut, pt, a, b);
                let mut d = dens(&cp)?;
                if let Some(c) = subtract {
                    let u = cp.x - x0;
                    d -= c[0] + c[1] * u + c[2] * u * u;
                }
                Ok((lambda - cp.x).inv() * d)
            },
            tol,
        )?;
        Ok(r.value)
    };
    let ray_piece = |from: f64, toward_positive: bool| -> Result<Complex64> {
        let geom = Geometry::Ray { end: from, toward_positive, scale: m.scale() };
        let r = integrate_geometry(
            geom,
            |pt: &CutPoint| -> Result<Complex64> {
                let cp = CutPoint::on(&cut, pt.x);
                Ok((lambda - cp.x).inv() * dens(&cp)?)
            },
            tol,
        )?;
        Ok(r.value)
    };
    let (lo, hi) = match cut {
        Cut::Interval { lo, hi } => (lo, hi),
        Cut::Ray { end, toward_positive: true } => (end, f64::INFINITY),
        Cut::Ray { end, toward_positive: false } => (f64::NEG_INFINITY, end),
    };
    let (wl, wr) = (x0 - w, x0 + w);
    let mut total = Complex64::new(0.0, 0.0);
    if w > 0.0 && room > 0.0 {
        let f0 = dens(&base)?;
        let fl = dens(&CutPoint::on(&cut, wl))?;
        let fr = dens(&CutPoint::on(&cut, wr))?;
        let c = [f0, (fr - fl) / (2.0 * w), (fr - 2.0 * f0 + fl) / (2.0 * w * w)];
        total += piece(wl, x0, Some(c))? + piece(x0, wr, Some(c))?;
        let lp = lambda - x0;
        let j0 = ((lp + w) / (lp - w)).ln();
        let j1 = lp * j0 - 2.0 * w;
        let j2 = lp * j1;
        total += j0 * c[0] + j1 * c[1] + j2 * c[2];
    } else {
        // nearest point is a cut end: integrate away from it directly
        return if lo.is_finite() && hi.is_finite() {
            piece(lo, hi, None)
        } else {
            m.integrate_with(|pt| (lambda - pt.x).inv(), -1.0, tol).map(|r| r.value)
        };
    }
    total += if lo.is_finite() { piece(lo, wl, None)? } else { ray_piece(wl, false)? };
    total += if hi.is_finite() { piece(wr, hi, None)? } else { ray_piece(wr, true)? };
    Ok(total)
}

/// Convert a point of the sub-interval `[a, b]` to cut coordinates, keeping
/// exact distances where a sub-interval end coincides with a cut end.
fn full_point(cut: &Cut, pt: &CutPoint, a: f64, b: f64) -> CutPoint {
    let mut cp = CutPoint::on(cut, pt.x);
    match *cut {
        Cut::Interval { lo, hi } => {
            if a == lo {
                cp.d_lo = pt.d_lo;
            }
            if b == hi {
                cp.d_hi = pt.d_hi;
            }
        }
        Cut::Ray { end, toward_positive: true } if a == end => cp.d_lo = pt.d_lo,
        Cut::Ray { end, toward_positive: false } if b == end => cp.d_hi = pt.d_hi,
        _ => {}
    }
    cp
}

/// Sub-interval integral of a cut density, used for cumulative counts.
pub fn integrate_density_on(m: &MeasureHandle, a: f64, b: f64, tol: Tolerances) -> Result<f64> {
    let cut = m.cut();
    let dens = m.density_fn();
    if b <= a {
        return Ok(0.0);
    }
    let r = tanh_sinh(a, b, |pt: &CutPoint| dens(&full_point(&cut, pt, a, b)), tol)?;
    Ok(r.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn semicircle() -> MeasureHandle {
        MeasureHandle::new(Cut::Interval { lo: -1.0, hi: 1.0 }, 1.0, (0.5, 0.5), None, |pt| {
            Ok(2.0 * (pt.d_lo * pt.d_hi).sqrt() / PI)
        })
    }

    #[test]
    fn semicircle_mass_and_transform() {
        let m = semicircle();
        assert!((m.mass().unwrap() - 1.0).abs() < 1e-13);
        let g = m.cauchy_transform(Complex64::new(2.0, 0.0)).unwrap();
        assert!((g.re - 2.0 * (2.0 - 3f64.sqrt())).abs() < 1e-12);
        let far = m.cauchy_transform(Complex64::new(1e6, 0.0)).unwrap();
        assert!((far.re * 1e6 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn arcsine_mass_with_inverse_sqrt_ends() {
        let m = MeasureHandle::new(Cut::Interval { lo: -1.0, hi: 1.0 }, 1.0, (-0.5, -0.5), None, |pt| {
            Ok(1.0 / (PI * (pt.d_lo * pt.d_hi).sqrt()))
        });
        assert!((m.mass().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ray_with_algebraic_tail() {
        // int_0^inf d^{-1/2} / (1 + d) dd = pi
        let m = MeasureHandle::new(Cut::Ray { end: 0.0, toward_positive: true }, 1.0, (-0.5, 0.0), Some(-1.5), |pt| {
            Ok(pt.d_lo.powf(-0.5) / (1.0 + pt.d_lo))
        });
        assert!((m.mass().unwrap() - PI).abs() < 1e-11);
        let left = MeasureHandle::new(Cut::Ray { end: 2.0, toward_positive: false }, 1.0, (0.0, -0.5), Some(-1.5), |pt| {
            Ok(pt.d_hi.powf(-0.5) / (1.0 + pt.d_hi))
        });
        assert!((left.mass().unwrap() - PI).abs() < 1e-11);
    }

    #[test]
    fn polynomial_exactness_against_smooth_weight() {
        // Legendre-type check: int_{-1}^{1} x^{2k} dx = 2/(2k+1)
        let m = MeasureHandle::new(Cut::Interval { lo: -1.0, hi: 1.0 }, 1.0, (0.0, 0.0), None, |_| Ok(1.0));
        for k in 0..=15 {
            let v = m.moment(2 * k).unwrap();
            let want = 2.0 / (2 * k + 1) as f64;
            assert!((v - want).abs() < 1e-12 * want, "k={k}");
        }
    }

    #[test]
    fn error_roughly_squares_per_level() {
        // level-by-level errors on the semicircle drop super-linearly
        let g = Geometry::Interval { a: -1.0, b: 1.0 };
        let f = |pt: &CutPoint| 2.0 * (pt.d_lo * pt.d_hi).sqrt() / PI * (3.0 * pt.x).cos();
        let exact = 2.0 * 1.0 / 3.0 * bessel_j1(3.0); // int (2/pi) sqrt(1-x^2) cos(3x) = 2 J1(3)/3
        let mut acc = 0.0;
        let mut errs = Vec::new();
        for level in 0..=4 {
            for (pt, w) in g.level_nodes(level) {
                acc += f(&pt) * w;
            }
            errs.push((acc * step(level) - exact).abs());
        }
        // double-exponential signature: log error roughly doubles each level
        assert!(errs[3] < 1e-6 && errs[4] < errs[3] * errs[3] * 1e3 + 1e-15, "{errs:?}");
    }

    fn bessel_j1(x: f64) -> f64 {
        // series, adequate for x = 3
        let mut s = 0.0;
        let mut term = x / 2.0;
        for k in 0..40 {
            s += term;
            let k = k as f64;
            term *= -(x * x / 4.0) / ((k + 1.0) * (k + 2.0));
        }
        s
    }

    #[test]
    fn non_integrable_is_rejected() {
        let m = MeasureHandle::new(Cut::Ray { end: 0.0, toward_positive: true }, 1.0, (-0.5, 0.0), Some(-0.5), |pt| {
            Ok(pt.d_lo.powf(-0.5))
        });
        assert!(matches!(m.mass(), Err(Error::NonIntegrable { .. })));
        assert!(m.cauchy_transform(Complex64::new(-1.0, 0.0)).is_ok());
    }

    #[test]
    fn on_cut_is_an_error() {
        let m = semicircle();
        assert_eq!(m.cauchy_transform(Complex64::new(0.3, 0.0)), Err(Error::OnCut));
    }

    #[test]
    fn near_cut_transform_matches_closed_form() {
        // semicircle transform = 2(lambda - sqrt(lambda^2 - 1)) with the branch ~ 1/lambda
        let m = semicircle();
        for &(re, im) in &[(0.3, 1e-4), (0.3, -1e-6), (-0.7, 2e-5), (1.00001, 0.0)] {
            let l = Complex64::new(re, im);
            let s = (l - 1.0).sqrt() * (l + 1.0).sqrt();
            let want = 2.0 * (l - s);
            let got = m.cauchy_transform(l).unwrap();
            assert!((got - want).norm() < 1e-8, "{l}: {got} vs {want}");
        }
    }

    #[test]
    fn cauchy_riemann_off_cut() {
        let m = semicircle();
        let l = Complex64::new(0.4, 0.3);
        let h = 1e-4;
        let fx = (m.cauchy_transform(l + h).unwrap() - m.cauchy_transform(l - h).unwrap()) / (2.0 * h);
        let fy = (m.cauchy_transform(l + Complex64::new(0.0, h)).unwrap()
            - m.cauchy_transform(l - Complex64::new(0.0, h)).unwrap())
            / (2.0 * h);
        // analytic: df/dy = i df/dx
        assert!((fy - Complex64::i() * fx).norm() < 1e-6);
    }
}
