//! Branches of `a(z) = lambda`, their boundary values on the cuts, and the
//! densities built from them.
//!
//! Off the cuts the `p + 1` roots are obtained by Aberth iteration and
//! sorted by modulus. On the interior of `Gamma_k` exactly the pair at
//! positions `k-1, k` is non-real; which member is the lower boundary value
//! `z_{k-1,-}` is decided once per cut by approaching a reference point
//! from below, after which a single real solve suffices. Within a small
//! distance of a branch point the colliding pair is resolved locally around
//! the critical point of `a`, using the exact distance to the endpoint.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{CutPoint, MeasureHandle};
use crate::roots::{aberth, eval_with_derivative};
use crate::symbol::{critical_structure, CriticalStructure, Cut, SymbolCoeffs};

const TIE_TOL: f64 = 1e-9;
const LOCAL_ZONE: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchValues {
    pub lambda: Complex64,
    /// `z_0, ..., z_p` in non-decreasing modulus.
    pub z: Vec<Complex64>,
    /// `tie_flags[i]` marks `|z_i| = |z_{i+1}|` within the tie tolerance.
    pub tie_flags: Vec<bool>,
}

impl BranchValues {
    pub fn has_ties(&self) -> bool {
        self.tie_flags.iter().any(|&t| t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CutSample {
    pub k: usize,
    pub x: f64,
    pub z_minus: Complex64,
    pub z_plus: Complex64,
    pub all_branches_minus: Vec<Complex64>,
}

fn polish(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut z = z;
    let (mut pv, _) = eval_with_derivative(coeffs, z);
    for _ in 0..3 {
        let (v, d) = eval_with_derivative(coeffs, z);
        if d == Complex64::new(0.0, 0.0) || v == Complex64::new(0.0, 0.0) {
            break;
        }
        let cand = z - v / d;
        let (cv, _) = eval_with_derivative(coeffs, cand);
        // guard against drifting off a near-double root
        if cv.norm() < pv.norm() {
            z = cand;
            pv = cv;
        } else {
            break;
        }
    }
    z
}

pub fn solve_branches(sym: &SymbolCoeffs, lambda: Complex64) -> Result<BranchValues> {
    let c = sym.branch_polynomial(lambda);
    let mut z = aberth(&c, 1e-15)?;
    for zi in z.iter_mut() {
        *zi = polish(&c, *zi);
    }
    z.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.im.total_cmp(&b.im)));
    let tie_flags = z
        .windows(2)
        .map(|w| (w[1].norm() - w[0].norm()) <= TIE_TOL * w[1].norm())
        .collect();
    Ok(BranchValues { lambda, z, tie_flags })
}

/// `z_j' = 1 / a'(z_j)` for each branch.
pub fn branch_derivative(sym: &SymbolCoeffs, bv: &BranchValues) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(bv.z.len());
    for &z in &bv.z {
        let d = sym.da_at(z);
        let size = (z * z).inv().norm()
            + (1..=sym.p())
                .map(|k| k as f64 * sym.coeffs()[k].abs() * z.norm().powi(k as i32 - 1))
                .sum::<f64>();
        if bv.has_ties() || d.norm() < 1e-10 * size {
            return Err(Error::AtBranchPoint { derivative: d.norm() });
        }
        out.push(d.inv());
    }
    Ok(out)
}

/// Conformal map of the complement of `[alpha, beta]` onto the unit disk,
/// `phi(inf) = 0`, `phi'(inf) > 0`.
pub fn conformal_map(alpha: f64, beta: f64, lambda: Complex64) -> Result<Complex64> {
    if lambda.im == 0.0 && lambda.re >= alpha && lambda.re <= beta {
        return Err(Error::OnCut);
    }
    let w = (2.0 * lambda - alpha - beta) / (beta - alpha);
    // product of principal roots has its cut exactly on [-1, 1]
    let s = (w - 1.0).sqrt() * (w + 1.0).sqrt();
    let mut phi = (w + s).inv();
    if phi.norm() >= 1.0 {
        phi = (w - s).inv();
    }
    Ok(phi)
}

/// Second divided difference `F(t) = (a(z+t) - a(z) - a'(z) t)/t^2` and
/// first divided difference `E(t) = (a'(z+t) - a'(z))/t` at a critical point
/// `z` of `a`. Both are sums of terms without cancellation near `t = 0`.
fn divided_differences(sym: &SymbolCoeffs, z: f64, t: Complex64) -> (Complex64, Complex64) {
    let zc = Complex64::new(z, 0.0);
    let w = zc + t;
    let mut f = (zc * zc * w).inv();
    let mut e = (w + zc) / (w * w * zc * zc);
    let a = sym.coeffs();
    for (k, &ak) in a.iter().enumerate().skip(2) {
        let mut sf = Complex64::new(0.0, 0.0);
        let mut se = Complex64::new(0.0, 0.0);
        for i in 0..k - 1 {
            let wpow = w.powi((k - 2 - i) as i32);
            sf += wpow * ((i + 1) as f64 * z.powi(i as i32));
            se += wpow * z.powi(i as i32);
        }
        f += sf * ak;
        e += se * (k as f64 * ak);
    }
    (f, e)
}

/// Boundary value near an endpoint resolved around the critical point.
#[derive(Clone, Copy, Debug)]
struct LocalValue {
    z: Complex64,
    /// `a'(z)`, computed as `t E(t)` without cancellation.
    da: Complex64,
}

/// Branch system of one symbol together with its cut structure and the
/// orientation of the lower boundary values on each cut.
#[derive(Clone, Debug)]
pub struct BranchContext {
    sym: SymbolCoeffs,
    cs: CriticalStructure,
    /// Sign of `Im z_{k-1,-}` on `Gamma_k`, `signs[k-1]`.
    signs: Vec<f64>,
}

impl BranchContext {
    pub fn new(sym: &SymbolCoeffs) -> Result<Self> {
        let cs = critical_structure(sym)?;
        let mut ctx = BranchContext { sym: sym.clone(), cs, signs: Vec::new() };
        let mut signs = Vec::with_capacity(ctx.cs.p());
        for k in 1..=ctx.cs.p() {
            let x = ctx.reference_point(k);
            let s = ctx.limit_from_below(k, x)?;
            signs.push(if s.z_minus.im >= 0.0 { 1.0 } else { -1.0 });
        }
        ctx.signs = signs;
        Ok(ctx)
    }

    pub fn symbol(&self) -> &SymbolCoeffs {
        &self.sym
    }

    pub fn structure(&self) -> &CriticalStructure {
        &self.cs
    }

    pub fn p(&self) -> usize {
        self.sym.p()
    }

    pub fn orientation_sign(&self, k: usize) -> f64 {
        self.signs[k - 1]
    }

    fn reference_point(&self, k: usize) -> f64 {
        match self.cs.cut(k) {
            Cut::Interval { lo, hi } => 0.5 * (lo + hi),
            Cut::Ray { end, toward_positive } => {
                let d = 1.0 + 0.1 * end.abs();
                if toward_positive {
                    end + d
                } else {
                    end - d
                }
            }
        }
    }

    fn check_in_cut(&self, k: usize, x: f64) -> Result<()> {
        if k == 0 || k > self.p() || !self.cs.cut(k).contains_interior(x) {
            return Err(Error::NotInCut { cut: k, x });
        }
        Ok(())
    }

    /// Lower boundary value of branch `k-1` on `Gamma_k` by the
    /// `eps`-schedule `x - i eps_m`, Richardson extrapolation and a final
    /// Newton step on the real equation.
    pub fn limit_from_below(&self, k: usize, x: f64) -> Result<CutSample> {
        self.check_in_cut(k, x)?;
        let scale = self.cs.scale();
        let eps: Vec<f64> = (0..=10).map(|m| 1e-3 * 0.5f64.powi(m) * scale).collect();
        let mut tracks: Vec<Vec<Complex64>> = Vec::with_capacity(eps.len());
        for (m, &e) in eps.iter().enumerate() {
            let bv = solve_branches(&self.sym, Complex64::new(x, -e))?;
            if m > 0 {
                let prev = tracks[m - 1][k - 1];
                let nearest = bv
                    .z
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - prev).norm().total_cmp(&(b.1 - prev).norm()))
                    .map(|(i, _)| i)
                    .unwrap();
                if nearest != k - 1 {
                    return Err(Error::UnstableOrdering { cut: k, x });
                }
            }
            tracks.push(bv.z);
        }
        let start = eps.len() - 5;
        let extrapolate = |j: usize| -> Complex64 {
            let xs = &eps[start..];
            let mut ys: Vec<Complex64> = tracks[start..].iter().map(|t| t[j]).collect();
            // Neville at eps = 0
            for level in 1..xs.len() {
                for i in (level..xs.len()).rev() {
                    let (xa, xb) = (xs[i - level], xs[i]);
                    ys[i] = (ys[i] * xa - ys[i - 1] * xb) / (xa - xb);
                }
            }
            ys[xs.len() - 1]
        };
        let coeffs = self.sym.branch_polynomial(Complex64::new(x, 0.0));
        let all: Vec<Complex64> = (0..=self.p()).map(|j| polish(&coeffs, extrapolate(j))).collect();
        let z_minus = all[k - 1];
        Ok(CutSample { k, x, z_minus, z_plus: z_minus.conj(), all_branches_minus: all })
    }

    /// Local resolution of the pair colliding at the endpoint `e` of
    /// `Gamma_k`, with `x - e = offset` known exactly.
    fn local_value(&self, k: usize, e: f64, offset: f64) -> Option<LocalValue> {
        let zs = self.cs.critical_z_for_endpoint(k, e);
        let sign = self.signs[k - 1];
        // t^2 F(t) = x - e, solved as the fixed point t = sqrt((x - e)/F(t))
        let mut t = Complex64::new(0.0, 0.0);
        for _ in 0..60 {
            let (f, _) = divided_differences(&self.sym, zs, t);
            let mut next = (Complex64::new(offset, 0.0) / f).sqrt();
            if next.im * sign < 0.0 {
                next = -next;
            }
            let done = (next - t).norm() <= 1e-16 * next.norm();
            t = next;
            if done {
                break;
            }
        }
        let (f, e2) = divided_differences(&self.sym, zs, t);
        let resid = (t * t * f - offset).norm();
        if !(resid <= 1e-13 * offset.abs()) || t.im * sign <= 0.0 {
            return None;
        }
        Some(LocalValue { z: Complex64::new(zs, 0.0) + t, da: t * e2 })
    }

    /// `z_{k-1,-}` together with `a'` at it, for a point of `Gamma_k`.
    fn boundary_with_derivative(&self, k: usize, pt: &CutPoint) -> Result<(Complex64, Complex64)> {
        let cut = self.cs.cut(k);
        if !(pt.d_lo > 0.0 && pt.d_hi > 0.0) {
            return Err(Error::NotInCut { cut: k, x: pt.x });
        }
        let (e, offset) = if pt.d_lo <= pt.d_hi {
            (cut_lo(&cut), pt.d_lo)
        } else {
            (cut_hi(&cut), -pt.d_hi)
        };
        if offset.abs() < LOCAL_ZONE * (1.0 + e.abs()) {
            if let Some(v) = self.local_value(k, e, offset) {
                return Ok((v.z, v.da));
            }
        }
        let z = self.fast_value(k, pt.x)?;
        Ok((z, self.sym.da_at(z)))
    }

    /// Real solve and selection of the pair member with the stored sign.
    fn fast_value(&self, k: usize, x: f64) -> Result<Complex64> {
        let bv = solve_branches(&self.sym, Complex64::new(x, 0.0))?;
        let (u, v) = (bv.z[k - 1], bv.z[k]);
        let sign = self.signs[k - 1];
        let pick = if u.im * sign > v.im * sign { u } else { v };
        if pick.im * sign > 1e-7 * pick.norm() {
            return Ok(pick);
        }
        // pair not resolved by the real solve; fall back to the schedule
        Ok(self.limit_from_below(k, x)?.z_minus)
    }

    /// `z_{k-1,-}(x)` on `Gamma_k`.
    pub fn boundary_value(&self, k: usize, pt: &CutPoint) -> Result<Complex64> {
        self.check_in_cut(k, pt.x).or_else(|e| if pt.d_lo > 0.0 && pt.d_hi > 0.0 { Ok(()) } else { Err(e) })?;
        Ok(self.boundary_with_derivative(k, pt)?.0)
    }

    pub fn point(&self, k: usize, x: f64) -> CutPoint {
        CutPoint::on(&self.cs.cut(k), x)
    }

    /// Density of `rho_j`.
    pub fn rho_density(&self, j: usize, pt: &CutPoint) -> Result<f64> {
        let z = self.boundary_value(j, pt)?;
        if j == 1 {
            return Ok(z.im / PI);
        }
        let shift = match self.cs.cut(j) {
            Cut::Ray { toward_positive: true, .. } => pt.d_lo,
            Cut::Ray { toward_positive: false, .. } => -pt.d_hi,
            Cut::Interval { .. } => unreachable!(),
        };
        Ok(z.im / (PI * shift))
    }

    /// Density of `s_k`: `(1/pi) Im(z'_{k-1,+} / z_{k-1,+})`.
    pub fn s_density(&self, k: usize, pt: &CutPoint) -> Result<f64> {
        let (z, da) = self.boundary_with_derivative(k, pt)?;
        let zp = z.conj();
        let dzp = da.conj().inv();
        Ok((dzp / zp).im / PI)
    }

    /// Length scale used for quadrature on `Gamma_k`.
    pub fn cut_scale(&self, k: usize) -> f64 {
        match self.cs.cut(k) {
            Cut::Interval { lo, hi } => hi - lo,
            Cut::Ray { .. } => self.cs.scale(),
        }
    }

    pub fn rho_measure(&self, j: usize) -> MeasureHandle {
        let ctx = Arc::new(self.clone());
        let cut = self.cs.cut(j);
        if j == 1 {
            MeasureHandle::new(cut, self.cut_scale(1), (0.5, 0.5), None, move |pt| ctx.rho_density(1, pt))
        } else {
            let tau = 1.0 / self.p() as f64 - 1.0;
            let ex = end_exponents(&cut, -0.5);
            MeasureHandle::new(cut, self.cut_scale(j), ex, Some(tau), move |pt| ctx.rho_density(j, pt))
        }
    }

    pub fn s_measure(&self, k: usize) -> MeasureHandle {
        let ctx = Arc::new(self.clone());
        let cut = self.cs.cut(k);
        let tail = if cut.is_interval() { None } else { Some(-1.0 - 1.0 / self.p() as f64) };
        let ex = end_exponents(&cut, -0.5);
        MeasureHandle::new(cut, self.cut_scale(k), ex, tail, move |pt| ctx.s_density(k, pt))
    }
}

fn end_exponents(cut: &Cut, alpha: f64) -> (f64, f64) {
    match cut {
        Cut::Interval { .. } => (alpha, alpha),
        Cut::Ray { toward_positive: true, .. } => (alpha, 0.0),
        Cut::Ray { toward_positive: false, .. } => (0.0, alpha),
    }
}

fn cut_lo(cut: &Cut) -> f64 {
    match *cut {
        Cut::Interval { lo, .. } => lo,
        Cut::Ray { end, toward_positive: true } => end,
        Cut::Ray { toward_positive: false, .. } => f64::NEG_INFINITY,
    }
}

fn cut_hi(cut: &Cut) -> f64 {
    match *cut {
        Cut::Interval { hi, .. } => hi,
        Cut::Ray { end, toward_positive: false } => end,
        Cut::Ray { toward_positive: true, .. } => f64::INFINITY,
    }
}

/// Boundary values of branch `k-1` on `Gamma_k` by the `eps`-schedule.
pub fn boundary_values(sym: &SymbolCoeffs, k: usize, x: f64) -> Result<CutSample> {
    BranchContext::new(sym)?.limit_from_below(k, x)
}

pub fn s_density(sym: &SymbolCoeffs, k: usize, x: f64) -> Result<f64> {
    let ctx = BranchContext::new(sym)?;
    ctx.check_in_cut(k, x)?;
    ctx.s_density(k, &ctx.point(k, x))
}

pub fn rho_density(sym: &SymbolCoeffs, j: usize, x: f64) -> Result<f64> {
    let ctx = BranchContext::new(sym)?;
    ctx.check_in_cut(j, x)?;
    ctx.rho_density(j, &ctx.point(j, x))
}

/// Truncated vector continued fraction for `(z_0, z_0^2, ..., z_0^p)`,
/// evaluated from the deepest floor upwards.
pub fn jacobi_perron(sym: &SymbolCoeffs, lambda: Complex64, depth: usize) -> Result<Vec<Complex64>> {
    let p = sym.p();
    let a = sym.coeffs();
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let mut t = vec![zero; p];
    for floor in (1..=depth).rev() {
        let (num, den): (Vec<Complex64>, Vec<Complex64>) = if floor <= p {
            let mut d = vec![zero; p - floor];
            for m in (1..floor).rev() {
                d.push(Complex64::new(-a[m], 0.0));
            }
            d.push(lambda - a[0]);
            (vec![one; p], d)
        } else {
            let mut n = vec![one; p];
            n[0] = Complex64::new(-a[p], 0.0);
            let mut d: Vec<Complex64> = (1..p).rev().map(|m| Complex64::new(-a[m], 0.0)).collect();
            d.push(lambda - a[0]);
            (n, d)
        };
        let y: Vec<Complex64> = den.iter().zip(&t).map(|(d, t)| d + t).collect();
        let last = y[p - 1];
        if last.norm() == 0.0 || !last.is_finite() {
            return Err(Error::DivisionBlowup { floor });
        }
        let mut inv = Vec::with_capacity(p);
        inv.push(last.inv());
        for &yi in &y[..p - 1] {
            inv.push(yi / last);
        }
        t = num.iter().zip(&inv).map(|(n, v)| n * v).collect();
    }
    Ok(t)
}

/// `|z_k'/z_k + int ds_k/(x - lambda) - int ds_{k+1}/(x - lambda)|`.
pub fn log_derivative_identity_residual(sym: &SymbolCoeffs, k: usize, lambda: Complex64) -> Result<f64> {
    let ctx = BranchContext::new(sym)?;
    let p = ctx.p();
    if k > p {
        return Err(Error::InvalidArgument(format!("branch index {k} exceeds p = {p}")));
    }
    let bv = solve_branches(sym, lambda)?;
    let z = bv.z[k];
    let lhs = sym.da_at(z).inv() / z;
    // int ds/(x - lambda) = -(Cauchy transform)
    let mut total = lhs;
    if k >= 1 {
        total -= ctx.s_measure(k).cauchy_transform(lambda)?;
    }
    if k < p {
        total += ctx.s_measure(k + 1).cauchy_transform(lambda)?;
    }
    Ok(total.norm())
}
