//! Widom closed forms for the second-type functions, strong and ratio
//! asymptotics, Hermite–Padé error orders, generalized spectra of shifted
//! Toeplitz sections with their Riemann–Hilbert minors, and counting
//! measure comparisons.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::banded::{banded_logdet, LogDet};
use crate::branches::{conformal_map, solve_branches, BranchContext};
use crate::error::{Error, Result};
use crate::nikishin::{product_measure, psi1, psi_decay, InnerTable, NikishinSystem};
use crate::polyseq::{eval_q, multi_index, zeros_q};
use crate::quadrature::{integrate_density_on, Tolerances};
use crate::symbol::{Cut, SymbolCoeffs};
use crate::xprec::{q_values_extended, z0_extended, XComplex};

/// Relative gap between branches below which the Widom sum is refused.
pub const WIDOM_GAP_TOL: f64 = 1e-7;

/// Widom sum for `Psi_{n,l}` from a branch vector, as `(s, log_scale)` with
/// value `s * exp(log_scale)` so that large `n` cannot overflow.
fn widom_scaled(z: &[Complex64], a_p: f64, n: usize, l: usize) -> (Complex64, f64) {
    let p = z.len() - 1;
    let e = (n + 1) as f64;
    let logs: Vec<f64> = (l..=p).map(|j| -e * z[j].norm().ln()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = Complex64::new(0.0, 0.0);
    for (i, j) in (l..=p).enumerate() {
        let mut prod = Complex64::new(1.0, 0.0);
        for k in l..=p {
            if k != j {
                prod *= z[k] - z[j];
            }
        }
        let phase = Complex64::from_polar(1.0, -e * z[j].arg());
        sum += phase * (logs[i] - top).exp() / prod;
    }
    (sum * widom_sign(p) / a_p, top)
}

/// Overall sign `(-1)^{p+1}` of the Widom sums. With `Psi_{n,0} = Q_n` monic
/// the leading term `z_0^{-(n+1)} / prod_{k>0} (z_k - z_0)` behaves like
/// `(-1)^{p+1} a_p lambda^n`, which fixes the sign for every `p`.
fn widom_sign(p: usize) -> f64 {
    if p % 2 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Widom formula evaluated on a supplied branch vector `z_0, ..., z_p`.
pub fn widom_from_branches(z: &[Complex64], a_p: f64, n: usize, l: usize) -> Result<Complex64> {
    let p = z.len() - 1;
    if l > p {
        return Err(Error::InvalidArgument(format!("l = {l} exceeds p = {p}")));
    }
    for i in l..=p {
        for j in i + 1..=p {
            let gap = (z[i] - z[j]).norm();
            if gap < WIDOM_GAP_TOL * z[i].norm().max(z[j].norm()) {
                return Err(Error::NearBranchPoint { i, j, gap });
            }
        }
    }
    let (s, log_scale) = widom_scaled(z, a_p, n, l);
    Ok(s * log_scale.exp())
}

/// `Psi_{n,l}(lambda) = ((-1)^{p+1}/a_p) sum_{j=l}^p z_j^{-(n+1)} / prod_{k != j} (z_k - z_j)`,
/// products over `k` in `l..=p`.
pub fn widom_psi(sym: &SymbolCoeffs, n: usize, l: usize, lambda: Complex64) -> Result<Complex64> {
    let bv = solve_branches(sym, lambda)?;
    widom_from_branches(&bv.z, sym.a_ext(sym.p() as isize), n, l)
}

#[derive(Clone, Debug, Serialize)]
pub struct StrongLimit {
    /// `(n, z_l^{n+1} Psi_{n,l})`.
    pub values: Vec<(usize, Complex64)>,
    pub limit: Complex64,
    pub deviations: Vec<f64>,
}

impl StrongLimit {
    pub fn last_deviation(&self) -> f64 {
        *self.deviations.last().unwrap_or(&0.0)
    }
}

/// `z_l^{n+1} Psi_{n,l}(lambda)` over `ns` against the limit
/// `(-1)^{p+1} (a_p prod_{k>l} (z_k - z_l))^{-1}`.
pub fn strong_limit_check(sym: &SymbolCoeffs, l: usize, lambda: Complex64, ns: &[usize]) -> Result<StrongLimit> {
    let p = sym.p();
    if l > p {
        return Err(Error::InvalidArgument(format!("l = {l} exceeds p = {p}")));
    }
    if lambda.im == 0.0 {
        let cs = crate::symbol::critical_structure(sym)?;
        let on = |k: usize| k >= 1 && k <= p && cs.cut(k).contains(lambda.re);
        if on(l) || on(l + 1) {
            return Err(Error::OnCut);
        }
    }
    let bv = solve_branches(sym, lambda)?;
    let z = &bv.z;
    let a_p = sym.a_ext(p as isize);
    // validates the gaps once
    widom_from_branches(z, a_p, 0, l)?;
    let mut prod = Complex64::new(1.0, 0.0);
    for k in l + 1..=p {
        prod *= z[k] - z[l];
    }
    let limit = widom_sign(p) * (prod * a_p).inv();
    let mut values = Vec::with_capacity(ns.len());
    let mut deviations = Vec::with_capacity(ns.len());
    for &n in ns {
        // z_l^{n+1} Psi_{n,l} term by term, each ratio has modulus <= 1
        let mut s = Complex64::new(0.0, 0.0);
        for j in l..=p {
            let mut pj = Complex64::new(1.0, 0.0);
            for k in l..=p {
                if k != j {
                    pj *= z[k] - z[j];
                }
            }
            s += (z[l] / z[j]).powi(n as i32 + 1) / pj;
        }
        let v = s * widom_sign(p) / a_p;
        values.push((n, v));
        deviations.push((v - limit).norm());
    }
    Ok(StrongLimit { values, limit, deviations })
}

#[derive(Clone, Debug, Serialize)]
pub struct HpFit {
    pub n: usize,
    pub j: usize,
    pub slope: f64,
    /// `-(n_j + 1)`.
    pub expected: f64,
    /// `(lambda, |Q_n z_0^j - Q_{n-j}|)`.
    pub samples: Vec<(f64, f64)>,
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut num, mut den) = (0.0, 0.0);
    for &(x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

fn xq(q: &[XComplex], m: isize) -> XComplex {
    if m < 0 {
        XComplex::zero()
    } else {
        q[m as usize].clone()
    }
}

/// Log-log slope of the type II Hermite–Padé remainder
/// `|Q_n z_0^j - Q_{n-j}|` over a real grid in `[1e3, 1e6]`, computed in
/// extended precision.
pub fn hp_error_order(sym: &SymbolCoeffs, n: usize, j: usize, grid: &[f64]) -> Result<HpFit> {
    let p = sym.p();
    if j == 0 || j > p {
        return Err(Error::InvalidArgument(format!("j = {j} outside 1..={p}")));
    }
    if grid.len() < 2 || grid.iter().any(|&l| !(1e3..=1e6).contains(&l)) {
        return Err(Error::InvalidArgument("hp grid must have >= 2 points in [1e3, 1e6]".into()));
    }
    let samples = grid
        .par_iter()
        .map(|&lam| {
            let lc = Complex64::new(lam, 0.0);
            let seed = solve_branches(sym, lc)?.z[0];
            let z0 = z0_extended(sym, lc, seed);
            let q = q_values_extended(sym, n, lc);
            let err = &(&q[n] * &z0.powu(j as u32)) - &xq(&q, n as isize - j as isize);
            let mag = err.norm();
            if mag < 1e-300 {
                return Err(Error::Underflow { magnitude: mag });
            }
            Ok((lam, mag))
        })
        .collect::<Result<Vec<_>>>()?;
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(l, e)| (l.ln(), e.ln())).collect();
    let expected = -(multi_index(n, p).get(j) as f64 + 1.0);
    Ok(HpFit { n, j, slope: least_squares_slope(&logs), expected, samples })
}

/// Log-spaced grid on `[1e3, 1e6]`.
pub fn default_hp_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| 10f64.powf(3.0 + 3.0 * i as f64 / (points - 1) as f64)).collect()
}

/// `|z_0^j - Q_{n-j}/Q_n|^{1/(n + n_j)}` at each probe.
pub fn ratio_rate(sym: &SymbolCoeffs, j: usize, probes: &[Complex64], n: usize) -> Result<Vec<f64>> {
    let p = sym.p();
    if j == 0 || j > p {
        return Err(Error::InvalidArgument(format!("j = {j} outside 1..={p}")));
    }
    let cs = crate::symbol::critical_structure(sym)?;
    let g1 = cs.cut(1);
    let nj = multi_index(n, p).get(j);
    probes
        .par_iter()
        .map(|&lam| {
            if g1.distance(lam) == 0.0 {
                return Err(Error::OnCut);
            }
            let seed = solve_branches(sym, lam)?.z[0];
            let z0 = z0_extended(sym, lam, seed);
            let q = q_values_extended(sym, n, lam);
            let ratio = xq(&q, n as isize - j as isize).div(&q[n]);
            let err = (&z0.powu(j as u32) - &ratio).norm();
            Ok(err.powf(1.0 / (n + nj) as f64))
        })
        .collect()
}

/// `|phi(lambda)|` for the conformal map of the complement of `Gamma_1`.
pub fn phi_modulus(sym: &SymbolCoeffs, lambda: Complex64) -> Result<f64> {
    let cs = crate::symbol::critical_structure(sym)?;
    match cs.cut(1) {
        Cut::Interval { lo, hi } => Ok(conformal_map(lo, hi, lambda)?.norm()),
        _ => unreachable!("Gamma_1 is an interval"),
    }
}

/// Shifted Toeplitz section: `A_n - lambda I_n` with its first `k` rows and
/// last `k` columns removed, so entry `(i, j)` is `a_{i+k-j}` with
/// `a_{-1} = 1`, minus `lambda` where `i + k - j = 0`, and the order is
/// `n - k`. With this order `P_{n,0} = (-1)^n Q_n` and the minors satisfy
/// `B_{n,k} = const * P_{n,k}`.
#[derive(Clone, Debug)]
pub struct ToeplitzSection {
    pub n: usize,
    pub k: usize,
    sym: SymbolCoeffs,
}

impl ToeplitzSection {
    pub fn new(sym: &SymbolCoeffs, n: usize, k: usize) -> Result<Self> {
        if k >= sym.p() {
            return Err(Error::InvalidArgument(format!("shift k = {k} must be below p = {}", sym.p())));
        }
        Ok(ToeplitzSection { n, k, sym: sym.clone() })
    }

    pub fn entry(&self, i: usize, j: usize, lambda: Complex64) -> Complex64 {
        let m = i as isize + self.k as isize - j as isize;
        if m < -1 || m > self.sym.p() as isize {
            return Complex64::new(0.0, 0.0);
        }
        let v = Complex64::new(self.sym.a_ext(m), 0.0);
        if m == 0 {
            v - lambda
        } else {
            v
        }
    }

    /// `(kl, ku)`: the band is `p - k` below and `k + 1` above the diagonal.
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.sym.p() - self.k, self.k + 1)
    }

    pub fn order(&self) -> usize {
        self.n.saturating_sub(self.k)
    }

    pub fn det(&self, lambda: Complex64) -> LogDet {
        let (kl, ku) = self.bandwidths();
        banded_logdet(self.order(), kl, ku, |i, j| self.entry(i, j, lambda))
    }
}

/// `P_{n,k}(lambda)`, the determinant of the shifted section.
pub fn p_nk(sym: &SymbolCoeffs, n: usize, k: usize, lambda: Complex64) -> Result<Complex64> {
    Ok(ToeplitzSection::new(sym, n, k)?.det(lambda).value())
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub k: usize,
    pub n: usize,
    /// Real zeros of `P_{n,k}`, ordered from the finite end of `Gamma_{k+1}`.
    pub roots: Vec<f64>,
    /// `(root, i/n)`: the normalized counting measure as a step function.
    pub counting: Vec<(f64, f64)>,
    pub hausdorff_to_cut: f64,
    /// Zeros of `Psi_{n,1}` used to bracket the roots when `k = 1`.
    pub psi_zeros: Vec<f64>,
}

/// Bisection on a sign function between `a` and `b` with opposite signs.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m == a || m == b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Sign changes of `f` over the sorted abscissae `xs`, refined by bisection.
fn sign_roots<F: Fn(f64) -> f64 + Sync>(f: &F, xs: &[f64]) -> Vec<f64> {
    let signs: Vec<f64> = xs.par_iter().map(|&x| f(x)).collect();
    let brackets: Vec<(f64, f64)> = (0..xs.len() - 1)
        .filter(|&i| signs[i] != 0.0 && signs[i + 1] != 0.0 && signs[i] != signs[i + 1])
        .map(|i| (xs[i], xs[i + 1]))
        .collect();
    let mut roots: Vec<f64> = brackets.par_iter().map(|&(a, b)| bisect(f, a, b)).collect();
    roots.extend(xs.iter().zip(&signs).filter(|(_, s)| **s == 0.0).map(|(x, _)| *x));
    roots.sort_by(f64::total_cmp);
    roots
}

/// Abscissae `end + dir * t` for `t` in `[-t0, 0]` (linear) and `[0, r]`
/// (quadratic, dense near the finite end), with extra breakpoints merged in.
fn ray_grid(end: f64, dir: f64, t0: f64, r: f64, m: usize, extra: &[f64]) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..m / 10).map(|i| -t0 + t0 * i as f64 / (m / 10) as f64).collect();
    ts.extend((0..=m).map(|i| r * (i as f64 / m as f64).powi(2)));
    ts.extend(extra.iter().map(|&x| (x - end) * dir));
    let mut xs: Vec<f64> = ts.into_iter().map(|t| end + dir * t).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn ray_geometry(cut: &Cut) -> (f64, f64) {
    match *cut {
        Cut::Ray { end, toward_positive } => (end, if toward_positive { 1.0 } else { -1.0 }),
        Cut::Interval { lo, .. } => (lo, 1.0),
    }
}

/// Sign of `Psi_{n,1}` on the real axis outside `Gamma_1`, from the Widom
/// sum with the overall magnitude divided out.
fn psi1_sign(sym: &SymbolCoeffs, n: usize, x: f64) -> f64 {
    match solve_branches(sym, Complex64::new(x, 0.0)) {
        Ok(bv) => {
            let (s, _) = widom_scaled(&bv.z, sym.a_ext(sym.p() as isize), n, 1);
            if s.re.is_finite() {
                s.re.signum()
            } else {
                0.0
            }
        }
        Err(_) => 0.0,
    }
}

fn psi_zeros_ctx(ctx: &BranchContext, n: usize) -> Result<Vec<f64>> {
    let sym = ctx.symbol();
    let p = sym.p();
    if p < 2 {
        return Err(Error::InvalidArgument("Psi_{n,1} zeros need p >= 2".into()));
    }
    let expected = multi_index(n, p).tail_sum(1);
    if expected == 0 {
        return Ok(Vec::new());
    }
    let cut = ctx.structure().cut(2);
    let (end, dir) = ray_geometry(&cut);
    let scale = ctx.cut_scale(2);
    let f = |x: f64| psi1_sign(sym, n, x);
    let mut r = 4.0 * scale;
    let mut m = 200 + 40 * n;
    let mut found = Vec::new();
    for _ in 0..80 {
        if m > 1 << 22 {
            break;
        }
        // interior of the cut only: start just off the branch point
        let xs: Vec<f64> = ray_grid(end, dir, 0.0, r, m, &[])
            .into_iter()
            .filter(|&x| (x - end).abs() > 1e-9 * scale)
            .collect();
        found = sign_roots(&f, &xs);
        let outer = found.iter().map(|&x| (x - end).abs()).fold(0.0, f64::max);
        if found.len() == expected && outer < 0.8 * r {
            break;
        }
        if found.len() > expected {
            m *= 2;
        } else if found.len() == expected {
            r *= 2.0;
        } else {
            r *= 2.0;
            m = m * 3 / 2;
        }
    }
    if found.len() != expected {
        return Err(Error::CountMismatch { expected, found: found.len() });
    }
    found.sort_by(|a, b| ((a - end) * dir).total_cmp(&((b - end) * dir)));
    Ok(found)
}

/// Zeros of `Psi_{n,1}` on `Gamma_2`, ordered from the finite end. The
/// function is real there and is evaluated by its Widom sum; the scan radius
/// doubles until the outermost zero is well inside it.
pub fn psi_zeros(sys: &NikishinSystem, n: usize) -> Result<Vec<f64>> {
    psi_zeros_ctx(&sys.ctx, n)
}

fn hausdorff(roots: &[f64], cut: &Cut) -> f64 {
    if roots.is_empty() {
        return f64::INFINITY;
    }
    let to_cut = roots.iter().map(|&x| cut.distance(Complex64::new(x, 0.0))).fold(0.0, f64::max);
    // cut truncated to the span of the roots (rays) or taken whole (interval)
    let (a, b) = match *cut {
        Cut::Interval { lo, hi } => (lo, hi),
        Cut::Ray { end, toward_positive } => {
            let far = if toward_positive {
                roots.iter().cloned().fold(end, f64::max)
            } else {
                roots.iter().cloned().fold(end, f64::min)
            };
            (end.min(far), end.max(far))
        }
    };
    let mut inside: Vec<f64> = roots.iter().map(|&x| x.clamp(a, b)).collect();
    inside.sort_by(f64::total_cmp);
    let mut from_cut = (inside[0] - a).max(b - inside[inside.len() - 1]);
    for w in inside.windows(2) {
        from_cut = from_cut.max(0.5 * (w[1] - w[0]));
    }
    to_cut.max(from_cut)
}

/// Real zeros of `P_{n,k}` near `Gamma_{k+1}`. The determinant is evaluated
/// by banded LU at each real point and never expanded; for `k = 1` the zeros
/// of `Psi_{n,1}` are merged into the scan grid and the count is checked
/// against the degree `N_{n-1,1}` of `B_{n,1}`, which is `N_{n,1} - 1`
/// unless the last step of the multi-index went to `n_1`.
pub fn gen_spectrum(sym: &SymbolCoeffs, n: usize, k: usize) -> Result<SpectrumReport> {
    let ctx = BranchContext::new(sym)?;
    gen_spectrum_ctx(&ctx, n, k)
}

pub fn gen_spectrum_ctx(ctx: &BranchContext, n: usize, k: usize) -> Result<SpectrumReport> {
    let sym = ctx.symbol();
    let p = sym.p();
    let section = ToeplitzSection::new(sym, n, k)?;
    let f = |x: f64| section.det(Complex64::new(x, 0.0)).real_sign();
    let cut = ctx.structure().cut(k + 1);
    let scale = ctx.structure().scale();
    let t0 = 0.1 * scale;
    let mut psi = Vec::new();
    let roots = match cut {
        Cut::Interval { lo, hi } => {
            let m = 400 + 40 * n;
            let (c, h) = (0.5 * (lo + hi), 0.5 * (hi - lo) + t0);
            let xs: Vec<f64> = (0..=m).map(|i| c - h * (std::f64::consts::PI * i as f64 / m as f64).cos()).collect();
            sign_roots(&f, &xs)
        }
        Cut::Ray { .. } => {
            let (end, dir) = ray_geometry(&cut);
            if k == 1 {
                psi = psi_zeros_ctx(ctx, n)?;
            }
            let psi_outer = psi.iter().map(|&x| (x - end).abs()).fold(0.0, f64::max);
            let mut r = (4.0 * ctx.cut_scale(k + 1)).max(1.25 * psi_outer);
            let mut m = 400 + 40 * n;
            let expected = if k == 1 { Some(expected_k1_roots(n, p)) } else { None };
            let mut found = Vec::new();
            for attempt in 0..60 {
                if m > 1 << 22 {
                    break;
                }
                let xs = ray_grid(end, dir, t0, r, m, &psi);
                found = sign_roots(&f, &xs);
                let outer = found.iter().map(|&x| (x - end) * dir).fold(0.0, f64::max);
                let count_ok = expected.map(|e| e == found.len()).unwrap_or(true);
                if count_ok && outer < 0.8 * r {
                    break;
                }
                if !count_ok && attempt % 2 == 1 {
                    m *= 2;
                } else {
                    r *= 2.0;
                }
            }
            if let Some(e) = expected {
                if found.len() != e {
                    return Err(Error::RootCountMismatch { expected: e, found: found.len() });
                }
            }
            found.sort_by(|a, b| ((a - end) * dir).total_cmp(&((b - end) * dir)));
            found
        }
    };
    let counting = roots.iter().enumerate().map(|(i, &x)| (x, (i + 1) as f64 / n.max(1) as f64)).collect();
    Ok(SpectrumReport { k, n, hausdorff_to_cut: hausdorff(&roots, &cut), roots, counting, psi_zeros: psi })
}

/// Number of real zeros of `P_{n,1}`: the degree of `B_{n,1}`, `N_{n-1,1}`.
pub fn expected_k1_roots(n: usize, p: usize) -> usize {
    if n == 0 {
        0
    } else {
        multi_index(n - 1, p).tail_sum(1)
    }
}

/// True when every open interval between consecutive `outer` points holds
/// exactly one `inner` point and no `inner` point lies outside them.
pub fn strictly_interlaced(inner: &[f64], outer: &[f64]) -> bool {
    if outer.len() != inner.len() + 1 {
        return false;
    }
    let mut o = outer.to_vec();
    let mut i = inner.to_vec();
    o.sort_by(f64::total_cmp);
    i.sort_by(f64::total_cmp);
    i.iter().enumerate().all(|(m, &x)| o[m] < x && x < o[m + 1])
}

/// Sup distance between the counting measure `(1/n) sum delta_root` and
/// `s_{k+1}` restricted to `window`, both accumulated from the window end
/// nearest the finite end of `Gamma_{k+1}`.
pub fn counting_compare(report: &SpectrumReport, sym: &SymbolCoeffs, window: (f64, f64)) -> Result<f64> {
    let ctx = BranchContext::new(sym)?;
    let s = ctx.s_measure(report.k + 1);
    let cut = s.cut();
    let (a, b) = (window.0.min(window.1), window.0.max(window.1));
    let from_hi = matches!(cut, Cut::Ray { toward_positive: false, .. });
    let n = report.n.max(1) as f64;
    // roots inside the window ordered away from the starting end
    let mut pts: Vec<f64> = report.roots.iter().cloned().filter(|&x| x >= a && x <= b).collect();
    pts.sort_by(|x, y| if from_hi { y.total_cmp(x) } else { x.total_cmp(y) });
    let clip = |x: f64| match cut {
        Cut::Interval { lo, hi } => x.clamp(lo, hi),
        Cut::Ray { end, toward_positive: true } => x.max(end),
        Cut::Ray { end, toward_positive: false } => x.min(end),
    };
    let tol = Tolerances { rel: 1e-10, abs: 1e-14 };
    let start = if from_hi { b } else { a };
    let finish = if from_hi { a } else { b };
    let mut cdf = 0.0;
    let mut prev = start;
    let mut worst = 0.0f64;
    for (i, &x) in pts.iter().chain(std::iter::once(&finish)).enumerate() {
        let (u, v) = (clip(prev.min(x)), clip(prev.max(x)));
        cdf += integrate_density_on(&s, u, v, tol)?;
        prev = x;
        let before = i as f64 / n;
        worst = worst.max((cdf - before).abs());
        if i < pts.len() {
            worst = worst.max((cdf - (i + 1) as f64 / n).abs());
        }
    }
    Ok(worst)
}

fn small_det(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].norm().total_cmp(&m[j][c].norm())).unwrap();
        if m[piv][c].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                let u = m[c][k];
                m[r][k] -= f * u;
            }
        }
    }
    det
}

/// `Phi_{m,j}(lambda) = int Q_m d sigma_j / (lambda - x)`.
pub fn phi_nk(sys: &NikishinSystem, m: isize, j: usize, lambda: Complex64) -> Result<Complex64> {
    if m < 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let m = m as usize;
    if j == 1 {
        return psi1(sys, m, lambda);
    }
    let sym = sys.symbol().clone();
    let sigma = &sys.sigma[j - 1];
    if sigma.cut().distance(lambda) == 0.0 {
        return Err(Error::OnCut);
    }
    let (r, _) = sigma.integrate_with_scale(
        |_, _, pt| Ok(eval_q(&sym, m, Complex64::new(pt.x, 0.0)).re / (lambda - pt.x)),
        0.0,
        1e-13,
    )?;
    Ok(r.value)
}

/// Riemann–Hilbert minor `B_{n,k}`: the determinant with rows
/// `(Q_{n-i}, Phi_{n-i,1}, ..., Phi_{n-i,k})`, `i = 0..=k`. For `k >= 2`
/// the minors follow the `Phi` display literally and are experimental.
pub fn bnk(sys: &NikishinSystem, n: usize, k: usize, lambda: Complex64) -> Result<Complex64> {
    let p = sys.p();
    if k == 0 || k > p {
        return Err(Error::InvalidArgument(format!("k = {k} outside 1..={p}")));
    }
    let sym = sys.symbol();
    let mut rows = Vec::with_capacity(k + 1);
    for i in 0..=k {
        let m = n as isize - i as isize;
        let mut row = vec![if m < 0 { Complex64::new(0.0, 0.0) } else { eval_q(sym, m as usize, lambda) }];
        for j in 1..=k {
            row.push(phi_nk(sys, m, j, lambda)?);
        }
        rows.push(row);
    }
    Ok(small_det(rows))
}

/// `|int x^nu Psi_{n,j}(x) (x - lambda_{j+1}) d rho_{j+1,k}(x)|` with the
/// scale integral of the absolute integrand, where
/// `rho_{j+1,k} = <rho_{j+1}, ..., rho_k>`. Orthogonality holds for
/// `nu <= n_k - delta_j - 1` (`delta_1 = 0`, otherwise 1).
pub fn orthogonality_second_kind(sys: &NikishinSystem, n: usize, j: usize, k: usize, nu: usize) -> Result<(f64, f64)> {
    let p = sys.p();
    if j == 0 || j >= p || k <= j || k > p {
        return Err(Error::InvalidArgument(format!("need 1 <= j < k <= p, got j={j} k={k}")));
    }
    let cs = sys.ctx.structure();
    let mut weight = sys.rho[k - 1].clone();
    for i in (j + 1..k).rev() {
        weight = product_measure(&sys.rho[i - 1], &weight, cs.branch_point(i + 1));
    }
    let lj = cs.branch_point(j + 1);
    let table = InnerTable::new();
    let growth = nu as f64 + 1.0 - psi_decay(n, j, p);
    let r = weight.integrate_with_scale(
        |level, idx, pt| {
            let psi = table.get(sys, n, j + 1, level, idx)?;
            let shift = match weight.cut() {
                Cut::Ray { toward_positive: true, .. } => pt.d_lo,
                Cut::Ray { toward_positive: false, .. } => -pt.d_hi,
                Cut::Interval { .. } => pt.x - lj,
            };
            Ok(psi.re * pt.x.powi(nu as i32) * shift)
        },
        growth,
        1e-11,
    );
    match r {
        Ok((q, scale)) => Ok((q.value.abs(), scale)),
        Err(Error::NonIntegrable { reason }) => Err(Error::TailDivergence { reason }),
        Err(e) => Err(e),
    }
}

/// `|int x^nu Q_n / Q_{n,2} d rho_1|` with its scale, where `Q_{n,2}` is the
/// monic polynomial whose roots are the zeros of `Psi_{n,1}`.
pub fn orthogonality_reduced(sys: &NikishinSystem, n: usize, nu: usize, psi_roots: &[f64]) -> Result<(f64, f64)> {
    let sym = sys.symbol().clone();
    let roots = psi_roots.to_vec();
    let (r, scale) = sys.rho[0].integrate_with_scale(
        move |_, _, pt| {
            let den: f64 = roots.iter().map(|&z| pt.x - z).product();
            Ok(pt.x.powi(nu as i32) * eval_q(&sym, n, Complex64::new(pt.x, 0.0)).re / den)
        },
        0.0,
        1e-12,
    )?;
    Ok((r.value.abs(), scale))
}

/// Roots of `P_{n,0}` are those of `Q_n`; exposed for cross-checks.
pub fn spectrum_k0_reference(sym: &SymbolCoeffs, n: usize) -> Result<Vec<f64>> {
    zeros_q(sym, n)
}
