//! The generalized Nikishin system `(sigma_1, ..., sigma_p)` generated by
//! `(rho_1, ..., rho_p)`, the measures `mu_k`, the mixing constants
//! `c_{j,k}` with `mu_j = sum_k c_{j,k} sigma_k`, and the iterated
//! second-type functions `Psi_{n,j}`.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::branches::{solve_branches, BranchContext};
use crate::error::{Error, Result};
use crate::polyseq::{eval_q, multi_index, mu_moments};
use crate::quadrature::{CutPoint, MeasureHandle, Tolerances, MAX_LEVEL};
use crate::symbol::{Cut, SymbolCoeffs};

/// `<beta_j, beta_next>`: density `(x - lambda_next) beta_next^(x) beta_j'(x)`
/// on the support of `beta_j`, where `lambda_next` is the finite end of the
/// next cut.
pub fn product_measure(beta_j: &MeasureHandle, beta_next: &MeasureHandle, lambda_next: f64) -> MeasureHandle {
    let inner = beta_next.clone();
    let base = beta_j.density_fn();
    let tail = beta_j.tail_exponent.map(|t| {
        let transform_decay = if inner.finite_mass { -1.0 } else { inner.tail_exponent.unwrap_or(0.0) };
        t + 1.0 + transform_decay
    });
    MeasureHandle::new(beta_j.cut(), beta_j.scale(), beta_j.endpoint_exponents, tail, move |pt| {
        let d = base(pt)?;
        if d == 0.0 {
            return Ok(0.0);
        }
        let g = inner.cauchy_transform(Complex64::new(pt.x, 0.0))?;
        Ok((pt.x - lambda_next) * g.re * d)
    })
}

#[derive(Clone, Debug)]
pub struct NikishinSystem {
    pub ctx: BranchContext,
    pub rho: Vec<MeasureHandle>,
    pub sigma: Vec<MeasureHandle>,
    pub mu: Vec<MeasureHandle>,
    /// `c[j-1][k-1] = c_{j,k}`, lower triangular with unit diagonal.
    pub c: Vec<Vec<f64>>,
    /// Sign of the density of each `sigma_j` on `Gamma_1`.
    pub sigma_signs: Vec<f64>,
}

impl NikishinSystem {
    pub fn p(&self) -> usize {
        self.ctx.p()
    }

    pub fn symbol(&self) -> &SymbolCoeffs {
        self.ctx.symbol()
    }
}

pub fn mu_measure(ctx: &BranchContext, k: usize) -> MeasureHandle {
    let c = Arc::new(ctx.clone());
    MeasureHandle::new(ctx.structure().cut(1), ctx.cut_scale(1), (0.5, 0.5), None, move |pt| {
        let z = c.boundary_value(1, pt)?;
        Ok(z.powi(k as i32).im / PI)
    })
}

pub fn mu_density(sym: &SymbolCoeffs, k: usize, x: f64) -> Result<f64> {
    let ctx = BranchContext::new(sym)?;
    let cut = ctx.structure().cut(1);
    if !cut.contains_interior(x) {
        return Err(Error::NotInCut { cut: 1, x });
    }
    let z = ctx.boundary_value(1, &CutPoint::on(&cut, x))?;
    Ok(z.powi(k as i32).im / PI)
}

fn density_sign(m: &MeasureHandle, count: usize) -> Result<f64> {
    let cut = m.cut();
    let (lo, hi) = match cut {
        Cut::Interval { lo, hi } => (lo, hi),
        _ => return Err(Error::InvalidArgument("sign probe expects an interval".into())),
    };
    let mut sign = 0.0;
    for i in 1..=count {
        let x = lo + (hi - lo) * i as f64 / (count + 1) as f64;
        let d = m.density_at(&CutPoint::on(&cut, x))?;
        let s = d.signum();
        if sign == 0.0 {
            sign = s;
        } else if s != sign && d != 0.0 {
            return Ok(0.0);
        }
    }
    Ok(sign)
}

/// Least squares on the moments `m = 0..j-1` (plus one extra row when
/// available) for `c_{j,1..j-1}` given `c_{j,j} = 1`.
fn mixing_constants(sym: &SymbolCoeffs, sigma: &[MeasureHandle]) -> Result<Vec<Vec<f64>>> {
    let p = sigma.len();
    let mut c = vec![vec![0.0; p]; p];
    // sigma moments, m = 0..p-1
    let mut sm = vec![vec![0.0; p]; p];
    for (k, s) in sigma.iter().enumerate() {
        for (m, row) in sm.iter_mut().enumerate() {
            row[k] = s.integrate_with_scale(|_, _, pt| Ok(pt.x.powi(m as i32)), m as f64, 1e-12)?.0.value;
        }
    }
    for j in 1..=p {
        c[j - 1][j - 1] = 1.0;
        if j == 1 {
            continue;
        }
        let exact: Vec<f64> = mu_moments(sym, j, j - 1).iter().map(|r| r.to_f64().unwrap()).collect();
        let unknowns = j - 1;
        // normal equations of the j x (j-1) system
        let mut ata = vec![vec![0.0; unknowns]; unknowns];
        let mut atb = vec![0.0; unknowns];
        for m in 0..j {
            let rhs = exact[m] - sm[m][j - 1];
            for a in 0..unknowns {
                atb[a] += sm[m][a] * rhs;
                for b in 0..unknowns {
                    ata[a][b] += sm[m][a] * sm[m][b];
                }
            }
        }
        let sol = solve_dense(ata, atb).ok_or(Error::SingularMomentSystem { row: j })?;
        for (k, v) in sol.into_iter().enumerate() {
            c[j - 1][k] = v;
        }
    }
    Ok(c)
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let norm = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-14 * norm {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for k in col..n {
                a[r][k] -= f * a[col][k];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn build_system(sym: &SymbolCoeffs) -> Result<NikishinSystem> {
    let ctx = BranchContext::new(sym)?;
    let p = ctx.p();
    let rho: Vec<MeasureHandle> = (1..=p).map(|j| ctx.rho_measure(j)).collect();
    let mut sigma = Vec::with_capacity(p);
    for j in 1..=p {
        // <rho_1, <rho_2, ... rho_j>>
        let mut m = rho[j - 1].clone();
        for i in (1..j).rev() {
            m = product_measure(&rho[i - 1], &m, ctx.structure().branch_point(i + 1));
        }
        sigma.push(m);
    }
    let mu: Vec<MeasureHandle> = (1..=p).map(|k| mu_measure(&ctx, k)).collect();
    let c = mixing_constants(sym, &sigma)?;
    let sigma_signs = sigma.iter().map(|s| density_sign(s, 200)).collect::<Result<Vec<_>>>()?;
    Ok(NikishinSystem { ctx, rho, sigma, mu, c, sigma_signs })
}

/// Complete homogeneous symmetric polynomial of degree `k - j + 1` in
/// `z_0(lambda), ..., z_{j-1}(lambda)`.
pub fn gkj(sym: &SymbolCoeffs, j: usize, k: usize, lambda: Complex64) -> Result<Complex64> {
    let p = sym.p();
    if j == 0 || j > k || k > p {
        return Err(Error::InvalidArgument(format!("need 1 <= j <= k <= p, got j={j} k={k}")));
    }
    if lambda.im == 0.0 {
        let ctx = BranchContext::new(sym)?;
        if ctx.structure().cut(j).contains_interior(lambda.re) {
            return Err(Error::OnCut);
        }
    }
    let bv = solve_branches(sym, lambda)?;
    Ok(complete_homogeneous(&bv.z[..j], k - j + 1))
}

pub fn complete_homogeneous(vars: &[Complex64], degree: usize) -> Complex64 {
    // h[m] over the variables processed so far
    let mut h = vec![Complex64::new(0.0, 0.0); degree + 1];
    h[0] = Complex64::new(1.0, 0.0);
    for &v in vars {
        for m in 1..=degree {
            h[m] = h[m] + v * h[m - 1];
        }
    }
    h[degree]
}

/// `|int x^k Q_n d sigma_j|` with the scale `int |x^k Q_n| d|sigma_j|`.
pub fn orthogonality_residual(sys: &NikishinSystem, n: usize, j: usize, k: usize) -> Result<(f64, f64)> {
    let sym = sys.symbol().clone();
    let (r, scale) = sys.sigma[j - 1].integrate_with_scale(
        |_, _, pt| Ok(pt.x.powi(k as i32) * eval_q(&sym, n, Complex64::new(pt.x, 0.0)).re),
        0.0,
        1e-12,
    )?;
    Ok((r.value.abs(), scale))
}

/// `Psi_{n,1}` at `lambda` by quadrature over `Gamma_1`. Far from `Gamma_1`
/// the orthogonality of `Q_n` against polynomials of degree `< n_1` is used
/// to replace `1/(lambda - x)` by `((x - c)/(lambda - c))^{n_1} / (lambda - x)`,
/// which removes the cancellation in the integral.
pub fn psi1(sys: &NikishinSystem, n: usize, lambda: Complex64) -> Result<Complex64> {
    let sym = sys.symbol().clone();
    let (c, r) = sys.ctx.structure().gamma1_center_radius();
    let n1 = multi_index(n, sym.p()).get(1);
    let far = (lambda - c).norm() > r;
    let rho1 = &sys.rho[0];
    let dist = rho1.cut().distance(lambda);
    if dist == 0.0 {
        return Err(Error::OnCut);
    }
    if dist < 1e-3 * rho1.scale() {
        // near the cut: plain transform with local subtraction
        let qn = sym.clone();
        let weighted = MeasureHandle::new(rho1.cut(), rho1.scale(), rho1.endpoint_exponents, None, {
            let base = rho1.density_fn();
            move |pt| Ok(base(pt)? * eval_q(&qn, n, Complex64::new(pt.x, 0.0)).re)
        });
        return weighted.cauchy_transform(lambda);
    }
    let lc = lambda - c;
    let (res, _) = rho1.integrate_with_scale(
        |_, _, pt| {
            let q = eval_q(&sym, n, Complex64::new(pt.x, 0.0)).re;
            let k = if far { ((pt.x - c) / lc).powi(n1 as i32) } else { Complex64::new(1.0, 0.0) };
            Ok(k * q / (lambda - pt.x))
        },
        0.0,
        1e-12,
    )?;
    Ok(res.value)
}

/// Values of `Psi_{n,j-1}` on the quadrature nodes of `Gamma_j`, computed
/// once per level and shared by every outer evaluation.
pub(crate) struct InnerTable {
    levels: Vec<OnceLock<std::result::Result<Vec<Complex64>, Error>>>,
}

impl InnerTable {
    pub(crate) fn new() -> Self {
        InnerTable { levels: (0..=MAX_LEVEL).map(|_| OnceLock::new()).collect() }
    }

    pub(crate) fn get(&self, sys: &NikishinSystem, n: usize, j: usize, level: usize, idx: usize) -> Result<Complex64> {
        let slot = self.levels[level].get_or_init(|| {
            let samples = sys.rho[j - 1].level(level)?;
            samples
                .par_iter()
                .map(|s| if s.density == 0.0 { Ok(Complex64::new(0.0, 0.0)) } else { psi_direct(sys, n, j - 1, Complex64::new(s.pt.x, 0.0)) })
                .collect()
        });
        match slot {
            Ok(v) => Ok(v[idx]),
            Err(e) => Err(e.clone()),
        }
    }
}

/// Decay exponent `d` with `Psi_{n,j} = O(lambda^{-d})` along the next cut.
pub(crate) fn psi_decay(n: usize, j: usize, p: usize) -> f64 {
    if j == 0 {
        return -(n as f64);
    }
    let nj = multi_index(n, p).get(j) as f64;
    nj + 2.0 - j as f64
}

fn psi_direct(sys: &NikishinSystem, n: usize, j: usize, lambda: Complex64) -> Result<Complex64> {
    match j {
        0 => Ok(eval_q(sys.symbol(), n, lambda)),
        1 => psi1(sys, n, lambda),
        _ => psi_many(sys, n, j, &[lambda]).map(|v| v[0]),
    }
}

/// `Psi_{n,j}` at several points, sharing the inner values.
pub fn psi_many(sys: &NikishinSystem, n: usize, j: usize, lambdas: &[Complex64]) -> Result<Vec<Complex64>> {
    let p = sys.p();
    if j == 0 || j > p {
        return Err(Error::InvalidArgument(format!("Psi index {j} outside 1..={p}")));
    }
    if j == 1 {
        return lambdas.iter().map(|&l| psi1(sys, n, l)).collect();
    }
    let lj = sys.ctx.structure().branch_point(j);
    let table = InnerTable::new();
    let growth = 1.0 - psi_decay(n, j - 1, p) - 1.0;
    let rho = &sys.rho[j - 1];
    lambdas
        .iter()
        .map(|&lambda| {
            if rho.cut().distance(lambda) == 0.0 {
                return Err(Error::OnCut);
            }
            let r = rho.integrate_with_scale(
                |level, idx, pt| {
                    let inner = table.get(sys, n, j, level, idx)?;
                    let shift = match rho.cut() {
                        Cut::Ray { toward_positive: true, .. } => pt.d_lo,
                        Cut::Ray { toward_positive: false, .. } => -pt.d_hi,
                        Cut::Interval { .. } => pt.x - lj,
                    };
                    Ok(inner * shift / (lambda - pt.x))
                },
                growth,
                1e-11,
            );
            match r {
                Ok((q, _)) => Ok(q.value),
                Err(Error::NonIntegrable { reason }) => Err(Error::TailDivergence { reason }),
                Err(e) => Err(e),
            }
        })
        .collect()
}

pub fn psi_iterated(sys: &NikishinSystem, n: usize, j: usize, lambda: Complex64) -> Result<Complex64> {
    psi_many(sys, n, j, &[lambda]).map(|v| v[0])
}

/// Moment-matching residual `|int x^m dmu_j - sum_k c_{j,k} int x^m dsigma_k|`
/// relative to `sum_k |c_{j,k}| int |x|^m d|sigma_k|`, maximised over
/// `m = 0..=m_max`.
pub fn mixing_residual(sys: &NikishinSystem, j: usize, m_max: usize) -> Result<f64> {
    let exact = mu_moments(sys.symbol(), j, m_max);
    let mut worst = 0.0f64;
    for (m, e) in exact.iter().enumerate() {
        let mut s = 0.0;
        let mut scale = 0.0;
        for k in 1..=j {
            let (v, sc) = sys.sigma[k - 1].integrate_with_scale(|_, _, pt| Ok(pt.x.powi(m as i32)), m as f64, 1e-12)?;
            let ck = sys.c[j - 1][k - 1];
            s += ck * v.value;
            scale += ck.abs() * sc;
        }
        worst = worst.max((e.to_f64().unwrap() - s).abs() / scale);
    }
    Ok(worst)
}

pub fn default_tolerances() -> Tolerances {
    Tolerances::default()
}
