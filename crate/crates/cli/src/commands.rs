use rayon::prelude::*;
use serde::Serialize;
use symlab_core::asymptotics::{default_hp_grid, gen_spectrum, hp_error_order};
use symlab_core::branches::BranchContext;
use symlab_core::cubic::{cubic_build, CubicParams};
use symlab_core::nikishin::{build_system, mu_measure};
use symlab_core::polyseq::{gen_q, zeros_q};
use symlab_core::quadrature::{CutPoint, MeasureHandle};
use symlab_core::verify::{run_suite, Suite};
use symlab_core::{build_symbol, critical_structure, CriticalStructure, SymbolCoeffs};

use crate::output::{csv_text, json_text, write_out, Envelope, ErrorKind, Failure, Table, SCHEMA_VERSION};
use crate::{Cli, Command, Format, SuiteArg};

fn resolve_symbol(cli: &Cli) -> Result<SymbolCoeffs, Failure> {
    match (&cli.symbol.coeffs, &cli.symbol.cubic) {
        (Some(a), None) => {
            if a.len() < 2 {
                return Err(Failure::config("--coeffs needs at least a_0 and a_1"));
            }
            build_symbol(a.len() - 1, a).map_err(|e| Failure::config(format!("invalid symbol: {e}")))
        }
        (None, Some(x)) => {
            let [x1, x2] = x[..] else {
                return Err(Failure::config("--cubic expects exactly two values x1,x2"));
            };
            cubic_build(CubicParams { x1, x2 })
                .map(|c| c.sym)
                .map_err(|e| Failure::config(format!("invalid cubic parameters: {e}")))
        }
        _ => Err(Failure::config("give exactly one of --coeffs or --cubic")),
    }
}

/// `a:b:m`, `m` equispaced points on `[a, b]`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, Failure> {
    let bad = || Failure::config(format!("grid must be a:b:m with finite a, b and m >= 1, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, m] = parts[..] else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let m: usize = m.trim().parse().map_err(|_| bad())?;
    if m == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if m == 1 {
        return Ok(vec![a]);
    }
    Ok((0..m).map(|i| a + (b - a) * i as f64 / (m - 1) as f64).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Rho,
    Sigma,
    S,
    Mu,
}

pub fn parse_measure(s: &str, p: usize) -> Result<(MeasureKind, usize), Failure> {
    let bad = || Failure::config(format!("measure must be rho_j, sigma_j, s_k or mu_k with index in 1..={p}, got {s:?}"));
    let (name, idx) = s.rsplit_once('_').ok_or_else(bad)?;
    let idx: usize = idx.parse().map_err(|_| bad())?;
    let kind = match name {
        "rho" => MeasureKind::Rho,
        "sigma" => MeasureKind::Sigma,
        "s" => MeasureKind::S,
        "mu" => MeasureKind::Mu,
        _ => return Err(bad()),
    };
    if idx == 0 || idx > p {
        return Err(bad());
    }
    Ok((kind, idx))
}

fn measure_handle(sym: &SymbolCoeffs, kind: MeasureKind, idx: usize) -> Result<MeasureHandle, Failure> {
    let ctx = BranchContext::new(sym).map_err(Failure::computation)?;
    Ok(match kind {
        MeasureKind::Rho => ctx.rho_measure(idx),
        MeasureKind::S => ctx.s_measure(idx),
        MeasureKind::Mu => mu_measure(&ctx, idx),
        MeasureKind::Sigma => build_system(sym).map_err(Failure::computation)?.sigma[idx - 1].clone(),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Serialize)]
struct AnalyzeBody<'a> {
    p: usize,
    #[serde(flatten)]
    structure: &'a CriticalStructure,
}

#[derive(Serialize)]
struct PolyEntry {
    n: usize,
    /// Ascending powers.
    coefficients: Vec<f64>,
    exact: Vec<String>,
}

#[derive(Serialize)]
struct DensityBody<'a> {
    measure: &'a str,
    points: Vec<(f64, f64)>,
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    let sym = resolve_symbol(cli)?;
    let coeffs = sym.coeffs().to_vec();
    let format_or = |default: Format| cli.format.unwrap_or(default);

    let (text, failure) = match &cli.command {
        Command::Analyze => {
            let cs = critical_structure(&sym).map_err(Failure::computation)?;
            match format_or(Format::Json) {
                Format::Json => (render("analyze", &coeffs, &AnalyzeBody { p: sym.p(), structure: &cs })?, None),
                Format::Csv => {
                    let mut t = Table::new(&["k", "x", "lambda"]);
                    for (k, (x, l)) in cs.x.iter().zip(&cs.lambda).enumerate() {
                        t.row(&[(k + 1).to_string(), fmt(*x), fmt(*l)]);
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Polys { n } => {
            let seq = gen_q(&sym, *n);
            let entries: Vec<PolyEntry> = (0..=*n)
                .map(|m| PolyEntry {
                    n: m,
                    coefficients: seq.q_f64(m),
                    exact: seq.q(m as isize).iter().map(|c| c.to_string()).collect(),
                })
                .collect();
            match format_or(Format::Csv) {
                Format::Json => (render("polys", &coeffs, &single_field("polynomials", &entries))?, None),
                Format::Csv => {
                    let mut t = Table::new(&["n", "power", "coefficient", "exact"]);
                    for e in &entries {
                        for (k, (c, x)) in e.coefficients.iter().zip(&e.exact).enumerate() {
                            t.row(&[e.n.to_string(), k.to_string(), fmt(*c), x.clone()]);
                        }
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Zeros { n } => {
            let zeros = zeros_q(&sym, *n).map_err(Failure::computation)?;
            match format_or(Format::Csv) {
                Format::Json => (render("zeros", &coeffs, &single_field("zeros", &zeros))?, None),
                Format::Csv => {
                    let mut t = Table::new(&["index", "x"]);
                    for (i, x) in zeros.iter().enumerate() {
                        t.row(&[(i + 1).to_string(), fmt(*x)]);
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Density { measure, grid } => {
            let (kind, idx) = parse_measure(measure, sym.p())?;
            let xs = parse_grid(grid)?;
            let handle = measure_handle(&sym, kind, idx)?;
            let cut = handle.cut();
            let points: Vec<(f64, f64)> = xs
                .par_iter()
                .map(|&x| {
                    if !cut.contains_interior(x) {
                        return Ok((x, 0.0));
                    }
                    handle.density_at(&CutPoint::on(&cut, x)).map(|d| (x, d))
                })
                .collect::<Result<_, _>>()
                .map_err(Failure::computation)?;
            match format_or(Format::Csv) {
                Format::Json => (render("density", &coeffs, &DensityBody { measure, points })?, None),
                Format::Csv => {
                    let mut t = Table::new(&["x", "density"]);
                    for (x, d) in &points {
                        t.row(&[fmt(*x), fmt(*d)]);
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Spectrum { n, k } => {
            if *k >= sym.p() {
                return Err(Failure::config(format!("k must be below p = {}", sym.p())));
            }
            let rep = gen_spectrum(&sym, *n, *k).map_err(Failure::computation)?;
            match format_or(Format::Json) {
                Format::Json => (render("spectrum", &coeffs, &rep)?, None),
                Format::Csv => {
                    let mut t = Table::new(&["index", "root"]);
                    for (i, x) in rep.roots.iter().enumerate() {
                        t.row(&[(i + 1).to_string(), fmt(*x)]);
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Hp { n, j, points } => {
            if *j == 0 || *j > sym.p() {
                return Err(Failure::config(format!("j must be in 1..={}", sym.p())));
            }
            if *points < 2 {
                return Err(Failure::config("--points must be at least 2"));
            }
            let fit = hp_error_order(&sym, *n, *j, &default_hp_grid(*points)).map_err(Failure::computation)?;
            match format_or(Format::Json) {
                Format::Json => (render("hp", &coeffs, &fit)?, None),
                Format::Csv => {
                    let mut t = Table::new(&["lambda", "error"]);
                    for (l, e) in &fit.samples {
                        t.row(&[fmt(*l), fmt(*e)]);
                    }
                    (csv_text(t), None)
                }
            }
        }
        Command::Verify { suite } => {
            let suite = match suite {
                SuiteArg::Fast => Suite::Fast,
                SuiteArg::Full => Suite::Full,
            };
            let rep = run_suite(&sym, suite).map_err(Failure::computation)?;
            let failed: Vec<_> = rep.failures().cloned().collect();
            let failure = (!failed.is_empty()).then(|| Failure {
                kind: ErrorKind::Verification,
                message: format!("{} of {} checks failed", failed.len(), rep.checks.len()),
                failed,
            });
            let text = match format_or(Format::Json) {
                Format::Json => render("verify", &coeffs, &rep)?,
                Format::Csv => {
                    let mut t = Table::new(&["name", "passed", "measured", "expected", "tolerance", "detail"]);
                    for c in &rep.checks {
                        t.row(&[
                            c.name.clone(),
                            c.passed.to_string(),
                            fmt(c.measured),
                            fmt(c.expected),
                            fmt(c.tolerance),
                            c.detail.clone(),
                        ]);
                    }
                    csv_text(t)
                }
            };
            (text, failure)
        }
    };
    write_out(cli.out.as_deref(), &text)?;
    failure.map_or(Ok(()), Err)
}

/// A single named field, for bodies that are just one list.
fn single_field<'a, T: Serialize>(name: &'a str, value: &'a T) -> NamedField<'a, T> {
    NamedField { name, value }
}

struct NamedField<'a, T> {
    name: &'a str,
    value: &'a T,
}

impl<T: Serialize> Serialize for NamedField<'_, T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut m = s.serialize_map(Some(1))?;
        m.serialize_entry(self.name, self.value)?;
        m.end()
    }
}

fn render<T: Serialize>(command: &str, coeffs: &[f64], body: &T) -> Result<String, Failure> {
    json_text(&Envelope { schema_version: SCHEMA_VERSION, command, coeffs, body })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("-1:1:3").unwrap(), vec![-1.0, 0.0, 1.0]);
        assert_eq!(parse_grid("2:5:1").unwrap(), vec![2.0]);
        for bad in ["1:2", "1:2:0", "a:2:3", "1:inf:3", "1:2:3:4"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn measure_names() {
        assert_eq!(parse_measure("sigma_2", 2).unwrap(), (MeasureKind::Sigma, 2));
        assert_eq!(parse_measure("s_1", 2).unwrap(), (MeasureKind::S, 1));
        for bad in ["rho_0", "mu_3", "nu_1", "rho"] {
            assert!(parse_measure(bad, 2).is_err(), "{bad}");
        }
    }
}
