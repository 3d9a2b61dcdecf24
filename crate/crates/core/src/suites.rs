//! Identity grids shared by the `verify` subcommand and the test suites.

use rug::Float;
use serde::Deserialize;

use crate::exact::{partition, p_mn, SeriesOptions};
use crate::gauss_weyl::{gauss_grid_fixed, verify_fischer_identity, verify_weyl_closed, verify_kloosterman_via_weyl, WeylSumSpec};
use crate::kloosterman::{kloosterman_float, selberg_rhs};
use crate::maass::{trace_cm, trace_cycle_square_s2, TraceMode, TraceRequest};
use crate::ntcore::{gcd, kronecker};
use crate::num::decimal;
use crate::qseries::coefficient_p;
use crate::report::VerificationReport;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Selberg,
    Fischer,
    WeylClosed,
    KloostermanWeyl,
    Gauss,
    AlgebraicFormula,
    CmTrace,
    TwistedCm,
    SquareTrace,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Selberg,
        Suite::Fischer,
        Suite::WeylClosed,
        Suite::KloostermanWeyl,
        Suite::Gauss,
        Suite::AlgebraicFormula,
        Suite::CmTrace,
        Suite::TwistedCm,
        Suite::SquareTrace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Selberg => "selberg",
            Suite::Fischer => "lemma41",
            Suite::WeylClosed => "prop42",
            Suite::KloostermanWeyl => "thm13",
            Suite::Gauss => "gauss",
            Suite::AlgebraicFormula => "bo-formula",
            Suite::CmTrace => "thm11",
            Suite::TwistedCm => "thm12-neg",
            Suite::SquareTrace => "square-trace",
        }
    }

    pub fn parse(s: &str) -> Option<Suite> {
        Suite::ALL.into_iter().find(|x| x.name() == s)
    }

    pub fn default_tol(self) -> f64 {
        match self {
            Suite::Selberg | Suite::Fischer => 1e-25,
            Suite::WeylClosed | Suite::KloostermanWeyl => 1e-22,
            Suite::Gauss => 1e-20,
            Suite::AlgebraicFormula | Suite::CmTrace => 1e-6,
            Suite::TwistedCm => 1e-4,
            Suite::SquareTrace => 1e-2,
        }
    }
}

/// Parameter overrides read from `--grid file.json`. Unset fields fall back
/// to the suite defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub c_max: Option<i64>,
    pub b_max: Option<i64>,
    pub v: Option<Vec<i64>>,
    pub m: Option<Vec<i64>>,
    pub n: Option<Vec<i64>>,
    /// Coset box for Poincaré-series suites.
    pub height_cap: Option<u64>,
    /// Explicit `(m, n, v)` triples for `square-trace`.
    pub cases: Option<Vec<(i64, i64, u32)>>,
}

impl Grid {
    pub fn from_file(path: &std::path::Path) -> Result<Grid> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("cannot read grid {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Precondition(format!("bad grid {}: {e}", path.display())))
    }
}

fn list(x: &Option<Vec<i64>>, default: &[i64]) -> Vec<i64> {
    x.clone().unwrap_or_else(|| default.to_vec())
}

/// Runs one suite. `tol` overrides the suite tolerance.
pub fn run_suite(suite: Suite, grid: &Grid, prec: u32, tol: Option<f64>) -> Result<Vec<VerificationReport>> {
    let tol = tol.unwrap_or(suite.default_tol());
    if !(tol > 0.0) {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    match suite {
        Suite::Selberg => {
            let bm = grid.b_max.unwrap_or(20);
            let mut out = Vec::new();
            for c in 1..=grid.c_max.unwrap_or(100) {
                for b in -bm..=bm {
                    let l = kloosterman_float(0, b, c, prec);
                    let r = selberg_rhs(b, c, prec);
                    let d = Float::with_val(prec, &l.value - &r.value).abs().to_f64();
                    out.push(VerificationReport::new(
                        "selberg",
                        vec![b, c],
                        decimal(&l.value, 30),
                        decimal(&r.value, 30),
                        d,
                        tol,
                    ));
                }
            }
            Ok(out)
        }
        Suite::Fischer => {
            let mut out = Vec::new();
            for v in list(&grid.v, &[1, 5, 7, 11, 13]) {
                for c in 1..=grid.c_max.unwrap_or(40) {
                    let dm = if c % 2 == 0 { 2 * c } else { c };
                    for d in 0..dm {
                        if gcd(d, c) == 1 {
                            out.push(verify_fischer_identity(d, c, v, prec, tol)?);
                        }
                    }
                }
            }
            Ok(out)
        }
        Suite::WeylClosed | Suite::KloostermanWeyl => {
            let mut out = Vec::new();
            for v in list(&grid.v, &[1, 5, 7, 11]) {
                for m in list(&grid.m, &[1, -23, -47, 73, 97]) {
                    for n in list(&grid.n, &[1, 25, 49, -23, 73]) {
                        for c in 1..=grid.c_max.unwrap_or(60) {
                            out.push(if suite == Suite::WeylClosed {
                                verify_weyl_closed(&WeylSumSpec { v, m, n, c }, prec, tol)?
                            } else {
                                verify_kloosterman_via_weyl(v, m, n, c, prec, tol)?
                            });
                        }
                    }
                }
            }
            Ok(out)
        }
        Suite::Gauss => {
            let cmax = grid.c_max.unwrap_or(100);
            let (cases, worst, fails) = gauss_grid_fixed(cmax, tol);
            let mut out = vec![VerificationReport::new(
                "gauss",
                vec![cmax, cases as i64],
                "closed form".into(),
                "direct sum".into(),
                worst,
                tol,
            )];
            for (a, b, c) in fails {
                out.push(VerificationReport::new("gauss", vec![a, b, c], "closed form".into(), "direct sum".into(), f64::INFINITY, tol));
            }
            Ok(out)
        }
        Suite::AlgebraicFormula | Suite::CmTrace => {
            let mut out = Vec::new();
            for n in list(&grid.n, &[-23, -47, -71, -95, -119]) {
                if n >= 0 || n.rem_euclid(24) != 1 {
                    return Err(Error::Precondition(format!("{} needs 0 > n ≡ 1 (24), got {n}", suite.name())));
                }
                let k = ((1 - n) / 24) as u64;
                let pk = Float::with_val(prec, partition(k, prec)?);
                let tr = trace_cm(&TraceRequest { prec, ..TraceRequest::new(1, 1, n, TraceMode::Cm) })?;
                let sq = Float::with_val(prec, n.unsigned_abs()).sqrt();
                let trace = Float::parse(&tr.value)
                    .map(|x| Float::with_val(prec, x))
                    .map_err(|e| Error::Precondition(format!("trace value: {e}")))?;
                let (l, r, name) = if suite == Suite::CmTrace {
                    (trace, Float::with_val(prec, &pk * &sq), "thm11")
                } else {
                    // sum over classes of P(τ_Q), divided by |n|
                    (Float::with_val(prec, &trace * &sq) / n.unsigned_abs(), pk, "bo-formula")
                };
                let d = Float::with_val(prec, &l - &r).abs().to_f64();
                out.push(VerificationReport::new(name, vec![n], decimal(&l, 20), decimal(&r, 20), d, tol));
            }
            Ok(out)
        }
        Suite::TwistedCm => {
            let mut out = Vec::new();
            for v in list(&grid.v, &[5]) {
                for n in list(&grid.n, &[-23]) {
                    let tr = trace_cm(&TraceRequest { prec, ..TraceRequest::new(v as u32, 1, n, TraceMode::Cm) })?;
                    let rhs = twisted_rhs(v, 1, n, prec)?;
                    let d = (tr.value_f64 - rhs).abs();
                    out.push(VerificationReport::new("thm12-neg", vec![v, 1, n], tr.value.clone(), format!("{rhs:.12}"), d, tol));
                }
            }
            Ok(out)
        }
        Suite::SquareTrace => {
            let cases = grid.cases.clone().unwrap_or_else(|| vec![(1, 1, 1), (1, 25, 5), (1, 25, 1)]);
            let mut out = Vec::new();
            for (m, n, v) in cases {
                let mut req = TraceRequest::new(v, m, n, TraceMode::CycleS2Square);
                req.prec = prec;
                req.height_cap = grid.height_cap.unwrap_or(120);
                let r = trace_cycle_square_s2(&req)?;
                let want = square_trace_target(v as i64, m, n)?;
                let d = (r.value_f64 - want).abs();
                out.push(VerificationReport::new(
                    "square-trace",
                    vec![m, n, v as i64],
                    format!("{:.8} ± {:.1e}", r.value_f64, r.err),
                    format!("{want}"),
                    d,
                    tol,
                ));
            }
            Ok(out)
        }
    }
}

/// `sum_{d|v} d (m/(v/d)) (12/d) p(d²m, n)`, the twisted trace of the
/// weight −1/2 coefficients, from exact basis coefficients when available and
/// from the exact formula otherwise.
pub fn twisted_rhs(v: i64, m: i64, n: i64, prec: u32) -> Result<f64> {
    let mut acc = 0.0;
    for d in crate::ntcore::divisors(v as u64) {
        let d = d as i64;
        let sign = kronecker(m, v / d) * kronecker(12, d);
        if sign == 0 {
            continue;
        }
        let mm = d * d * m;
        let p = match coefficient_p(mm, n) {
            Ok(c) => c.to_float(prec).to_f64(),
            Err(_) => p_mn(mm, n, &SeriesOptions { prec, ..Default::default() })?.to_f64(),
        };
        acc += sign as f64 * d as f64 * p;
    }
    Ok(acc)
}

/// Expected square-discriminant trace at `s = 2` for the default cases.
fn square_trace_target(v: i64, m: i64, n: i64) -> Result<f64> {
    match (m, n, v) {
        (1, 1, 1) => Ok(4.0),
        (1, 25, 5) => Ok(-4.0),
        (1, 25, 1) => Ok(0.0),
        _ => Err(Error::Precondition(format!("no reference value for square trace ({m},{n},{v})"))),
    }
}
