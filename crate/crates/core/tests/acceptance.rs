//! Acceptance suite: one PASS/FAIL line per criterion. Criterion 12 is
//! reported but does not affect the exit status.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rug::{Complex, Float, Integer};

use etatrace::exact::{bench_kloosterman, loglog_slope, p_mn, partition, SeriesOptions};
use etatrace::maass::{
    p_poincare, p_v_from_qexp, trace_cm, trace_cycle_deriv, trace_cycle_square_s2, PoincareSpec, TraceMode,
    TraceRequest,
};
use etatrace::qseries::{basis_fv, basis_gm, basis_hm_neg, build_f, build_j6, QSeries};
use etatrace::suites::{run_suite, Grid, Suite};

const PREC: u32 = 128;

// tolerances, one per criterion
const TOL_SELBERG: f64 = 1e-25;
const TOL_FISCHER: f64 = 1e-25;
const TOL_WEYL: f64 = 1e-22;
const TOL_GAUSS: f64 = 1e-20;
const PARTITION_GAP: f64 = 0.25;
const TAIL_REL: f64 = 1e-4;
const TOL_CM: f64 = 1e-6;
const TOL_TWIST: f64 = 1e-4;
const TOL_SQUARE: f64 = 1e-2;
const TOL_DERIV_REL: f64 = 1e-1;
const TOL_BENCH: f64 = 1e-15;

struct Outcome {
    pass: bool,
    detail: String,
}

fn ok(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

/// Reference coefficients, exponents in units of q^{1/24}.
fn golden(s: &QSeries, expected: &[(i64, i64)]) -> Option<String> {
    for &(e, c) in expected {
        let got = s.coeff(e).unwrap_or_default();
        if got != c {
            return Some(format!("coefficient of q^({e}/24): got {got}, expected {c}"));
        }
    }
    None
}

fn c1_golden_tables() -> Outcome {
    let n = 8;
    let fv = |v| basis_fv(v, n + v as usize).series;
    let tables: Vec<(&str, QSeries, Vec<(i64, i64)>)> = vec![
        ("F", build_f(n), vec![(-24, 1), (0, -10), (24, -29)]),
        ("F_2", fv(2), vec![(-48, 1), (-24, 0), (0, -50), (24, -832), (48, -5693)]),
        ("F_3", fv(3), vec![(-72, 1), (-48, 0), (-24, 0), (0, -190), (24, -7371), (48, -108216)]),
        ("F_4", fv(4), vec![(-96, 1), (-72, 0), (-48, 0), (-24, 0), (0, -370), (24, -48640), (48, -1100352)]),
        ("J_6", build_j6(n), vec![(-24, 1), (0, -4), (24, 79), (48, 352)]),
        (
            "g_1",
            basis_gm(1, n).unwrap().series,
            vec![(-1, 1), (23, 1), (47, 2), (71, 3), (95, 5), (119, 7), (143, 11)],
        ),
        ("5^3 g_25", basis_gm(25, n).unwrap().series, vec![(-25, 1), (23, 196885), (47, 21690645), (71, 886187500)]),
        (
            "7^3 g_49",
            basis_gm(49, n).unwrap().series,
            vec![(-49, 1), (23, 42790636), (47, 40513206272), (71, 8543738297129)],
        ),
        ("23^-3/2 h_-23", basis_hm_neg(-23, n).unwrap().series, vec![(-23, 1), (1, -1), (25, -196885), (49, -42790636)]),
        (
            "47^-3/2 h_-47",
            basis_hm_neg(-47, n).unwrap().series,
            vec![(-47, 1), (1, -2), (25, -21690645), (49, -40513206272)],
        ),
        (
            "71^-3/2 h_-71",
            basis_hm_neg(-71, n).unwrap().series,
            vec![(-71, 1), (1, -3), (25, -886187500), (49, -8543738297129)],
        ),
    ];
    let mut count = 0;
    for (name, s, exp) in &tables {
        if let Some(e) = golden(s, exp) {
            return ok(false, format!("{name}: {e}"));
        }
        count += exp.len();
    }
    ok(true, format!("{} tables, {count} reference coefficients exact", tables.len()))
}

fn suite_outcome(suite: Suite, grid: Grid, tol: f64) -> Outcome {
    match run_suite(suite, &grid, PREC, Some(tol)) {
        Ok(r) => {
            let failed = r.iter().filter(|x| !x.pass).count();
            let worst = r.iter().map(|x| x.abs_diff).fold(0.0, f64::max);
            ok(failed == 0, format!("{} cases, {failed} failed, worst |Δ| = {worst:.2e} (tol {tol:.0e})", r.len()))
        }
        Err(e) => ok(false, format!("error: {e}")),
    }
}

fn c2_selberg() -> Outcome {
    suite_outcome(Suite::Selberg, Grid { c_max: Some(100), b_max: Some(20), ..Default::default() }, TOL_SELBERG)
}

fn c3_fischer() -> Outcome {
    suite_outcome(
        Suite::Fischer,
        Grid { c_max: Some(40), v: Some(vec![1, 5, 7, 11, 13]), ..Default::default() },
        TOL_FISCHER,
    )
}

fn c4_weyl_identities() -> Outcome {
    let grid = || Grid {
        c_max: Some(60),
        v: Some(vec![1, 5, 7, 11]),
        m: Some(vec![1, -23, -47, 73, 97]),
        n: Some(vec![1, 25, 49, -23, 73]),
        ..Default::default()
    };
    let a = suite_outcome(Suite::WeylClosed, grid(), TOL_WEYL);
    let b = suite_outcome(Suite::KloostermanWeyl, grid(), TOL_WEYL);
    ok(a.pass && b.pass, format!("Weyl sums: {}; Kloosterman: {}", a.detail, b.detail))
}

fn c5_gauss() -> Outcome {
    suite_outcome(Suite::Gauss, Grid { c_max: Some(500), ..Default::default() }, TOL_GAUSS)
}

/// Euler's pentagonal recurrence.
fn partitions_oracle(kmax: usize) -> Vec<Integer> {
    let mut p = vec![Integer::from(1)];
    for n in 1..=kmax as i64 {
        let mut s = Integer::new();
        for k in 1.. {
            let g1 = k * (3 * k - 1) / 2;
            if g1 > n {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            s += Integer::from(&p[(n - g1) as usize] * sign);
            let g2 = k * (3 * k + 1) / 2;
            if g2 <= n {
                s += Integer::from(&p[(n - g2) as usize] * sign);
            }
        }
        p.push(s);
    }
    p
}

fn c6_partitions() -> Outcome {
    let want = partitions_oracle(200);
    for k in 1..=200u64 {
        // `partition` rejects rounding gaps at or above 0.25 itself
        match partition(k, PREC) {
            Ok(p) if p == want[k as usize] => {}
            Ok(p) => return ok(false, format!("p({k}) = {p}, oracle {}", want[k as usize])),
            Err(e) => return ok(false, format!("p({k}): {e} (gap limit {PARTITION_GAP})")),
        }
    }
    ok(true, format!("p(1..200) exact, p(200) = {}", want[200]))
}

/// `p(m,n)` read off the reference expansions: the h_m give
/// `p(m,n) = −c sqrt|m| / n` for `m < 0`, and `g_1` gives `p(n,1) = c sqrt|n|`.
fn tabulated_cells() -> Vec<(i64, i64, Float)> {
    let s = |k: i64| Float::with_val(PREC, k).sqrt();
    let mut cells = Vec::new();
    let h: [(i64, [i64; 3]); 3] = [
        (-23, [-1, -196885, -42790636]),
        (-47, [-2, -21690645, -40513206272]),
        (-71, [-3, -886187500, -8543738297129]),
    ];
    for (m, cs) in h {
        for (n, c) in [1i64, 25, 49].into_iter().zip(cs) {
            cells.push((m, n, Float::with_val(PREC, -c) * s(-m) / n));
        }
    }
    for (n, c) in [(-95i64, 5i64), (-119, 7), (-143, 11)] {
        cells.push((n, 1, Float::with_val(PREC, c) * s(-n)));
    }
    cells
}

fn c7_exact_formula() -> Outcome {
    let mut worst_rel_tail: f64 = 0.0;
    let mut worst_ratio: f64 = 0.0;
    let cells = tabulated_cells();
    for (m, n, want) in &cells {
        let r = match p_mn(*m, *n, &SeriesOptions::default()) {
            Ok(r) => r,
            Err(e) => return ok(false, format!("p({m},{n}): {e}")),
        };
        let diff = Float::with_val(PREC, &r.value - want).abs().to_f64();
        let rel_tail = r.tail_estimate / want.to_f64().abs();
        worst_rel_tail = worst_rel_tail.max(rel_tail);
        worst_ratio = worst_ratio.max(diff / r.tail_estimate);
        if diff > r.tail_estimate || rel_tail >= TAIL_REL {
            return ok(
                false,
                format!("p({m},{n}) = {:.6} ± {:.2e}, expected {:.6}", r.to_f64(), r.tail_estimate, want.to_f64()),
            );
        }
    }
    ok(
        true,
        format!(
            "{} cells, worst |Δ|/tail = {worst_ratio:.2}, worst tail/|value| = {worst_rel_tail:.1e} (< {TAIL_REL:.0e})",
            cells.len()
        ),
    )
}

fn c8_cm_traces() -> Outcome {
    let p = partitions_oracle(5);
    let mut worst: f64 = 0.0;
    for n in [-23i64, -47, -71, -95, -119] {
        let k = ((1 - n) / 24) as usize;
        let want = Float::with_val(PREC, -n).sqrt() * &p[k];
        let r = match trace_cm(&TraceRequest::new(1, 1, n, TraceMode::Cm)) {
            Ok(r) => r,
            Err(e) => return ok(false, format!("n = {n}: {e}")),
        };
        let got = Float::with_val(PREC, Float::parse(&r.value).unwrap());
        let d = Float::with_val(PREC, &got - &want).abs().to_f64();
        worst = worst.max(d);
        // the algebraic formula: (1/|n|) sum P(τ_Q) = p(k)
        let bo = Float::with_val(PREC, &got * Float::with_val(PREC, -n).sqrt()) / (-n);
        let dbo = Float::with_val(PREC, bo - &p[k]).abs().to_f64();
        worst = worst.max(dbo);
    }
    ok(worst < TOL_CM, format!("n ∈ {{−23,…,−119}}, worst |Δ| = {worst:.2e} (tol {TOL_CM:.0e})"))
}

fn c9_twisted() -> Outcome {
    // p(1,−23) = sqrt 23 from g_1; p(25,−23) = 196885 sqrt 23 / 25 from 5³g₂₅
    let s23 = Float::with_val(PREC, 23).sqrt();
    let want = Float::with_val(PREC, &s23 - Float::with_val(PREC, &s23 * 196885u32) * 5u32 / 25u32);
    let r = match trace_cm(&TraceRequest::new(5, 1, -23, TraceMode::Cm)) {
        Ok(r) => r,
        Err(e) => return ok(false, e.to_string()),
    };
    // and the same right side from the exact formula
    let series = p_mn(1, -23, &SeriesOptions::default())
        .and_then(|a| p_mn(25, -23, &SeriesOptions::default()).map(|b| a.to_f64() - 5.0 * b.to_f64()));
    let d = (r.value_f64 - want.to_f64()).abs();
    let (ds, series_s) = match series {
        Ok(x) => ((x - want.to_f64()).abs() / want.to_f64().abs(), format!("{x:.4}")),
        Err(e) => (f64::INFINITY, e.to_string()),
    };
    ok(
        d < TOL_TWIST && ds < 1e-4,
        format!(
            "Tr_5(1,−23) = {:.9}, table value {:.9}, |Δ| = {d:.2e} (tol {TOL_TWIST:.0e}); series value {series_s}",
            r.value_f64,
            want.to_f64()
        ),
    )
}

fn c10_square_traces() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (m, n, v, want) in [(1i64, 1i64, 1u32, 4.0f64), (1, 25, 5, -4.0), (1, 25, 1, 0.0)] {
        let mut req = TraceRequest::new(v, m, n, TraceMode::CycleS2Square);
        req.height_cap = 240;
        match trace_cycle_square_s2(&req) {
            Ok(r) => {
                let d = (r.value_f64 - want).abs();
                pass &= d < TOL_SQUARE;
                parts.push(format!("({m},{n},{v}) {:.5}±{:.1e}", r.value_f64, r.err));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("({m},{n},{v}) error {e}"));
            }
        }
    }
    ok(pass, format!("{} vs 4, −4, 0 (tol {TOL_SQUARE:.0e})", parts.join(", ")))
}

fn c11_cross_method() -> Outcome {
    let mut rng = rand::rngs::StdRng::seed_from_u64(20_240_611);
    let mut worst_ratio: f64 = 0.0;
    for i in 0..10 {
        let v = [1u32, 5, 7][i % 3];
        let x: f64 = rng.gen_range(-0.5..0.5);
        let y: f64 = rng.gen_range(0.3..3.0);
        let tau = Complex::with_val(PREC, (x, y));
        let q = match p_v_from_qexp(v, &tau, PREC, None) {
            Ok(q) => q,
            Err(e) => return ok(false, e.to_string()),
        };
        let spec = PoincareSpec { v, s: 2.0, height_cap: 240, damping: None };
        let p = match p_poincare(&spec, (x, y)) {
            Ok(p) => p,
            Err(e) => return ok(false, e.to_string()),
        };
        let dre = (q.value.real().to_f64() - p.re).abs();
        let dim = (q.value.imag().to_f64() - p.im).abs();
        let budget = q.err + p.err;
        worst_ratio = worst_ratio.max(dre.max(dim) / budget);
        if dre > budget || dim > budget {
            return ok(false, format!("v={v} τ=({x:.4},{y:.4}): |Δ| = {:.2e} > {budget:.2e}", dre.max(dim)));
        }
    }
    ok(true, format!("10 random points, worst |Δ|/(summed error estimates) = {worst_ratio:.2}"))
}

fn c12_deriv_trace() -> Outcome {
    let mut req = TraceRequest::new(1, 1, 73, TraceMode::CycleDeriv);
    req.height_cap = 60;
    let tr = match trace_cycle_deriv(&req) {
        Ok(t) => t,
        Err(e) => return ok(false, e.to_string()),
    };
    let p = match p_mn(1, 73, &SeriesOptions::default()) {
        Ok(p) => p,
        Err(e) => return ok(false, e.to_string()),
    };
    let d = (tr.value_f64 - p.to_f64()).abs();
    let tol = TOL_DERIV_REL * p.to_f64().abs().max(1.0);
    ok(
        d < tol,
        format!(
            "Tr(1,73) = {:.6} ± {:.1e}, p(1,73) = {:.6} ± {:.1e}, |Δ| = {d:.2e} (tol {tol:.2})",
            tr.value_f64,
            tr.err,
            p.to_f64(),
            p.tail_estimate
        ),
    )
}

fn c13_benchmark() -> Outcome {
    let rows = match bench_kloosterman(3000, &[(1, 1, 5), (1, -23, 7), (-23, 73, 5)]) {
        Ok(r) => r,
        Err(e) => return ok(false, e.to_string()),
    };
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let slope = loglog_slope(&rows);
    for r in &rows {
        println!(
            "      c={:<5} (m,n,v)=({},{},{})  direct {:.3e}s  fast {:.3e}s  ratio {:.2}",
            r.c, r.m, r.n, r.v, r.t_direct, r.t_fast, r.ratio
        );
    }
    ok(
        worst < TOL_BENCH,
        format!("{} rows, worst |Δ| = {worst:.2e} (tol {TOL_BENCH:.0e}), direct log-log slope {slope:.2}", rows.len()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome, bool); 13] = [
        (1, "q-series golden tables", c1_golden_tables, true),
        (2, "Selberg identity", c2_selberg, true),
        (3, "Fischer-sum lemma grid", c3_fischer, true),
        (4, "Weyl-sum identities", c4_weyl_identities, true),
        (5, "Gauss-sum oracle equivalence", c5_gauss, true),
        (6, "Rademacher partition values", c6_partitions, true),
        (7, "exact formula vs tabulated coefficients", c7_exact_formula, true),
        (8, "CM traces vs partitions", c8_cm_traces, true),
        (9, "twisted CM trace", c9_twisted, true),
        (10, "square-discriminant cycle traces", c10_square_traces, true),
        (11, "q-expansion vs Poincaré series", c11_cross_method, true),
        (12, "nonsquare positive trace (non-blocking)", c12_deriv_trace, false),
        (13, "Kloosterman benchmark", c13_benchmark, true),
    ];
    // `cargo test` passes harness flags; a bare filter selects criteria by number
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut blocking_failures = 0;
    for (id, name, f, blocking) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let o = f();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} [{id:>2}] {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
        if !o.pass && blocking {
            blocking_failures += 1;
        }
    }
    if blocking_failures > 0 {
        println!("{blocking_failures} blocking criteria failed");
        std::process::exit(1);
    }
}
