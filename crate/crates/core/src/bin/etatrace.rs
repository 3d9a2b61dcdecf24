use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use etatrace::exact::{bench_kloosterman, loglog_slope, p_mn, partition, SeriesOptions};
use etatrace::forms::{chi_m, lift_to_q1};
use etatrace::gauss_weyl::{weyl_exact, weyl_sum, WeylSumSpec};
use etatrace::kloosterman::{kloosterman_exact, kloosterman_float};
use etatrace::maass::{trace_cm, trace_cycle_deriv, trace_cycle_square_s2, TraceMode, TraceRequest};
use etatrace::ntcore::is_square;
use etatrace::num::{decimal, digits_for};
use etatrace::qseries::{basis_fv, basis_gm, basis_hm_neg, build_f, build_j6, load_cache, store_cache, CacheEntry, QSeries};
use etatrace::report::summarize;
use etatrace::suites::{run_suite, Grid, Suite};
use etatrace::{Error, Result};

#[derive(Parser)]
#[command(name = "etatrace", version, about = "Eta-multiplier Kloosterman sums, Weyl sums and traces of weak Maass forms")]
struct Cli {
    #[command(flatten)]
    cfg: RunConfig,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone, Debug)]
struct RunConfig {
    /// Working precision in bits (at least 64).
    #[arg(long = "prec", global = true, default_value_t = 128)]
    precision_bits: u32,
    /// Series cutoff (exact formula) or coset box (Poincaré series).
    #[arg(long, global = true)]
    cmax: Option<u64>,
    /// Number of q-expansion terms.
    #[arg(long, global = true)]
    terms: Option<usize>,
    /// Tolerance override.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// JSON grid for `verify`.
    #[arg(long, global = true)]
    grid: Option<PathBuf>,
    /// Coefficient cache file for `qexp`.
    #[arg(long = "cache", global = true)]
    cache_path: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Output::Text)]
    output: Output,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Text,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Cm,
    Square,
    Deriv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum QObject {
    #[value(name = "F_v")]
    Fv,
    #[value(name = "g_m")]
    Gm,
    #[value(name = "h_m")]
    Hm,
    #[value(name = "J6")]
    J6,
    #[value(name = "F")]
    F,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BenchTarget {
    Kloosterman,
}

#[derive(Subcommand)]
enum Cmd {
    /// Partition number p(k) from the exact formula.
    Partition { k: u64 },
    /// p(m,n) from the exact formula, with its tail estimate.
    Pmn {
        #[arg(allow_hyphen_values = true)]
        m: i64,
        #[arg(allow_hyphen_values = true)]
        n: i64,
    },
    /// K(a,b;c); `--exact` prints the exponent multiset mod 12c.
    Kloosterman {
        #[arg(allow_hyphen_values = true)]
        a: i64,
        #[arg(allow_hyphen_values = true)]
        b: i64,
        c: i64,
        #[arg(long)]
        exact: bool,
    },
    /// S_v(m,n;24c).
    Weyl {
        v: i64,
        #[arg(allow_hyphen_values = true)]
        m: i64,
        #[arg(allow_hyphen_values = true)]
        n: i64,
        c: i64,
        #[arg(long)]
        exact: bool,
    },
    /// Class representatives of discriminant `disc` with residue class 1 mod 12.
    Classes {
        #[arg(allow_hyphen_values = true)]
        disc: i64,
        /// Also report the genus character for this m.
        #[arg(long, allow_hyphen_values = true)]
        chi: Option<i64>,
    },
    /// Trace of P_v over classes of discriminant mn.
    Trace {
        v: u32,
        #[arg(allow_hyphen_values = true)]
        m: i64,
        #[arg(allow_hyphen_values = true)]
        n: i64,
        /// Defaults to cm for mn < 0, square for square mn, deriv otherwise.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Coefficient dump of a basis element.
    Qexp {
        #[arg(value_enum)]
        object: QObject,
        #[arg(long, allow_hyphen_values = true)]
        param: Option<i64>,
    },
    /// Run an identity suite; exit status 1 if any case fails.
    Verify { suite: String },
    /// Benchmark harness.
    Bench {
        #[arg(value_enum)]
        target: BenchTarget,
    },
}

enum Outcome {
    Ok,
    Failed,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.cfg.precision_bits < 64 {
        eprintln!("error: --prec must be at least 64");
        return ExitCode::from(2);
    }
    if matches!(cli.cfg.tol, Some(t) if !(t > 0.0)) {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(2);
    }
    if let Some(t) = cli.cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    std::panic::set_hook(Box::new(|info| eprintln!("internal error: {info}")));
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(Outcome::Ok)) => ExitCode::SUCCESS,
        Ok(Ok(Outcome::Failed)) => ExitCode::from(1),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(3),
    }
}

/// Rewrites every JSON number as a decimal string.
fn stringify(v: Value) -> Value {
    match v {
        Value::Number(n) => Value::String(n.to_string()),
        Value::Array(a) => Value::Array(a.into_iter().map(stringify).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, stringify(v))).collect()),
        other => other,
    }
}

fn emit(cfg: &RunConfig, j: Value, text: impl FnOnce() -> String) {
    match cfg.output {
        Output::Json => println!("{}", serde_json::to_string_pretty(&stringify(j)).unwrap()),
        Output::Text => println!("{}", text()),
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = &cli.cfg;
    let prec = cfg.precision_bits;
    let digits = digits_for(prec).min(40);
    match &cli.cmd {
        Cmd::Partition { k } => {
            let p = partition(*k, prec)?;
            emit(cfg, json!({"k": k, "value": p.to_string()}), || p.to_string());
        }
        Cmd::Pmn { m, n } => {
            let opts = SeriesOptions { prec, c_max: cfg.cmax, rel_tol: cfg.tol.unwrap_or(SeriesOptions::default().rel_tol) };
            let run = p_mn(*m, *n, &opts)?;
            emit(cfg, run.json(), || {
                format!("{} ± {:.3e}  (c ≤ {})", decimal(&run.value, 15), run.tail_estimate, run.c_max_used)
            });
        }
        Cmd::Kloosterman { a, b, c, exact } => {
            if *c < 1 {
                return Err(Error::Precondition("c must be positive".into()));
            }
            if *exact {
                let ms = kloosterman_exact(*a, *b, *c);
                let entries: Vec<Value> = ms.entries.iter().map(|(r, k)| json!([r.to_string(), k.to_string()])).collect();
                emit(cfg, json!({"modulus": ms.modulus, "entries": entries}), || {
                    let body: Vec<String> = ms.entries.iter().map(|(r, k)| format!("{k}·e({r}/{})", ms.modulus)).collect();
                    body.join(" + ")
                });
            } else {
                let k = kloosterman_float(*a, *b, *c, prec);
                let s = decimal(&k.value, digits);
                emit(cfg, json!({"a": a, "b": b, "c": c, "value": s, "precision_bits": prec}), || s.clone());
            }
        }
        Cmd::Weyl { v, m, n, c, exact } => {
            let spec = WeylSumSpec { v: *v, m: *m, n: *n, c: *c };
            if *exact {
                let ms = weyl_exact(&spec)?;
                let entries: Vec<Value> = ms.entries.iter().map(|(r, k)| json!([r.to_string(), k.to_string()])).collect();
                emit(cfg, json!({"modulus": ms.modulus, "entries": entries}), || {
                    let body: Vec<String> = ms.entries.iter().map(|(r, k)| format!("{k}·e({r}/{})", ms.modulus)).collect();
                    body.join(" + ")
                });
            } else {
                let s = decimal(&weyl_sum(&spec, prec)?, digits);
                emit(cfg, json!({"v": v, "m": m, "n": n, "c": c, "value": s, "precision_bits": prec}), || s.clone());
            }
        }
        Cmd::Classes { disc, chi } => {
            let reps = lift_to_q1(*disc)?;
            let mut rows = Vec::new();
            let mut lines = Vec::new();
            for r in &reps {
                let q = r.form;
                let ch = match chi {
                    Some(m) => Some(chi_m(*m, &q)?),
                    None => None,
                };
                rows.push(json!({"form": [q.a, q.b, q.c], "disc": r.disc, "residue_class": r.residue_class, "chi": ch}));
                lines.push(match ch {
                    Some(x) => format!("[{}, {}, {}]  chi = {x}", q.a, q.b, q.c),
                    None => format!("[{}, {}, {}]", q.a, q.b, q.c),
                });
            }
            lines.push(format!("{} classes", reps.len()));
            emit(cfg, Value::Array(rows), || lines.join("\n"));
        }
        Cmd::Trace { v, m, n, mode } => {
            let mn = m * n;
            let mode = mode.unwrap_or(if mn < 0 {
                Mode::Cm
            } else if is_square(mn) {
                Mode::Square
            } else {
                Mode::Deriv
            });
            let tm = match mode {
                Mode::Cm => TraceMode::Cm,
                Mode::Square => TraceMode::CycleS2Square,
                Mode::Deriv => TraceMode::CycleDeriv,
            };
            let mut req = TraceRequest::new(*v, *m, *n, tm);
            req.prec = prec;
            if let Some(c) = cfg.cmax {
                req.height_cap = c;
            } else if !matches!(mode, Mode::Cm) {
                req.height_cap = 120;
            }
            let r = match mode {
                Mode::Cm => trace_cm(&req)?,
                Mode::Square => trace_cycle_square_s2(&req)?,
                Mode::Deriv => trace_cycle_deriv(&req)?,
            };
            let j = serde_json::to_value(&r).map_err(|e| Error::Precondition(e.to_string()))?;
            emit(cfg, j, || {
                let mut s = format!("{} ± {:.2e}", r.value, r.err);
                for c in &r.classes {
                    s.push_str(&format!("\n  [{}, {}, {}]  chi = {}  {:.12}", c.form.a, c.form.b, c.form.c, c.chi, c.re));
                }
                s
            });
        }
        Cmd::Qexp { object, param } => {
            let terms = cfg.terms.unwrap_or(10);
            let (name, p, series) = qexp_series(*object, *param, terms, cfg.cache_path.as_deref())?;
            let coeffs: Vec<Value> = series
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0)
                .take(terms)
                .map(|(i, c)| json!({"exponent_24": series.offset + 24 * i as i64, "coeff": c.to_string()}))
                .collect();
            emit(cfg, json!({"object": name, "param": p, "terms": coeffs}), || series.display(terms));
        }
        Cmd::Verify { suite } => {
            let Some(s) = Suite::parse(suite) else {
                let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
                return Err(Error::Precondition(format!("unknown suite {suite}; expected one of {}", names.join(", "))));
            };
            let mut grid = match &cfg.grid {
                Some(p) => Grid::from_file(p)?,
                None => Grid::default(),
            };
            if grid.height_cap.is_none() {
                grid.height_cap = cfg.cmax;
            }
            let reports = run_suite(s, &grid, prec, cfg.tol)?;
            let (total, failed, worst) = summarize(&reports);
            let j = serde_json::to_value(&reports).map_err(|e| Error::Precondition(e.to_string()))?;
            emit(cfg, j, || {
                let mut s = String::new();
                for r in reports.iter().filter(|r| !r.pass) {
                    s.push_str(&format!("FAIL {} {:?}: {} vs {} (|Δ| = {:.3e})\n", r.identity, r.params, r.lhs, r.rhs, r.abs_diff));
                }
                s.push_str(&format!("{}: {}/{} passed, worst |Δ| = {:.3e}", suite, total - failed, total, worst));
                s
            });
            if failed > 0 {
                return Ok(Outcome::Failed);
            }
        }
        Cmd::Bench { target: BenchTarget::Kloosterman } => {
            let c_max = cfg.cmax.unwrap_or(1000) as i64;
            let rows = bench_kloosterman(c_max, &[(1, 1, 5), (1, -23, 7), (-23, 73, 5)])?;
            let slope = loglog_slope(&rows);
            let j = json!({"rows": serde_json::to_value(&rows).unwrap(), "direct_loglog_slope": slope});
            emit(cfg, j, || {
                let mut s = format!("{:>6} {:>5} {:>5} {:>3} {:>11} {:>11} {:>8} {:>10}\n", "c", "m", "n", "v", "direct s", "fast s", "ratio", "|Δ|");
                for r in &rows {
                    s.push_str(&format!(
                        "{:>6} {:>5} {:>5} {:>3} {:>11.3e} {:>11.3e} {:>8.2} {:>10.2e}\n",
                        r.c, r.m, r.n, r.v, r.t_direct, r.t_fast, r.ratio, r.abs_diff
                    ));
                }
                s.push_str(&format!("direct log-log slope {slope:.3}"));
                s
            });
            if rows.iter().any(|r| !r.agree) {
                return Ok(Outcome::Failed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn qexp_series(
    object: QObject,
    param: Option<i64>,
    terms: usize,
    cache: Option<&std::path::Path>,
) -> Result<(&'static str, Option<i64>, QSeries)> {
    let need = |what: &str| Error::Precondition(format!("{what} needs --param"));
    // enough room for `terms` nonzero coefficients past the principal part
    let len = |lead: i64| (lead.max(0) as usize) + 2 * terms + 2;
    let (name, p) = match object {
        QObject::Fv => ("F_v", Some(param.ok_or_else(|| need("F_v"))?)),
        QObject::Gm => ("g_m", Some(param.ok_or_else(|| need("g_m"))?)),
        QObject::Hm => ("h_m", Some(param.ok_or_else(|| need("h_m"))?)),
        QObject::J6 => ("J6", None),
        QObject::F => ("F", None),
    };
    let pkey = p.unwrap_or(0);
    let want = match object {
        QObject::Fv => len(pkey),
        QObject::Gm => len(pkey / 24),
        QObject::Hm => len(0),
        _ => len(1),
    };
    let mut entries = cache.map(load_cache).unwrap_or_default();
    if let Some(e) = entries.iter().find(|e| e.object == name && e.parameter == pkey && e.coeffs.len() >= want) {
        return Ok((name, p, e.to_series()?.truncate(want)));
    }
    let series = match object {
        QObject::Fv => {
            if pkey < 1 {
                return Err(Error::Precondition("F_v needs v ≥ 1".into()));
            }
            basis_fv(pkey as u32, want).series
        }
        QObject::Gm => basis_gm(pkey, want)?.series,
        QObject::Hm => basis_hm_neg(pkey, want)?.series,
        QObject::J6 => build_j6(want),
        QObject::F => build_f(want),
    };
    if let Some(path) = cache {
        entries.retain(|e| !(e.object == name && e.parameter == pkey));
        entries.push(CacheEntry::from_series(name, pkey, &series));
        store_cache(path, &entries).map_err(|e| Error::Precondition(format!("cache write failed: {e}")))?;
    }
    Ok((name, p, series))
}
