//! Rademacher-type series for `p(k)` and `p(m,n)`, the Weyl-sum fast path
//! for the Kloosterman sums feeding them, and a timing harness.

use std::time::Instant;

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Float, Integer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss_weyl::{kloosterman_via_weyl, weyl_exact, WeylSumSpec};
use crate::kloosterman::kloosterman_float;
use crate::ntcore::{divisors, factor, gcd, kronecker, moebius};
use crate::num::{decimal, digits_for, pi, BigReal};
use crate::special::{bessel_i, dj_dorder_at_3half, fast};

/// Terms with `c` above this use double precision for `K` and the kernel.
const EXACT_C: u64 = 300;
const BLOCK: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Kernel {
    I32,
    DJds,
}

/// `M = v² m` with `m` squarefree.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub v: i64,
    pub m: i64,
}

pub fn shape_of(big_m: i64) -> Result<Shape> {
    if big_m.rem_euclid(24) != 1 {
        return Err(Error::BadShape(big_m));
    }
    let mut v = 1i64;
    let mut m = big_m.signum();
    for (p, k) in factor(big_m.unsigned_abs()).factors {
        v *= (p as i64).pow(k / 2);
        if k % 2 == 1 {
            m *= p as i64;
        }
    }
    if gcd(v, 6) != 1 {
        return Err(Error::BadShape(big_m));
    }
    Ok(Shape { v, m })
}

fn prime(x: i64) -> i64 {
    (x - 1).div_euclid(24)
}

fn big_from_prime(mp: i64) -> Result<i64> {
    mp.checked_mul(24).and_then(|x| x.checked_add(1)).ok_or(Error::BadShape(mp))
}

/// `K(M',n';c)` through the Weyl-sum formula. Cost is driven by the square
/// roots of `mn` modulo `24c` rather than by the `φ(c)` terms of the sum.
pub fn kloosterman_fast(mp: i64, np: i64, c: i64, prec: u32) -> Result<BigReal> {
    let Shape { v, m } = shape_of(big_from_prime(mp)?)?;
    let n = big_from_prime(np)?;
    let value = kloosterman_via_weyl(v, m, n, c, prec)?;
    let err = (c as f64).sqrt() * 48.0 * 2f64.powi(-(prec as i32) + 4);
    Ok(BigReal::new(value, err))
}

/// Double-precision companion of [`kloosterman_fast`].
pub fn kloosterman_fast_f64(mp: i64, np: i64, c: i64) -> Result<f64> {
    let Shape { v, m } = shape_of(big_from_prime(mp)?)?;
    let n = big_from_prime(np)?;
    let mut acc = 0.0;
    for u in divisors(gcd(v, c) as u64) {
        let sign = moebius(u) as i32 * kronecker(m, u as i64);
        if sign == 0 {
            continue;
        }
        let u = u as i64;
        let s = weyl_exact(&WeylSumSpec { v: v / u, m, n, c: c / u })?.real_f64();
        acc += sign as f64 * s;
    }
    Ok(acc * (c as f64 / 3.0).sqrt() / 4.0 * kronecker(12, v) as f64)
}

#[derive(Clone, Debug)]
pub struct SeriesOptions {
    pub prec: u32,
    /// Hard cap (I-kernel) or fixed length (dJ-kernel).
    pub c_max: Option<u64>,
    /// Target for `tail / |value|` on the I-kernel.
    pub rel_tol: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { prec: 128, c_max: None, rel_tol: 5e-5 }
    }
}

#[derive(Clone, Debug)]
pub struct SeriesRun {
    pub m: i64,
    pub n: i64,
    pub kernel: Kernel,
    pub c_max_used: u64,
    pub precision_bits: u32,
    pub value: Float,
    pub tail_estimate: f64,
    /// `|sum of the last block of 10 terms|`.
    pub last_block: f64,
}

impl SeriesRun {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m,
            "n": self.n,
            "kernel": format!("{:?}", self.kernel),
            "value": decimal(&self.value, digits_for(self.precision_bits)),
            "tail_estimate": format!("{:e}", self.tail_estimate),
            "c_max_used": self.c_max_used,
            "precision_bits": self.precision_bits,
        })
    }
}

struct Term {
    value: Float,
}

fn term_i(mp: i64, np: i64, c: u64, x: &Float, wp: u32) -> Result<Term> {
    let ci = c as i64;
    if c <= EXACT_C {
        let k = kloosterman_fast(mp, np, ci, wp)?;
        if k.value.is_zero() {
            return Ok(Term { value: Float::new(wp) });
        }
        let z = Float::with_val(wp, x / c);
        let i = bessel_i(1.5, &z, wp)?;
        Ok(Term { value: k.value * i.value / c })
    } else {
        let k = kloosterman_fast_f64(mp, np, ci)?;
        let z = x.to_f64() / c as f64;
        Ok(Term { value: Float::with_val(wp, k * fast::bessel_i(1.5, z) / c as f64) })
    }
}

fn term_dj(mp: i64, np: i64, c: u64, x: &Float, wp: u32) -> Result<Term> {
    let ci = c as i64;
    let z = x.to_f64() / c as f64;
    if c <= EXACT_C || z > 8.0 {
        let k = kloosterman_fast(mp, np, ci, wp)?;
        if k.value.is_zero() {
            return Ok(Term { value: Float::new(wp) });
        }
        let z = Float::with_val(wp, x / c);
        let d = dj_dorder_at_3half(&z, wp)?;
        Ok(Term { value: k.value * d.value / c })
    } else {
        let k = kloosterman_fast_f64(mp, np, ci)?;
        Ok(Term { value: Float::with_val(wp, k * fast::dj_dorder_at_3half(z) / c as f64) })
    }
}

fn block_terms(
    f: fn(i64, i64, u64, &Float, u32) -> Result<Term>,
    mp: i64,
    np: i64,
    range: std::ops::RangeInclusive<u64>,
    x: &Float,
    wp: u32,
) -> Result<Vec<Float>> {
    let terms: Vec<Result<Term>> = range.collect::<Vec<_>>().par_iter().map(|&c| f(mp, np, c, x, wp)).collect();
    terms.into_iter().map(|t| t.map(|t| t.value)).collect()
}

/// Majorant model for `sum_{c>C} |K|/c · I_{3/2}(x/c)`: `|K| ≤ (1/4) sqrt(c/3)
/// d(v) 8·2^{ω(c)}`, `I_{3/2}(z) ≤ κ z^{3/2} e^z`, and the mean order
/// `sum_{c>C} 2^{ω(c)}/c² ≈ (6/π²)(ln C + 1)/C`.
pub fn i_kernel_tail_model(v: i64, x: f64, big_c: u64) -> f64 {
    let kappa = 1.0 / (fast::gamma_f(2.5) * 2f64.powf(1.5));
    let dv = divisors(v as u64).len() as f64;
    let cc = big_c as f64;
    let six_pi2 = 6.0 / std::f64::consts::PI.powi(2);
    2.0 * dv / 3f64.sqrt() * six_pi2 * kappa * x.powf(1.5) * (x / cc).exp() * (cc.ln() + 1.0) / cc
}

fn check_mn(m: i64, n: i64) -> Result<()> {
    if m.rem_euclid(24) != 1 || n.rem_euclid(24) != 1 {
        return Err(Error::Precondition(format!("need m ≡ n ≡ 1 (24), got ({m},{n})")));
    }
    if m < 0 && n < 0 {
        return Err(Error::BothNegative);
    }
    Ok(())
}

/// `p(m,n)` by its Bessel series. For `mn < 0` the `I_{3/2}` series runs
/// until the tail model drops below `rel_tol·|value|`; for `mn > 0` the
/// `∂_ν J_ν` series runs to a fixed `c_max` (default 5000) and the error is
/// the half-width of the partial sums over the last fifth of the range.
pub fn p_mn(m: i64, n: i64, opts: &SeriesOptions) -> Result<SeriesRun> {
    check_mn(m, n)?;
    let wp = opts.prec + 32;
    let mn = m as i128 * n as i128;
    let amn = Float::with_val(wp, mn.unsigned_abs());
    let x = Float::with_val(wp, amn.clone().sqrt() * pi(wp) / 6u32);
    // the shape is taken from whichever index has the smaller square part
    let (a, b) = {
        let sm = shape_of(m)?;
        let sn = shape_of(n)?;
        if sn.v < sm.v {
            (n, m)
        } else {
            (m, n)
        }
    };
    let (mp, np) = (prime(a), prime(b));
    let v = shape_of(a)?.v;
    if mn < 0 {
        let pref = pi(wp) * 2u32 / Float::with_val(wp, amn.clone().pow(0.25f64));
        let cap = opts.c_max.unwrap_or(400_000);
        let mut sum = Float::with_val(wp, 0);
        let mut blocks: Vec<f64> = Vec::new();
        let mut c0 = 1u64;
        let xf = x.to_f64();
        loop {
            let c1 = (c0 + BLOCK - 1).min(cap);
            let ts = block_terms(term_i, mp, np, c0..=c1, &x, wp)?;
            let mut bs = Float::with_val(wp, 0);
            for t in ts {
                bs += t;
            }
            sum += &bs;
            blocks.push(Float::with_val(wp, &bs * &pref).abs().to_f64());
            let value = Float::with_val(wp, &sum * &pref);
            let tol = opts.rel_tol * value.to_f64().abs();
            let model = Float::with_val(53, &pref).to_f64() * i_kernel_tail_model(v, xf, c1);
            let stable = blocks.len() >= 3 && blocks[blocks.len() - 3..].iter().all(|&b| b < tol / 10.0);
            if (c1 as f64 >= xf && model <= tol && stable) || c1 >= cap {
                let last = *blocks.last().unwrap();
                return Ok(SeriesRun {
                    m,
                    n,
                    kernel: Kernel::I32,
                    c_max_used: c1,
                    precision_bits: opts.prec,
                    value: Float::with_val(opts.prec, value),
                    tail_estimate: model.max(last),
                    last_block: last,
                });
            }
            c0 = c1 + 1;
        }
    } else {
        let pref = Float::with_val(wp, 4u32) / Float::with_val(wp, amn.clone().pow(0.25f64));
        let cap = opts.c_max.unwrap_or(5000);
        let mut sum = Float::with_val(wp, 0);
        let mut partials: Vec<f64> = Vec::with_capacity(cap as usize);
        let mut last = 0.0;
        let mut c0 = 1u64;
        while c0 <= cap {
            let c1 = (c0 + BLOCK - 1).min(cap);
            let ts = block_terms(term_dj, mp, np, c0..=c1, &x, wp)?;
            let mut bs = Float::with_val(wp, 0);
            for t in ts {
                sum += &t;
                bs += t;
                partials.push(Float::with_val(wp, &sum * &pref).to_f64());
            }
            last = Float::with_val(wp, &bs * &pref).abs().to_f64();
            c0 = c1 + 1;
        }
        let from = partials.len() * 4 / 5;
        let band = &partials[from..];
        let hi = band.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = band.iter().cloned().fold(f64::INFINITY, f64::min);
        let value = Float::with_val(opts.prec, &sum * &pref);
        Ok(SeriesRun {
            m,
            n,
            kernel: Kernel::DJds,
            c_max_used: cap,
            precision_bits: opts.prec,
            value,
            tail_estimate: ((hi - lo) / 2.0).max(last),
            last_block: last,
        })
    }
}

/// `p(k) = 2π (24k−1)^{−3/4} sum_c K(0,−k;c)/c · I_{3/2}(π sqrt(24k−1)/6c)`,
/// the `m = 1` case of the `p(m,n)` series. The length is fixed by the same
/// tail model as [`p_mn`], asking for a remainder below `0.05`.
pub fn partition(k: u64, prec: u32) -> Result<Integer> {
    if k == 0 {
        return Err(Error::Precondition("partition needs k ≥ 1".into()));
    }
    let d = 24 * k - 1;
    let xf = std::f64::consts::PI * (d as f64).sqrt() / 6.0;
    // p(k) < e^x, so keep that many bits above the requested precision
    let wp = prec.max(64) + (xf * std::f64::consts::LOG2_E).ceil() as u32 + 32;
    let pref_f = 2.0 * std::f64::consts::PI * (d as f64).powf(-0.75);
    let mut nterms = 1u64;
    while nterms < 10 || pref_f * i_kernel_tail_model(1, xf, nterms) > 0.05 {
        nterms += 1;
    }
    let x = Float::with_val(wp, d).sqrt() * pi(wp) / 6u32;
    let np = -(k as i64);
    let mut sum = Float::with_val(wp, 0);
    let terms: Vec<Result<Float>> = (1..=nterms)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| {
            let a = kloosterman_float(0, np, c as i64, wp);
            if a.value.is_zero() {
                return Ok(Float::new(wp));
            }
            let i = bessel_i(1.5, &Float::with_val(wp, &x / c), wp)?;
            Ok(a.value * i.value / c)
        })
        .collect();
    for t in terms {
        sum += t?;
    }
    let pref = pi(wp) * 2u32 / Float::with_val(wp, d).pow(0.75f64);
    let val = sum * pref;
    let rounded = val.clone().round();
    let gap = Float::with_val(wp, &val - &rounded).abs().to_f64();
    if gap >= 0.25 {
        return Err(Error::InsufficientPrecision(format!("p({k}) rounding gap {gap}")));
    }
    Ok(rounded.to_integer().expect("finite"))
}

/// Euler's pentagonal recurrence, the oracle for [`partition`].
pub fn partition_table(kmax: usize) -> Vec<Integer> {
    let mut p = vec![Integer::from(1)];
    for n in 1..=kmax as i64 {
        let mut acc = Integer::new();
        for j in 1i64.. {
            let g1 = j * (3 * j - 1) / 2;
            if g1 > n {
                break;
            }
            let sign = if j % 2 == 1 { 1 } else { -1 };
            acc += &p[(n - g1) as usize] * sign;
            let g2 = j * (3 * j + 1) / 2;
            if g2 <= n {
                acc += &p[(n - g2) as usize] * sign;
            }
        }
        p.push(acc);
    }
    p
}

/// `sum_{c≤C} K(m',n';c)/c · J_{3/2}(π sqrt(mn)/6c)` for `mn > 0`.
pub fn orthogonality_sum(m: i64, n: i64, big_c: u64) -> Result<f64> {
    check_mn(m, n)?;
    if (m as i128 * n as i128) <= 0 {
        return Err(Error::Precondition("orthogonality sum needs mn > 0".into()));
    }
    let (a, b) = if shape_of(n)?.v < shape_of(m)?.v { (n, m) } else { (m, n) };
    let x = std::f64::consts::PI * ((m as f64) * (n as f64)).sqrt() / 6.0;
    let terms: Vec<Result<f64>> = (1..=big_c)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&c| {
            let k = kloosterman_fast_f64(prime(a), prime(b), c as i64)?;
            let z = x / c as f64;
            // J_{3/2}(z) = sqrt(2/πz)(sin z/z − cos z), series below 0.1
            let j = if z < 0.1 {
                let h2 = z * z / 4.0;
                (z / 2.0).powf(1.5) / fast::gamma_f(2.5) * (1.0 - h2 / 2.5 + h2 * h2 / (2.0 * 2.5 * 3.5))
            } else {
                (2.0 / (std::f64::consts::PI * z)).sqrt() * (z.sin() / z - z.cos())
            };
            Ok(k * j / c as f64)
        })
        .collect();
    let mut s = 0.0;
    for t in terms {
        s += t?;
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub c: i64,
    pub m: i64,
    pub n: i64,
    pub v: i64,
    pub t_direct: f64,
    pub t_fast: f64,
    pub ratio: f64,
    pub abs_diff: f64,
    pub agree: bool,
}

/// Times `K(M',n';c)` directly and through the Weyl-sum formula, `M = v²m`,
/// at 128 bits, for `c` on a roughly geometric grid up to `c_max`.
pub fn bench_kloosterman(c_max: i64, shapes: &[(i64, i64, i64)]) -> Result<Vec<BenchRow>> {
    let mut cs: Vec<i64> = Vec::new();
    let mut c = 10f64;
    while (c as i64) < c_max {
        cs.push(c as i64);
        c *= 10f64.sqrt();
    }
    cs.push(c_max);
    cs.dedup();
    let prec = 128;
    let mut rows = Vec::new();
    for &(m, n, v) in shapes {
        let big_m = v * v * m;
        let (mp, np) = (prime(big_m), prime(n));
        for &c in &cs {
            let t0 = Instant::now();
            let direct = kloosterman_float(mp, np, c, prec);
            let t_direct = t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let fast = kloosterman_fast(mp, np, c, prec)?;
            let t_fast = t1.elapsed().as_secs_f64();
            let abs_diff = Float::with_val(prec, &direct.value - &fast.value).abs().to_f64();
            rows.push(BenchRow {
                c,
                m,
                n,
                v,
                t_direct,
                t_fast,
                ratio: t_direct / t_fast.max(1e-9),
                abs_diff,
                agree: abs_diff < 1e-15,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `ln t_direct` against `ln c`.
pub fn loglog_slope(rows: &[BenchRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.c as f64).ln(), r.t_direct.max(1e-9).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        assert_eq!(shape_of(25).unwrap(), Shape { v: 5, m: 1 });
        assert_eq!(shape_of(-23 * 49).unwrap(), Shape { v: 7, m: -23 });
        assert_eq!(shape_of(1).unwrap(), Shape { v: 1, m: 1 });
        assert!(matches!(shape_of(2), Err(Error::BadShape(2))));
    }

    #[test]
    fn fast_path_matches_direct() {
        for (mp, np) in [(0, 0), (1, -1), (2, 3), (-1, 5), (4, 4)] {
            for c in 1..40 {
                let d = kloosterman_float(mp, np, c, 128);
                let f = kloosterman_fast(mp, np, c, 128).unwrap();
                assert!(Float::with_val(128, &d.value - &f.value).abs().to_f64() < 1e-30, "({mp},{np};{c})");
                let g = kloosterman_fast_f64(mp, np, c).unwrap();
                assert!((g - d.to_f64()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn small_partitions() {
        let t = partition_table(30);
        for k in 1..=30u64 {
            assert_eq!(partition(k, 128).unwrap(), t[k as usize], "p({k})");
        }
        assert_eq!(partition_table(100)[100], 190569292);
    }

    #[test]
    fn p_one_minus_23() {
        let opts = SeriesOptions { rel_tol: 1e-3, ..Default::default() };
        let r = p_mn(1, -23, &opts).unwrap();
        assert!((r.to_f64() - 23f64.sqrt()).abs() <= r.tail_estimate, "{} ± {}", r.to_f64(), r.tail_estimate);
        assert!(matches!(p_mn(-23, -47, &opts), Err(Error::BothNegative)));
    }
}
