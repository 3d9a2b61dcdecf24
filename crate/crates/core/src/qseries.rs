//! Exact q-expansions graded by `q^{1/24}`.
//!
//! A series stores `offset` (exponent of the first stored term, in units of
//! 1/24) and integer coefficients at exponents `offset, offset+24, ...`; every
//! object here lives in a single residue class mod 24. Exponents at or beyond
//! `truncation() = offset + 24·len` are unknown.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    pub offset: i64,
    pub coeffs: Vec<Integer>,
}

impl QSeries {
    pub fn new(offset: i64, coeffs: Vec<Integer>) -> Self {
        QSeries { offset, coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncation(&self) -> i64 {
        self.offset + 24 * self.coeffs.len() as i64
    }

    /// Coefficient of `q^{e/24}`; zero off the residue class or below the
    /// offset, `None` at or beyond the truncation.
    pub fn coeff(&self, e: i64) -> Option<Integer> {
        if e >= self.truncation() {
            return None;
        }
        if e < self.offset || (e - self.offset) % 24 != 0 {
            return Some(Integer::new());
        }
        Some(self.coeffs[((e - self.offset) / 24) as usize].clone())
    }

    pub fn truncate(mut self, len: usize) -> Self {
        self.coeffs.truncate(len);
        self
    }

    pub fn add(&self, o: &QSeries) -> QSeries {
        assert_eq!((self.offset - o.offset).rem_euclid(24), 0, "series live in different residue classes");
        let offset = self.offset.min(o.offset);
        let trunc = self.truncation().min(o.truncation());
        let len = ((trunc - offset) / 24).max(0) as usize;
        let coeffs = (0..len)
            .map(|i| {
                let e = offset + 24 * i as i64;
                self.coeff(e).unwrap() + o.coeff(e).unwrap()
            })
            .collect();
        QSeries { offset, coeffs }
    }

    pub fn scale(&self, k: &Integer) -> QSeries {
        QSeries { offset: self.offset, coeffs: self.coeffs.iter().map(|c| Integer::from(c * k)).collect() }
    }

    pub fn sub(&self, o: &QSeries) -> QSeries {
        self.add(&o.scale(&Integer::from(-1)))
    }

    pub fn mul(&self, o: &QSeries) -> QSeries {
        let len = self.len().min(o.len());
        let mut coeffs = vec![Integer::new(); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in o.coeffs.iter().take(len - i).enumerate() {
                coeffs[i + j] += Integer::from(a * b);
            }
        }
        QSeries { offset: self.offset + o.offset, coeffs }
    }

    pub fn pow(&self, k: u32) -> QSeries {
        let mut r = QSeries::new(0, vec![Integer::from(1); 1]).pad_like(self);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// The constant series 1 with as many known terms as `like`.
    fn pad_like(self, like: &QSeries) -> QSeries {
        let mut coeffs = vec![Integer::new(); like.len()];
        coeffs[0] = Integer::from(1);
        QSeries { offset: self.offset, coeffs }
    }

    /// Exact inverse; the leading coefficient must be a unit.
    pub fn inv(&self) -> Result<QSeries> {
        let lead = &self.coeffs[0];
        if *lead != 1 && *lead != -1 {
            return Err(Error::Precondition(format!("leading coefficient {lead} is not invertible over Z")));
        }
        let n = self.len();
        let mut r: Vec<Integer> = Vec::with_capacity(n);
        r.push(lead.clone());
        for k in 1..n {
            let mut s = Integer::new();
            for j in 1..=k {
                s += Integer::from(&self.coeffs[j] * &r[k - j]);
            }
            r.push(-(s * lead));
        }
        Ok(QSeries { offset: -self.offset, coeffs: r })
    }

    pub fn div(&self, o: &QSeries) -> Result<QSeries> {
        Ok(self.mul(&o.inv()?))
    }

    /// `-q d/dq` on a series with integral exponents.
    pub fn minus_q_deriv(&self) -> QSeries {
        assert_eq!(self.offset.rem_euclid(24), 0);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| Integer::from(c * -((self.offset / 24) + i as i64)))
            .collect();
        QSeries { offset: self.offset, coeffs }
    }

    /// Human-readable form `q^-2 - 50 - 832q - ...` of the first `n` nonzero
    /// terms.
    pub fn display(&self, n: usize) -> String {
        let mut out = String::new();
        let mut shown = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            if shown == n {
                break;
            }
            let e = self.offset + 24 * i as i64;
            let mono = if e == 0 {
                String::new()
            } else if e % 24 == 0 {
                if e == 24 {
                    "q".to_string()
                } else {
                    format!("q^{}", e / 24)
                }
            } else {
                format!("q^({e}/24)")
            };
            let abs = Integer::from(c.abs_ref());
            let body = if abs == 1 && !mono.is_empty() { mono } else { format!("{abs}{mono}") };
            if shown == 0 {
                out.push_str(if *c < 0 { "-" } else { "" });
            } else {
                out.push_str(if *c < 0 { " - " } else { " + " });
            }
            out.push_str(&body);
            shown += 1;
        }
        out
    }
}

fn sigma(k: u64, n: u64) -> Integer {
    let mut s = Integer::new();
    let mut d = 1;
    while d * d <= n {
        if n % d == 0 {
            s += Integer::from(d).pow(k as u32);
            if d * d != n {
                s += Integer::from(n / d).pow(k as u32);
            }
        }
        d += 1;
    }
    s
}

/// `prod_{k≥1} (1 − q^{scale·k})` to `len` terms.
fn euler_product(scale: usize, len: usize) -> Vec<Integer> {
    let mut r = vec![Integer::new(); len];
    r[0] = Integer::from(1);
    // pentagonal number theorem
    let mut k: i64 = 0;
    loop {
        let mut any = false;
        let sign = if k % 2 == 0 { 1 } else { -1 };
        for g in [k * (3 * k - 1) / 2, k * (3 * k + 1) / 2] {
            let idx = g as usize * scale;
            if idx < len {
                any = true;
                if k == 0 {
                    continue;
                }
                r[idx] += sign;
            }
        }
        if !any {
            break;
        }
        k += 1;
    }
    r
}

/// `η(scale·τ) = q^{scale/24} prod (1 − q^{scale k})`.
pub fn eta(scale: i64, len: usize) -> QSeries {
    QSeries::new(scale, euler_product(scale as usize, len))
}

fn eisenstein(weight_k: u64, factor: i64, scale: usize, len: usize) -> QSeries {
    let mut c = vec![Integer::new(); len];
    c[0] = Integer::from(1);
    let mut n = 1;
    while n * scale < len {
        c[n * scale] = sigma(weight_k - 1, n as u64) * factor;
        n += 1;
    }
    QSeries::new(0, c)
}

/// `E_2(scale·τ) = 1 − 24 sum σ_1(n) q^{scale n}`.
pub fn eisenstein_e2(scale: i64, len: usize) -> QSeries {
    eisenstein(2, -24, scale as usize, len)
}

pub fn eisenstein_e4(len: usize) -> QSeries {
    eisenstein(4, 240, 1, len)
}

/// `Δ = η^24`.
pub fn delta(len: usize) -> QSeries {
    eta(1, len).pow(24)
}

/// `j = E_4^3 / Δ`.
pub fn j_invariant(len: usize) -> QSeries {
    eisenstein_e4(len).pow(3).div(&delta(len)).expect("Δ is monic")
}

/// `F = ½(E₂ − 2E₂(2τ) − 3E₂(3τ) + 6E₂(6τ)) / (η(τ)η(2τ)η(3τ)η(6τ))²`.
pub fn build_f(len: usize) -> QSeries {
    let num = eisenstein_e2(1, len)
        .sub(&eisenstein_e2(2, len).scale(&Integer::from(2)))
        .sub(&eisenstein_e2(3, len).scale(&Integer::from(3)))
        .add(&eisenstein_e2(6, len).scale(&Integer::from(6)));
    let half = QSeries::new(
        0,
        num.coeffs
            .iter()
            .map(|c| {
                assert!(c.is_even());
                Integer::from(c / 2)
            })
            .collect(),
    );
    let den = eta(1, len).mul(&eta(2, len)).mul(&eta(3, len)).mul(&eta(6, len)).pow(2);
    half.div(&den).expect("eta product is monic")
}

/// `(η(τ)η(2τ)/η(3τ)η(6τ))^4` and `(3η(3τ)η(6τ)/η(τ)η(2τ))^4`.
pub fn j6_summands(len: usize) -> (QSeries, QSeries) {
    let a = eta(1, len).mul(&eta(2, len));
    let b = eta(3, len).mul(&eta(6, len));
    let t1 = a.div(&b).unwrap().pow(4);
    let t2 = b.div(&a).unwrap().pow(4).scale(&Integer::from(81));
    (t1, t2)
}

pub fn build_j6(len: usize) -> QSeries {
    let (t1, t2) = j6_summands(len);
    t1.add(&t2).truncate(len)
}

/// `lead + sum c_k basis_k`, killing the coefficients at the leading
/// exponents of `basis` (each monic), lowest first. Returns the combination
/// coefficients in the order given.
fn kill_principal(lead: &QSeries, basis: &[QSeries]) -> (QSeries, Vec<Integer>) {
    let mut res = lead.clone();
    let mut cs = Vec::with_capacity(basis.len());
    for b in basis {
        assert_eq!(b.coeffs[0], 1, "basis element must be monic");
        let c = res.coeff(b.offset).expect("inside truncation");
        res = res.sub(&b.scale(&c));
        cs.push(-c);
    }
    (res, cs)
}

/// A constructed basis element together with the monic polynomial (highest
/// degree first) that produced it from its seed.
#[derive(Clone, Debug)]
pub struct BasisElement {
    pub series: QSeries,
    pub poly: Vec<Integer>,
}

fn assemble_poly(deg: usize, killed: Vec<Integer>) -> Vec<Integer> {
    // killed[i] multiplies the seed times x^{deg-1-i}
    let mut p = vec![Integer::from(1)];
    p.extend(killed);
    debug_assert_eq!(p.len(), deg + 1);
    p
}

/// `F_v = F·p_v(J_6) = q^{-v} + O(1)` with `len` known coefficients.
pub fn basis_fv(v: u32, len: usize) -> BasisElement {
    assert!(v >= 1);
    let f = build_f(len);
    let j6 = build_j6(len);
    let mut pows = vec![f.clone()];
    for k in 1..v as usize {
        let next = pows[k - 1].mul(&j6);
        pows.push(next);
    }
    let lead = pows[v as usize - 1].clone();
    let basis: Vec<QSeries> = (0..v as usize - 1).rev().map(|k| pows[k].clone()).collect();
    let (series, killed) = kill_principal(&lead, &basis);
    let series = series.truncate(len);
    debug_assert!((1..v as i64).all(|k| series.coeff(-24 * k).unwrap() == 0));
    BasisElement { series, poly: assemble_poly(v as usize - 1, killed) }
}

/// `m^{3/2} g_m = η^{-1}·poly(j) = q^{-m/24} + O(q^{23/24})`, `m ≡ 1 (24)`.
pub fn basis_gm(m: i64, len: usize) -> Result<BasisElement> {
    if m <= 0 || m.rem_euclid(24) != 1 {
        return Err(Error::Precondition(format!("g_m needs positive m ≡ 1 (24), got {m}")));
    }
    let k = ((m - 1) / 24) as usize;
    let pad = len + k + 1;
    let seed = eta(1, pad).inv().unwrap();
    let j = j_invariant(pad);
    let mut pows = vec![seed];
    for i in 1..=k {
        let next = pows[i - 1].mul(&j);
        pows.push(next);
    }
    let basis: Vec<QSeries> = (0..k).rev().map(|i| pows[i].clone()).collect();
    let (series, killed) = kill_principal(&pows[k], &basis);
    Ok(BasisElement { series: series.truncate(len), poly: assemble_poly(k, killed) })
}

/// `|m|^{-3/2} h_m = η·j'·poly(j) = q^{m/24} + O(q^{1/24})`, `m < 0`, `m ≡ 1 (24)`.
pub fn basis_hm_neg(m: i64, len: usize) -> Result<BasisElement> {
    if m >= 0 || m.rem_euclid(24) != 1 {
        return Err(Error::Precondition(format!("h_m needs negative m ≡ 1 (24), got {m}")));
    }
    let kk = ((1 - m) / 24) as usize; // m = 1 − 24K
    let pad = len + kk + 1;
    let j = j_invariant(pad);
    let seed = eta(1, pad).mul(&j.minus_q_deriv());
    let mut pows = vec![seed];
    for i in 1..kk {
        let next = pows[i - 1].mul(&j);
        pows.push(next);
    }
    let basis: Vec<QSeries> = (0..kk - 1).rev().map(|i| pows[i].clone()).collect();
    let (series, killed) = kill_principal(&pows[kk - 1], &basis);
    Ok(BasisElement { series: series.truncate(len), poly: assemble_poly(kk - 1, killed) })
}

/// `p(m,n) = integer · sqrt(radicand) / denominator`, read off a basis element.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PCoefficient {
    pub m: i64,
    pub n: i64,
    #[serde(serialize_with = "ser_int")]
    pub integer: Integer,
    pub radicand: u64,
    pub denominator: u64,
}

fn ser_int<S: serde::Serializer>(x: &Integer, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

impl PCoefficient {
    pub fn to_float(&self, prec: u32) -> Float {
        Float::with_val(prec, self.radicand).sqrt() * Float::with_val(prec, &self.integer) / self.denominator
    }
}

/// Which basis element a coefficient is read from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// `h_m` with `m < 0`: coefficient of `q^{n/24}` is `−|mn| p(m,n)`.
    H,
    /// `g_k` with `k > 0`: coefficient of `q^{|l|/24}` is `|kl|^{-1/2} p(l,k)`.
    G,
}

/// Exact `p(m,n)` for `mn < 0` from the weakly holomorphic bases, using
/// `p(m,n) = p(n,m)`. `route` picks `h_{neg}` or `g_{pos}`.
pub fn coefficient_p_via(m: i64, n: i64, route: Route) -> Result<PCoefficient> {
    if m.rem_euclid(24) != 1 || n.rem_euclid(24) != 1 {
        return Err(Error::Precondition(format!("p(m,n) needs m ≡ n ≡ 1 (24), got ({m},{n})")));
    }
    if m as i128 * n as i128 >= 0 {
        return Err(Error::NotConstructible(m, n));
    }
    let (neg, pos) = if m < 0 { (m, n) } else { (n, m) };
    match route {
        Route::H => {
            let len = ((pos - neg) / 24 + 2) as usize;
            let h = basis_hm_neg(neg, len)?;
            let c = h.series.coeff(pos).unwrap();
            // p = −c sqrt|neg| / pos
            Ok(PCoefficient { m, n, integer: -c, radicand: neg.unsigned_abs(), denominator: pos as u64 })
        }
        Route::G => {
            let len = ((pos - neg) / 24 + 2) as usize;
            let g = basis_gm(pos, len)?;
            let c = g.series.coeff(-neg).unwrap();
            // p = c sqrt|neg| / pos
            Ok(PCoefficient { m, n, integer: c, radicand: neg.unsigned_abs(), denominator: pos as u64 })
        }
    }
}

pub fn coefficient_p(m: i64, n: i64) -> Result<PCoefficient> {
    coefficient_p_via(m, n, Route::H)
}

pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CacheEntry {
    pub version: u32,
    pub object: String,
    pub parameter: i64,
    pub truncation: i64,
    pub offset: i64,
    pub coeffs: Vec<String>,
}

impl CacheEntry {
    pub fn from_series(object: &str, parameter: i64, s: &QSeries) -> Self {
        CacheEntry {
            version: CACHE_VERSION,
            object: object.to_string(),
            parameter,
            truncation: s.truncation(),
            offset: s.offset,
            coeffs: s.coeffs.iter().map(|c| c.to_string()).collect(),
        }
    }

    pub fn to_series(&self) -> Result<QSeries> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.parse::<Integer>().map_err(|e| Error::Precondition(format!("bad cache coefficient: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(QSeries::new(self.offset, coeffs))
    }
}

/// Read cached entries, discarding those written by another version.
pub fn load_cache(path: &Path) -> Vec<CacheEntry> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return Vec::new();
    };
    let entries: Vec<CacheEntry> = serde_json::from_str(&text).unwrap_or_default();
    entries.into_iter().filter(|e| e.version == CACHE_VERSION).collect()
}

pub fn store_cache(path: &Path, entries: &[CacheEntry]) -> std::io::Result<()> {
    std::fs::write(path, serde_json::to_string(entries)?)
}

/// `F_v` with at least `len` coefficients, memoized for the process.
pub fn fv_cached(v: u32, len: usize) -> QSeries {
    static MEMO: OnceLock<Mutex<HashMap<u32, QSeries>>> = OnceLock::new();
    let memo = MEMO.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(s) = memo.lock().unwrap().get(&v) {
        if s.len() >= len {
            return s.clone().truncate(len);
        }
    }
    let s = basis_fv(v, len).series;
    memo.lock().unwrap().insert(v, s.clone());
    s
}
