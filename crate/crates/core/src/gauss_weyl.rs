//! Quadratic Gauss sums, Fischer sums `H_{d,c}(δ)`, the twisted Weyl sum
//! `S_v(m,n;24c)` and numerical verifiers for the identities relating them
//! to the eta-multiplier Kloosterman sum.

use std::collections::BTreeMap;

use rug::{Complex, Float};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{chi_product, QuadForm};
use crate::kloosterman::{dedekind_12c, kloosterman_float, ExponentMultiset};
use crate::ntcore::{divisors, gcd, is_squarefree, kronecker, modinv, moebius, solve_quadratic_congruence};
use crate::num::{abs_c, decimal, e_frac, pi};
use crate::report::VerificationReport;

/// `coef · sqrt(rad) · e(num/den)`, the shape every Gauss sum takes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaussClosed {
    pub coef: i64,
    pub rad: u64,
    pub num: i64,
    pub den: u64,
}

impl GaussClosed {
    const ONE: GaussClosed = GaussClosed { coef: 1, rad: 1, num: 0, den: 1 };
    const ZERO: GaussClosed = GaussClosed { coef: 0, rad: 1, num: 0, den: 1 };

    fn mul(self, o: GaussClosed) -> GaussClosed {
        if self.coef == 0 || o.coef == 0 {
            return Self::ZERO;
        }
        let den = self.den * o.den / gcd(self.den as i64, o.den as i64) as u64;
        let num = self.num * (den / self.den) as i64 + o.num * (den / o.den) as i64;
        GaussClosed { coef: self.coef * o.coef, rad: self.rad * o.rad, num, den }.normalized()
    }

    fn normalized(mut self) -> GaussClosed {
        self.num = self.num.rem_euclid(self.den as i64);
        let g = gcd(self.num, self.den as i64).max(1) as u64;
        self.num /= g as i64;
        self.den /= g;
        // pull square factors out of the radical
        let mut k = 2u64;
        while k * k <= self.rad {
            while self.rad % (k * k) == 0 {
                self.rad /= k * k;
                self.coef *= k as i64;
            }
            k += 1;
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.coef == 0
    }

    pub fn eval(&self, prec: u32) -> Complex {
        if self.coef == 0 {
            return Complex::with_val(prec, 0);
        }
        let r = Float::with_val(prec + 8, self.rad).sqrt() * self.coef;
        e_frac(self.num, self.den, prec + 8) * r
    }
}

/// Closed-form evaluation of `G(a,b,c) = sum_{x mod c} e((a x^2 + b x)/c)`.
pub fn gauss_closed_exact(a: i64, b: i64, c: i64) -> GaussClosed {
    assert!(c >= 1);
    let (a, b) = (a.rem_euclid(c), b.rem_euclid(c));
    if c == 1 {
        return GaussClosed::ONE;
    }
    let d = gcd(a, c);
    if d > 1 {
        if b % d != 0 {
            return GaussClosed::ZERO;
        }
        let inner = gauss_closed_exact(a / d, b / d, c / d);
        return GaussClosed { coef: inner.coef * d, ..inner }.normalized();
    }
    let k = c.trailing_zeros();
    let q = 1i64 << k;
    let r = c >> k;
    if k > 0 && r > 1 {
        // G(a,b,qr) = G(ar,b,q) G(aq,b,r)
        return gauss_closed_exact(a * r % q, b, q).mul(gauss_closed_exact(a * q % r, b, r));
    }
    if k == 0 {
        // e(−(4a)^{-1} b^2 / c) ε_c sqrt(c) (a/c)
        let inv4a = modinv(4 * a % c, c).expect("unit");
        let lin = (-(inv4a as i128) * (b as i128 * b as i128 % c as i128)).rem_euclid(c as i128) as i64;
        // ε_c = i when c ≡ 3 (4), i.e. e(1/4) = e(c / 4c)
        let eps = if c % 4 == 3 { c } else { 0 };
        let g = GaussClosed { coef: kronecker(a, c) as i64, rad: c as u64, num: 4 * lin + eps, den: 4 * c as u64 };
        return g.normalized();
    }
    if c == 2 {
        return if b % 2 == 1 { GaussClosed { coef: 2, ..GaussClosed::ONE } } else { GaussClosed::ZERO };
    }
    // 4 | c
    if b % 2 == 1 {
        return GaussClosed::ZERO;
    }
    let abar = modinv(a, c).expect("unit");
    let h = b / 2;
    let lin = (-(abar as i128) * (h as i128 * h as i128 % c as i128)).rem_euclid(c as i128) as i64;
    // (1+i) = sqrt 2 e(1/8), ε_a^{-1} = e(−1/4) when a ≡ 3 (4)
    let c8 = 8 * c;
    let mut num = 8 * lin + c;
    if a % 4 == 3 {
        num -= 2 * c;
    }
    GaussClosed { coef: kronecker(c, a) as i64, rad: 2 * c as u64, num, den: c8 as u64 }.normalized()
}

pub fn gauss_sum_closed(a: i64, b: i64, c: i64, prec: u32) -> Complex {
    gauss_closed_exact(a, b, c).eval(prec)
}

pub fn gauss_sum_bruteforce(a: i64, b: i64, c: i64, prec: u32) -> Complex {
    assert!(c >= 1);
    let wp = prec + 16;
    let mut acc = Complex::with_val(wp, 0);
    for x in 0..c {
        let num = (a as i128 * x as i128 * x as i128 + b as i128 * x as i128).rem_euclid(c as i128) as i64;
        acc += e_frac(num, c as u64, wp);
    }
    Complex::with_val(prec, acc)
}

const FIX_BITS: u32 = 100;

fn to_fixed(x: &Float) -> i128 {
    let scaled = Float::with_val(x.prec() + FIX_BITS, x << FIX_BITS);
    scaled.round().to_integer().unwrap().to_i128().unwrap()
}

/// `x y / 2^100` for two 100-bit fixed-point values, without overflow.
fn mul_fixed(x: i128, y: i128) -> i128 {
    const H: u32 = FIX_BITS / 2;
    let mask = (1i128 << H) - 1;
    let (xh, xl) = (x >> H, x & mask);
    let (yh, yl) = (y >> H, y & mask);
    xh * yh + ((xh * yl + xl * yh) >> H) + ((xl * yl) >> FIX_BITS)
}

/// Closed form against direct summation for every `0 ≤ a, b < c ≤ cmax`.
/// Direct sums use a table of `e(k/8c)` in 100-bit fixed point; closed forms
/// are evaluated from the same table. Returns `(cases, worst |Δ|)` with the
/// failing cases listed.
pub fn gauss_grid_fixed(cmax: i64, tol: f64) -> (u64, f64, Vec<(i64, i64, i64)>) {
    let scale = 2f64.powi(FIX_BITS as i32);
    let mut sqrt_tab = vec![0i128; (2 * cmax + 1) as usize];
    for (r, slot) in sqrt_tab.iter_mut().enumerate() {
        *slot = to_fixed(&Float::with_val(160, r).sqrt());
    }
    let mut cases = 0u64;
    let mut worst = 0f64;
    let mut fails = Vec::new();
    for c in 1..=cmax {
        let n8 = 8 * c as usize;
        let mut cs = Vec::with_capacity(n8);
        let mut sn = Vec::with_capacity(n8);
        let two_pi = pi(180) * 2u32;
        for k in 0..n8 {
            let ang = Float::with_val(180, &two_pi * k as u64) / n8 as u64;
            let (s, co) = ang.sin_cos(Float::new(180));
            cs.push(to_fixed(&co));
            sn.push(to_fixed(&s));
        }
        let cu = c as usize;
        let mut qidx = vec![0usize; cu];
        for a in 0..c {
            for (x, q) in qidx.iter_mut().enumerate() {
                *q = (a as usize * x % cu) * x % cu;
            }
            for b in 0..=c / 2 {
                let (mut re, mut im) = (0i128, 0i128);
                let mut lin = 0usize;
                for &q in &qidx {
                    let mut k = q + lin;
                    if k >= cu {
                        k -= cu;
                    }
                    re += cs[8 * k];
                    im += sn[8 * k];
                    lin += b as usize;
                    if lin >= cu {
                        lin -= cu;
                    }
                }
                let g = gauss_closed_exact(a, b, c);
                let (cre, cim) = if g.is_zero() {
                    (0, 0)
                } else {
                    let r = g.coef as i128 * sqrt_tab[g.rad as usize];
                    let k = (g.num as usize * (n8 / g.den as usize)) % n8;
                    (mul_fixed(r, cs[k]), mul_fixed(r, sn[k]))
                };
                let d = (((re - cre) as f64).powi(2) + ((im - cim) as f64).powi(2)).sqrt() / scale;
                let nb = if b == 0 { 1 } else if 2 * b == c { 1 } else { 2 };
                cases += nb;
                if d > worst {
                    worst = d;
                }
                if d >= tol {
                    fails.push((a, b, c));
                }
            }
        }
    }
    (cases, worst, fails)
}

/// `H_{d,c}(δ) = (1/2) sum_{j mod 2c} e(d (6j+δ)^2 / 24c)`.
pub fn fischer_h(d: i64, c: i64, delta: i64, prec: u32) -> Complex {
    let wp = prec + 16;
    let m = 24 * c as i128;
    let mut acc = Complex::with_val(wp, 0);
    for j in 0..2 * c {
        let t = 6 * j as i128 + delta as i128;
        let num = (d as i128 * (t * t % m)).rem_euclid(m) as i64;
        acc += e_frac(num, m as u64, wp);
    }
    Complex::with_val(prec, acc / 2u32)
}

fn cdiff(a: &Complex, b: &Complex) -> f64 {
    abs_c(&Complex::with_val(a.prec().0, a - b)).to_f64()
}

fn cstr(z: &Complex) -> String {
    format!("{} + {}i", decimal(z.real(), 30), decimal(z.imag(), 30))
}

/// Both sides of
/// `sqrt(3c) (12/v) e(d̄(v²−1)/24c) e^{πi s(d,c)}
///   = e((2v+dα²)/24c) H_{−d,c}(α) + e((−2v+dβ²)/24c) H_{−d,c}(β)`
/// with `α = 1 − d̄c − d̄v`, `β = 1 − d̄c + d̄v`, and `d̄` the inverse of `d`
/// modulo `c` (odd `c`) or `2c` (even `c`).
pub fn fischer_identity_sides(d: i64, c: i64, v: i64, prec: u32) -> Result<(Complex, Complex)> {
    if gcd(v, 6) != 1 || gcd(c, d) != 1 || c < 1 {
        return Err(Error::Precondition(format!("need (v,6)=1, (c,d)=1, c>0: d={d} c={c} v={v}")));
    }
    let wp = prec + 16;
    let modulus = if c % 2 == 0 { 2 * c } else { c };
    let dbar = modinv(d, modulus).ok_or(Error::NotCoprime(d, modulus))?;
    let den = 24 * c as u64;
    let t = dedekind_12c(d, c);
    // e^{πi s} = e(12c s / 24c)
    let ph_lhs = (dbar as i128 * (v as i128 * v as i128 - 1) + t).rem_euclid(den as i128) as i64;
    let lhs = e_frac(ph_lhs, den, wp) * Float::with_val(wp, 3 * c).sqrt() * kronecker(12, v);
    let alpha = 1 - dbar * c - dbar * v;
    let beta = 1 - dbar * c + dbar * v;
    let term = |sgn: i64, x: i64| {
        let num = (2 * sgn as i128 * v as i128 + d as i128 * x as i128 * x as i128).rem_euclid(den as i128) as i64;
        e_frac(num, den, wp) * fischer_h(-d, c, x, wp)
    };
    let rhs = term(1, alpha) + term(-1, beta);
    Ok((Complex::with_val(prec, lhs), Complex::with_val(prec, rhs)))
}

pub fn verify_fischer_identity(d: i64, c: i64, v: i64, prec: u32, tol: f64) -> Result<VerificationReport> {
    let (l, r) = fischer_identity_sides(d, c, v, prec)?;
    Ok(VerificationReport::new("lemma41", vec![d, c, v], cstr(&l), cstr(&r), cdiff(&l, &r), tol))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeylSumSpec {
    pub v: i64,
    pub m: i64,
    pub n: i64,
    pub c: i64,
}

impl WeylSumSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.v > 0
            && gcd(self.v, 6) == 1
            && self.m.rem_euclid(24) == 1
            && is_squarefree(self.m)
            && self.n.rem_euclid(24) == 1
            && self.c >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::Precondition(format!("invalid Weyl sum parameters {self:?}")))
        }
    }
}

/// `S_v(m,n;24c)` as signed residues `bv mod 12c`.
pub fn weyl_exact(spec: &WeylSumSpec) -> Result<ExponentMultiset> {
    spec.validate()?;
    let WeylSumSpec { v, m, n, c } = *spec;
    let modulus = 24 * c;
    let mn = m as i128 * n as i128;
    let mut entries: BTreeMap<u64, i64> = BTreeMap::new();
    let dd = i64::try_from(mn.rem_euclid(modulus as i128)).unwrap();
    for b in solve_quadratic_congruence(dd, modulus as u64) {
        let b = b as i64;
        let k12 = kronecker(12, b);
        if k12 == 0 {
            continue;
        }
        let cc = (b as i128 * b as i128 - mn) / modulus as i128;
        let q = QuadForm::new(6 * c, b, i64::try_from(cc).expect("coefficient fits"));
        let chi = chi_product(m, &q);
        if chi == 0 {
            continue;
        }
        let r = (b as i128 * v as i128).rem_euclid(12 * c as i128) as u64;
        *entries.entry(r).or_insert(0) += (k12 * chi) as i64;
    }
    entries.retain(|_, m| *m != 0);
    Ok(ExponentMultiset { modulus: 12 * c as u64, entries })
}

/// `S_v(m,n;24c)` as a real number; the sum is self-conjugate.
pub fn weyl_sum(spec: &WeylSumSpec, prec: u32) -> Result<Float> {
    let z = weyl_exact(spec)?.evaluate(prec);
    let im = z.imag().to_f64().abs();
    assert!(im < 2f64.powi(-(prec as i32) / 2) * spec.c as f64 * 24.0, "S_v has imaginary part {im:e}");
    Ok(z.real().clone())
}

/// `4 sum_{ℓ mod 2c, (3ℓ²+ℓ)/2 ≡ n' (c)} (−1)^ℓ cos((6ℓ+1)vπ/6c)`, the `m = 1`
/// specialization of `S_v`.
pub fn weyl_whiteman_form(v: i64, n: i64, c: i64, prec: u32) -> Float {
    let wp = prec + 16;
    let np = (n - 1).div_euclid(24);
    let mut acc = Float::with_val(wp, 0);
    for l in 0..2 * c {
        if ((3 * l * l + l) / 2 - np).rem_euclid(c) != 0 {
            continue;
        }
        let num = ((6 * l + 1) as i128 * v as i128).rem_euclid(12 * c as i128) as i64;
        let z = e_frac(num, 12 * c as u64, wp);
        if l % 2 == 0 {
            acc += z.real();
        } else {
            acc -= z.real();
        }
    }
    Float::with_val(prec, acc * 4u32)
}

fn prime(x: i64) -> i64 {
    debug_assert_eq!(x.rem_euclid(24), 1);
    (x - 1).div_euclid(24)
}

/// `4 sqrt3 sum_{u|(v,c)} (12/(v/u)) (m/u) sqrt(u/c) K(((v/u)^2 m)', n'; c/u)`.
pub fn weyl_closed_rhs(spec: &WeylSumSpec, prec: u32) -> Result<Float> {
    spec.validate()?;
    let WeylSumSpec { v, m, n, c } = *spec;
    let wp = prec + 16;
    let mut acc = Float::with_val(wp, 0);
    for u in divisors(gcd(v, c) as u64) {
        let u = u as i64;
        let w = v / u;
        let sign = kronecker(12, w) * kronecker(m, u);
        if sign == 0 {
            continue;
        }
        let big_m = w as i128 * w as i128 * m as i128;
        let mp = i64::try_from((big_m - 1).div_euclid(24)).map_err(|_| Error::BadShape(v))?;
        let k = kloosterman_float(mp, prime(n), c / u, wp);
        let s = (Float::with_val(wp, u) / c).sqrt();
        acc += k.value * s * sign;
    }
    Ok(Float::with_val(prec, acc * Float::with_val(wp, 3).sqrt() * 4u32))
}

pub fn verify_weyl_closed(spec: &WeylSumSpec, prec: u32, tol: f64) -> Result<VerificationReport> {
    let lhs = weyl_sum(spec, prec)?;
    let rhs = weyl_closed_rhs(spec, prec)?;
    let d = Float::with_val(prec, &lhs - &rhs).abs().to_f64();
    Ok(VerificationReport::new(
        "prop42",
        vec![spec.v, spec.m, spec.n, spec.c],
        decimal(&lhs, 30),
        decimal(&rhs, 30),
        d,
        tol,
    ))
}

/// Right side of the Weyl-sum formula for `K(M', n'; c)`, `M = v²m`:
/// `(1/4) sqrt(c/3) (12/v) sum_{u|(v,c)} μ(u) (m/u) S_{v/u}(m,n;24c/u)`.
pub fn kloosterman_via_weyl(v: i64, m: i64, n: i64, c: i64, prec: u32) -> Result<Float> {
    WeylSumSpec { v, m, n, c }.validate()?;
    let wp = prec + 16;
    let mut acc = Float::with_val(wp, 0);
    for u in divisors(gcd(v, c) as u64) {
        let mu = moebius(u);
        let u = u as i64;
        let sign = mu as i32 * kronecker(m, u);
        if sign == 0 {
            continue;
        }
        let s = weyl_sum(&WeylSumSpec { v: v / u, m, n, c: c / u }, wp)?;
        acc += s * sign;
    }
    let scale = (Float::with_val(wp, c) / 3u32).sqrt() / 4u32;
    Ok(Float::with_val(prec, acc * scale * kronecker(12, v)))
}

pub fn verify_kloosterman_via_weyl(v: i64, m: i64, n: i64, c: i64, prec: u32, tol: f64) -> Result<VerificationReport> {
    let big_m = v as i128 * v as i128 * m as i128;
    let mp = i64::try_from((big_m - 1).div_euclid(24)).map_err(|_| Error::BadShape(v))?;
    let lhs = kloosterman_float(mp, prime(n), c, prec);
    let rhs = kloosterman_via_weyl(v, m, n, c, prec)?;
    let d = Float::with_val(prec, &lhs.value - &rhs).abs().to_f64();
    Ok(VerificationReport::new("thm13", vec![v, m, n, c], decimal(&lhs.value, 30), decimal(&rhs, 30), d, tol))
}

/// `#{b mod 24c : b² ≡ mn}`, the trivial bound ingredient.
pub fn weyl_support_size(m: i64, n: i64, c: i64) -> usize {
    let modulus = 24 * c;
    let dd = (m as i128 * n as i128).rem_euclid(modulus as i128) as i64;
    solve_quadratic_congruence(dd, modulus as u64).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Complex, b: &Complex, tol: f64) -> bool {
        cdiff(a, b) < tol
    }

    #[test]
    fn gauss_examples() {
        let p = 128;
        let i_sqrt3 = Complex::with_val(p, (0, Float::with_val(p, 3).sqrt()));
        assert!(close(&gauss_sum_bruteforce(1, 0, 3, p), &i_sqrt3, 1e-30));
        assert!(close(&gauss_sum_closed(1, 0, 3, p), &i_sqrt3, 1e-30));
        assert!(gauss_closed_exact(1, 0, 2).is_zero());
        assert!(close(&gauss_sum_bruteforce(1, 0, 2, p), &Complex::with_val(p, 0), 1e-30));
        for c in 1..20 {
            assert!(close(&gauss_sum_closed(0, 0, c, p), &Complex::with_val(p, c), 1e-28));
        }
        assert!(close(&gauss_sum_closed(1, 0, 4, p), &Complex::with_val(p, (2, 2)), 1e-30));
        assert!(close(&gauss_sum_closed(3, 1, 6, p), &gauss_sum_bruteforce(3, 1, 6, p), 1e-30));
        assert!(gauss_closed_exact(1, 1, 4).is_zero());
    }

    #[test]
    fn gauss_small_grid_against_mpfr() {
        for c in 1..=40 {
            for a in -2..c {
                for b in -2..c {
                    let x = gauss_sum_closed(a, b, c, 96);
                    let y = gauss_sum_bruteforce(a, b, c, 96);
                    assert!(close(&x, &y, 1e-20), "a={a} b={b} c={c}");
                }
            }
        }
        let (n, worst, fails) = gauss_grid_fixed(30, 1e-20);
        assert!(fails.is_empty() && worst < 1e-24, "{worst}");
        assert_eq!(n, (1..=30u64).map(|c| c * c).sum::<u64>());
    }

    #[test]
    fn fischer_properties() {
        let p = 96;
        let direct = (e_frac(-25, 24, p) + e_frac(-1, 24, p)) / 2u32;
        assert!(close(&fischer_h(-1, 1, 1, p), &Complex::with_val(p, direct), 1e-25));
        for c in 1..12 {
            for d in -c..=c {
                if gcd(d, c) != 1 {
                    continue;
                }
                for delta in -7..7 {
                    let h = fischer_h(d, c, delta, p);
                    assert!(close(&h, &fischer_h(d, c, delta + 6, p), 1e-25));
                    assert!(close(&h, &fischer_h(d, c, -delta, p), 1e-25));
                }
            }
        }
    }

    #[test]
    fn fischer_identity_examples() {
        for (d, c, v) in [(1, 1, 1), (5, 6, 7), (1, 2, 1), (7, 10, 5), (3, 8, 11)] {
            assert!(verify_fischer_identity(d, c, v, 128, 1e-25).unwrap().pass, "{d} {c} {v}");
        }
        assert!(verify_fischer_identity(2, 4, 1, 128, 1e-25).is_err());
    }

    #[test]
    fn weyl_examples() {
        let s = weyl_sum(&WeylSumSpec { v: 1, m: 1, n: 1, c: 1 }, 128).unwrap();
        let t = Float::with_val(128, 3).sqrt() * 4u32;
        assert!(Float::with_val(128, &s - &t).abs() < 1e-30);
        for c in 1..=50 {
            for v in [1, 5, 7] {
                let s = weyl_sum(&WeylSumSpec { v, m: 1, n: -23, c }, 128).unwrap();
                let w = weyl_whiteman_form(v, -23, c, 128);
                assert!(Float::with_val(128, &s - &w).abs() < 1e-25, "c={c}");
            }
        }
    }

    #[test]
    fn weyl_identity_examples() {
        for (v, m, n, c) in [(1, 1, 1, 1), (5, 1, 1, 5), (1, -23, 25, 7), (5, 1, 25, 10), (7, -23, 49, 14)] {
            let spec = WeylSumSpec { v, m, n, c };
            assert!(verify_weyl_closed(&spec, 128, 1e-25).unwrap().pass, "{spec:?}");
            assert!(verify_kloosterman_via_weyl(v, m, n, c, 128, 1e-25).unwrap().pass, "{spec:?}");
        }
        let r = verify_kloosterman_via_weyl(1, 1, 1, 1, 128, 1e-30).unwrap();
        assert!(r.lhs.starts_with("1.0000"));
    }
}
