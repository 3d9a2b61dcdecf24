//! Dedekind sums and the eta-multiplier Kloosterman sum
//! `K(a,b;c) = sum_{d mod c, (d,c)=1} e^{pi i s(d,c)} e((d' a + d b)/c)`.

use std::collections::BTreeMap;

use rug::{Complex, Float, Rational};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::ntcore::{gcd, modinv};
use crate::num::{pi, BigReal, RootTable};

/// `12 c s(d,c)` as an exact integer, through the reciprocity law
/// `d T(d,c) + c T(c,d) = d^2 + c^2 + 1 - 3dc` with `T(d,c) = 12 c s(d,c)`.
pub fn dedekind_12c(d: i64, c: i64) -> i128 {
    assert!(c >= 1);
    let c = c as i128;
    let d = (d as i128).rem_euclid(c);
    if c == 1 {
        return 0;
    }
    assert!(d != 0, "s(d,c) needs (d,c)=1");
    // T(d,c) = (d^2 + c^2 + 1 - 3dc - c T(c mod d, d)) / d
    let inner = dedekind_12c((c % d) as i64, d as i64);
    let num = d * d + c * c + 1 - 3 * d * c - c * inner;
    debug_assert_eq!(num % d, 0);
    num / d
}

/// `s(d,c)` as an exact rational, `O(log c)` via reciprocity.
pub fn dedekind_sum(d: i64, c: i64) -> Result<Rational> {
    if c < 1 {
        return Err(Error::Precondition(format!("c must be positive, got {c}")));
    }
    if gcd(d, c) != 1 {
        return Err(Error::NotCoprime(d, c));
    }
    Ok(Rational::from((rug::Integer::from(dedekind_12c(d, c)), rug::Integer::from(12 * c))))
}

/// The defining `O(c)` sum of sawtooth products.
pub fn dedekind_sum_direct(d: i64, c: i64) -> Rational {
    let saw = |num: i64| -> Rational {
        let r = num.rem_euclid(c);
        if r == 0 {
            Rational::new()
        } else {
            Rational::from((r, c)) - Rational::from((1, 2))
        }
    };
    let mut s = Rational::new();
    for r in 1..c {
        s += saw(r) * saw(d * r);
    }
    s
}

/// `6 c s(d,c)`; an integer by the classical integrality theorem.
pub fn dedekind_6c(d: i64, c: i64) -> i64 {
    let t = dedekind_12c(d, c);
    assert!(t % 2 == 0, "6c s(d,c) must be an integer (d={d}, c={c})");
    (t / 2) as i64
}

/// `K(a,b;c)` as a multiset of exponents `r` standing for `e(r / 12c)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExponentMultiset {
    pub modulus: u64,
    pub entries: BTreeMap<u64, i64>,
}

impl ExponentMultiset {
    /// `sum mult(r) e(r/modulus)`, accumulated in increasing residue order.
    pub fn evaluate(&self, prec: u32) -> Complex {
        let wp = prec + 16;
        let two_pi_over = pi(wp) * 2u32 / self.modulus;
        let mut re = Float::with_val(wp, 0);
        let mut im = Float::with_val(wp, 0);
        for (&r, &mult) in &self.entries {
            let angle = Float::with_val(wp, &two_pi_over * r);
            let (s, c) = angle.sin_cos(Float::new(wp));
            re += c * mult;
            im += s * mult;
        }
        Complex::with_val(prec, (re, im))
    }

    pub fn evaluate_with(&self, table: &RootTable, prec: u32) -> Complex {
        assert_eq!(table.n, self.modulus);
        let mut re = Float::with_val(prec, 0);
        let mut im = Float::with_val(prec, 0);
        for (&r, &mult) in &self.entries {
            re += Float::with_val(prec, &table.cos[r as usize] * mult);
            im += Float::with_val(prec, &table.sin[r as usize] * mult);
        }
        Complex::with_val(prec, (re, im))
    }

    /// Real part in double precision, for bulk tails of long series.
    pub fn real_f64(&self) -> f64 {
        let w = std::f64::consts::TAU / self.modulus as f64;
        self.entries.iter().map(|(&r, &mult)| mult as f64 * (w * r as f64).cos()).sum()
    }

    pub fn term_count(&self) -> i64 {
        self.entries.values().sum()
    }
}

/// Exponent counts of `K(a,b;c)` modulo `12c`, as a dense vector.
pub fn kloosterman_counts(a: i64, b: i64, c: i64) -> Vec<i64> {
    assert!(c >= 1);
    let n = 12 * c;
    let mut counts = vec![0i64; n as usize];
    let (a, b) = (a.rem_euclid(c), b.rem_euclid(c));
    for d in 0..c {
        if gcd(d, c) != 1 {
            continue;
        }
        let dbar = modinv(d, c).expect("unit");
        let s6 = dedekind_6c(d, c);
        let lin = ((dbar as i128 * a as i128 + d as i128 * b as i128) % c as i128) as i64;
        let r = (s6 as i128 + 12 * lin as i128).rem_euclid(n as i128) as usize;
        counts[r] += 1;
    }
    counts
}

pub fn kloosterman_exact(a: i64, b: i64, c: i64) -> ExponentMultiset {
    let counts = kloosterman_counts(a, b, c);
    let entries = counts
        .into_iter()
        .enumerate()
        .filter(|&(_, m)| m != 0)
        .map(|(r, m)| (r as u64, m))
        .collect();
    ExponentMultiset { modulus: 12 * c as u64, entries }
}

/// `K(a,b;c)` at `prec` bits. The sum is real; the imaginary residue is
/// checked against `2^(-prec/2) c` and folded into the error bound.
pub fn kloosterman_float(a: i64, b: i64, c: i64, prec: u32) -> BigReal {
    let z = kloosterman_exact(a, b, c).evaluate(prec);
    let im = z.imag().to_f64().abs();
    let bound = 2f64.powi(-(prec as i32) / 2) * c as f64;
    assert!(im < bound, "K({a},{b};{c}) has imaginary part {im:e}");
    let err = im + (c as f64) * 2f64.powi(-(prec as i32) + 4);
    BigReal::new(z.real().clone(), err)
}

pub fn kloosterman_float_complex(a: i64, b: i64, c: i64, prec: u32) -> Complex {
    kloosterman_exact(a, b, c).evaluate(prec)
}

/// Direct float evaluation of the defining sum, one exponential per term,
/// with the Dedekind sum taken from the `O(c)` definition. Used as oracle.
pub fn kloosterman_direct_oracle(a: i64, b: i64, c: i64, prec: u32) -> Complex {
    let wp = prec + 16;
    let mut re = Float::with_val(wp, 0);
    let mut im = Float::with_val(wp, 0);
    for d in 0..c {
        if gcd(d, c) != 1 {
            continue;
        }
        let dbar = modinv(d, c).unwrap();
        let s = dedekind_sum_direct(d, c);
        // pi s + 2 pi (dbar a + d b)/c
        let phase = Float::with_val(wp, &s) / 2u32 + Float::with_val(wp, dbar * a + d * b) / c;
        let angle = phase * pi(wp) * 2u32;
        let (sn, cs) = angle.sin_cos(Float::new(wp));
        re += cs;
        im += sn;
    }
    Complex::with_val(prec, (re, im))
}

/// `sqrt(c/3) sum_{l mod 2c, (3l^2+l)/2 ≡ b (c)} (-1)^l cos((6l+1) pi / 6c)`.
pub fn selberg_rhs(b: i64, c: i64, prec: u32) -> BigReal {
    let wp = prec + 16;
    let mut acc = Float::with_val(wp, 0);
    let pi_w = pi(wp);
    for l in 0..2 * c {
        let pent = (3 * l * l + l) / 2;
        if (pent - b).rem_euclid(c) != 0 {
            continue;
        }
        let angle = Float::with_val(wp, &pi_w * (6 * l + 1)) / (6 * c);
        let cs = angle.cos();
        if l % 2 == 0 {
            acc += cs;
        } else {
            acc -= cs;
        }
    }
    let scale = (Float::with_val(wp, c) / 3u32).sqrt();
    let v = Float::with_val(prec, acc * scale);
    BigReal::new(v, (c as f64) * 2f64.powi(-(prec as i32) + 4))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dedekind_examples() {
        assert_eq!(dedekind_sum(1, 1).unwrap(), Rational::new());
        assert_eq!(dedekind_sum(1, 3).unwrap(), Rational::from((1, 18)));
        assert_eq!(dedekind_sum(1, 7).unwrap(), Rational::from((5, 14)));
        assert!(matches!(dedekind_sum(2, 4), Err(Error::NotCoprime(2, 4))));
    }

    #[test]
    fn reciprocity_matches_direct_sum() {
        for c in 1..60 {
            for d in -c..2 * c {
                if gcd(d, c) == 1 {
                    assert_eq!(dedekind_sum(d, c).unwrap(), dedekind_sum_direct(d, c), "d={d} c={c}");
                }
            }
        }
    }

    #[test]
    fn kloosterman_examples() {
        let k = kloosterman_exact(0, 0, 1);
        assert_eq!(k.entries, BTreeMap::from([(0, 1)]));
        assert!(kloosterman_float(0, 0, 1, 128).agrees_with(&Float::with_val(128, 1), 1e-30));
        for b in -3..4 {
            let expect = if b % 2 == 0 { 1 } else { -1 };
            assert!(kloosterman_float(0, b, 2, 128).agrees_with(&Float::with_val(128, expect), 1e-30));
        }
        let k = kloosterman_float(0, -1, 3, 128);
        let o = kloosterman_direct_oracle(0, -1, 3, 128);
        assert!(k.agrees_with(o.real(), 1e-25));
        let k = kloosterman_float(0, -1, 6, 128);
        assert!(k.agrees_with(&selberg_rhs(-1, 6, 128).value, 1e-25));
    }
}
