//! Exact integer primitives: gcd, inverses, CRT, factorization, Kronecker
//! symbol, Möbius function, square roots modulo prime powers and Pell's
//! equation `t^2 - d u^2 = 4`.

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a as i64
}

/// Extended Euclid: returns `(g, x, y)` with `a x + b y = g >= 0`.
pub fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut r0, mut r1) = (a as i128, b as i128);
    let (mut s0, mut s1) = (1i128, 0i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (r0, s0, t0) = (-r0, -s0, -t0);
    }
    (r0 as i64, s0 as i64, t0 as i64)
}

/// Inverse of `a` modulo `m` in `[0, m)`, or `None` when `(a, m) > 1`.
/// For `m = 1` every integer is invertible and the result is 0.
pub fn modinv(a: i64, m: i64) -> Option<i64> {
    assert!(m >= 1, "modulus must be positive");
    if m == 1 {
        return Some(0);
    }
    let (g, x, _) = egcd(a.rem_euclid(m), m);
    if g != 1 {
        return None;
    }
    Some(x.rem_euclid(m))
}

/// Combine `x ≡ r1 (m1)` and `x ≡ r2 (m2)` for arbitrary (not necessarily
/// coprime) moduli. Returns the solution modulo `lcm(m1, m2)`.
pub fn crt(r1: i64, m1: i64, r2: i64, m2: i64) -> Option<(i64, i64)> {
    let g = gcd(m1, m2);
    if (r2 - r1).rem_euclid(g) != 0 {
        return None;
    }
    let l = (m1 / g) as i128 * m2 as i128;
    let (_, p, _) = egcd(m1 / g, m2 / g);
    let k = ((r2 - r1) / g) as i128 * p as i128 % (m2 / g) as i128;
    let x = (r1 as i128 + m1 as i128 * k).rem_euclid(l);
    Some((x as i64, l as i64))
}

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin for all 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factorization {
    pub value: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    pub fn prime_powers(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, k)| p.pow(k))
    }
}

/// Trial division, with a primality test to stop early on a large cofactor.
pub fn factor(n: u64) -> Factorization {
    assert!(n >= 1, "factor expects a positive integer");
    let mut factors = Vec::new();
    let mut m = n;
    let mut p = 2u64;
    while p * p <= m {
        if m % p == 0 {
            let mut k = 0;
            while m % p == 0 {
                m /= p;
                k += 1;
            }
            factors.push((p, k));
        }
        if m > 1 && p > 100 && is_prime(m) {
            break;
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if m > 1 {
        factors.push((m, 1));
    }
    Factorization { value: n, factors }
}

pub fn moebius(n: u64) -> i64 {
    let f = factor(n);
    if f.factors.iter().any(|&(_, k)| k > 1) {
        0
    } else if f.factors.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn is_squarefree(n: i64) -> bool {
    n != 0 && moebius(n.unsigned_abs()) != 0
}

pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, k) in factor(n).factors {
        let cur = ds.clone();
        let mut pk = 1;
        for _ in 0..k {
            pk *= p;
            ds.extend(cur.iter().map(|d| d * pk));
        }
    }
    ds.sort_unstable();
    ds
}

pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

pub fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = isqrt(n as u64);
        r * r == n as u64
    }
}

/// Jacobi symbol `(a/n)` for odd positive `n`.
fn jacobi(a: i64, n: i64) -> i32 {
    debug_assert!(n > 0 && n % 2 == 1);
    let mut a = a.rem_euclid(n);
    let mut n = n;
    let mut r = 1;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                r = -r;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            r = -r;
        }
        a %= n;
    }
    if n == 1 {
        r
    } else {
        0
    }
}

/// Kronecker symbol `(a/n)` with the classical extension to `n = 0`,
/// negative `n` (`(a/-1) = sgn a`) and even `n` (`(a/2)` via `a mod 8`).
pub fn kronecker(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let mut r = 1;
    let mut n = n;
    if n < 0 {
        n = -n;
        if a < 0 {
            r = -r;
        }
    }
    let tz = n.trailing_zeros();
    if tz > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if tz % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            r = -r;
        }
        n >>= tz;
    }
    r * jacobi(a, n)
}

/// A square root of a unit `a` modulo an odd prime `p` (Tonelli–Shanks).
fn tonelli_shanks(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if p == 2 || a == 0 {
        return Some(a);
    }
    if powmod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(powmod(a, (p + 1) / 4, p));
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while powmod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut tt = t;
        while tt != 1 {
            tt = mulmod(tt, tt, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    Some(r)
}

/// Square roots of a unit modulo `p^k`.
fn unit_sqrt_prime_power(u: u64, p: u64, k: u32) -> Vec<u64> {
    let pk = p.pow(k);
    if p == 2 {
        // 2-adic case analysis: lift the full solution set bit by bit.
        let mut sols: Vec<u64> = if u % 2 == 1 { vec![1] } else { vec![] };
        let mut modulus = 2u64;
        for _ in 1..k {
            let next = modulus * 2;
            let mut lifted = Vec::new();
            for &x in &sols {
                for y in [x, x + modulus] {
                    if mulmod(y, y, next) == u % next {
                        lifted.push(y);
                    }
                }
            }
            sols = lifted;
            modulus = next;
        }
        sols.sort_unstable();
        sols.dedup();
        return sols;
    }
    let Some(mut x) = tonelli_shanks(u % p, p) else {
        return vec![];
    };
    // Hensel lifting: x <- x - (x^2 - u) / (2x)
    let mut modulus = p;
    for _ in 1..k {
        modulus *= p;
        let fx = (mulmod(x, x, modulus) as i128 - (u % modulus) as i128).rem_euclid(modulus as i128) as i64;
        let inv = modinv((2 * x) as i64, modulus as i64).expect("2x is a unit");
        x = ((x as i128 - fx as i128 * inv as i128).rem_euclid(modulus as i128)) as u64;
    }
    let mut v = vec![x % pk, (pk - x % pk) % pk];
    v.sort_unstable();
    v.dedup();
    v
}

/// All `x mod p^k` with `x^2 ≡ a (mod p^k)`.
pub fn sqrt_mod_prime_power(a: i64, p: u64, k: u32) -> Vec<u64> {
    assert!(k >= 1 && is_prime(p), "need a prime power");
    let pk = p.pow(k);
    let a = a.rem_euclid(pk as i64) as u64;
    if a == 0 {
        let step = p.pow(k.div_ceil(2));
        return (0..pk / step).map(|j| j * step).collect();
    }
    let mut e = 0;
    let mut u = a;
    while u % p == 0 {
        u /= p;
        e += 1;
    }
    if e % 2 == 1 {
        return vec![];
    }
    let half = p.pow(e / 2);
    let inner = unit_sqrt_prime_power(u, p, k - e);
    // x = p^{e/2} y with y determined mod p^{k-e}; y runs mod p^{k-e/2}
    let ymod = p.pow(k - e);
    let lifts = p.pow(e / 2);
    let mut out = Vec::with_capacity(inner.len() * lifts as usize);
    for y0 in inner {
        for t in 0..lifts {
            out.push(((y0 + t * ymod) * half) % pk);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// All `b mod M` with `b^2 ≡ D (mod M)`, sorted, assembled by CRT.
pub fn solve_quadratic_congruence(d: i64, m: u64) -> Vec<u64> {
    assert!(m >= 1);
    solve_quadratic_congruence_factored(d, &factor(m))
}

pub fn solve_quadratic_congruence_factored(d: i64, f: &Factorization) -> Vec<u64> {
    let mut sols: Vec<(u64, u64)> = vec![(0, 1)];
    for &(p, k) in &f.factors {
        let local = sqrt_mod_prime_power(d, p, k);
        if local.is_empty() {
            return vec![];
        }
        let pk = p.pow(k);
        let mut next = Vec::with_capacity(sols.len() * local.len());
        for &(r, m) in &sols {
            for &x in &local {
                let (y, l) = crt(r as i64, m as i64, x as i64, pk as i64).expect("coprime moduli");
                next.push((y as u64, l as u64));
            }
        }
        sols = next;
    }
    let mut out: Vec<u64> = sols.into_iter().map(|(r, _)| r).collect();
    out.sort_unstable();
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PellSolution {
    pub d: u64,
    pub t: Integer,
    pub u: Integer,
}

/// Minimal positive `(t, u)` with `t^2 - d u^2 = 4`.
///
/// A minimal solution has `gcd(t, u)` equal to 1 or 2. In the second case
/// `(t/2, u/2)` solves the norm-one equation and is a convergent of `sqrt(d)`;
/// in the first case `t/u` is a convergent once `d > 16`. Small `d` are
/// settled by a direct scan.
pub fn pell_fundamental(d: u64) -> Result<PellSolution> {
    if d == 0 || is_square(d as i64) {
        return Err(Error::SquareDiscriminant(d as i64));
    }
    if d <= 16 {
        for u in 1u64.. {
            let t2 = 4 + d * u * u;
            if is_square(t2 as i64) {
                return Ok(PellSolution { d, t: Integer::from(isqrt(t2)), u: Integer::from(u) });
            }
        }
    }
    let a0 = isqrt(d);
    let (mut m, mut den, mut a) = (Integer::from(0), Integer::from(1), Integer::from(a0));
    let (mut p_prev, mut p) = (Integer::from(1), Integer::from(a0));
    let (mut q_prev, mut q) = (Integer::from(0), Integer::from(1));
    let dd = Integer::from(d);
    let mut best: Option<(Integer, Integer)> = None;
    loop {
        let norm = Integer::from(&p * &p) - Integer::from(&dd * &q) * &q;
        if norm == 4 {
            let cand = (p.clone(), q.clone());
            if best.as_ref().is_none_or(|(_, bu)| cand.1 < *bu) {
                best = Some(cand);
            }
        }
        if norm == 1 {
            let cand = (Integer::from(&p * 2), Integer::from(&q * 2));
            if best.as_ref().is_none_or(|(_, bu)| cand.1 < *bu) {
                best = Some(cand);
            }
        }
        if let Some((_, bu)) = &best {
            if q > *bu {
                break;
            }
        }
        m = Integer::from(&den * &a) - m;
        den = (dd.clone() - Integer::from(&m * &m)) / den;
        a = (Integer::from(a0) + &m) / &den;
        let pn = Integer::from(&a * &p) + &p_prev;
        let qn = Integer::from(&a * &q) + &q_prev;
        p_prev = std::mem::replace(&mut p, pn);
        q_prev = std::mem::replace(&mut q, qn);
    }
    let (t, u) = best.expect("Pell equation always has a solution");
    Ok(PellSolution { d, t, u })
}
