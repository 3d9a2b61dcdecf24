use std::f64::consts::PI;

use proptest::prelude::*;
use rug::{Complex, Float, Rational};

use etatrace::forms::{chi_definitional, chi_explicit, lift_to_q1, mobius_f64, QuadForm};
use etatrace::gauss_weyl::{gauss_sum_bruteforce, gauss_sum_closed};
use etatrace::kloosterman::{dedekind_sum, dedekind_sum_direct, kloosterman_float_complex};
use etatrace::maass::{p_poincare_raw, reduce_gamma_star, PoincareSpec};
use etatrace::ntcore::{factor, gcd, kronecker, modinv, solve_quadratic_congruence};
use etatrace::qseries::eta;

fn legendre_euler(a: i64, p: i64) -> i32 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    let mut r: i128 = 1;
    let mut b = a as i128;
    let mut e = (p - 1) / 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p as i128;
        }
        b = b * b % p as i128;
        e >>= 1;
    }
    if r == 1 {
        1
    } else {
        -1
    }
}

fn saw(x: i64, c: i64) -> f64 {
    let r = x.rem_euclid(c);
    if r == 0 {
        0.0
    } else {
        r as f64 / c as f64 - 0.5
    }
}

/// Eta-multiplier Kloosterman sum straight from its definition, in doubles.
fn kloosterman_oracle(a: i64, b: i64, c: i64) -> (f64, f64) {
    let (mut re, mut im) = (0.0, 0.0);
    for d in 0..c {
        if gcd(d, c) != 1 {
            continue;
        }
        let dbar = (0..c).find(|x| (x * d) % c == 1 % c).unwrap();
        let s: f64 = (1..c).map(|r| saw(r, c) * saw(d * r, c)).sum();
        let ph = PI * s + 2.0 * PI * ((dbar * a + d * b).rem_euclid(c)) as f64 / c as f64;
        re += ph.cos();
        im += ph.sin();
    }
    (re, im)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kronecker_matches_euler_criterion(a in -500i64..500, pi in 1usize..25) {
        let primes = [3i64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];
        let p = primes[pi - 1];
        prop_assert_eq!(kronecker(a, p), legendre_euler(a, p));
    }

    #[test]
    fn kronecker_multiplicative(a in -300i64..300, b in -300i64..300, n in 1i64..400) {
        prop_assert_eq!(kronecker(a * b, n), kronecker(a, n) * kronecker(b, n));
        prop_assert_eq!(kronecker(a, n * 3), kronecker(a, n) * kronecker(a, 3));
    }

    #[test]
    fn quadratic_congruence_matches_bruteforce(d in -2000i64..2000, m in 1u64..1500) {
        let mut got = solve_quadratic_congruence(d, m);
        got.sort_unstable();
        let want: Vec<u64> = (0..m).filter(|&x| ((x * x) as i64 - d).rem_euclid(m as i64) == 0).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn factorization_multiplies_back(n in 1u64..10_000_000) {
        let f = factor(n);
        let prod: u64 = f.factors.iter().map(|&(p, k)| p.pow(k)).product();
        prop_assert_eq!(prod, n);
    }

    #[test]
    fn modinv_inverts(a in -10_000i64..10_000, m in 2i64..5000) {
        match modinv(a, m) {
            Some(x) => prop_assert_eq!((a as i128 * x as i128).rem_euclid(m as i128), 1),
            None => prop_assert!(gcd(a, m) != 1),
        }
    }

    #[test]
    fn dedekind_reciprocity(c in 1i64..3000, d in 1i64..3000) {
        prop_assume!(gcd(c, d) == 1);
        let lhs = dedekind_sum(d, c).unwrap() + dedekind_sum(c, d).unwrap();
        let rhs = (Rational::from((d, c)) + Rational::from((c, d)) + Rational::from((1, c * d))) / 12u32
            - Rational::from((1, 4));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn dedekind_fast_matches_definition(c in 1i64..400, d in -400i64..400) {
        prop_assume!(gcd(c, d) == 1);
        prop_assert_eq!(dedekind_sum(d, c).unwrap(), dedekind_sum_direct(d, c));
    }

    #[test]
    fn kloosterman_matches_definition(a in -40i64..40, b in -40i64..40, c in 1i64..60) {
        let k = kloosterman_float_complex(a, b, c, 128);
        let (re, im) = kloosterman_oracle(a, b, c);
        prop_assert!((k.real().to_f64() - re).abs() < 1e-9);
        prop_assert!((k.imag().to_f64() - im).abs() < 1e-9);
    }

    #[test]
    fn kloosterman_symmetric(a in -60i64..60, b in -60i64..60, c in 1i64..120) {
        let k1 = kloosterman_float_complex(a, b, c, 128);
        let k2 = kloosterman_float_complex(b, a, c, 128);
        let d = Complex::with_val(128, &k1 - &k2);
        prop_assert!(Float::with_val(128, d.abs_ref()).to_f64() < 1e-30);
    }

    #[test]
    fn gauss_closed_matches_direct(c in 1i64..150, a in 0i64..150, b in 0i64..150) {
        let (a, b) = (a % c, b % c);
        let x = gauss_sum_closed(a, b, c, 128);
        let y = gauss_sum_bruteforce(a, b, c, 128);
        let d = Complex::with_val(128, &x - &y);
        prop_assert!(Float::with_val(128, d.abs_ref()).to_f64() < 1e-25);
    }

    #[test]
    fn form_action_preserves_discriminant(a in -30i64..30, b in -30i64..30, c in -30i64..30,
                                          p in -5i128..5, q in -5i128..5) {
        prop_assume!(gcd(p as i64, q as i64) == 1);
        let form = QuadForm::new(a, b, c);
        // complete (p, q) to a matrix of determinant 1
        let (mut r, mut s) = (0i128, 0i128);
        'outer: for x in -10i128..=10 {
            for y in -10i128..=10 {
                if p * y - q * x == 1 {
                    r = x;
                    s = y;
                    break 'outer;
                }
            }
        }
        prop_assume!(p * s - q * r == 1);
        let g = [[p, r], [q, s]];
        prop_assert_eq!(form.act(&g).disc(), form.disc());
    }

    #[test]
    fn reduction_is_a_group_action(x in -3.0f64..3.0, y in 0.02f64..2.0) {
        let (red, (x2, y2)) = reduce_gamma_star(x, y);
        let (x3, y3) = mobius_f64(&red.mat, (x, y));
        prop_assert!(y2 >= y * (1.0 - 1e-12));
        prop_assert!((x3 - x2).abs() < 1e-8 && (y3 - y2).abs() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn genus_character_routes_agree(idx in 0usize..12, mi in 0usize..4) {
        let discs = [-23i64, -47, -71, -95, -119, -143, -167, 73, 97, 145, 193, 217];
        let ms = [1i64, -23, 73, 97];
        let d = discs[idx];
        let m = ms[mi];
        prop_assume!(d % m == 0 && ((d / m) - 1).rem_euclid(24) == 0);
        for c in lift_to_q1(d).unwrap() {
            prop_assert_eq!(chi_explicit(m, &c.form).unwrap(), chi_definitional(m, &c.form).unwrap());
        }
    }

    #[test]
    fn poincare_invariant_under_gamma0_6(k in 0usize..4, x in -0.5f64..0.5, y in 0.9f64..1.5) {
        // generators of Γ₀(6) beyond translations
        let gens: [[[i128; 2]; 2]; 4] = [[[1, 0], [6, 1]], [[5, 1], [24, 5]], [[7, -1], [-6, 1]], [[1, 1], [0, 1]]];
        let g = gens[k];
        let spec = PoincareSpec { v: 1, s: 2.5, height_cap: 120, damping: None };
        let a = p_poincare_raw(&spec, (x, y)).unwrap();
        let b = p_poincare_raw(&spec, mobius_f64(&g, (x, y))).unwrap();
        let tol = a.err + b.err + 1e-6 * a.re.abs().max(1.0);
        prop_assert!((a.re - b.re).abs() < tol, "{} vs {} (tol {})", a.re, b.re, tol);
        prop_assert!((a.im - b.im).abs() < tol, "{} vs {} (tol {})", a.im, b.im, tol);
    }
}

#[test]
fn eta_times_inverse_is_one() {
    let e = eta(1, 200);
    let inv = e.inv().unwrap();
    let one = e.mul(&inv);
    assert_eq!(one.offset, 0);
    assert_eq!(one.coeffs[0], 1);
    assert!(one.coeffs[1..].iter().all(|c| *c == 0));
}
