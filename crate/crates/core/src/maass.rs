//! The weight 0 Maass forms `P_v(τ)`, `P_v(τ,s)` and their damped versions,
//! evaluated from q-expansions (via the raising operator) and directly as
//! Poincaré series over cosets; CM traces and cycle-integral traces.

use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Complex, Float};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{automorph, chi_m, cm_point, lift_to_q1, mat_mul, Mat, QuadForm, IDENTITY};
use crate::ntcore::{gcd, is_square, isqrt, is_squarefree, modinv};
use crate::num::{decimal, pi};
use crate::qseries::fv_cached;
use crate::special::fast;

/// Coefficient majorant `|a_v(k)| ≤ 10 sqrt(v) e^{4π sqrt(vk)}` for `k ≥ 1`.
pub fn fv_majorant_ln(v: u32, k: u64) -> f64 {
    (10.0 * (v as f64).sqrt()).ln() + 4.0 * std::f64::consts::PI * ((v as u64 * k) as f64).sqrt()
}

/// Panics if a computed coefficient of `F_v` exceeds the majorant.
pub fn check_fv_majorant(v: u32, len: usize) {
    let f = fv_cached(v, len);
    for (i, a) in f.coeffs.iter().enumerate() {
        let k = i as i64 - v as i64;
        if k < 1 || *a == 0 {
            continue;
        }
        let ln_a = Float::with_val(64, a.clone().abs()).ln().to_f64();
        assert!(ln_a <= fv_majorant_ln(v, k as u64), "F_{v} coefficient at q^{k} exceeds the tail majorant");
    }
}

fn check_sv(v: u32) -> Result<()> {
    if v == 0 || gcd(v as i64, 6) != 1 {
        return Err(Error::Precondition(format!("v must be positive and coprime to 6, got {v}")));
    }
    Ok(())
}

/// `μ(d)` for `d | 6`.
fn mu6(d: i64) -> f64 {
    match d {
        1 | 6 => 1.0,
        _ => -1.0,
    }
}

/// Normalized cusp `r/s`: coprime, `s ≥ 0`, infinity is `(1, 0)`.
pub fn cusp(r: i128, s: i128) -> (i64, i64) {
    let g = {
        let (mut a, mut b) = (r.abs(), s.abs());
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    };
    let (mut r, mut s) = (r / g, s / g);
    if s < 0 || (s == 0 && r < 0) {
        r = -r;
        s = -s;
    }
    (r as i64, s as i64)
}

pub fn cusp_apply(m: &Mat, (r, s): (i64, i64)) -> (i64, i64) {
    let (r, s) = (r as i128, s as i128);
    cusp(m[0][0] * r + m[0][1] * s, m[1][0] * r + m[1][1] * s)
}

/// Matrix in `Γ_0(6) W_d`, `d = 6/(s,6)`, sending `r/s` to infinity.
pub fn cusp_matrix(r: i64, s: i64) -> (Mat, i64) {
    if s == 0 {
        return (IDENTITY, 1);
    }
    let d = 6 / gcd(s, 6);
    let alpha = if s == 1 { 0 } else { (-modinv((d * r).rem_euclid(s), s).expect("coprime")).rem_euclid(s) };
    let (d, r, s, alpha) = (d as i128, r as i128, s as i128, alpha as i128);
    let b = (-d * alpha * r - 1) / s;
    debug_assert_eq!((-d * alpha * r - 1) % s, 0);
    ([[d * alpha, b], [d * s, -d * r]], d as i64)
}

fn mobius(m: &Mat, (x, y): (f64, f64)) -> (f64, f64) {
    crate::forms::mobius_f64(m, (x, y))
}

/// An element `M` of the group generated by `Γ_0(6)` and the Atkin–Lehner
/// involutions, with `P_v(τ) = sign · P_v(Mτ)`, moving `τ` to maximal height
/// with `Re` in `[−1/2, 1/2)`.
#[derive(Clone, Copy, Debug)]
pub struct Reduction {
    pub mat: Mat,
    pub sign: f64,
}

/// `SL_2(Z)` reduction: `γ` with `γτ` in the standard fundamental domain.
fn reduce_sl2(x: f64, y: f64) -> Mat {
    let mut g = IDENTITY;
    let (mut x, mut y) = (x, y);
    for _ in 0..10_000 {
        let k = (x + 0.5).floor();
        if k != 0.0 {
            g = mat_mul(&[[1, -(k as i128)], [0, 1]], &g);
            x -= k;
        }
        let r2 = x * x + y * y;
        if r2 >= 1.0 - 1e-14 {
            break;
        }
        g = mat_mul(&[[0, -1], [1, 0]], &g);
        (x, y) = (-x / r2, y / r2);
    }
    g
}

/// `y / |sτ − r|²`, with `y` for the cusp at infinity.
fn lattice_height(r: i64, s: i64, (x, y): (f64, f64)) -> f64 {
    if s == 0 {
        return y;
    }
    let dx = s as f64 * x - r as f64;
    y / (dx * dx + (s as f64 * y).powi(2))
}

pub fn reduce_gamma_star(x: f64, y: f64) -> (Reduction, (f64, f64)) {
    // Heights y/(d|sτ−r|²) are SL_2-invariant in the pair (τ, r/s) up to the
    // factor d, so only cusps close to ∞ in the SL_2 frame compete.
    let g = reduce_sl2(x, y);
    let gi = crate::forms::mat_inv(&g);
    let (xf, yf) = mobius(&g, (x, y));
    let mut best = (0.0, (1i64, 0i64));
    for sp in 0..=3i64 {
        let c0 = (sp as f64 * xf).round() as i64;
        for rp in c0 - 3..=c0 + 3 {
            if (sp == 0 && rp != 1) || gcd(rp, sp) != 1 {
                continue;
            }
            let (r, s) = cusp_apply(&gi, (rp, sp));
            let d = if s == 0 { 1 } else { 6 / gcd(s, 6) };
            let h = lattice_height(rp, sp, (xf, yf)) / d as f64;
            if h > best.0 * (1.0 + 1e-12) {
                best = (h, (r, s));
            }
        }
    }
    let (m, d) = cusp_matrix(best.1 .0, best.1 .1);
    // evaluate from the well-conditioned SL_2 frame
    let (mut x2, y2) = mobius(&mat_mul(&m, &gi), (xf, yf));
    let k = (x2 + 0.5).floor();
    let mat = mat_mul(&[[1, -(k as i128)], [0, 1]], &m);
    x2 -= k;
    (Reduction { mat, sign: mu6(d) }, (x2, y2))
}

/// `P_v(τ) = −(1/v) sum_k a_v(k) (k + 1/(2πy)) q^k` at `prec` bits.
#[derive(Clone, Debug)]
pub struct QexpValue {
    pub value: Complex,
    pub err: f64,
    pub terms: usize,
}

pub fn p_v_from_qexp(v: u32, tau: &Complex, prec: u32, terms: Option<usize>) -> Result<QexpValue> {
    check_sv(v)?;
    if *tau.imag() <= 0 {
        return Err(Error::NonPositiveImaginaryPart);
    }
    let wp = prec + 32;
    let y = tau.imag().to_f64();
    let two_pi_y = 2.0 * std::f64::consts::PI * y;
    // terms needed for the majorant tail to fall below 2^{-prec} e^{2πvy}
    let ln_tail = |k: u64| fv_majorant_ln(v, k) + ((k as f64) + 1.0 / two_pi_y).ln() - two_pi_y * k as f64;
    let target = -(prec as f64) * std::f64::consts::LN_2 + two_pi_y * v as f64 - 40.0;
    let auto = {
        let mut k = 1u64;
        while ln_tail(k) > target || (k as f64) < 2.0 * fv_majorant_ln(v, k) / two_pi_y {
            k += 1;
        }
        k as usize
    };
    let kmax = terms.unwrap_or(auto);
    let len = kmax + v as usize + 1;
    let f = fv_cached(v, len);
    let two_pi = pi(wp) * 2u32;
    let q = Complex::with_val(wp, tau * Complex::with_val(wp, (0, &two_pi))).exp();
    let inv_2piy = Float::with_val(wp, 1) / Float::with_val(wp, &two_pi * tau.imag());
    let mut qk = Complex::with_val(wp, q.clone().pow(-(v as i32)));
    let mut acc = Complex::with_val(wp, 0);
    let mut mag = 0f64;
    for (i, a) in f.coeffs.iter().enumerate().take(len) {
        let k = i as i64 - v as i64;
        if *a != 0 {
            let w = Float::with_val(wp, &inv_2piy + k) * a;
            let t = Complex::with_val(wp, &qk * &w);
            mag = mag.max(Complex::with_val(53, t.abs_ref()).real().to_f64());
            acc += t;
        }
        qk *= &q;
    }
    let value = Complex::with_val(prec, -acc / v);
    let mut tail = 0.0;
    for k in kmax as u64 + 1.. {
        let t = ln_tail(k).exp();
        tail += t;
        if t < tail * 1e-6 || t == 0.0 {
            break;
        }
    }
    let err = tail * 2.0 / v as f64 + mag * 2f64.powi(-(wp as i32) + 8);
    Ok(QexpValue { value, err, terms: kmax })
}

/// `P_v(τ)` from the q-expansion after moving `τ` up by [`reduce_gamma_star`].
pub fn p_v_reduced(v: u32, tau: &Complex, prec: u32) -> Result<QexpValue> {
    if *tau.imag() <= 0 {
        return Err(Error::NonPositiveImaginaryPart);
    }
    let (red, _) = reduce_gamma_star(tau.real().to_f64(), tau.imag().to_f64());
    let wp = prec + 32;
    let m = red.mat;
    let num = Complex::with_val(wp, tau * Float::with_val(wp, m[0][0])) + Float::with_val(wp, m[0][1]);
    let den = Complex::with_val(wp, tau * Float::with_val(wp, m[1][0])) + Float::with_val(wp, m[1][1]);
    let t2 = Complex::with_val(wp, num / den);
    let mut r = p_v_from_qexp(v, &t2, prec, None)?;
    if red.sign < 0.0 {
        r.value = -r.value;
    }
    Ok(r)
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincareSpec {
    pub v: u32,
    pub s: f64,
    /// Largest cusp denominator, and half-width of the numerator window.
    pub height_cap: u64,
    /// Cusps whose terms are deleted (the roots of a square-discriminant form).
    pub damping: Option<[(i64, i64); 2]>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PoincareValue {
    pub re: f64,
    pub im: f64,
    /// `|P(C) − P(C/2)|/3`, the remainder of a `C^{−2}` tail, plus a rounding
    /// bound.
    pub err: f64,
    pub terms: u64,
    pub removed: u32,
    /// Partial sums `(re, im)` over the boxes of size `C`, `C/2`, `C/4`.
    pub nested: [(f64, f64); 3],
}

/// Kernel `C(s)/Γ(2s) · M_{s,0}(4πvY)` as a function of `Y`, with the
/// `Γ`-factors folded: `C(s) sqrt(π)/Γ(s) · sqrt(4πvY) I_{s−1/2}(2πvY)`.
struct Kernel {
    v: f64,
    s: f64,
    pref: f64,
}

impl Kernel {
    fn new(v: u32, s: f64) -> Self {
        let c = 2f64.powf(s) / std::f64::consts::PI * fast::gamma_f((s + 1.0) / 2.0).powi(2);
        let pref = c * std::f64::consts::PI.sqrt() / fast::gamma_f(s);
        Kernel { v: v as f64, s, pref }
    }

    fn eval(&self, yy: f64) -> f64 {
        let z = 2.0 * std::f64::consts::PI * self.v * yy;
        if self.s == 2.0 {
            return 2.0 * fast::cosh_minus_sinhc(z);
        }
        self.pref * (2.0 * z).sqrt() * fast::bessel_i(self.s - 0.5, z)
    }
}

#[derive(Clone, Copy, Default)]
struct Acc {
    sums: [(f64, f64); 3],
    terms: u64,
    removed: u32,
    /// Rounding bound: `|k| ε` times the conditioning of the kernel argument
    /// `z` and of the phase.
    rnd: f64,
}

impl Acc {
    fn add(&mut self, k: f64, z: f64, phase: f64, level: usize) {
        let (sn, cs) = phase.sin_cos();
        for lv in 0..=level {
            self.sums[lv].0 += k * cs;
            self.sums[lv].1 -= k * sn;
        }
        self.terms += 1;
        self.rnd += k.abs() * f64::EPSILON * (4.0 + z + phase.abs());
    }

    fn merge(&mut self, o: &Acc) {
        for lv in 0..3 {
            self.sums[lv].0 += o.sums[lv].0;
            self.sums[lv].1 += o.sums[lv].1;
        }
        self.terms += o.terms;
        self.removed += o.removed;
        self.rnd += o.rnd;
    }
}

/// `P_v(τ,s)` (or `P_{v,Q}(τ,s)` when damped) by direct coset summation at
/// `τ = x + iy`, without reduction. Cosets are indexed by the cusp `r/s`
/// they send to infinity; `(r,s)` with `s ≤ C` and `|r − ⌊sx⌋| ≤ C` are kept.
pub fn p_poincare_raw(spec: &PoincareSpec, (x, y): (f64, f64)) -> Result<PoincareValue> {
    if spec.s <= 1.0 {
        return Err(Error::ConvergenceRegion(spec.s));
    }
    if y <= 0.0 {
        return Err(Error::NonPositiveImaginaryPart);
    }
    let kern = Kernel::new(spec.v, spec.s);
    let excluded: Vec<(i64, i64)> = spec.damping.map(|d| d.to_vec()).unwrap_or_default();
    let cap = spec.height_cap as i64;
    let caps = [cap, cap / 2, cap / 4];
    let level = |s: i64, dr: i64| (0..3).rev().find(|&l| s <= caps[l] && dr <= caps[l]).unwrap_or(0);
    let v = spec.v as f64;
    let tau2 = std::f64::consts::TAU;
    let mut acc = Acc::default();
    if excluded.contains(&(1, 0)) {
        acc.removed += 1;
    } else {
        acc.add(kern.eval(y), tau2 * v * y, tau2 * v * x, 2);
    }
    let rows: Vec<Acc> = (1..=cap)
        .into_par_iter()
        .map(|s| {
            let d = 6 / gcd(s, 6);
            let mu = mu6(d);
            let sf = s as f64;
            let dinv = if s == 1 { 0 } else { modinv(d.rem_euclid(s), s).unwrap() };
            let r0 = (sf * x).floor() as i64;
            let mut a = Acc::default();
            for r in r0 - cap..=r0 + cap {
                if gcd(r, s) != 1 {
                    continue;
                }
                if excluded.contains(&(r, s)) {
                    a.removed += 1;
                    continue;
                }
                let dx = sf * x - r as f64;
                let w2 = dx * dx + sf * sf * y * y;
                let yy = y / (d as f64 * w2);
                // α = −(dr)^{-1} mod s
                let alpha = if s == 1 {
                    0
                } else {
                    let rinv = modinv(r.rem_euclid(s), s).unwrap();
                    (-((dinv as i128 * rinv as i128) % s as i128)).rem_euclid(s as i128) as i64
                };
                let xx = alpha as f64 / sf - dx / (d as f64 * sf * w2);
                a.add(mu * kern.eval(yy), tau2 * v * yy, tau2 * v * xx, level(s, (r - r0).abs()));
            }
            a
        })
        .collect();
    for r in &rows {
        acc.merge(r);
    }
    let [(re, im), (re_h, im_h), _] = acc.sums;
    let diff = ((re - re_h).powi(2) + (im - im_h).powi(2)).sqrt();
    let err = diff / 3.0 + acc.rnd;
    Ok(PoincareValue { re, im, err, terms: acc.terms, removed: acc.removed, nested: acc.sums })
}

/// `P_v(τ,s)` by coset summation after moving `τ` up by [`reduce_gamma_star`];
/// damping cusps are carried along.
pub fn p_poincare(spec: &PoincareSpec, (x, y): (f64, f64)) -> Result<PoincareValue> {
    if spec.s <= 1.0 {
        return Err(Error::ConvergenceRegion(spec.s));
    }
    if y <= 0.0 {
        return Err(Error::NonPositiveImaginaryPart);
    }
    let (red, pt) = reduce_gamma_star(x, y);
    let damping = spec.damping.map(|[a, b]| [cusp_apply(&red.mat, a), cusp_apply(&red.mat, b)]);
    let mut out = p_poincare_raw(&PoincareSpec { damping, ..spec.clone() }, pt)?;
    out.re *= red.sign;
    out.im *= red.sign;
    for p in out.nested.iter_mut() {
        p.0 *= red.sign;
        p.1 *= red.sign;
    }
    Ok(out)
}

/// Doubles `height_cap` from the given start until the error estimate drops
/// below `tol` or the cap reaches `cap_max`.
pub fn p_poincare_adaptive(spec: &PoincareSpec, tau: (f64, f64), tol: f64, cap_max: u64) -> Result<(PoincareValue, u64)> {
    let mut sp = spec.clone();
    loop {
        let r = p_poincare(&sp, tau)?;
        if r.err < tol || sp.height_cap * 2 > cap_max {
            return Ok((r, sp.height_cap));
        }
        sp.height_cap *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TraceMode {
    Cm,
    CycleS2Square,
    CycleDeriv,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRequest {
    pub v: u32,
    pub m: i64,
    pub n: i64,
    pub mode: TraceMode,
    pub prec: u32,
    /// Coset cap for the Poincaré evaluations.
    pub height_cap: u64,
    /// Step in the arclength variable `u = ln tan(θ/2)`.
    pub quad_step: f64,
    /// Half-length of the `u` window for cusp-to-cusp geodesics.
    pub quad_window: f64,
    /// Step in `s` for the derivative mode.
    pub ds: f64,
}

impl TraceRequest {
    pub fn new(v: u32, m: i64, n: i64, mode: TraceMode) -> Self {
        TraceRequest { v, m, n, mode, prec: 128, height_cap: 240, quad_step: 0.05, quad_window: 20.0, ds: 1e-3 }
    }

    pub fn validate(&self) -> Result<()> {
        check_sv(self.v)?;
        if self.m.rem_euclid(24) != 1 || self.n.rem_euclid(24) != 1 || !is_squarefree(self.m) {
            return Err(Error::Precondition(format!(
                "need m ≡ n ≡ 1 (24) and m squarefree, got ({}, {})",
                self.m, self.n
            )));
        }
        if self.prec < 64 || self.quad_step <= 0.0 || self.ds <= 0.0 {
            return Err(Error::Precondition("precision ≥ 64 and positive steps required".into()));
        }
        let mn = self.m as i128 * self.n as i128;
        let ok = match self.mode {
            TraceMode::Cm => mn < 0,
            TraceMode::CycleS2Square => mn > 0 && is_square(mn as i64),
            TraceMode::CycleDeriv => mn > 0 && !is_square(mn as i64),
        };
        if !ok {
            return Err(Error::Precondition(format!("mode {:?} does not fit mn = {mn}", self.mode)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassTerm {
    pub form: QuadForm,
    pub chi: i32,
    pub re: f64,
    pub im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceResult {
    pub request: TraceRequest,
    pub value: String,
    pub value_f64: f64,
    pub imag_residue: f64,
    pub err: f64,
    pub classes: Vec<ClassTerm>,
    pub parametrization: String,
}

/// `|mn|^{−1/2} sum_Q χ_m(Q) P_v(τ_Q)` over `Γ\Q^{(1)}_{mn}`, `mn < 0`.
pub fn trace_cm(req: &TraceRequest) -> Result<TraceResult> {
    let mut req = req.clone();
    req.mode = TraceMode::Cm;
    req.validate()?;
    let p = req.prec;
    let wp = p + 32;
    let mn = req.m * req.n;
    let reps = lift_to_q1(mn)?;
    check_fv_majorant(req.v, 200);
    let vals: Vec<Result<(QuadForm, i32, Complex, f64)>> = reps
        .par_iter()
        .map(|c| {
            let chi = chi_m(req.m, &c.form)?;
            let tau = cm_point(&c.form, wp)?;
            let r = p_v_reduced(req.v, &tau, wp)?;
            Ok((c.form, chi, r.value, r.err))
        })
        .collect();
    let mut acc = Complex::with_val(wp, 0);
    let mut err = 0.0;
    let mut classes = Vec::new();
    for r in vals {
        let (form, chi, val, e) = r?;
        classes.push(ClassTerm { form, chi, re: val.real().to_f64(), im: val.imag().to_f64() });
        if chi != 0 {
            acc += Complex::with_val(wp, &val * chi);
            err += e;
        }
    }
    let scale = Float::with_val(wp, -mn).sqrt();
    let value = Float::with_val(p, acc.real() / &scale);
    let imag = Float::with_val(53, acc.imag() / &scale).to_f64().abs();
    let err = err / scale.to_f64();
    Ok(TraceResult {
        value: decimal(&value, 30),
        value_f64: value.to_f64(),
        imag_residue: imag,
        err,
        classes,
        parametrization: "CM points, q-expansion after reduction".into(),
        request: req,
    })
}

/// Point at arclength `u` on `S_Q` (`a ≠ 0`), measured from the top of the
/// semicircle in the direction of its orientation (`θ = 2 atan e^u`).
fn geodesic_point(q: &QuadForm, u: f64) -> (f64, f64) {
    let sq = (q.disc() as f64).sqrt();
    let a = q.a as f64;
    (-(q.b as f64) / (2.0 * a) - sq / (2.0 * a) * u.tanh(), sq / (2.0 * a.abs()) / u.cosh())
}

/// Hyperbolic length of one period of the automorph: `2 arccosh(t/2)`.
fn automorph_period(q: &QuadForm) -> f64 {
    let g = automorph(q);
    let t = Float::with_val(256, rug::Integer::from(&g[0][0] + &g[1][1])).abs();
    let half = t / 2u32;
    Float::with_val(256, half.acosh_ref()).to_f64() * 2.0
}

fn square_roots_as_cusps(q: &QuadForm) -> [(i64, i64); 2] {
    let f = isqrt(q.disc() as u64) as i128;
    let (a, b, c) = (q.a as i128, q.b as i128, q.c as i128);
    if a == 0 {
        // bx + c = 0 and infinity
        [(1, 0), cusp(-c, b)]
    } else {
        [cusp(-b + f, 2 * a), cusp(-b - f, 2 * a)]
    }
}

/// Cycle integral over the full cusp-to-cusp geodesic for the three nested
/// coset boxes, plus the finest value with twice the `u`-step.
struct CuspCycle {
    levels: [f64; 3],
    coarse: f64,
}

/// `∫_{S_Q} P_{v,Q}(τ,s) dτ/Q(τ,1)` by the trapezoid rule in `u`.
fn square_cycle_integral(q: &QuadForm, v: u32, s: f64, req: &TraceRequest) -> Result<CuspCycle> {
    let damping = Some(square_roots_as_cusps(q));
    let sq = (q.disc() as f64).sqrt();
    let h = req.quad_step;
    let nn = (req.quad_window / h).round() as i64;
    let spec = PoincareSpec { v, s, height_cap: req.height_cap, damping };
    let pts: Vec<i64> = (-nn..=nn).collect();
    let vals: Vec<Result<[(f64, f64); 3]>> = pts
        .par_iter()
        .map(|&i| {
            let u = i as f64 * h;
            let (x, y) = if q.a == 0 { (-(q.c as f64) / q.b as f64, u.exp()) } else { geodesic_point(q, u) };
            Ok(p_poincare(&spec, (x, y))?.nested)
        })
        .collect();
    // dτ/Q(τ,1) = du/sqrt(n) on a semicircle, sgn(b) du/sqrt(n) on a vertical line
    let w = if q.a == 0 { q.b.signum() as f64 } else { 1.0 } * h / sq;
    let mut levels = [0.0; 3];
    let mut coarse = 0.0;
    for (i, r) in pts.iter().zip(vals) {
        let nested = r?;
        for l in 0..3 {
            levels[l] += nested[l].0 * w;
        }
        if i.rem_euclid(2) == 0 {
            coarse += nested[0].0 * 2.0 * w;
        }
    }
    Ok(CuspCycle { levels, coarse })
}

/// `sum_Q χ_m(Q) ∫_{S_Q} P_{v,Q}(τ,2) dτ/Q(τ,1)`, `mn` a positive square.
///
/// The truncated integrals converge like `1/C` in the coset cap, so the
/// value is the extrapolation `2T(C) − T(C/2)`; the error is its distance to
/// `2T(C/2) − T(C/4)` plus the change against twice the `u`-step.
pub fn trace_cycle_square_s2(req: &TraceRequest) -> Result<TraceResult> {
    let mut req = req.clone();
    req.mode = TraceMode::CycleS2Square;
    req.validate()?;
    let reps = lift_to_q1(req.m * req.n)?;
    let mut t = [0.0; 3];
    let mut coarse = 0.0;
    let mut classes = Vec::new();
    let mut vertical = false;
    for c in &reps {
        let chi = chi_m(req.m, &c.form)?;
        vertical |= c.form.a == 0;
        if chi == 0 {
            classes.push(ClassTerm { form: c.form, chi, re: 0.0, im: 0.0 });
            continue;
        }
        let cyc = square_cycle_integral(&c.form, req.v, 2.0, &req)?;
        let ext = 2.0 * cyc.levels[0] - cyc.levels[1];
        classes.push(ClassTerm { form: c.form, chi, re: ext, im: 0.0 });
        for l in 0..3 {
            t[l] += chi as f64 * cyc.levels[l];
        }
        coarse += chi as f64 * cyc.coarse;
    }
    let total = 2.0 * t[0] - t[1];
    let prev = 2.0 * t[1] - t[2];
    let err = (total - prev).abs() + (t[0] - coarse).abs();
    let param = if vertical { "semicircles and vertical lines in u = ln tan(θ/2)" } else { "semicircles in u = ln tan(θ/2)" };
    Ok(TraceResult {
        value: format!("{total:.12}"),
        value_f64: total,
        imag_residue: 0.0,
        err,
        classes,
        parametrization: param.into(),
        request: req,
    })
}

/// `∫_{C_Q} P_v(τ,s) dτ/Q(τ,1)` over one period of the automorph, by the
/// (periodic) trapezoid rule in `u`.
fn closed_cycle_integral(q: &QuadForm, v: u32, s: f64, req: &TraceRequest, u0: f64) -> Result<f64> {
    let period = automorph_period(q);
    let npts = ((period / req.quad_step).ceil() as usize).max(8);
    let h = period / npts as f64;
    let spec = PoincareSpec { v, s, height_cap: req.height_cap, damping: None };
    // centre the window on u0 so the points stay well inside the semicircle
    let start = u0 - period / 2.0;
    let vals: Vec<Result<f64>> = (0..npts)
        .into_par_iter()
        .map(|i| Ok(p_poincare(&spec, geodesic_point(q, start + i as f64 * h))?.re))
        .collect();
    let mut acc = 0.0;
    for r in vals {
        acc += r?;
    }
    Ok(acc * h / (q.disc() as f64).sqrt())
}

/// `(1/2π) sum_Q χ_m(Q) ∫_{C_Q} ∂_s P_v(τ,s)|_{s=2} dτ/Q(τ,1)` for `mn > 0`
/// not a square; central differences at `ds` and `ds/2` combined by
/// Richardson extrapolation.
pub fn trace_cycle_deriv(req: &TraceRequest) -> Result<TraceResult> {
    trace_cycle_deriv_at(req, 0.0)
}

/// As [`trace_cycle_deriv`], starting each cycle at arclength `u0` from the
/// top of the semicircle.
pub fn trace_cycle_deriv_at(req: &TraceRequest, u0: f64) -> Result<TraceResult> {
    let mut req = req.clone();
    req.mode = TraceMode::CycleDeriv;
    req.validate()?;
    let reps = lift_to_q1(req.m * req.n)?;
    let h = req.ds;
    let mut classes = Vec::new();
    let mut total = 0.0;
    let mut spread = 0.0;
    for c in &reps {
        let chi = chi_m(req.m, &c.form)?;
        if chi == 0 {
            classes.push(ClassTerm { form: c.form, chi, re: 0.0, im: 0.0 });
            continue;
        }
        let f = |s: f64, r: &TraceRequest| closed_cycle_integral(&c.form, req.v, s, r, u0);
        let d1 = (f(2.0 + h, &req)? - f(2.0 - h, &req)?) / (2.0 * h);
        let d2 = (f(2.0 + h / 2.0, &req)? - f(2.0 - h / 2.0, &req)?) / h;
        let d = (4.0 * d2 - d1) / 3.0;
        // truncation in the coset box: compare with half the cap
        let mut coarse = req.clone();
        coarse.height_cap = (req.height_cap / 2).max(1);
        let dc = (f(2.0 + h / 2.0, &coarse)? - f(2.0 - h / 2.0, &coarse)?) / h;
        classes.push(ClassTerm { form: c.form, chi, re: d, im: 0.0 });
        total += chi as f64 * d;
        spread += (d2 - d1).abs() + (d2 - dc).abs();
    }
    let value = total / (2.0 * std::f64::consts::PI);
    Ok(TraceResult {
        value: format!("{value:.12}"),
        value_f64: value,
        imag_residue: 0.0,
        err: spread / (2.0 * std::f64::consts::PI),
        classes,
        parametrization: "one automorph period in u = ln tan(θ/2)".into(),
        request: req,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reduction_raises_height() {
        for (x, y) in [(0.1, 0.01), (0.37, 0.05), (-0.2, 0.3), (0.5, 2.0)] {
            let (red, (x2, y2)) = reduce_gamma_star(x, y);
            assert!(y2 >= y * (1.0 - 1e-12));
            let (x3, y3) = mobius(&red.mat, (x, y));
            assert!((x3 - x2).abs() < 1e-9 && (y3 - y2).abs() < 1e-9);
            assert!((-0.5..0.5).contains(&x2));
        }
    }

    #[test]
    fn cusp_matrix_sends_cusp_to_infinity() {
        for (r, s) in [(0, 1), (1, 2), (1, 3), (5, 6), (-7, 12), (3, 10)] {
            let (m, d) = cusp_matrix(r, s);
            assert_eq!(m[0][0] * m[1][1] - m[0][1] * m[1][0], d as i128);
            assert_eq!(m[1][0] % 6, 0);
            assert_eq!(cusp_apply(&m, (r, s)), (1, 0));
        }
    }

    #[test]
    fn qexp_truncation_stable() {
        let p = 128;
        let tau = Complex::with_val(p, (Float::with_val(p, -1) / 12u32, Float::with_val(p, 23).sqrt() / 12u32));
        let a = p_v_from_qexp(1, &tau, p, None).unwrap();
        let b = p_v_from_qexp(1, &tau, p, Some(2 * a.terms)).unwrap();
        let d = Complex::with_val(p, &a.value - &b.value).abs().real().to_f64();
        assert!(d < 1e-10, "{d}");
        assert!(matches!(p_v_from_qexp(1, &Complex::with_val(p, (0, -1)), p, None), Err(Error::NonPositiveImaginaryPart)));
    }

    #[test]
    fn poincare_matches_qexp_at_i() {
        let spec = PoincareSpec { v: 1, s: 2.0, height_cap: 60, damping: None };
        let a = p_poincare(&spec, (0.0, 1.0)).unwrap();
        let b = p_poincare(&PoincareSpec { height_cap: 120, ..spec.clone() }, (0.0, 1.0)).unwrap();
        assert!((a.re - b.re).abs() < 1e-4);
        let q = p_v_from_qexp(1, &Complex::with_val(128, (0, 1)), 128, None).unwrap();
        assert!((b.re - q.value.real().to_f64()).abs() < 1e-4, "{} vs {}", b.re, q.value.real());
        assert!(matches!(p_poincare(&PoincareSpec { s: 1.0, ..spec }, (0.0, 1.0)), Err(Error::ConvergenceRegion(_))));
    }

    #[test]
    fn vertical_cycle_matches_equivalent_semicircle() {
        let q0 = QuadForm::new(0, 1, 0);
        let q1 = q0.act(&[[1, 0], [6, 1]]);
        assert!(q1.a != 0);
        let mut req = TraceRequest::new(1, 1, 1, TraceMode::CycleS2Square);
        req.height_cap = 60;
        req.quad_step = 0.1;
        let ext = |q: &QuadForm| {
            let c = square_cycle_integral(q, 1, 2.0, &req).unwrap();
            2.0 * c.levels[0] - c.levels[1]
        };
        let (a, b) = (ext(&q0), ext(&q1));
        assert!((a - b).abs() < 0.05, "{a} vs {b}");
    }

    #[test]
    fn automorph_moves_along_geodesic() {
        let q = QuadForm::new(6, 1, -3);
        let g = automorph(&q);
        let m: Mat = [
            [g[0][0].to_i128().unwrap(), g[0][1].to_i128().unwrap()],
            [g[1][0].to_i128().unwrap(), g[1][1].to_i128().unwrap()],
        ];
        let l = automorph_period(&q);
        let (x, y) = geodesic_point(&q, -l / 2.0);
        let (x2, y2) = mobius(&m, (x, y));
        let (x3, y3) = geodesic_point(&q, l / 2.0);
        let rel = ((x2 - x3).powi(2) + (y2 - y3).powi(2)).sqrt() / y3;
        assert!(rel < 1e-6, "{rel}");
    }

    #[test]
    fn damping_removes_two_terms() {
        let q = QuadForm::new(6, 1, 0);
        let cusps = square_roots_as_cusps(&q);
        let spec = PoincareSpec { v: 1, s: 2.0, height_cap: 40, damping: None };
        let a = p_poincare_raw(&spec, (0.1, 0.8)).unwrap();
        let b = p_poincare_raw(&PoincareSpec { damping: Some(cusps), ..spec }, (0.1, 0.8)).unwrap();
        assert_eq!(b.removed, 2);
        assert_eq!(a.terms, b.terms + 2);
    }

    #[test]
    fn cm_trace_minus_23() {
        let r = trace_cm(&TraceRequest::new(1, 1, -23, TraceMode::Cm)).unwrap();
        assert!((r.value_f64 - 23f64.sqrt()).abs() < 1e-9, "{}", r.value);
        assert!(r.imag_residue < 1e-8);
    }
}
