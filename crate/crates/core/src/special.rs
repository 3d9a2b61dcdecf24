//! Bessel, digamma, Whittaker and incomplete-gamma kernels at arbitrary
//! precision, with f64 companions for the quadrature-heavy trace code.

use rug::ops::Pow;
use rug::Float;

use crate::error::{Error, Result};
use crate::num::{euler_gamma, pi, BigReal};

fn guard(prec: u32, x: &Float) -> u32 {
    // cancellation in alternating series costs about x·log2(e) bits
    let xb = x.to_f64().abs() * std::f64::consts::LOG2_E;
    prec + 32 + xb.ceil() as u32
}

fn check_pos(x: &Float) -> Result<()> {
    if *x <= 0 {
        return Err(Error::Precondition(format!("argument must be positive, got {}", x.to_f64())));
    }
    Ok(())
}

/// `sum_k s^k (x/2)^{2k+ν} / (k! Γ(k+ν+1))`, `s = +1` (I) or `−1` (J).
/// Stops once the majorant tail `|t_k| r/(1−r)` drops below `2^{-wp}` times
/// the running magnitude.
fn bessel_series(nu: &Float, x: &Float, sign: i32, prec: u32) -> BigReal {
    let wp = guard(prec, x);
    let nu = Float::with_val(wp, nu);
    let half = Float::with_val(wp, x) / 2u32;
    let h2 = Float::with_val(wp, &half * &half);
    let mut term = Float::with_val(wp, half.clone().pow(&nu)) / Float::with_val(wp, &nu + 1u32).gamma();
    let mut sum = term.clone();
    let mut peak = Float::with_val(wp, term.abs_ref());
    let mut k = 0u64;
    loop {
        k += 1;
        let denom = Float::with_val(wp, &nu + k) * k;
        term = term * &h2 / denom;
        if sign < 0 {
            term = -term;
        }
        sum += &term;
        let at = Float::with_val(53, term.abs_ref());
        if at > peak {
            peak = Float::with_val(wp, &at);
        }
        let r = h2.to_f64() / ((k + 1) as f64 * (nu.to_f64() + (k + 1) as f64));
        if r < 0.5 {
            let tail = at.to_f64() * r / (1.0 - r);
            let scale = sum.to_f64().abs().max(f64::MIN_POSITIVE);
            if tail <= scale * 2f64.powi(-(prec as i32) - 8) || tail == 0.0 {
                let round = peak.to_f64() * 2f64.powi(-(wp as i32) + 8);
                return BigReal::new(Float::with_val(prec, &sum), tail + round);
            }
        }
    }
}

/// `I_ν(x)`; closed forms for `ν = 1/2, 3/2`.
pub fn bessel_i(nu: f64, x: &Float, prec: u32) -> Result<BigReal> {
    check_pos(x)?;
    let wp = prec + 32;
    let x = Float::with_val(wp, x);
    if nu == 1.5 || nu == 0.5 {
        let pref = (Float::with_val(wp, 2) / (pi(wp) * &x)).sqrt();
        let (sh, ch) = x.clone().sinh_cosh(Float::new(wp));
        let v = if nu == 0.5 { pref * sh } else { pref * (ch - sh / &x) };
        // the cosh − sinh/x difference loses bits for small x
        let lost = if x < 1 { (-x.to_f64().log2() * 2.0).ceil() as i32 } else { 0 };
        if lost as u32 + prec + 8 > wp {
            return Ok(bessel_series(&Float::with_val(wp, nu), &x, 1, prec));
        }
        let err = v.to_f64().abs() * 2f64.powi(-(wp as i32) + 8 + lost);
        return Ok(BigReal::new(Float::with_val(prec, v), err));
    }
    Ok(bessel_series(&Float::with_val(wp, nu), &x, 1, prec))
}

pub fn bessel_i_series(nu: f64, x: &Float, prec: u32) -> Result<BigReal> {
    check_pos(x)?;
    Ok(bessel_series(&Float::with_val(prec + 32, nu), x, 1, prec))
}

/// `J_ν(x)`; closed form `sqrt(2/πx)(sin x/x − cos x)` for `ν = 3/2`.
pub fn bessel_j(nu: f64, x: &Float, prec: u32) -> Result<BigReal> {
    check_pos(x)?;
    if nu == 1.5 && *x >= 1 {
        let wp = prec + 32;
        let x = Float::with_val(wp, x);
        let pref = (Float::with_val(wp, 2) / (pi(wp) * &x)).sqrt();
        let (s, c) = x.clone().sin_cos(Float::new(wp));
        let v = pref * (s / &x - c);
        return Ok(BigReal::new(Float::with_val(prec, v), 2f64.powi(-(prec as i32) - 4)));
    }
    Ok(bessel_series(&Float::with_val(prec + 32, nu), x, -1, prec))
}

pub fn bessel_j_series_real_order(nu: &Float, x: &Float, prec: u32) -> Result<BigReal> {
    check_pos(x)?;
    Ok(bessel_series(nu, x, -1, prec))
}

/// `ψ(k + 1/2) = −γ − 2 ln 2 + sum_{j=1}^{k} 2/(2j−1)`.
pub fn digamma_half(k: u64, prec: u32) -> Float {
    let wp = prec + 16;
    let mut v = -euler_gamma(wp) - Float::with_val(wp, 2).ln() * 2u32;
    for j in 1..=k {
        v += Float::with_val(wp, 2) / (2 * j - 1);
    }
    Float::with_val(prec, v)
}

/// `∂_ν J_ν(x)` at `ν = 3/2`:
/// `ln(x/2) J_{3/2}(x) − sum_k (−1)^k ψ(k+5/2) (x/2)^{3/2+2k} / (k! Γ(k+5/2))`.
pub fn dj_dorder_at_3half(x: &Float, prec: u32) -> Result<BigReal> {
    check_pos(x)?;
    let wp = guard(prec, x);
    let half = Float::with_val(wp, x) / 2u32;
    let h2 = Float::with_val(wp, &half * &half);
    let mut term = Float::with_val(wp, half.clone().pow(1.5f64)) / Float::with_val(wp, 2.5f64).gamma();
    let mut psi = digamma_half(2, wp);
    let mut sum = Float::with_val(wp, &term * &psi);
    let mut k = 0u64;
    let tail;
    loop {
        k += 1;
        term = -(term * &h2) / (Float::with_val(wp, 1.5f64 + k as f64) * k);
        // ψ(k + 5/2) = ψ(k + 3/2) + 1/(k + 3/2)
        psi += Float::with_val(wp, 2) / (2 * k + 3);
        let t = Float::with_val(wp, &term * &psi);
        sum += &t;
        let r = h2.to_f64() / ((k + 1) as f64 * (k as f64 + 2.5));
        if r < 0.5 {
            let tl = t.to_f64().abs() * r / (1.0 - r) * 1.5;
            if tl <= sum.to_f64().abs() * 2f64.powi(-(prec as i32) - 8) || tl == 0.0 {
                tail = tl;
                break;
            }
        }
    }
    let j = bessel_j(1.5, x, wp)?;
    let v = Float::with_val(wp, half.ln()) * &j.value - sum;
    Ok(BigReal::new(Float::with_val(prec, v), tail + j.err * 4.0 + 2f64.powi(-(prec as i32) - 4)))
}

/// `M_{s,0}(y) = 2^{2s−1} Γ(s+1/2) sqrt(y) I_{s−1/2}(y/2)`.
pub fn whittaker_m_s0(s: f64, y: &Float, prec: u32) -> Result<BigReal> {
    check_pos(y)?;
    if s <= 0.5 {
        return Err(Error::Precondition(format!("need s > 1/2, got {s}")));
    }
    let wp = prec + 16;
    let half = Float::with_val(wp, y) / 2u32;
    let i = bessel_i(s - 0.5, &half, wp)?;
    let pref = Float::with_val(wp, 2).pow(2.0 * s - 1.0)
        * Float::with_val(wp, s + 0.5).gamma()
        * Float::with_val(wp, y).sqrt();
    let err = i.err * pref.to_f64();
    Ok(BigReal::new(Float::with_val(prec, pref * i.value), err))
}

/// `β(y) = Γ(−3/2, πy/6) / Γ(−3/2)`, `Γ(−3/2) = 4 sqrt(π)/3`, via
/// `Γ(a,x) = (Γ(a+1,x) − x^a e^{−x})/a` from `Γ(1/2,x) = sqrt(π) erfc(sqrt x)`.
///
/// At `y = 0` the normalized value 1 is returned (the analytic continuation
/// `Γ(a,0) = Γ(a)`); the integral itself diverges as `y → 0+`.
pub fn beta_incomplete(y: &Float, prec: u32) -> Result<BigReal> {
    if *y < 0 {
        return Err(Error::Precondition("β(y) needs y ≥ 0".into()));
    }
    if y.is_zero() {
        return Ok(BigReal::exact(Float::with_val(prec, 1)));
    }
    let wp = prec + 32;
    let x = Float::with_val(wp, y) * pi(wp) / 6u32;
    let sqrt_pi = pi(wp).sqrt();
    let ex = Float::with_val(wp, -&x).exp();
    let g_half = Float::with_val(wp, x.clone().sqrt().erfc()) * &sqrt_pi;
    let g_mhalf = (g_half - Float::with_val(wp, x.clone().pow(-0.5f64)) * &ex) * (-2i32);
    let g_m3half = (g_mhalf - Float::with_val(wp, x.clone().pow(-1.5f64)) * &ex) * Float::with_val(wp, -2) / 3u32;
    let v = g_m3half * 3u32 / (sqrt_pi * 4u32);
    let err = v.to_f64().abs() * 2f64.powi(-(prec as i32) - 8);
    Ok(BigReal::new(Float::with_val(prec, v), err))
}

/// f64 kernels.
pub mod fast {
    use statrs::function::gamma::{gamma, ln_gamma};

    /// `I_ν(x)` for real `ν ≥ 0`, `x > 0`: ascending series for `x ≤ 30`,
    /// Hankel asymptotics beyond.
    pub fn bessel_i(nu: f64, x: f64) -> f64 {
        if x <= 30.0 {
            let h = x / 2.0;
            let mut term = (nu * h.ln() - ln_gamma(nu + 1.0)).exp();
            let mut sum = term;
            let h2 = h * h;
            let mut k = 0.0;
            loop {
                k += 1.0;
                term *= h2 / (k * (nu + k));
                sum += term;
                if term < sum * 1e-17 {
                    return sum;
                }
            }
        }
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        x.exp() / (2.0 * std::f64::consts::PI * x).sqrt() * sum
    }

    /// `e^{-x} I_ν(x)`, usable for large `x`.
    pub fn bessel_i_scaled(nu: f64, x: f64) -> f64 {
        if x <= 30.0 {
            return bessel_i(nu, x) * (-x).exp();
        }
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
            sum += term;
            if term.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum / (2.0 * std::f64::consts::PI * x).sqrt()
    }

    /// `2(cosh z − sinh z / z)`-type kernel used at `s = 2`, stable at small z:
    /// returns `cosh z − sinh z / z`.
    pub fn cosh_minus_sinhc(z: f64) -> f64 {
        if z.abs() < 0.5 {
            // sum_{k≥1} z^{2k} · 2k/(2k+1)!
            let z2 = z * z;
            let mut p = 1.0;
            let mut fact = 1.0;
            let mut sum = 0.0;
            for k in 1..12 {
                p *= z2;
                let kk = 2 * k;
                fact *= (kk * (kk + 1)) as f64;
                sum += p * kk as f64 / fact;
            }
            sum
        } else {
            z.cosh() - z.sinh() / z
        }
    }

    /// `∂_ν J_ν(x)` at `ν = 3/2` by the ascending series, for `0 < x ≤ 8`.
    pub fn dj_dorder_at_3half(x: f64) -> f64 {
        debug_assert!(x > 0.0 && x <= 8.0);
        let h = x / 2.0;
        let lh = h.ln();
        let h2 = h * h;
        // ψ(5/2) = 8/3 − γ − 2 ln 2
        let mut psi = 8.0 / 3.0 - 0.577_215_664_901_532_9 - 2.0 * std::f64::consts::LN_2;
        let mut term = h.powf(1.5) / gamma(2.5);
        let mut sum = term * (lh - psi);
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -h2 / (k * (k + 1.5));
            psi += 1.0 / (k + 1.5);
            let t = term * (lh - psi);
            sum += t;
            if t.abs() < 1e-18 * sum.abs().max(1e-300) && k > 2.0 {
                return sum;
            }
        }
    }

    /// `Γ` for positive reals.
    pub fn gamma_f(x: f64) -> f64 {
        gamma(x)
    }
}
