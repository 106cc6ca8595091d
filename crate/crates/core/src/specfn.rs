//! Principal-branch Lambert W, the normalized cubic `(γ + a)² a = σ²`, and a
//! safeguarded inverter for monotone scalar equations.

use crate::error::{Error, Result};
use crate::math::sqrt;

const MAX_HALLEY: usize = 64;

/// Principal branch `W(x)` on `[0, ∞)`: the `w ≥ 0` with `w e^w = x`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::InvalidInput("lambert_w of NaN".into()));
    }
    if x < 0.0 {
        return Err(Error::NegativeArgument(x));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if x > 1e300 {
        return Ok(w_of_log(libm::log(x)));
    }
    let mut w = seed(x);
    for _ in 0..MAX_HALLEY {
        let ew = libm::exp(w);
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs() {
            break;
        }
    }
    let ew = libm::exp(w);
    w -= (w * ew - x) / (ew * (w + 1.0));
    Ok(w.max(0.0))
}

/// `W(e^L)` without forming `e^L`, so the argument may lie far beyond the `f64` range.
pub fn lambert_w_of_exp(log_x: f64) -> Result<f64> {
    if log_x.is_nan() {
        return Err(Error::InvalidInput("lambert_w_of_exp of NaN".into()));
    }
    if log_x <= 1.0 {
        return lambert_w(libm::exp(log_x));
    }
    Ok(w_of_log(log_x))
}

/// Newton on `w + ln w = L` for `L > 1`.
fn w_of_log(l: f64) -> f64 {
    if l == f64::INFINITY {
        return l;
    }
    let mut w = l - libm::log(l) + libm::log(l) / l;
    for _ in 0..MAX_HALLEY {
        let step = (w + libm::log(w) - l) * w / (w + 1.0);
        w -= step;
        if step.abs() <= 2.0 * f64::EPSILON * w {
            break;
        }
    }
    w
}

fn seed(x: f64) -> f64 {
    if x < 0.25 {
        // Taylor series about the origin
        x * (1.0 + x * (-1.0 + x * (1.5 + x * (-8.0 / 3.0 + x * 125.0 / 24.0))))
    } else if x > 3.0 {
        let l1 = libm::log(x);
        let l2 = libm::log(l1);
        l1 - l2 + l2 / l1
    } else {
        let l = libm::log1p(x);
        l * (1.0 - libm::log1p(l) / (2.0 + l))
    }
}

fn cubic(gamma: f64, a: f64) -> f64 {
    let g = gamma + a;
    g * g * a
}

fn cubic_slope(gamma: f64, a: f64) -> f64 {
    (gamma + a) * (gamma + 3.0 * a)
}

fn check_cubic_input(gamma: f64, sigma2: f64) -> Result<()> {
    if !(gamma.is_finite() && sigma2.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "cubic coefficients must be finite, got gamma = {gamma}, sigma2 = {sigma2}"
        )));
    }
    if sigma2 < 0.0 {
        return Err(Error::NoNonnegativeRoot { gamma, sigma2 });
    }
    Ok(())
}

/// Root of `(γ + a)² a = σ²` on the branch where `γ + a ≥ 0`.
///
/// This is the root produced by the closed form
/// `a = (C − 2γ)² / (6C)`, `C = (8γ³ + 108σ² + 12√(12γ³σ² + 81σ⁴))^{1/3}`,
/// with principal branches. It is the largest real root and the only one for which
/// `f' = α(1 + κ²η)(γ + a)` is nonnegative.
pub fn direction_matched_cubic_root(gamma: f64, sigma2: f64) -> Result<f64> {
    check_cubic_input(gamma, sigma2)?;
    if sigma2 == 0.0 {
        return Ok((-gamma).max(0.0));
    }
    let lo = (-gamma).max(0.0);
    let hi = lo + libm::cbrt(sigma2);
    let disc = 12.0 * gamma * gamma * gamma * sigma2 + 81.0 * sigma2 * sigma2;
    let mut a = f64::NAN;
    if disc >= 0.0 {
        let c = libm::cbrt(8.0 * gamma * gamma * gamma + 108.0 * sigma2 + 12.0 * sqrt(disc));
        let num = c - 2.0 * gamma;
        if c != 0.0 && num.abs() > 1e-6 * (2.0 * gamma).abs() {
            a = num * num / (6.0 * c);
        }
    }
    if !(a.is_finite() && a >= lo && a <= hi) {
        a = bracketed_cubic(gamma, sigma2, lo, hi)?;
    }
    Ok(polish(gamma, sigma2, a, lo, hi))
}

/// Smallest nonnegative root of `(γ + a)² a = σ²`.
///
/// Coincides with [`direction_matched_cubic_root`] except when `γ < 0` and
/// `σ² < −4γ³/27`, where three nonnegative roots exist and this returns the one
/// below the local maximum at `a = −γ/3`.
pub fn smallest_positive_cubic_root(gamma: f64, sigma2: f64) -> Result<f64> {
    check_cubic_input(gamma, sigma2)?;
    if sigma2 == 0.0 {
        return Ok(0.0);
    }
    if gamma < 0.0 {
        let peak = -gamma / 3.0;
        if cubic(gamma, peak) >= sigma2 {
            let a = bracketed_cubic(gamma, sigma2, 0.0, peak)?;
            return Ok(polish(gamma, sigma2, a, 0.0, peak));
        }
    }
    direction_matched_cubic_root(gamma, sigma2)
}

fn bracketed_cubic(gamma: f64, sigma2: f64, lo: f64, hi: f64) -> Result<f64> {
    invert_monotone_with_derivative(|a| (cubic(gamma, a), cubic_slope(gamma, a)), sigma2, lo, hi)
}

fn polish(gamma: f64, sigma2: f64, a: f64, lo: f64, hi: f64) -> f64 {
    let slope = cubic_slope(gamma, a);
    if slope == 0.0 {
        return a;
    }
    let next = a - (cubic(gamma, a) - sigma2) / slope;
    if next >= lo
        && next <= hi
        && (cubic(gamma, next) - sigma2).abs() <= (cubic(gamma, a) - sigma2).abs()
    {
        next
    } else {
        a
    }
}

const MAX_INVERT_STEPS: usize = 2200;

/// Solves `g(x) = target` for `x ∈ [lo, hi]`, `g` strictly monotone there.
pub fn invert_monotone<G: FnMut(f64) -> f64>(
    mut g: G,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    solve(|x| (g(x), f64::NAN), target, lo, hi)
}

/// As [`invert_monotone`], with `g` also returning its derivative for Newton steps.
pub fn invert_monotone_with_derivative<G: FnMut(f64) -> (f64, f64)>(
    g: G,
    target: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    solve(g, target, lo, hi)
}

fn solve<G: FnMut(f64) -> (f64, f64)>(mut g: G, target: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo <= hi && lo.is_finite() && hi.is_finite() && target.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "invalid bracket [{lo}, {hi}] for target {target}"
        )));
    }
    let (g_lo, _) = g(lo);
    let (g_hi, _) = g(hi);
    let r_lo = g_lo - target;
    let r_hi = g_hi - target;
    if r_lo == 0.0 {
        return Ok(lo);
    }
    if r_hi == 0.0 {
        return Ok(hi);
    }
    if !(r_lo.is_finite() && r_hi.is_finite()) || (r_lo > 0.0) == (r_hi > 0.0) {
        return Err(Error::BracketFailure {
            lo,
            hi,
            g_lo,
            g_hi,
            target,
        });
    }
    let increasing = r_hi > 0.0;
    let (mut a, mut b) = (lo, hi);
    let mut x = 0.5 * (a + b);
    let mut best = (
        if r_lo.abs() < r_hi.abs() { lo } else { hi },
        r_lo.abs().min(r_hi.abs()),
    );
    let mut newton: Option<f64> = None;
    let scale = target.abs();
    for _ in 0..MAX_INVERT_STEPS {
        if let Some(n) = newton.take() {
            x = n;
        }
        let (gx, dg) = g(x);
        let r = gx - target;
        if r.abs() < best.1 {
            best = (x, r.abs());
        }
        if r == 0.0 || r.abs() <= 2.0 * f64::EPSILON * scale {
            return Ok(x);
        }
        if (r > 0.0) == increasing {
            b = x;
        } else {
            a = x;
        }
        if b - a <= 2.0 * f64::EPSILON * a.abs().max(b.abs()) || b - a <= f64::MIN_POSITIVE {
            return Ok(best.0);
        }
        if dg.is_finite() && dg != 0.0 && r.is_finite() {
            let n = x - r / dg;
            if n > a && n < b {
                newton = Some(n);
                continue;
            }
        }
        x = 0.5 * (a + b);
    }
    Ok(best.0)
}
