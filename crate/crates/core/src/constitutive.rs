//! Inversion of the constitutive relations: `E` and `H` from the prescribed `D` and `B`.
//!
//! The forward relations are
//! `D = f'(s)(E + κ²(E·B)B)` and `H = f'(s)(B − κ²(E·B)E)` with
//! `s = ½(E² − B²) + ½κ²(E·B)²`. Writing `a = E²`, `b = (E·B)²` the inversion
//! reduces to `b = ηa` and one scalar equation
//! `f'(s)² (a + κ²b) = (D² + κ²|B×D|²) / (1 + κ²B²)`, after which
//! `E = (D − κ²(B·D)B/(1 + κ²B²)) / f'`.
//! Closed forms are used for the classical, logarithmic, exponential and
//! quadratic models; everything else goes through a bracketed root solve.

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::models::{ModelKind, ModelParams};
use crate::sources::ChargeConfig;
use crate::specfn::{
    direction_matched_cubic_root, invert_monotone_with_derivative, lambert_w_of_exp,
};
use crate::vector::{Point3, Vec3};

/// Smallest `|f'|` accepted where the inversion divides by `f'`.
pub const F_PRIME_GUARD: f64 = 1e-8;

/// `s = ½(E² − B²) + ½κ²(E·B)²`.
pub fn lorentz_scalar(kappa: f64, e: Vec3, b: Vec3) -> f64 {
    let eb = e.dot(b);
    0.5 * (e.norm2() - b.norm2()) + 0.5 * kappa * kappa * eb * eb
}

/// `(D, H, s)` from `(E, B)`.
pub fn forward(params: &ModelParams, e: Vec3, b: Vec3) -> Result<(Vec3, Vec3, f64)> {
    let k2 = params.kappa() * params.kappa();
    let s = lorentz_scalar(params.kappa(), e, b);
    let fp = params.f_prime(s)?;
    let eb = e.dot(b);
    Ok(((e + b * (k2 * eb)) * fp, (b - e * (k2 * eb)) * fp, s))
}

/// The four fields and the invariant `s` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldState {
    pub e: Vec3,
    pub b: Vec3,
    pub d: Vec3,
    pub h: Vec3,
    pub s: f64,
}

impl FieldState {
    /// Inverts at `(d, b)` and records the state, with `s` taken from the inversion.
    pub fn from_prescribed(params: &ModelParams, d: Vec3, b: Vec3) -> Result<(Self, AuxScalars)> {
        let (e, h, aux) = dyonic_eh(params, d, b)?;
        Ok((
            Self {
                e,
                b,
                d,
                h,
                s: aux.s,
            },
            aux,
        ))
    }

    /// State produced by the point charges of `cfg` at `x`.
    pub fn at(cfg: &ChargeConfig, params: &ModelParams, x: Point3) -> Result<Self> {
        let d = cfg.displacement_field(x)?;
        let b = cfg.magnetic_field(x)?;
        let (e, h, aux) = dyonic_eh_with_cross(params, d, b, cfg.b_cross_d(x)?)?;
        Ok(Self {
            e,
            b,
            d,
            h,
            s: aux.s,
        })
    }

    pub fn zero() -> Self {
        Self {
            e: Vec3::ZERO,
            b: Vec3::ZERO,
            d: Vec3::ZERO,
            h: Vec3::ZERO,
            s: 0.0,
        }
    }

    /// Recomputes `s` from `E`, `B` and checks it against the stored value and the model domain.
    pub fn check(&self, params: &ModelParams, tol: f64) -> Result<()> {
        let s = lorentz_scalar(params.kappa(), self.e, self.b);
        let scale = self.e.norm2().max(self.b.norm2()).max(1.0);
        if (s - self.s).abs() > tol * scale {
            return Err(Error::InvalidInput(alloc::format!(
                "stored s = {} differs from recomputed s = {s}",
                self.s
            )));
        }
        params.check_domain(s)
    }
}

/// Intermediate scalars of an inversion.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AuxScalars {
    /// `E²`.
    pub a: f64,
    /// `(E·B)²`.
    pub b: f64,
    pub eta: f64,
    pub s: f64,
    pub f_prime: f64,
    /// Lambert W value of the exponential model.
    pub w: Option<f64>,
    /// `R₁ = √((1 + βB²)(1 + κ²B²))`, classical model.
    pub r1: Option<f64>,
    /// `R₂ = √(1 + βD² + κ²B² + βκ²|B×D|²)`, classical model.
    pub r2: Option<f64>,
    /// `R₁ (1 + κ²B²) R₂`, classical model.
    pub denom: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Prescribed {
    d: Vec3,
    b: Vec3,
    bxd: Vec3,
    d2: f64,
    b2: f64,
    bd: f64,
    bxd2: f64,
    k2: f64,
}

impl Prescribed {
    fn new(kappa: f64, d: Vec3, b: Vec3, bxd: Option<Vec3>) -> Result<Self> {
        if !(d.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput("D and B must be finite".into()));
        }
        let bxd = bxd.unwrap_or_else(|| b.cross(d));
        Ok(Self {
            d,
            b,
            bxd,
            d2: d.norm2(),
            b2: b.norm2(),
            bd: b.dot(d),
            bxd2: bxd.norm2(),
            k2: kappa * kappa,
        })
    }

    fn eta(&self) -> f64 {
        let den = self.d2 + self.k2 * (2.0 + self.k2 * self.b2) * self.bxd2;
        if den == 0.0 {
            0.0
        } else {
            self.bd * self.bd / den
        }
    }

    /// `(D² + κ²|B×D|²) / (1 + κ²B²)`.
    fn target(&self) -> f64 {
        (self.d2 + self.k2 * self.bxd2) / (1.0 + self.k2 * self.b2)
    }

    /// Components of `D` along and across `B`.
    fn split(&self) -> (Vec3, Vec3) {
        if self.b2 == 0.0 {
            return (Vec3::ZERO, self.d);
        }
        (
            self.b * (self.bd / self.b2),
            self.bxd.cross(self.b) / self.b2,
        )
    }
}

/// `E` for a purely electric configuration (`B = 0`).
pub fn electrostatic_e(params: &ModelParams, d: Vec3) -> Result<Vec3> {
    if !d.is_finite() {
        return Err(Error::InvalidInput("D must be finite".into()));
    }
    let d2 = d.norm2();
    if d2 == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let beta = params.beta();
    match params.kind() {
        ModelKind::Classical => Ok(d / sqrt(1.0 + beta * d2)),
        ModelKind::Logarithmic => Ok(d * (2.0 / (1.0 + sqrt(1.0 + 2.0 * beta * d2)))),
        _ if params.is_linear() => Ok(d),
        _ => {
            let (s, _) = {
                let eq = ScalarEquation::new(params, 0.0, d2);
                eq.point(eq.solve()?)
            };
            let fp = params.f_prime(s)?;
            guard(params, fp, s)?;
            Ok(d / fp)
        }
    }
}

/// `H = f'(−B²/2) B` for a purely magnetic configuration (`D = 0`).
pub fn magnetostatic_h(params: &ModelParams, b: Vec3) -> Result<Vec3> {
    if !b.is_finite() {
        return Err(Error::InvalidInput("B must be finite".into()));
    }
    Ok(b * params.f_prime(-0.5 * b.norm2())?)
}

/// `(E, H)` from `(D, B)` using the model's closed form where one exists.
pub fn dyonic_eh(params: &ModelParams, d: Vec3, b: Vec3) -> Result<(Vec3, Vec3, AuxScalars)> {
    dyonic_eh_with_cross(params, d, b, b.cross(d))
}

/// As [`dyonic_eh`] with `B × D` supplied by the caller.
///
/// Near a dyon `D` and `B` are almost parallel and their rounded cross product
/// is noise, which the inversion amplifies by `1/f'`;
/// [`ChargeConfig::b_cross_d`] provides it without that loss.
pub fn dyonic_eh_with_cross(
    params: &ModelParams,
    d: Vec3,
    b: Vec3,
    bxd: Vec3,
) -> Result<(Vec3, Vec3, AuxScalars)> {
    let p = Prescribed::new(params.kappa(), d, b, Some(bxd))?;
    if p.d2 == 0.0 {
        return magnetostatic_branch(params, &p);
    }
    if params.is_linear() && p.k2 == 0.0 {
        let aux = AuxScalars {
            a: p.d2,
            b: p.bd * p.bd,
            eta: p.eta(),
            s: 0.5 * (p.d2 - p.b2),
            f_prime: 1.0,
            ..AuxScalars::default()
        };
        return Ok((d, b, aux));
    }
    match params.kind() {
        ModelKind::Classical => classical(params, &p),
        ModelKind::Logarithmic => logarithmic(params, &p),
        ModelKind::Exponential => exponential(params, &p),
        ModelKind::Quadratic { alpha } => quadratic(params, &p, *alpha),
        _ => generic(params, &p),
    }
}

/// `(E, H)` from `(D, B)` through the model-independent root solve, whatever the model.
pub fn dyonic_eh_generic(
    params: &ModelParams,
    d: Vec3,
    b: Vec3,
) -> Result<(Vec3, Vec3, AuxScalars)> {
    let p = Prescribed::new(params.kappa(), d, b, None)?;
    if p.d2 == 0.0 {
        return magnetostatic_branch(params, &p);
    }
    generic(params, &p)
}

fn magnetostatic_branch(params: &ModelParams, p: &Prescribed) -> Result<(Vec3, Vec3, AuxScalars)> {
    let s = -0.5 * p.b2;
    let fp = params.f_prime(s)?;
    let aux = AuxScalars {
        s,
        f_prime: fp,
        ..AuxScalars::default()
    };
    Ok((Vec3::ZERO, p.b * fp, aux))
}

/// Rejects `f' ≤ 0`, and `f' < F_PRIME_GUARD` for models whose `f'` has a zero at finite `s`.
///
/// Classical, logarithmic and exponential `f'` only tends to 0 as `s → −∞`,
/// next to a coupled dyon, where `E = P / f'` stays bounded.
fn guard(params: &ModelParams, fp: f64, s: f64) -> Result<()> {
    let pinned = params.f_prime_root().is_some() || matches!(params.kind(), ModelKind::Custom(_));
    if !(fp.is_finite() && fp > 0.0) || (pinned && fp < F_PRIME_GUARD) {
        return Err(params.domain_error(s, "f' vanishes or changes sign"));
    }
    Ok(())
}

/// Domain check that lets a closed-form `s` rounded onto the upper edge back in.
fn settle(params: &ModelParams, s: f64) -> Result<f64> {
    let hi = params.domain().1;
    if s >= hi && hi.is_finite() && s - hi <= 4.0 * f64::EPSILON * hi.abs() {
        return Ok(hi.next_down());
    }
    params.check_domain(s)?;
    Ok(s)
}

/// Builds `E`, `H` from `f'` and checks the branch.
///
/// `h_par` is `1 − κ²(E·B)²/B²`, the factor of the `H` component along `B`,
/// when the model has a cancellation-free closed form for it.
fn assemble(
    params: &ModelParams,
    p: &Prescribed,
    fp: f64,
    s: f64,
    h_par: Option<f64>,
    mut aux: AuxScalars,
) -> Result<(Vec3, Vec3, AuxScalars)> {
    guard(params, fp, s)?;
    let s = settle(params, s)?;
    let (d_par, d_perp) = p.split();
    let lift = 1.0 + p.k2 * p.b2;
    // fp E
    let perp = d_par / lift + d_perp;
    let e = perp / fp;
    let eb = p.bd / (lift * fp);
    let h_par = h_par.unwrap_or_else(|| {
        if p.b2 == 0.0 {
            1.0
        } else {
            1.0 - p.k2 * eb * eb / p.b2
        }
    });
    let h = p.b * (fp * h_par) - d_perp * (p.k2 * eb);
    if e.dot(perp) < 0.0 {
        return Err(Error::InversionFailure(alloc::format!(
            "direction mismatch between E and D at f' = {fp}"
        )));
    }
    aux.s = s;
    aux.f_prime = fp;
    Ok((e, h, aux))
}

fn scalars(eta: f64, a: f64) -> AuxScalars {
    AuxScalars {
        a,
        b: eta * a,
        eta,
        ..AuxScalars::default()
    }
}

fn classical(params: &ModelParams, p: &Prescribed) -> Result<(Vec3, Vec3, AuxScalars)> {
    let beta = params.beta();
    let eta = p.eta();
    let (r1, r2) = if p.k2 == 0.0 {
        (sqrt(1.0 + beta * p.b2), sqrt(1.0 + beta * p.d2))
    } else {
        (
            sqrt((1.0 + beta * p.b2) * (1.0 + p.k2 * p.b2)),
            sqrt(1.0 + beta * p.d2 + p.k2 * p.b2 + beta * p.k2 * p.bxd2),
        )
    };
    let fp = r2 / r1;
    let s = (p.d2 + p.k2 * p.bxd2 - p.b2 * (1.0 + p.k2 * p.b2)) / (2.0 * r2 * r2);
    let mut aux = scalars(eta, p.target() / (fp * fp * (1.0 + p.k2 * eta)));
    aux.r1 = Some(r1);
    aux.r2 = Some(r2);
    aux.denom = Some(r1 * (1.0 + p.k2 * p.b2) * r2);
    if p.k2 == 0.0 {
        let e = p.d * (r1 / r2);
        let h = p.b * (r2 / r1);
        let s = settle(params, s)?;
        aux.s = s;
        aux.f_prime = fp;
        return Ok((e, h, aux));
    }
    let h_par = if p.b2 == 0.0 {
        1.0
    } else {
        let lift = 1.0 + p.k2 * p.b2;
        let n = lift * lift * (1.0 + beta * p.bxd2 / p.b2) + (beta - p.k2) * p.bd * p.bd / p.b2;
        n / (lift * r2 * r2)
    };
    assemble(params, p, fp, s, Some(h_par), aux)
}

fn logarithmic(params: &ModelParams, p: &Prescribed) -> Result<(Vec3, Vec3, AuxScalars)> {
    let beta = params.beta();
    let eta = p.eta();
    let m = 2.0 + beta * p.b2;
    let z = if p.k2 == 0.0 {
        beta * p.d2 * m
    } else {
        m * beta * p.d2 * (1.0 + p.k2 * eta) / (1.0 + p.k2 * (2.0 + p.k2 * p.b2) * eta)
    };
    let root = sqrt(1.0 + z);
    // 1 − βs
    let w = m / (1.0 + root);
    let s = (z / (1.0 + root) - beta * p.b2) / (beta * (1.0 + root));
    let fp = 1.0 / w;
    let aux = scalars(eta, p.target() * w * w / (1.0 + p.k2 * eta));
    if p.k2 == 0.0 {
        let s = settle(params, s)?;
        let aux = AuxScalars {
            s,
            f_prime: fp,
            ..aux
        };
        return Ok((p.d * w, p.b * fp, aux));
    }
    assemble(params, p, fp, s, None, aux)
}

fn exponential(params: &ModelParams, p: &Prescribed) -> Result<(Vec3, Vec3, AuxScalars)> {
    let beta = params.beta();
    let eta = p.eta();
    let t = p.target();
    let w = lambert_w_of_exp(libm::log(beta) + beta * p.b2 + libm::log(t))?;
    let fp = sqrt(beta * t / w);
    let s = (w - beta * p.b2) / (2.0 * beta);
    let mut aux = scalars(eta, w / (beta * (1.0 + p.k2 * eta)));
    aux.w = Some(w);
    assemble(params, p, fp, s, None, aux)
}

fn quadratic(params: &ModelParams, p: &Prescribed, alpha: f64) -> Result<(Vec3, Vec3, AuxScalars)> {
    let eta = p.eta();
    let lift = 1.0 + p.k2 * eta;
    let scale = alpha * lift;
    let gamma = (1.0 - alpha * p.b2) / scale;
    let sigma2 = p.d2 / (scale * scale * (1.0 + p.k2 * (2.0 + p.k2 * p.b2) * eta));
    let a = direction_matched_cubic_root(gamma, sigma2)?;
    let eq = ScalarEquation::new(params, p.b2, p.target());
    let v0 = if eq.pinned {
        0.5 * ((1.0 - alpha * p.b2) + scale * a) / alpha
    } else {
        0.5 * lift * a
    };
    let (s, u) = eq.point(eq.polish(v0));
    let fp = params.f_prime(s)?;
    assemble(params, p, fp, s, None, scalars(eta, u / lift))
}

fn generic(params: &ModelParams, p: &Prescribed) -> Result<(Vec3, Vec3, AuxScalars)> {
    let eta = p.eta();
    let eq = ScalarEquation::new(params, p.b2, p.target());
    let (s, u) = eq.point(eq.solve()?);
    let fp = params.f_prime(s)?;
    assemble(params, p, fp, s, None, scalars(eta, u / (1.0 + p.k2 * eta)))
}

/// `f'(s)² u = t` with `u = 2s + B² = a + κ²b`, in the offset `v = s − s_lo ≥ 0`.
///
/// `s_lo` is where `u` or `f'` first vanishes; measuring from it keeps `s`
/// accurate when it is pinned just above a zero of `f'`.
struct ScalarEquation<'a> {
    params: &'a ModelParams,
    s_floor: Option<f64>,
    s_lo: f64,
    u_lo: f64,
    pinned: bool,
    t: f64,
    b2: f64,
}

impl<'a> ScalarEquation<'a> {
    fn new(params: &'a ModelParams, b2: f64, t: f64) -> Self {
        let s_floor = params.f_prime_root();
        let (s_lo, u_lo, pinned) = match s_floor {
            Some(s0) if s0 > -0.5 * b2 => (s0, 2.0 * s0 + b2, true),
            _ => (-0.5 * b2, 0.0, false),
        };
        Self {
            params,
            s_floor,
            s_lo,
            u_lo,
            pinned,
            t,
            b2,
        }
    }

    fn point(&self, v: f64) -> (f64, f64) {
        (self.s_lo + v, self.u_lo + 2.0 * v)
    }

    fn eval(&self, v: f64) -> (f64, f64) {
        let (s, u) = self.point(v);
        if let Some(s0) = self.s_floor {
            if s <= s0 {
                return (0.0, f64::NAN);
            }
        }
        match (self.params.f_prime(s), self.params.f_double_prime(s)) {
            (Ok(fp), Ok(fpp)) => (fp * fp * u, 2.0 * fp * (fp + u * fpp)),
            _ => (f64::NAN, f64::NAN),
        }
    }

    fn solve(&self) -> Result<f64> {
        let t = self.t;
        let cap = self.params.domain().1;
        let mut hi = None;
        if cap.is_finite() {
            let v_cap = cap - self.s_lo;
            let mut width = v_cap;
            for _ in 0..1100 {
                width *= 0.5;
                let v = v_cap - width;
                if v >= v_cap || width == 0.0 {
                    break;
                }
                if self.eval(v).0 >= t {
                    hi = Some(v);
                    break;
                }
            }
        } else {
            let mut v = 0.5 * t.max(1.0);
            for _ in 0..2000 {
                if self.eval(v).0 >= t {
                    hi = Some(v);
                    break;
                }
                if !v.is_finite() {
                    break;
                }
                v *= 2.0;
            }
        }
        let hi = hi.ok_or_else(|| {
            Error::InversionFailure(alloc::format!(
                "no bracket for f'(s)^2 (2s + B^2) = {t} with B^2 = {} in model {}",
                self.b2,
                self.params.name()
            ))
        })?;
        invert_monotone_with_derivative(|v| self.eval(v), t, 0.0, hi)
            .map_err(|e| Error::InversionFailure(alloc::format!("{e}")))
    }

    /// Newton steps from a close starting value, kept while the residual shrinks.
    fn polish(&self, v0: f64) -> f64 {
        let mut v = v0;
        let (g, mut dg) = self.eval(v);
        let mut r = (g - self.t).abs();
        for _ in 0..4 {
            if !(dg.is_finite() && dg > 0.0) || r == 0.0 {
                break;
            }
            let next = v - (self.eval(v).0 - self.t) / dg;
            if !(next >= 0.0) {
                break;
            }
            let (gn, dn) = self.eval(next);
            let rn = (gn - self.t).abs();
            if !(rn < r) {
                break;
            }
            v = next;
            r = rn;
            dg = dn;
        }
        v
    }
}

/// The 2×2 block matrix `Σ` with `(D, B) = Σ (E, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumMatrix {
    pub m: [[f64; 2]; 2],
}

impl MediumMatrix {
    pub fn apply(&self, e: Vec3, h: Vec3) -> (Vec3, Vec3) {
        (
            e * self.m[0][0] + h * self.m[0][1],
            e * self.m[1][0] + h * self.m[1][1],
        )
    }

    pub fn determinant(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }
}

/// `Σ = [[f'(1 + κ⁴(E·B)²), κ²(E·B)], [κ²(E·B), 1/f']]`.
pub fn medium_matrix(params: &ModelParams, e: Vec3, b: Vec3) -> Result<MediumMatrix> {
    let s = lorentz_scalar(params.kappa(), e, b);
    let fp = params.f_prime(s)?;
    if fp == 0.0 || !fp.is_finite() {
        return Err(params.domain_error(s, "f' vanishes"));
    }
    let c = params.kappa() * params.kappa() * e.dot(b);
    Ok(MediumMatrix {
        m: [[fp * (1.0 + c * c), c], [c, 1.0 / fp]],
    })
}
