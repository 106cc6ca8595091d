//! Induced current densities of static point-source configurations.
//!
//! The analytic forms are triple sums over the sources; the finite-difference
//! counterparts take the curl of the constitutive fields directly.

use crate::constitutive::{electrostatic_e, FieldState};
use crate::error::{Error, Result};
use crate::fd;
use crate::math::CompensatedVec;
use crate::models::ModelParams;
use crate::sources::{ChargeConfig, FieldKind};
use crate::vector::{Point3, Vec3};
use crate::FOUR_PI;
use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentSample {
    pub j_e: Vec3,
    pub j_m: Vec3,
    pub at: Point3,
}

struct Leg {
    r: Vec3,
    w: f64,
    inv_d2: f64,
}

fn legs(cfg: &ChargeConfig, x: Point3, kind: FieldKind) -> Result<Vec<Leg>> {
    cfg.check_point(x)?;
    Ok(cfg
        .charges()
        .iter()
        .map(|c| {
            let r = x - c.position;
            let d2 = r.norm2();
            let d = libm::sqrt(d2);
            Leg {
                r,
                w: c.strength(kind) / (d2 * d),
                inv_d2: 1.0 / d2,
            }
        })
        .collect())
}

fn cross_unless_same(a: &[Leg], i: usize, j: usize) -> Vec3 {
    if i == j {
        Vec3::ZERO
    } else {
        a[i].r.cross(a[j].r)
    }
}

/// `Σ a_i b_j b_k (r_j·r_k)/(|r_i|³|r_j|³|r_k|³) r_i × (r_j/|r_j|² + r_k/|r_k|²)`.
fn triple_sum(a: &[Leg], b: &[Leg]) -> Vec3 {
    let mut acc = CompensatedVec::new();
    let n = a.len();
    for i in 0..n {
        if a[i].w == 0.0 {
            continue;
        }
        for j in 0..n {
            for k in 0..n {
                let w = a[i].w * b[j].w * b[k].w;
                if w == 0.0 {
                    continue;
                }
                let dot = b[j].r.dot(b[k].r);
                let t = cross_unless_same(a, i, j) * b[j].inv_d2
                    + cross_unless_same(a, i, k) * b[k].inv_d2;
                acc.add(t * (w * dot));
            }
        }
    }
    acc.value()
}

/// Triple sum of the electrostatic (or, with `Magnetic`, magnetostatic) current.
pub fn source_triple_sum(cfg: &ChargeConfig, x: Point3, kind: FieldKind) -> Result<Vec3> {
    let l = legs(cfg, x, kind)?;
    Ok(triple_sum(&l, &l))
}

/// The partial sum that vanishes by the Jacobi identity, with its Born–Infeld prefactor.
pub fn jm1_partial_sum(cfg: &ChargeConfig, beta: f64, x: Point3) -> Result<Vec3> {
    let l = legs(cfg, x, FieldKind::Electric)?;
    let d2 = cfg.displacement_field(x)?.norm2();
    let mut acc = CompensatedVec::new();
    let n = l.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let w = l[i].w * l[j].w * l[k].w;
                acc.add((cross_unless_same(&l, i, j) + cross_unless_same(&l, i, k)) * w);
            }
        }
    }
    let pre = -beta / (2.0 * FOUR_PI * FOUR_PI * FOUR_PI * libm::pow(1.0 + beta * d2, 1.5));
    Ok(acc.value() * pre)
}

fn require(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(alloc::format!(
            "{what} requires a {} configuration",
            if what.contains("magneto") {
                "magnetic-only"
            } else {
                "electric-only"
            }
        )))
    }
}

fn classical_factor(beta: f64, f2: f64) -> f64 {
    3.0 * beta / (2.0 * FOUR_PI * FOUR_PI * FOUR_PI * libm::pow(1.0 + beta * f2, 1.5))
}

/// Magnetic current `−∇×E` of a Born–Infeld electrostatic configuration.
pub fn jm_classical_electrostatic(cfg: &ChargeConfig, beta: f64, x: Point3) -> Result<Vec3> {
    require(cfg.is_electric_only(), "electrostatic current")?;
    let d2 = cfg.displacement_field(x)?.norm2();
    Ok(source_triple_sum(cfg, x, FieldKind::Electric)? * classical_factor(beta, d2))
}

/// Electric current `∇×H` of a Born–Infeld magnetostatic configuration.
pub fn je_classical_magnetostatic(cfg: &ChargeConfig, beta: f64, x: Point3) -> Result<Vec3> {
    require(cfg.is_magnetic_only(), "magnetostatic current")?;
    let b2 = cfg.magnetic_field(x)?.norm2();
    Ok(source_triple_sum(cfg, x, FieldKind::Magnetic)? * -classical_factor(beta, b2))
}

/// `Σ a_i b_j b_k / (|r_i|³|r_j|³|r_k|³) r_i × (r_j + r_k − 3(r_j·r_k)(r_j/|r_j|² + r_k/|r_k|²))`.
fn mixed_sum(a: &[Leg], b: &[Leg]) -> Vec3 {
    let mut acc = CompensatedVec::new();
    let n = a.len();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let w = a[i].w * b[j].w * b[k].w;
                if w == 0.0 {
                    continue;
                }
                let rj = a[i].r.cross(b[j].r);
                let rk = a[i].r.cross(b[k].r);
                let dot = b[j].r.dot(b[k].r);
                acc.add((rj + rk - (rj * b[j].inv_d2 + rk * b[k].inv_d2) * (3.0 * dot)) * w);
            }
        }
    }
    acc.value()
}

fn dyonic_k0(cfg: &ChargeConfig, beta: f64, x: Point3, own: FieldKind) -> Result<Vec3> {
    let other = match own {
        FieldKind::Electric => FieldKind::Magnetic,
        FieldKind::Magnetic => FieldKind::Electric,
    };
    let a = legs(cfg, x, own)?;
    let b = legs(cfg, x, other)?;
    let own2 = cfg.field(x, own)?.norm2();
    let other2 = cfg.field(x, other)?.norm2();
    let ro = libm::sqrt(1.0 + beta * own2);
    let rt = libm::sqrt(1.0 + beta * other2);
    let pure = triple_sum(&a, &a) * classical_factor(beta, own2);
    let cube = FOUR_PI * FOUR_PI * FOUR_PI;
    let cross = mixed_sum(&a, &b) * (beta / (2.0 * cube * ro * rt));
    Ok(pure * rt + cross)
}

/// Magnetic current `−∇×E` of a dyonic Born–Infeld configuration without the `κ` term.
pub fn jm_classical_dyonic_k0(cfg: &ChargeConfig, beta: f64, x: Point3) -> Result<Vec3> {
    dyonic_k0(cfg, beta, x, FieldKind::Electric)
}

/// Electric current `∇×H` of a dyonic Born–Infeld configuration without the `κ` term.
pub fn je_classical_dyonic_k0(cfg: &ChargeConfig, beta: f64, x: Point3) -> Result<Vec3> {
    Ok(-dyonic_k0(cfg, beta, x, FieldKind::Magnetic)?)
}

/// `h′(D²)` from `(f′(h/2))² h = D²`, with `h = |E|²`.
fn h_prime(params: &ModelParams, h: f64) -> Result<(f64, f64, f64)> {
    let fp = params.f_prime(0.5 * h)?;
    let fpp = params.f_double_prime(0.5 * h)?;
    let den = fp * (fp + fpp * h);
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::InversionFailure(alloc::format!(
            "h′ undefined at |E|² = {h}"
        )));
    }
    Ok((fp, fpp, 1.0 / den))
}

/// `f″h′/(2f′²)` at `D`, the factor in `∇×E = c · D × ∇(D²)` of an electrostatic field.
pub fn electrostatic_curl_coefficient(params: &ModelParams, d: Vec3) -> Result<f64> {
    let h = electrostatic_e(params, d)?.norm2();
    let (fp, fpp, hp) = h_prime(params, h)?;
    Ok(if fpp == 0.0 {
        0.0
    } else {
        0.5 * fpp * hp / (fp * fp)
    })
}

/// Magnetic current of an electrostatic configuration for any model.
pub fn jm_generic_electrostatic(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
) -> Result<Vec3> {
    require(cfg.is_electric_only(), "electrostatic current")?;
    let c = electrostatic_curl_coefficient(params, cfg.displacement_field(x)?)?;
    if c == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let s = source_triple_sum(cfg, x, FieldKind::Electric)?;
    Ok(s * (3.0 * c / (FOUR_PI * FOUR_PI * FOUR_PI)))
}

/// Electric current `½ f″(−B²/2) B × ∇(B²)` of a magnetostatic configuration for any model.
pub fn je_generic_magnetostatic(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
) -> Result<Vec3> {
    require(cfg.is_magnetic_only(), "magnetostatic current")?;
    let b = cfg.magnetic_field(x)?;
    let fpp = params.f_double_prime(-0.5 * b.norm2())?;
    if fpp == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let grad = cfg.grad_field_norm2(x, FieldKind::Magnetic)?;
    Ok(b.cross(grad) * (0.5 * fpp))
}

/// Analytic currents where a closed form exists for the configuration and model.
pub fn analytic_currents(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
) -> Result<Option<CurrentSample>> {
    let (j_e, j_m) = if cfg.is_electric_only() {
        (Vec3::ZERO, jm_generic_electrostatic(params, cfg, x)?)
    } else if cfg.is_magnetic_only() {
        (je_generic_magnetostatic(params, cfg, x)?, Vec3::ZERO)
    } else if params.is_linear() {
        cfg.check_point(x)?;
        (Vec3::ZERO, Vec3::ZERO)
    } else if params.kappa() == 0.0 && params.name() == "classical" {
        let beta = params.beta();
        (
            je_classical_dyonic_k0(cfg, beta, x)?,
            jm_classical_dyonic_k0(cfg, beta, x)?,
        )
    } else {
        return Ok(None);
    };
    Ok(Some(CurrentSample { j_e, j_m, at: x }))
}

/// Currents `j_m = −∇×E` and `j_e = ∇×H` by central differences of the constitutive fields.
pub fn fd_currents(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
    h: f64,
) -> Result<CurrentSample> {
    let mut e_jac = [[0.0; 3]; 3];
    let mut h_jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let step = Vec3::axis(k) * h;
        let plus = FieldState::at(cfg, params, x + step)?;
        let minus = FieldState::at(cfg, params, x - step)?;
        e_jac[k] = ((plus.e - minus.e) / (2.0 * h)).to_array();
        h_jac[k] = ((plus.h - minus.h) / (2.0 * h)).to_array();
    }
    Ok(CurrentSample {
        j_e: fd::curl_of_jacobian(&h_jac),
        j_m: -fd::curl_of_jacobian(&e_jac),
        at: x,
    })
}

/// Richardson-extrapolated `fd_currents`.
pub fn fd_currents_richardson(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
    h: f64,
) -> Result<CurrentSample> {
    let c = fd_currents(params, cfg, x, h)?;
    let f = fd_currents(params, cfg, x, 0.5 * h)?;
    Ok(CurrentSample {
        j_e: (f.j_e * 4.0 - c.j_e) / 3.0,
        j_m: (f.j_m * 4.0 - c.j_m) / 3.0,
        at: x,
    })
}
