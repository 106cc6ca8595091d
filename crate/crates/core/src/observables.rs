//! Energy densities, total energies, flux charges and residual diagnostics.

use core::cell::Cell;
use core::f64::consts::PI;

use alloc::string::String;
use alloc::vec::Vec;

use crate::constitutive::FieldState;
use crate::currents::analytic_currents;
use crate::error::{Error, Result};
use crate::fd;
use crate::math::{sqrt, CompensatedSum};
use crate::models::{ModelKind, ModelParams};
use crate::quadrature::{
    integrate, integrate_breaks, sphere_adaptive, Integral, SphereRule, Tolerance,
};
use crate::sources::ChargeConfig;
use crate::specfn::lambert_w_of_exp;
use crate::vector::{Point3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    /// Radius `r_b` of the balls integrated in charge-centred coordinates.
    pub ball_radius: f64,
    /// Radius of the centroid-centred sphere beyond which the far-field estimate takes over.
    pub far_radius: f64,
    /// Inner cut-off `ε` of the ball integrals and radius of the inner flux spheres.
    pub exclusion: f64,
    pub flux_radii: Vec<f64>,
}

impl QuadratureSpec {
    /// Defaults scaled to the extent of `cfg`.
    pub fn for_config(cfg: &ChargeConfig) -> Self {
        let sep = cfg.min_separation();
        let ball_radius = if sep.is_finite() {
            (0.25 * sep).min(0.5)
        } else {
            0.5
        };
        let extent = cfg.radius_about_centroid() + ball_radius;
        let far_radius = (4.0 * extent).max(10.0);
        let exclusion = (10.0 * cfg.exclusion_radius()).max(1e-9 * ball_radius);
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            max_subdivisions: 400,
            ball_radius,
            far_radius,
            exclusion,
            flux_radii: [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|k| k * far_radius)
                .collect(),
        }
    }

    pub fn validate(&self, cfg: &ChargeConfig) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidInput(m));
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0) {
            return bad(alloc::format!(
                "tolerances must be positive (rel {}, abs {})",
                self.rel_tol,
                self.abs_tol
            ));
        }
        if self.max_subdivisions == 0 {
            return bad("max_subdivisions must be at least 1".into());
        }
        if !(self.exclusion > 0.0 && self.exclusion < self.ball_radius) {
            return bad(alloc::format!(
                "need 0 < exclusion ({}) < ball radius ({})",
                self.exclusion,
                self.ball_radius
            ));
        }
        if self.exclusion < cfg.exclusion_radius() {
            return bad(alloc::format!(
                "exclusion {} is smaller than the configuration's singular radius {}",
                self.exclusion,
                cfg.exclusion_radius()
            ));
        }
        if !(self.ball_radius < 0.5 * cfg.min_separation()) {
            return bad(alloc::format!(
                "ball radius {} must be below half the minimum separation {}",
                self.ball_radius,
                cfg.min_separation()
            ));
        }
        let extent = cfg
            .diameter()
            .max(cfg.radius_about_centroid() + self.ball_radius);
        if !(self.far_radius > extent && self.far_radius.is_finite()) {
            return bad(alloc::format!(
                "far radius {} must exceed the configuration extent {extent}",
                self.far_radius
            ));
        }
        if self
            .flux_radii
            .iter()
            .any(|r| !(*r > cfg.radius_about_centroid() && r.is_finite()))
        {
            return bad("every flux radius must enclose all charges".into());
        }
        Ok(())
    }

    fn tolerance(&self) -> Tolerance {
        Tolerance::new(self.rel_tol, self.abs_tol, self.max_subdivisions)
    }
}

fn cross_terms(state: &FieldState, k2: f64) -> (f64, f64, f64, f64) {
    let d2 = state.d.norm2();
    let b2 = state.b.norm2();
    let bxd2 = state.b.cross(state.d).norm2();
    let target = (d2 + k2 * bxd2) / (1.0 + k2 * b2);
    (d2, b2, bxd2, target)
}

/// Hamiltonian energy density, using the model's own closed form where it has one.
pub fn energy_density(params: &ModelParams, state: &FieldState) -> Result<f64> {
    let beta = params.beta();
    let k2 = params.kappa() * params.kappa();
    let (d2, b2, bxd2, target) = cross_terms(state, k2);
    match params.kind() {
        ModelKind::Classical => {
            let r1 = sqrt((1.0 + beta * b2) * (1.0 + k2 * b2));
            let r2 = sqrt(1.0 + beta * d2 + k2 * b2 + beta * k2 * bxd2);
            Ok((b2 * r1 * r2 + (1.0 + beta * b2) * (d2 + k2 * bxd2)) / (r1 * (r1 + r2)))
        }
        ModelKind::Logarithmic => {
            let bd = state.b.dot(state.d);
            let den = d2 + k2 * (2.0 + k2 * b2) * bxd2;
            let eta = if den == 0.0 { 0.0 } else { bd * bd / den };
            let z = (2.0 + beta * b2) * beta * d2 * (1.0 + k2 * eta)
                / (1.0 + k2 * (2.0 + k2 * b2) * eta);
            let root = 1.0 + sqrt(1.0 + z);
            // w − 1 with w = 1 − βs
            let y = (beta * b2 - z / root) / root;
            Ok(target * (1.0 + y) + libm::log1p(y) / beta)
        }
        ModelKind::Exponential => {
            let w = if target == 0.0 {
                0.0
            } else {
                lambert_w_of_exp(libm::log(beta) + beta * b2 + libm::log(target))?
            };
            let bs = 0.5 * (w - beta * b2);
            Ok((libm::exp(bs) * w - libm::expm1(bs)) / beta)
        }
        ModelKind::Quadratic { alpha } => {
            let s = state.s;
            params.check_domain(s)?;
            Ok(b2 + (1.0 + 2.0 * alpha * b2) * s + 3.0 * alpha * s * s)
        }
        _ => energy_density_generic(params, state),
    }
}

/// `(D² + κ²|B×D|²) / (f'(s)(1 + κ²B²)) − f(s)`, valid for every model.
pub fn energy_density_generic(params: &ModelParams, state: &FieldState) -> Result<f64> {
    let k2 = params.kappa() * params.kappa();
    let (_, _, _, target) = cross_terms(state, k2);
    let f = params.f(state.s)?;
    if target == 0.0 {
        return Ok(-f);
    }
    let fp = params.f_prime(state.s)?;
    Ok(target / fp - f)
}

pub fn energy_density_at(cfg: &ChargeConfig, params: &ModelParams, x: Point3) -> Result<f64> {
    energy_density(params, &FieldState::at(cfg, params, x)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub value: f64,
    /// `false` when a ball integral diverges or a quadrature missed its tolerance.
    pub converged: bool,
    /// Fitted exponent `p` of `ℋ ~ r^p` at each charge.
    pub near_charge_exponents: Vec<f64>,
    pub balls: Vec<f64>,
    pub middle: f64,
    pub shells: f64,
    pub tail: f64,
    pub far_radius: f64,
    pub evaluations: usize,
}

/// Smooth cut-off equal to 1 for `r ≤ r_b/2` and 0 for `r ≥ r_b`.
fn cutoff(r: f64, rb: f64) -> f64 {
    let a = 0.5 * rb;
    if r <= a {
        return 1.0;
    }
    if r >= rb {
        return 0.0;
    }
    let t = (r - a) / a;
    let psi = |t: f64| if t <= 0.0 { 0.0 } else { libm::exp(-1.0 / t) };
    let (p, q) = (psi(1.0 - t), psi(t));
    p / (p + q)
}

struct Counter {
    evals: Cell<usize>,
    ok: Cell<bool>,
}

impl Counter {
    fn note(&self, i: &Integral) -> f64 {
        if !i.converged {
            self.ok.set(false);
        }
        i.value
    }
}

const MAX_FAR_DOUBLINGS: usize = 60;
const MAX_ANGULAR_ORDER: usize = 64;

/// Total field energy: charge-centred balls, a bounded middle region,
/// doubling far shells and a Coulombic `r⁻⁴` tail.
///
/// Each ball is integrated decade by decade in `ln r` down to `ε`. The
/// decade sums scale like `10^{−(3+p)}` for `ℋ ~ r^p`, which gives the
/// reported exponent; a ball with `p ≤ −3` (or with a sum beyond
/// `1/abs_tol`) is reported as divergent rather than extrapolated.
pub fn total_energy(
    cfg: &ChargeConfig,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<EnergyReport> {
    quad.validate(cfg)?;
    let count = Counter {
        evals: Cell::new(0),
        ok: Cell::new(true),
    };
    let density = |x: Point3| -> Result<f64> {
        count.evals.set(count.evals.get() + 1);
        energy_density_at(cfg, params, x)
    };
    let tol = quad.tolerance();
    let rb = quad.ball_radius;
    let eps = quad.exclusion;
    let mut diverges = false;

    let mut balls = Vec::with_capacity(cfg.len());
    let mut exponents = Vec::with_capacity(cfg.len());
    for ch in cfg.charges() {
        let xi = ch.position;
        let (_, order) = sphere_adaptive(
            |n| density(xi + n * (0.75 * rb)),
            4,
            MAX_ANGULAR_ORDER,
            quad.rel_tol,
            0.0,
        )?;
        let rule = SphereRule::product(order);
        let shell = |r: f64| -> Result<f64> {
            let w = cutoff(r, rb);
            if w == 0.0 {
                return Ok(0.0);
            }
            Ok(w * r * r * r * rule.integrate(|n| density(xi + n * r))?)
        };
        let mut full = Vec::new();
        let mut sum = CompensatedSum::new();
        let mut hi = rb;
        while hi > eps {
            let lo = (0.1 * hi).max(eps);
            let d = integrate(|t| shell(libm::exp(t)), libm::log(lo), libm::log(hi), tol)?;
            let v = count.note(&d);
            sum.add(v);
            if lo == 0.1 * hi {
                full.push(v);
            }
            hi = lo;
        }
        let p = match full[..] {
            [.., a, b] if a > 0.0 && b > 0.0 => -3.0 - libm::log10(b / a),
            _ => f64::NAN,
        };
        let value = sum.value();
        let ball_diverges = p <= -2.5 || value.abs() > 1.0 / quad.abs_tol.max(f64::MIN_POSITIVE);
        diverges |= ball_diverges;
        let core = if ball_diverges {
            0.0
        } else {
            eps * eps * eps * rule.integrate(|n| density(xi + n * eps))?
        };
        exponents.push(p);
        balls.push(value + core);
    }

    let c = cfg.centroid();
    let r0 = quad.far_radius;
    let mut breaks = alloc::vec![0.0, r0];
    for ch in cfg.charges() {
        let d = ch.position.distance(c);
        for off in [-rb, -0.5 * rb, 0.5 * rb, rb] {
            let b = d + off;
            if b > 0.0 && b < r0 {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let outside = |x: Point3| -> Result<f64> {
        let mut w = 1.0;
        for ch in cfg.charges() {
            w -= cutoff(x.distance(ch.position), rb);
        }
        if w <= 0.0 {
            return Ok(0.0);
        }
        Ok(w * density(x)?)
    };
    // Error budgets relative to the energy already found in the balls, split
    // over the nested levels by the volume each one is integrated against.
    let scale: f64 = balls.iter().map(|b| b.abs()).sum();
    let budget = quad.abs_tol.max(0.1 * quad.rel_tol * scale);
    let tol = Tolerance::new(quad.rel_tol, budget, quad.max_subdivisions);
    let polar_abs = 0.75 * budget / (r0 * r0 * r0);
    let inner_tol = Tolerance::new(0.25 * quad.rel_tol, polar_abs, quad.max_subdivisions);
    let leaf_tol = Tolerance::new(
        0.0625 * quad.rel_tol,
        0.125 * polar_abs,
        quad.max_subdivisions,
    );
    let middle = integrate_breaks(
        |r| {
            let polar = integrate(
                |ct| {
                    let st = sqrt((1.0 - ct * ct).max(0.0));
                    let az = integrate(
                        |phi| {
                            outside(c + Vec3::new(st * libm::cos(phi), st * libm::sin(phi), ct) * r)
                        },
                        0.0,
                        2.0 * PI,
                        leaf_tol,
                    )?;
                    Ok(count.note(&az))
                },
                -1.0,
                1.0,
                inner_tol,
            )?;
            Ok(r * r * count.note(&polar))
        },
        &breaks,
        tol,
    )?;
    let middle = count.note(&middle);

    let tail_at = |r: f64| -> Result<f64> {
        let (q, _) = sphere_adaptive(
            |n| {
                let x = c + n * r;
                Ok(0.5 * (cfg.displacement_field(x)?.norm2() + cfg.magnetic_field(x)?.norm2()))
            },
            8,
            MAX_ANGULAR_ORDER,
            quad.rel_tol,
            0.0,
        )?;
        Ok(r * r * r * q.value)
    };
    let mut accumulated = CompensatedSum::new();
    for b in &balls {
        accumulated.add(*b);
    }
    accumulated.add(middle);
    let mut shells = CompensatedSum::new();
    let mut r = r0;
    let mut tail = tail_at(r)?;
    let mut doublings = 0;
    while tail.abs() > quad.rel_tol * (accumulated.value() + shells.value()).abs()
        && doublings < MAX_FAR_DOUBLINGS
    {
        let (_, order) = sphere_adaptive(
            |n| density(c + n * r),
            8,
            MAX_ANGULAR_ORDER,
            quad.rel_tol,
            0.0,
        )?;
        let rule = SphereRule::product(order);
        let shell = integrate(
            |t| {
                let rr = libm::exp(t);
                Ok(rr * rr * rr * rule.integrate(|n| density(c + n * rr))?)
            },
            libm::log(r),
            libm::log(2.0 * r),
            tol,
        )?;
        shells.add(count.note(&shell));
        r *= 2.0;
        tail = tail_at(r)?;
        doublings += 1;
    }
    if tail.abs() > quad.rel_tol * (accumulated.value() + shells.value()).abs() {
        count.ok.set(false);
    }
    accumulated.add(shells.value());
    accumulated.add(tail);
    Ok(EnergyReport {
        value: accumulated.value(),
        converged: count.ok.get() && !diverges,
        near_charge_exponents: exponents,
        balls,
        middle,
        shells: shells.value(),
        tail,
        far_radius: r,
        evaluations: count.evals.get(),
    })
}

/// Outward flux of `field` through the sphere of radius `radius` about `center`.
pub fn flux_through_sphere<F: FnMut(Point3) -> Result<Vec3>>(
    mut field: F,
    center: Point3,
    radius: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "flux radius must be positive, got {radius}"
        )));
    }
    let r2 = radius * radius;
    let (q, _) = sphere_adaptive(
        |n| Ok(field(center + n * radius)?.dot(n) * r2),
        8,
        512,
        quad.rel_tol,
        quad.abs_tol,
    )?;
    q.require("flux integral")
}

/// Outward flux through the sphere `|x| = R`.
pub fn flux_charge<F: FnMut(Point3) -> Result<Vec3>>(
    field: F,
    radius: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    flux_through_sphere(field, Vec3::ZERO, radius, quad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeCharges {
    pub q_free: f64,
    pub g_free: f64,
    pub outer_radius: f64,
    pub outer_q: f64,
    pub outer_g: f64,
    pub inner_q: Vec<f64>,
    pub inner_g: Vec<f64>,
}

/// Free charges `∮E·dS` and `∮H·dS` over the outer sphere minus the ε-spheres at the charges.
pub fn free_charge_with_inner_spheres(
    cfg: &ChargeConfig,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<FreeCharges> {
    quad.validate(cfg)?;
    let c = cfg.centroid();
    let outer_radius = quad
        .flux_radii
        .iter()
        .copied()
        .fold(quad.far_radius, f64::max);
    let both = |center: Point3, radius: f64| -> Result<(f64, f64)> {
        let e = flux_through_sphere(
            |x| Ok(FieldState::at(cfg, params, x)?.e),
            center,
            radius,
            quad,
        )?;
        let h = flux_through_sphere(
            |x| Ok(FieldState::at(cfg, params, x)?.h),
            center,
            radius,
            quad,
        )?;
        Ok((e, h))
    };
    let (outer_q, outer_g) = both(c, outer_radius)?;
    let mut inner_q = Vec::with_capacity(cfg.len());
    let mut inner_g = Vec::with_capacity(cfg.len());
    let (mut sq, mut sg) = (CompensatedSum::new(), CompensatedSum::new());
    for ch in cfg.charges() {
        let (e, h) = both(ch.position, quad.exclusion)?;
        sq.add(e);
        sg.add(h);
        inner_q.push(e);
        inner_g.push(h);
    }
    Ok(FreeCharges {
        q_free: outer_q - sq.value(),
        g_free: outer_g - sg.value(),
        outer_radius,
        outer_q,
        outer_g,
        inner_q,
        inner_g,
    })
}

/// Fluxes of `E` through centroid-centred spheres of the given radii.
pub fn flux_ladder(
    cfg: &ChargeConfig,
    params: &ModelParams,
    radii: &[f64],
    quad: &QuadratureSpec,
) -> Result<Vec<(f64, f64)>> {
    let c = cfg.centroid();
    radii
        .iter()
        .map(|&r| {
            Ok((
                r,
                flux_through_sphere(|x| Ok(FieldState::at(cfg, params, x)?.e), c, r, quad)?,
            ))
        })
        .collect()
}

/// Direction of the probe ray, chosen off every lattice axis and plane.
const PROBE_RAY: Vec3 = Vec3::new(0.2672612419124244, 0.5345224838248488, 0.8017837257372732);

/// Least-squares slope of `ln ℋ` against `ln r` along a ray into charge `index`.
pub fn divergence_exponent_probe(
    cfg: &ChargeConfig,
    params: &ModelParams,
    index: usize,
    radii: &[f64],
) -> Result<f64> {
    let Some(ch) = cfg.charges().get(index) else {
        return Err(Error::InvalidInput(alloc::format!(
            "no charge with index {index}"
        )));
    };
    if radii.len() < 2
        || radii.windows(2).any(|w| !(w[1] < w[0]))
        || radii.iter().any(|r| !(*r > 0.0))
    {
        return Err(Error::InvalidInput(
            "probe radii must be positive and strictly decreasing".into(),
        ));
    }
    let mut pts = Vec::with_capacity(radii.len());
    for &r in radii {
        let h = energy_density_at(cfg, params, ch.position + PROBE_RAY * r)?;
        if !(h > 0.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "energy density {h} at r = {r} has no logarithm"
            )));
        }
        pts.push((libm::log(r), libm::log(h)));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

/// Axis-aligned lattice of `n[0] × n[1] × n[2]` points spanning `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub lo: Point3,
    pub hi: Point3,
    pub n: [usize; 3],
}

impl Grid {
    pub fn cube(half_width: f64, n: usize) -> Self {
        let h = Vec3::new(half_width, half_width, half_width);
        Self {
            lo: -h,
            hi: h,
            n: [n, n, n],
        }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = (self.lo.to_array()[axis], self.hi.to_array()[axis]);
        if self.n[axis] <= 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (self.n[axis] - 1) as f64
        }
    }

    /// Points in x-major, z-fastest order.
    pub fn points(&self) -> impl Iterator<Item = Point3> + '_ {
        let [nx, ny, nz] = self.n;
        (0..nx).flat_map(move |i| {
            (0..ny).flat_map(move |j| {
                (0..nz)
                    .map(move |k| Vec3::new(self.coord(0, i), self.coord(1, j), self.coord(2, k)))
            })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointResidual {
    pub at: Point3,
    pub div_d: f64,
    pub div_b: f64,
    pub curl_d: f64,
    pub curl_b: f64,
    pub curl_e: f64,
    pub curl_h: f64,
    /// `|∇×E + j_m| / max(1, |j_m|)` against the analytic current, when one exists.
    pub faraday: Option<f64>,
    /// `|∇×H − j_e| / max(1, |j_e|)` against the analytic current, when one exists.
    pub ampere: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub max_div_d: f64,
    pub max_div_b: f64,
    pub max_curl_d: f64,
    pub max_curl_b: f64,
    pub max_curl_e: f64,
    pub max_curl_h: f64,
    pub max_faraday: Option<f64>,
    pub max_ampere: Option<f64>,
    pub points: Vec<PointResidual>,
    pub skipped: Vec<Point3>,
    pub failures: Vec<(Point3, Error)>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

/// Finite-difference residuals of the static field equations at one point.
pub fn point_residual(
    cfg: &ChargeConfig,
    params: &ModelParams,
    x: Point3,
    h: f64,
) -> Result<PointResidual> {
    let mut jac = [[[0.0; 3]; 3]; 4];
    for k in 0..3 {
        let step = Vec3::axis(k) * h;
        let p = FieldState::at(cfg, params, x + step)?;
        let m = FieldState::at(cfg, params, x - step)?;
        for (slot, (a, b)) in [(p.d, m.d), (p.b, m.b), (p.e, m.e), (p.h, m.h)]
            .into_iter()
            .enumerate()
        {
            jac[slot][k] = ((a - b) / (2.0 * h)).to_array();
        }
    }
    let curl_e = fd::curl_of_jacobian(&jac[2]);
    let curl_h = fd::curl_of_jacobian(&jac[3]);
    let analytic = analytic_currents(params, cfg, x)?;
    Ok(PointResidual {
        at: x,
        div_d: fd::div_of_jacobian(&jac[0]).abs(),
        div_b: fd::div_of_jacobian(&jac[1]).abs(),
        curl_d: fd::curl_of_jacobian(&jac[0]).norm(),
        curl_b: fd::curl_of_jacobian(&jac[1]).norm(),
        curl_e: curl_e.norm(),
        curl_h: curl_h.norm(),
        faraday: analytic.map(|j| (curl_e + j.j_m).norm() / j.j_m.norm().max(1.0)),
        ampere: analytic.map(|j| (curl_h - j.j_e).norm() / j.j_e.norm().max(1.0)),
    })
}

/// Residuals over `points`; nodes whose stencil reaches an exclusion ball are skipped.
pub fn residual_suite<I: IntoIterator<Item = Point3>>(
    cfg: &ChargeConfig,
    params: &ModelParams,
    points: I,
) -> ResidualReport {
    let mut rep = ResidualReport::default();
    for x in points {
        let h = fd::default_step(x);
        if !fd::stencil_clear(cfg, x, h, 1.0) {
            rep.skipped.push(x);
            continue;
        }
        match point_residual(cfg, params, x, h) {
            Ok(r) => rep.absorb(r),
            Err(e) => rep.failures.push((x, e)),
        }
    }
    rep
}

impl ResidualReport {
    pub fn absorb(&mut self, r: PointResidual) {
        self.max_div_d = self.max_div_d.max(r.div_d);
        self.max_div_b = self.max_div_b.max(r.div_b);
        self.max_curl_d = self.max_curl_d.max(r.curl_d);
        self.max_curl_b = self.max_curl_b.max(r.curl_b);
        self.max_curl_e = self.max_curl_e.max(r.curl_e);
        self.max_curl_h = self.max_curl_h.max(r.curl_h);
        self.max_faraday = max_opt(self.max_faraday, r.faraday);
        self.max_ampere = max_opt(self.max_ampere, r.ampere);
        self.points.push(r);
    }

    /// Largest of the residuals that vanish identically in every model.
    pub fn max_structural(&self) -> f64 {
        self.max_div_d
            .max(self.max_div_b)
            .max(self.max_curl_d)
            .max(self.max_curl_b)
    }
}

#[cfg(test)]
mod tests;
