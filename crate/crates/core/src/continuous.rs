//! Continuously distributed electric and magnetic charge densities.
//!
//! `D = ∇u` and `B = ∇v` with `u`, `v` the Newton potentials of the
//! densities, after which `E`, `H` follow from the same pointwise inversion
//! as for point sources.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::constitutive::FieldState;
use crate::currents::electrostatic_curl_coefficient;
use crate::error::{Error, Result};
use crate::math::{sqrt, CompensatedSum};
use crate::models::ModelParams;
use crate::observables::QuadratureSpec;
use crate::quadrature::{gauss_legendre, integrate, Tolerance};
use crate::sources::FieldKind;
use crate::vector::{Point3, Vec3};
use crate::FOUR_PI;

/// Radius, in widths, beyond which a Gaussian is treated as zero (`e^{−50}`).
const GAUSSIAN_REACH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub center: Point3,
    pub sigma: f64,
    pub charge: f64,
}

impl Gaussian {
    pub fn value(&self, y: Point3) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.charge / (libm::pow(2.0 * PI * s2, 1.5))
            * libm::exp(-0.5 * (y - self.center).norm2() / s2)
    }

    /// `−Q erf(r / (√2 σ)) / (4π r)`.
    pub fn potential(&self, x: Point3) -> f64 {
        let r = (x - self.center).norm();
        let a = core::f64::consts::SQRT_2 * self.sigma;
        if r < 1e-8 * a {
            return -self.charge * 2.0 / (FOUR_PI * a * libm::sqrt(PI));
        }
        -self.charge * libm::erf(r / a) / (FOUR_PI * r)
    }
}

/// Trilinearly interpolated density on a lattice, zero outside the lattice box.
///
/// Values are stored row-major with `z` fastest: index `(i·ny + j)·nz + k`.
#[derive(Debug, Clone, PartialEq)]
pub struct GriddedDensity {
    dims: [usize; 3],
    spacing: [f64; 3],
    origin: Point3,
    values: Vec<f64>,
}

impl GriddedDensity {
    pub fn new(
        dims: [usize; 3],
        spacing: [f64; 3],
        origin: Point3,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dims.iter().any(|&n| n < 2) {
            return Err(Error::InvalidInput(alloc::format!(
                "lattice needs at least 2 nodes per axis, got {dims:?}"
            )));
        }
        if spacing.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::InvalidInput(alloc::format!(
                "lattice spacing must be positive, got {spacing:?}"
            )));
        }
        let n = dims[0] * dims[1] * dims[2];
        if values.len() != n {
            return Err(Error::InvalidInput(alloc::format!(
                "lattice has {n} nodes but {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) || !origin.is_finite() {
            return Err(Error::InvalidInput("lattice data must be finite".into()));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn origin(&self) -> Point3 {
        self.origin
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.dims[1] + j) * self.dims[2] + k]
    }

    fn upper(&self) -> Point3 {
        let [nx, ny, nz] = self.dims;
        let [hx, hy, hz] = self.spacing;
        self.origin
            + Vec3::new(
                (nx - 1) as f64 * hx,
                (ny - 1) as f64 * hy,
                (nz - 1) as f64 * hz,
            )
    }

    pub fn value(&self, y: Point3) -> f64 {
        let rel = (y - self.origin).to_array();
        let mut idx = [0usize; 3];
        let mut frac = [0.0; 3];
        for a in 0..3 {
            let t = rel[a] / self.spacing[a];
            let last = (self.dims[a] - 1) as f64;
            if !(t >= 0.0 && t <= last) {
                return 0.0;
            }
            let i = (libm::floor(t) as usize).min(self.dims[a] - 2);
            idx[a] = i;
            frac[a] = t - i as f64;
        }
        let mut v = 0.0;
        for c in 0..8 {
            let (di, dj, dk) = (c >> 2 & 1, c >> 1 & 1, c & 1);
            let w = (if di == 1 { frac[0] } else { 1.0 - frac[0] })
                * (if dj == 1 { frac[1] } else { 1.0 - frac[1] })
                * (if dk == 1 { frac[2] } else { 1.0 - frac[2] });
            if w != 0.0 {
                v += w * self.at(idx[0] + di, idx[1] + dj, idx[2] + dk);
            }
        }
        v
    }

    /// Exact integral of the interpolant (the trapezoid sum).
    pub fn total(&self) -> f64 {
        let [nx, ny, nz] = self.dims;
        let w = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        let mut s = CompensatedSum::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    s.add(w(i, nx) * w(j, ny) * w(k, nz) * self.at(i, j, k));
                }
            }
        }
        s.value() * self.spacing.iter().product::<f64>()
    }
}

/// User-supplied density with its support ball and total.
#[derive(Clone)]
pub struct CustomDensity {
    pub f: Arc<dyn Fn(Point3) -> f64 + Send + Sync>,
    pub center: Point3,
    pub radius: f64,
    pub total: f64,
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("total", &self.total)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Density {
    Zero,
    Gaussian(Gaussian),
    Mixture(Vec<Gaussian>),
    /// `A exp(−1 / (1 − |y−c|²/R²))` inside the ball of radius `R`, normalized to `charge`.
    Bump {
        center: Point3,
        radius: f64,
        charge: f64,
    },
    Gridded(Arc<GriddedDensity>),
    Custom(CustomDensity),
}

/// `∫_{|y|<1} exp(−1/(1−|y|²)) dy`.
fn bump_mass() -> f64 {
    let tol = Tolerance::new(1e-14, 0.0, 200);
    let i = integrate(
        |r: f64| Ok(4.0 * PI * r * r * libm::exp(-1.0 / (1.0 - r * r))),
        0.0,
        1.0 - 1e-12,
        tol,
    )
    .expect("bump profile is finite on (0, 1)");
    i.value
}

impl Density {
    pub fn gaussian(center: Point3, sigma: f64, charge: f64) -> Result<Self> {
        Ok(Density::Gaussian(checked_gaussian(center, sigma, charge)?))
    }

    pub fn mixture(parts: Vec<Gaussian>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidInput(
                "Gaussian mixture needs at least one component".into(),
            ));
        }
        for g in &parts {
            checked_gaussian(g.center, g.sigma, g.charge)?;
        }
        Ok(Density::Mixture(parts))
    }

    pub fn bump(center: Point3, radius: f64, charge: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite() && charge.is_finite() && center.is_finite()) {
            return Err(Error::InvalidInput(alloc::format!(
                "invalid bump: radius {radius}, charge {charge}"
            )));
        }
        Ok(Density::Bump {
            center,
            radius,
            charge,
        })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Density::Zero => true,
            Density::Gaussian(g) => g.charge == 0.0,
            Density::Mixture(m) => m.iter().all(|g| g.charge == 0.0),
            Density::Bump { charge, .. } => *charge == 0.0,
            Density::Gridded(g) => g.values.iter().all(|v| *v == 0.0),
            Density::Custom(_) => false,
        }
    }

    pub fn value(&self, y: Point3) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Gaussian(g) => g.value(y),
            Density::Mixture(m) => m.iter().map(|g| g.value(y)).sum(),
            Density::Bump {
                center,
                radius,
                charge,
            } => {
                let t = (y - *center).norm2() / (radius * radius);
                if t >= 1.0 {
                    0.0
                } else {
                    charge / (bump_mass() * radius * radius * radius) * libm::exp(-1.0 / (1.0 - t))
                }
            }
            Density::Gridded(g) => g.value(y),
            Density::Custom(c) => (c.f)(y),
        }
    }

    pub fn total(&self) -> f64 {
        match self {
            Density::Zero => 0.0,
            Density::Gaussian(g) => g.charge,
            Density::Mixture(m) => m.iter().map(|g| g.charge).sum(),
            Density::Bump { charge, .. } => *charge,
            Density::Gridded(g) => g.total(),
            Density::Custom(c) => c.total,
        }
    }

    /// Length scale of the density's variation.
    pub fn width(&self) -> f64 {
        match self {
            Density::Zero => 1.0,
            Density::Gaussian(g) => g.sigma,
            Density::Mixture(m) => m.iter().map(|g| g.sigma).fold(f64::INFINITY, f64::min),
            Density::Bump { radius, .. } => 0.25 * radius,
            Density::Gridded(g) => g.spacing.iter().copied().fold(f64::INFINITY, f64::min),
            Density::Custom(c) => 0.1 * c.radius,
        }
    }

    /// Pieces integrated separately, each with a support ball.
    fn pieces(&self) -> Vec<Piece<'_>> {
        match self {
            Density::Zero => Vec::new(),
            Density::Gaussian(g) => alloc::vec![Piece::gaussian(g)],
            Density::Mixture(m) => m.iter().map(Piece::gaussian).collect(),
            Density::Bump { center, radius, .. } => {
                alloc::vec![Piece::whole(self, *center, *radius)]
            }
            Density::Gridded(g) => {
                let (lo, hi) = (g.origin, g.upper());
                alloc::vec![Piece::whole(self, (lo + hi) * 0.5, 0.5 * (hi - lo).norm())]
            }
            Density::Custom(c) => alloc::vec![Piece::whole(self, c.center, c.radius)],
        }
    }
}

fn checked_gaussian(center: Point3, sigma: f64, charge: f64) -> Result<Gaussian> {
    if !(sigma > 0.0 && sigma.is_finite() && charge.is_finite() && center.is_finite()) {
        return Err(Error::InvalidInput(alloc::format!(
            "invalid Gaussian: sigma {sigma}, charge {charge}"
        )));
    }
    Ok(Gaussian {
        center,
        sigma,
        charge,
    })
}

#[derive(Clone, Copy)]
enum Eval<'a> {
    Whole(&'a Density),
    Component(&'a Gaussian),
}

#[derive(Clone, Copy)]
struct Piece<'a> {
    eval: Eval<'a>,
    center: Point3,
    radius: f64,
}

impl<'a> Piece<'a> {
    fn gaussian(g: &'a Gaussian) -> Self {
        Self {
            eval: Eval::Component(g),
            center: g.center,
            radius: GAUSSIAN_REACH * g.sigma,
        }
    }

    fn whole(d: &'a Density, center: Point3, radius: f64) -> Self {
        Self {
            eval: Eval::Whole(d),
            center,
            radius,
        }
    }

    fn value(&self, y: Point3) -> f64 {
        match self.eval {
            Eval::Whole(d) => d.value(y),
            Eval::Component(g) => g.value(y),
        }
    }
}

/// Electric and magnetic charge densities with their decay exponent.
#[derive(Debug, Clone)]
pub struct ContinuousSource {
    pub rho_e: Density,
    pub rho_m: Density,
    pub gamma: f64,
}

impl ContinuousSource {
    /// Validates `γ > 3` and samples `|ρ(x)| |x|^γ` along rays for `|x| ≥ 10`.
    pub fn new(rho_e: Density, rho_m: Density, gamma: f64) -> Result<Self> {
        if !(gamma > 3.0) {
            return Err(Error::InvalidInput(alloc::format!(
                "decay exponent must exceed 3 for a finite total charge, got {gamma}"
            )));
        }
        let src = Self {
            rho_e,
            rho_m,
            gamma,
        };
        src.check_decay()?;
        Ok(src)
    }

    pub fn electric(rho_e: Density, gamma: f64) -> Result<Self> {
        Self::new(rho_e, Density::Zero, gamma)
    }

    pub fn total_q(&self) -> f64 {
        self.rho_e.total()
    }

    pub fn total_g(&self) -> f64 {
        self.rho_m.total()
    }

    pub fn density(&self, kind: FieldKind) -> &Density {
        match kind {
            FieldKind::Electric => &self.rho_e,
            FieldKind::Magnetic => &self.rho_m,
        }
    }

    fn check_decay(&self) -> Result<()> {
        const RAYS: [Vec3; 6] = [
            Vec3::X,
            Vec3::Y,
            Vec3::Z,
            Vec3::new(-0.6, 0.0, 0.8),
            Vec3::new(0.0, -0.8, -0.6),
            Vec3::new(0.48, 0.6, -0.64),
        ];
        for rho in [&self.rho_e, &self.rho_m] {
            for n in RAYS {
                let mut bound: Option<f64> = None;
                for k in 0..8 {
                    let r = 10.0 * libm::pow(2.0, k as f64);
                    let scaled = rho.value(n * r).abs() * libm::pow(r, self.gamma);
                    match bound {
                        None => bound = Some(scaled.max(f64::MIN_POSITIVE)),
                        Some(c) if scaled > 2.0 * c => {
                            return Err(Error::InvalidInput(alloc::format!(
                                "density decays slower than |x|^-{} along {n:?} (|ρ||x|^γ = {scaled} at |x| = {r})",
                                self.gamma
                            )))
                        }
                        _ => {}
                    }
                }
            }
        }
        Ok(())
    }
}

/// Polar frame with `axis` as the pole.
fn frame(axis: Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.6 { Vec3::X } else { Vec3::Y };
    let e1 = helper.cross(axis).normalized();
    (e1, axis.cross(e1))
}

#[derive(Clone, Copy)]
struct Orders {
    radial: usize,
    polar: usize,
    azimuthal: usize,
}

impl Orders {
    fn doubled(self) -> Self {
        Self {
            radial: 2 * self.radial,
            polar: 2 * self.polar,
            azimuthal: 2 * self.azimuthal,
        }
    }
}

const START: Orders = Orders {
    radial: 12,
    polar: 12,
    azimuthal: 8,
};
const DOUBLINGS: usize = 4;

/// `∫ K(r) ρ(x + r n) r² dr dΩ` over the support of `piece` with a product
/// Gauss rule in spherical coordinates about `x`, pole towards the piece,
/// restricted at each radius to the cap that meets the support ball.
fn spherical<const N: usize>(
    piece: &Piece<'_>,
    x: Point3,
    o: Orders,
    kernel: impl Fn(f64, Vec3) -> [f64; N],
) -> [f64; N] {
    let to = piece.center - x;
    let d = to.norm();
    let rs = piece.radius;
    let axis = if d > 1e-12 * rs { to / d } else { Vec3::Z };
    let (e1, e2) = frame(axis);
    let mut breaks = Vec::with_capacity(6);
    if d > rs {
        breaks.extend_from_slice(&[d - rs, d - 0.5 * rs, d, d + 0.5 * rs, d + rs]);
    } else {
        breaks.push(0.0);
        if rs - d > 0.0 {
            breaks.push(rs - d);
        }
        for r in [d + 0.5 * rs, d + rs] {
            if r > *breaks.last().unwrap() {
                breaks.push(r);
            }
        }
    }
    let (xr, wr) = gauss_legendre(o.radial);
    let (xm, wm) = gauss_legendre(o.polar);
    let dphi = 2.0 * PI / o.azimuthal as f64;
    let trig: Vec<(f64, f64)> = (0..o.azimuthal)
        .map(|j| {
            let phi = (j as f64 + 0.5) * dphi;
            (libm::cos(phi), libm::sin(phi))
        })
        .collect();
    let mut acc = [CompensatedSum::new(); N];
    for seg in breaks.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        for (t, w) in xr.iter().zip(&wr) {
            let r = c + h * t;
            if r <= 0.0 {
                continue;
            }
            let mu_lo = if d > 0.0 {
                ((r * r + d * d - rs * rs) / (2.0 * r * d)).clamp(-1.0, 1.0)
            } else {
                -1.0
            };
            if mu_lo >= 1.0 {
                continue;
            }
            let (mc, mh) = (0.5 * (1.0 + mu_lo), 0.5 * (1.0 - mu_lo));
            for (s, v) in xm.iter().zip(&wm) {
                let mu = mc + mh * s;
                let st = sqrt((1.0 - mu * mu).max(0.0));
                let weight = w * h * v * mh * dphi;
                for &(cp, sp) in &trig {
                    let n = axis * mu + (e1 * cp + e2 * sp) * st;
                    let rho = piece.value(x + n * r);
                    if rho == 0.0 {
                        continue;
                    }
                    let k = kernel(r, n);
                    for i in 0..N {
                        acc[i].add(weight * rho * k[i]);
                    }
                }
            }
        }
    }
    acc.map(|s| s.value())
}

fn converge<const N: usize>(
    quad: &QuadratureSpec,
    mut f: impl FnMut(Orders) -> [f64; N],
) -> Result<[f64; N]> {
    let mut o = START;
    let mut prev = f(o);
    for _ in 0..DOUBLINGS {
        o = o.doubled();
        let cur = f(o);
        let diff = prev
            .iter()
            .zip(&cur)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let size = cur.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if diff <= quad.abs_tol.max(quad.rel_tol * size) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence(alloc::format!(
        "Newton potential did not settle at orders {}x{}x{}",
        o.radial,
        o.polar,
        o.azimuthal
    )))
}

const CELL_DEPTH: usize = 14;

/// Trilinear lattice, cell by cell: Gauss order from the cell's distance to `x`, octree splits near `x`.
fn cellwise<const N: usize>(
    g: &GriddedDensity,
    x: Point3,
    rel: f64,
    kernel: impl Fn(Vec3) -> [f64; N] + Copy,
) -> [f64; N] {
    let mut acc = [CompensatedSum::new(); N];
    let [nx, ny, nz] = g.dims;
    let h = Vec3::from_array(g.spacing);
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            for k in 0..nz - 1 {
                let corners = [
                    g.at(i, j, k),
                    g.at(i, j, k + 1),
                    g.at(i, j + 1, k),
                    g.at(i, j + 1, k + 1),
                    g.at(i + 1, j, k),
                    g.at(i + 1, j, k + 1),
                    g.at(i + 1, j + 1, k),
                    g.at(i + 1, j + 1, k + 1),
                ];
                if corners.iter().all(|v| *v == 0.0) {
                    continue;
                }
                let lo = g.origin + Vec3::new(i as f64 * h.x, j as f64 * h.y, k as f64 * h.z);
                let cell = Cell { lo, h, corners };
                cell.integrate(x, rel, 0, kernel, &mut acc);
            }
        }
    }
    acc.map(|s| s.value())
}

struct Cell {
    lo: Point3,
    h: Vec3,
    corners: [f64; 8],
}

impl Cell {
    fn value(&self, t: Vec3) -> f64 {
        let c = &self.corners;
        let lerp = |a: f64, b: f64, w: f64| a + (b - a) * w;
        let x00 = lerp(c[0], c[4], t.x);
        let x01 = lerp(c[1], c[5], t.x);
        let x10 = lerp(c[2], c[6], t.x);
        let x11 = lerp(c[3], c[7], t.x);
        lerp(lerp(x00, x01, t.z), lerp(x10, x11, t.z), t.y)
    }

    fn integrate<const N: usize>(
        &self,
        x: Point3,
        rel: f64,
        depth: usize,
        kernel: impl Fn(Vec3) -> [f64; N] + Copy,
        acc: &mut [CompensatedSum; N],
    ) {
        self.integrate_part(x, rel, depth, Vec3::ZERO, 1.0, kernel, acc);
    }

    /// Sub-box `[t0, t0 + w]` of the unit cell.
    #[allow(clippy::too_many_arguments)]
    fn integrate_part<const N: usize>(
        &self,
        x: Point3,
        rel: f64,
        depth: usize,
        t0: Vec3,
        w: f64,
        kernel: impl Fn(Vec3) -> [f64; N] + Copy,
        acc: &mut [CompensatedSum; N],
    ) {
        let lo = self.lo + Vec3::new(t0.x * self.h.x, t0.y * self.h.y, t0.z * self.h.z);
        let ext = self.h * w;
        let hi = lo + ext;
        let nearest = Vec3::new(
            x.x.clamp(lo.x, hi.x),
            x.y.clamp(lo.y, hi.y),
            x.z.clamp(lo.z, hi.z),
        );
        let dist = (nearest - x).norm();
        let size = ext.norm();
        let ratio = 0.5 * size / dist;
        if !(ratio < 0.5) && depth < CELL_DEPTH {
            let half = 0.5 * w;
            for corner in 0..8 {
                let off = Vec3::new(
                    (corner >> 2 & 1) as f64,
                    (corner >> 1 & 1) as f64,
                    (corner & 1) as f64,
                ) * half;
                self.integrate_part(x, rel, depth + 1, t0 + off, half, kernel, acc);
            }
            return;
        }
        let n = if ratio < 0.5 {
            libm::ceil(libm::log(rel) / (2.0 * libm::log(ratio))).clamp(2.0, 16.0) as usize
        } else {
            4
        };
        let (nodes, weights) = gauss_legendre(n);
        let vol = ext.x * ext.y * ext.z / 8.0;
        for (a, wa) in nodes.iter().zip(&weights) {
            for (b, wb) in nodes.iter().zip(&weights) {
                for (c, wc) in nodes.iter().zip(&weights) {
                    let t = t0 + Vec3::new(1.0 + a, 1.0 + b, 1.0 + c) * (0.5 * w);
                    let rho = self.value(t);
                    if rho == 0.0 {
                        continue;
                    }
                    let y = self.lo + Vec3::new(t.x * self.h.x, t.y * self.h.y, t.z * self.h.z);
                    let k = kernel(y - x);
                    let weight = wa * wb * wc * vol * rho;
                    for i in 0..N {
                        if k[i].is_finite() {
                            acc[i].add(weight * k[i]);
                        }
                    }
                }
            }
        }
    }
}

/// `u(x) = ∫ Γ(x − y) ρ(y) dy` with `Γ(x) = −1/(4π|x|)`.
pub fn newton_potential_of(rho: &Density, x: Point3, quad: &QuadratureSpec) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::InvalidInput(alloc::format!(
            "non-finite evaluation point {x:?}"
        )));
    }
    if let Density::Gridded(g) = rho {
        let rel = quad.rel_tol.max(1e-14);
        return Ok(cellwise(g, x, rel, |v| [-1.0 / (FOUR_PI * v.norm())])[0]);
    }
    let mut total = CompensatedSum::new();
    for piece in rho.pieces() {
        let [u] = converge(quad, |o| spherical(&piece, x, o, |r, _| [-r / FOUR_PI]))?;
        total.add(u);
    }
    Ok(total.value())
}

/// Newton potential of the electric density.
pub fn newton_potential(src: &ContinuousSource, x: Point3, quad: &QuadratureSpec) -> Result<f64> {
    newton_potential_of(&src.rho_e, x, quad)
}

/// `∇u = ∫ ∇Γ(x − y) ρ(y) dy`, the kernel-gradient convolution.
pub fn newton_gradient_of(rho: &Density, x: Point3, quad: &QuadratureSpec) -> Result<Vec3> {
    if let Density::Gridded(g) = rho {
        let rel = quad.rel_tol.max(1e-14);
        let k = cellwise(g, x, rel, |v| {
            let r = v.norm();
            let c = 1.0 / (FOUR_PI * r * r * r);
            [-v.x * c, -v.y * c, -v.z * c]
        });
        return Ok(Vec3::from_array(k));
    }
    let mut total = [CompensatedSum::new(); 3];
    for piece in rho.pieces() {
        let g = converge(quad, |o| {
            spherical(&piece, x, o, |_, n| {
                [-n.x / FOUR_PI, -n.y / FOUR_PI, -n.z / FOUR_PI]
            })
        })?;
        for i in 0..3 {
            total[i].add(g[i]);
        }
    }
    Ok(Vec3::new(
        total[0].value(),
        total[1].value(),
        total[2].value(),
    ))
}

/// Fourth-order central-difference gradient of the Newton potential, step `0.01 ×` the source width.
/// Lattice data takes the kernel-gradient convolution instead.
pub fn potential_gradient(rho: &Density, x: Point3, quad: &QuadratureSpec) -> Result<Vec3> {
    if rho.is_zero() {
        return Ok(Vec3::ZERO);
    }
    if matches!(rho, Density::Gridded(_)) {
        return newton_gradient_of(rho, x, quad);
    }
    let h = 0.01 * rho.width();
    crate::fd::fd_gradient4(|y| newton_potential_of(rho, y, quad), x, h)
}

/// `(E, H)` of a continuous source from `D = ∇u`, `B = ∇v`.
pub fn continuous_fields(
    src: &ContinuousSource,
    params: &ModelParams,
    x: Point3,
    quad: &QuadratureSpec,
) -> Result<FieldState> {
    let d = potential_gradient(&src.rho_e, x, quad)?;
    let b = potential_gradient(&src.rho_m, x, quad)?;
    Ok(FieldState::from_prescribed(params, d, b)?.0)
}

/// `∇×E = c(D) ∇u × ∇|∇u|²` for an electric source, with the Hessian of `u` by differences of `D`.
pub fn curl_formula_continuous(
    src: &ContinuousSource,
    params: &ModelParams,
    x: Point3,
    quad: &QuadratureSpec,
) -> Result<Vec3> {
    if !src.rho_m.is_zero() {
        return Err(Error::InvalidInput(
            "the curl formula holds for electric sources only".into(),
        ));
    }
    let rho = &src.rho_e;
    let d = potential_gradient(rho, x, quad)?;
    let c = electrostatic_curl_coefficient(params, d)?;
    if c == 0.0 {
        return Ok(Vec3::ZERO);
    }
    let hess =
        crate::fd::fd_jacobian4(|y| potential_gradient(rho, y, quad), x, 0.01 * rho.width())?;
    let mut grad = [0.0; 3];
    for (k, g) in grad.iter_mut().enumerate() {
        *g = 2.0 * (hess[k][0] * d.x + hess[k][1] * d.y + hess[k][2] * d.z);
    }
    Ok(d.cross(Vec3::from_array(grad)) * c)
}

/// `∇×E` by central differences of [`continuous_fields`].
pub fn fd_curl_e(
    src: &ContinuousSource,
    params: &ModelParams,
    x: Point3,
    h: f64,
    quad: &QuadratureSpec,
) -> Result<Vec3> {
    crate::fd::fd_curl(|y| Ok(continuous_fields(src, params, y, quad)?.e), x, h)
}

/// `∇×H` by central differences of [`continuous_fields`].
pub fn fd_curl_h(
    src: &ContinuousSource,
    params: &ModelParams,
    x: Point3,
    h: f64,
    quad: &QuadratureSpec,
) -> Result<Vec3> {
    crate::fd::fd_curl(|y| Ok(continuous_fields(src, params, y, quad)?.h), x, h)
}
