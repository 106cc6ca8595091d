use nled_core::constitutive::{forward, medium_matrix};
use nled_core::continuous::{newton_gradient_of, ContinuousSource, Density};
use nled_core::currents::{analytic_currents, jm1_partial_sum};
use nled_core::fd::{default_step, fd_div, stencil_clear};
use nled_core::observables::{
    free_charge_with_inner_spheres, point_residual, total_energy, QuadratureSpec,
};
use nled_core::specfn::{direction_matched_cubic_root, lambert_w};
use nled_core::{ChargeConfig, FieldState, ModelKind, ModelParams, Point3, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub passed: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Suite {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            passed: true,
            tolerance,
            max_residual: 0.0,
            samples: 0,
            notes: Vec::new(),
        }
    }

    fn record(&mut self, residual: f64) {
        self.samples += 1;
        if !(residual <= self.tolerance) {
            self.passed = false;
        }
        if residual.is_nan() {
            self.max_residual = f64::NAN;
        } else if !self.max_residual.is_nan() {
            self.max_residual = self.max_residual.max(residual);
        }
    }

    fn fail(&mut self, note: String) {
        self.passed = false;
        if self.notes.len() < 8 {
            self.notes.push(note);
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub model: &'static str,
    pub suites: Vec<Suite>,
}

/// Runs every suite that applies to the configuration.
pub fn run(config: &Config, seed: u64) -> Result<VerifyReport, CliError> {
    let params = config.params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut suites = vec![special_functions(&mut rng)];
    if !config.charges.is_empty() {
        let cfg = config.charge_config()?;
        let quad = config.quadrature_for(&cfg)?;
        let points = sample_points(&mut rng, &cfg, 500);
        suites.push(round_trip(&params, &cfg, &points));
        if matches!(params.kind(), ModelKind::Classical) {
            suites.push(medium_determinant(&params, &cfg, &points));
        }
        if let Some(s) = saturation(&params, &cfg, &points) {
            suites.push(s);
        }
        let grid: Vec<Point3> = config.grid()?.points().collect();
        suites.push(field_equations(&params, &cfg, &grid));
        if cfg.is_electric_only() {
            suites.push(jacobi(&params, &cfg, &points));
        }
        if let Some(s) = free_charge(&params, &cfg, &quad) {
            suites.push(s);
        }
        if let Some(s) = energy(&params, &cfg, &quad) {
            suites.push(s);
        }
    }
    if let Some(src) = config.continuous_source()? {
        let quad = config.continuous_quadrature()?;
        suites.extend(continuous(&src, &quad));
    }
    Ok(VerifyReport {
        passed: suites.iter().all(|s| s.passed),
        model: params.name(),
        suites,
    })
}

/// Length below which points count as close to a charge.
fn near_scale(cfg: &ChargeConfig) -> f64 {
    let sep = cfg.min_separation();
    if sep.is_finite() {
        sep.min(1.0)
    } else {
        1.0
    }
}

/// Log-radially spread points about the centroid, at least `0.2 ×` the near scale from every charge.
fn sample_points(rng: &mut ChaCha8Rng, cfg: &ChargeConfig, count: usize) -> Vec<Point3> {
    let reach = cfg.radius_about_centroid().max(near_scale(cfg));
    let min = 0.2 * near_scale(cfg);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let r = reach * 10f64.powf(rng.random_range(-1.5..1.0));
        let dir = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if dir.norm() < 1e-3 {
            continue;
        }
        let x = cfg.centroid() + dir.normalized() * r;
        if cfg.nearest(x).1 > min {
            out.push(x);
        }
    }
    out
}

fn rel(a: Vec3, b: Vec3) -> f64 {
    let scale = b.norm();
    if scale == 0.0 {
        a.norm()
    } else {
        (a - b).norm() / scale
    }
}

fn special_functions(rng: &mut ChaCha8Rng) -> Suite {
    let mut s = Suite::new("special_functions", 1e-10);
    for i in 0..200 {
        let x = 10f64.powf(-12.0 + 24.0 * i as f64 / 199.0);
        match lambert_w(x) {
            Ok(w) => s.record((w * w.exp() - x).abs() / x),
            Err(e) => s.fail(format!("W({x}): {e}")),
        }
    }
    for _ in 0..1000 {
        let gamma = rng.random_range(-5.0..5.0);
        let sigma2 = 10f64.powf(rng.random_range(-6.0..4.0));
        match direction_matched_cubic_root(gamma, sigma2) {
            Ok(a) => s.record(((gamma + a) * (gamma + a) * a - sigma2).abs() / sigma2.max(1.0)),
            Err(e) => s.fail(format!("cubic ({gamma}, {sigma2}): {e}")),
        }
    }
    s
}

fn round_trip(params: &ModelParams, cfg: &ChargeConfig, points: &[Point3]) -> Suite {
    let tol = match params.kind() {
        ModelKind::FractionalPower { .. } | ModelKind::Custom(_) => 1e-7,
        _ => 1e-9,
    };
    let mut s = Suite::new("constitutive_round_trip", tol);
    let out: Vec<_> = points
        .par_iter()
        .map(|&x| -> Result<f64, nled_core::Error> {
            let st = FieldState::at(cfg, params, x)?;
            let (d, h, _) = forward(params, st.e, st.b)?;
            Ok(rel(d, st.d).max(rel(h, st.h)))
        })
        .collect();
    for (x, r) in points.iter().zip(out) {
        match r {
            Ok(v) => s.record(v),
            Err(e) => s.fail(format!("{:?}: {}", x.to_array(), e)),
        }
    }
    s
}

fn medium_determinant(params: &ModelParams, cfg: &ChargeConfig, points: &[Point3]) -> Suite {
    let mut s = Suite::new("medium_determinant", 1e-10);
    for x in points {
        match FieldState::at(cfg, params, *x).and_then(|st| medium_matrix(params, st.e, st.b)) {
            Ok(m) => s.record((m.determinant() - 1.0).abs()),
            Err(e) => s.fail(format!("{:?}: {e}", x.to_array())),
        }
    }
    s
}

/// `|E|` stays below the model's field bound; the residual is `|E|` over the bound.
fn saturation(params: &ModelParams, cfg: &ChargeConfig, points: &[Point3]) -> Option<Suite> {
    if params.kappa() != 0.0 || !cfg.is_electric_only() {
        return None;
    }
    let bound = match params.kind() {
        ModelKind::Classical => 1.0 / params.beta().sqrt(),
        ModelKind::Logarithmic => (2.0 / params.beta()).sqrt(),
        _ => return None,
    };
    let mut s = Suite::new("saturation", 1.0);
    s.notes.push(format!("|E| / {bound} must stay below 1"));
    let mut pts = points.to_vec();
    for c in cfg.charges() {
        pts.extend([1e-2, 1e-3, 1e-4].map(|r| c.position + Vec3::new(0.6, 0.0, 0.8) * r));
    }
    // beyond βD² ~ 1e12 the bound and |E| share a double
    let before = pts.len();
    pts.retain(|&x| {
        cfg.displacement_field(x)
            .is_ok_and(|d| params.beta() * d.norm2() <= 1e12)
    });
    if pts.len() < before {
        s.notes.push(format!(
            "{} points with βD² > 1e12 left out",
            before - pts.len()
        ));
    }
    for x in pts {
        match FieldState::at(cfg, params, x) {
            Ok(st) => {
                let ratio = st.e.norm() / bound;
                if ratio >= 1.0 {
                    s.fail(format!("{:?}: |E| = {}", x.to_array(), st.e.norm()));
                }
                s.record(ratio);
            }
            Err(e) => s.fail(format!("{:?}: {e}", x.to_array())),
        }
    }
    Some(s)
}

/// Finite-difference residuals on the configured grid, each divided by the local field scale `|F| / r`.
fn field_equations(params: &ModelParams, cfg: &ChargeConfig, grid: &[Point3]) -> Suite {
    let mut s = Suite::new("field_equations", 1e-5);
    let near = 0.02 * near_scale(cfg);
    let usable: Vec<Point3> = grid
        .iter()
        .copied()
        .filter(|&x| cfg.nearest(x).1 > near && stencil_clear(cfg, x, default_step(x), 1.0))
        .collect();
    let skipped = grid.len() - usable.len();
    if skipped > 0 {
        s.notes.push(format!(
            "{skipped} grid points within {near:e} of a charge skipped"
        ));
    }
    let out: Vec<_> = usable
        .par_iter()
        .map(|&x| -> Result<f64, nled_core::Error> {
            let r = point_residual(cfg, params, x, default_step(x))?;
            let st = FieldState::at(cfg, params, x)?;
            let field =
                st.d.norm()
                    .max(st.b.norm())
                    .max(st.e.norm())
                    .max(st.h.norm());
            let scale = field / cfg.nearest(x).1.min(1.0);
            let mut worst = [r.div_d, r.div_b, r.curl_d, r.curl_b]
                .into_iter()
                .fold(0.0, f64::max);
            if let Some(j) = analytic_currents(params, cfg, x)? {
                let f = r.faraday.unwrap_or(0.0) * j.j_m.norm().max(1.0);
                let a = r.ampere.unwrap_or(0.0) * j.j_e.norm().max(1.0);
                worst = worst.max(f).max(a);
            }
            Ok(if scale > 0.0 { worst / scale } else { worst })
        })
        .collect();
    for (x, r) in usable.iter().zip(out) {
        match r {
            Ok(v) => s.record(v),
            Err(e) => s.fail(format!("{:?}: {e}", x.to_array())),
        }
    }
    s
}

fn jacobi(params: &ModelParams, cfg: &ChargeConfig, points: &[Point3]) -> Suite {
    let mut s = Suite::new("jacobi_cancellation", 1e-12);
    for x in points {
        match jm1_partial_sum(cfg, params.beta(), *x) {
            Ok(j) => s.record(j.norm()),
            Err(e) => s.fail(format!("{:?}: {e}", x.to_array())),
        }
    }
    s
}

/// Expected `(Q_free, G_free)` where it is known in closed form.
fn expected_free_charges(params: &ModelParams, cfg: &ChargeConfig) -> Option<(f64, f64)> {
    let (q, g) = (cfg.total_q(), cfg.total_g());
    if cfg.is_electric_only()
        || cfg.is_magnetic_only()
        || params.kappa() > 0.0
        || params.is_linear()
    {
        return Some((q, g));
    }
    if matches!(params.kind(), ModelKind::Classical) && cfg.len() == 1 {
        return Some((q - g, g - q));
    }
    None
}

fn free_charge(params: &ModelParams, cfg: &ChargeConfig, quad: &QuadratureSpec) -> Option<Suite> {
    let (eq, eg) = expected_free_charges(params, cfg)?;
    let mut s = Suite::new("free_charge", 1e-3);
    match free_charge_with_inner_spheres(cfg, params, quad) {
        Ok(fc) => {
            let scale = eq.abs().max(eg.abs()).max(1.0);
            s.record((fc.q_free - eq).abs() / scale);
            s.record((fc.g_free - eg).abs() / scale);
            s.notes.push(format!(
                "q_free = {}, g_free = {} (expected {eq}, {eg})",
                fc.q_free, fc.g_free
            ));
        }
        Err(e) => s.fail(e.to_string()),
    }
    Some(s)
}

/// Finite total energy, or a reported divergence for a κ = 0 Born–Infeld dyon.
fn energy(params: &ModelParams, cfg: &ChargeConfig, quad: &QuadratureSpec) -> Option<Suite> {
    let dyonic = cfg.charges().iter().any(|c| c.q != 0.0 && c.g != 0.0);
    let expect_finite = match params.kind() {
        ModelKind::Classical => !(dyonic && params.kappa() == 0.0),
        ModelKind::Logarithmic if cfg.is_electric_only() || cfg.is_magnetic_only() => true,
        _ => return None,
    };
    let mut s = Suite::new("energy", 0.0);
    match total_energy(cfg, params, quad) {
        Ok(r) => {
            s.notes.push(format!(
                "energy {} (converged: {}), near-charge exponents {:?}",
                r.value, r.converged, r.near_charge_exponents
            ));
            let ok = if expect_finite {
                r.converged && r.value.is_finite() && r.value > 0.0
            } else {
                !r.converged
            };
            s.record(if ok { 0.0 } else { 1.0 });
        }
        Err(e) => s.fail(e.to_string()),
    }
    Some(s)
}

fn continuous(src: &ContinuousSource, quad: &QuadratureSpec) -> Vec<Suite> {
    let mut out = Vec::new();
    for (name, rho) in [
        ("continuous_far_field_e", &src.rho_e),
        ("continuous_far_field_m", &src.rho_m),
    ] {
        if rho.total().abs() < 1e-12 {
            continue;
        }
        let mut s = Suite::new(name, 0.02);
        for r in [30.0, 100.0] {
            let x = Vec3::new(0.36, 0.48, 0.8) * r;
            match newton_gradient_of(rho, x, quad) {
                Ok(d) => s.record(
                    (d.norm() * r * r * nled_core::FOUR_PI / rho.total().abs() - 1.0).abs(),
                ),
                Err(e) => s.fail(e.to_string()),
            }
        }
        out.push(s);
    }
    for (name, rho) in [
        ("continuous_gauss_law_e", &src.rho_e),
        ("continuous_gauss_law_m", &src.rho_m),
    ] {
        if rho.is_zero() {
            continue;
        }
        let mut s = Suite::new(name, 1e-3);
        let w = rho.width();
        let offsets = [
            Vec3::ZERO,
            Vec3::X,
            -Vec3::X,
            Vec3::Y,
            -Vec3::Y,
            Vec3::Z,
            -Vec3::Z,
            Vec3::new(0.6, -0.48, 0.64),
        ];
        let probes: Vec<Point3> = anchors(rho)
            .into_iter()
            .flat_map(|c| offsets.map(|o| c + o * (1.5 * w)))
            .collect();
        let peak = probes
            .iter()
            .map(|p| rho.value(*p).abs())
            .fold(0.0, f64::max);
        let res: Vec<_> = probes
            .par_iter()
            .map(|&x| {
                fd_div(|y| newton_gradient_of(rho, y, quad), x, 0.02 * w)
                    .map(|d| (d - rho.value(x)).abs())
            })
            .collect();
        for r in res {
            match r {
                Ok(v) => s.record(if peak > 0.0 { v / peak } else { v }),
                Err(e) => s.fail(e.to_string()),
            }
        }
        out.push(s);
    }
    out
}

/// Points the density is concentrated about.
fn anchors(rho: &Density) -> Vec<Point3> {
    match rho {
        Density::Zero => Vec::new(),
        Density::Gaussian(g) => vec![g.center],
        Density::Mixture(m) => m.iter().map(|g| g.center).collect(),
        Density::Bump { center, .. } => vec![*center],
        Density::Gridded(g) => {
            let [nx, ny, nz] = g.dims();
            let [hx, hy, hz] = g.spacing();
            vec![
                g.origin()
                    + Vec3::new(
                        0.5 * (nx - 1) as f64 * hx,
                        0.5 * (ny - 1) as f64 * hy,
                        0.5 * (nz - 1) as f64 * hz,
                    ),
            ]
        }
        Density::Custom(c) => vec![c.center],
    }
}
