use std::path::PathBuf;

use nled_core::continuous::{
    continuous_fields, fd_curl_e, fd_curl_h, newton_potential_of, ContinuousSource,
};
use nled_core::currents::{analytic_currents, fd_currents_richardson, CurrentSample};
use nled_core::fd::{default_step, stencil_clear};
use nled_core::observables::{
    energy_density, flux_through_sphere, free_charge_with_inner_spheres, total_energy,
    QuadratureSpec,
};
use nled_core::{ChargeConfig, Error, FieldState, ModelParams, Point3, Vec3};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, Format};
use crate::error::CliError;
use crate::report::{write_json, write_table, Meta, Table};
use crate::verify;

/// Everything a command needs besides its own flags.
pub struct Session {
    pub config: Config,
    pub out_dir: PathBuf,
    pub format: Format,
    pub seed: u64,
}

impl Session {
    pub fn meta(&self, command: &'static str) -> Meta {
        Meta {
            tool: crate::report::TOOL,
            version: crate::report::VERSION,
            command,
            config_hash: self.config.hash(),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointFailure {
    pub at: [f64; 3],
    pub error: String,
}

/// Points left undefined: inside an exclusion ball, or where an inversion failed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Failures {
    pub singular: Vec<[f64; 3]>,
    pub numeric: Vec<PointFailure>,
}

impl Failures {
    fn note(&mut self, x: Point3, e: Error) {
        match e {
            Error::SingularPoint { .. } => self.singular.push(x.to_array()),
            other => self.numeric.push(PointFailure {
                at: x.to_array(),
                error: other.to_string(),
            }),
        }
    }

    fn into_result(self, what: &str) -> Result<(), CliError> {
        if self.numeric.is_empty() {
            return Ok(());
        }
        let shown: Vec<String> = self
            .numeric
            .iter()
            .take(5)
            .map(|f| format!("{:?}: {}", f.at, f.error))
            .collect();
        Err(CliError::Numeric(format!(
            "{what}: {} points failed; {}",
            self.numeric.len(),
            shown.join("; ")
        )))
    }
}

fn numeric(e: Error) -> CliError {
    match e {
        Error::InvalidInput(m) => CliError::Config(m),
        other => CliError::Numeric(other.to_string()),
    }
}

/// Evaluates `f` over `points` concurrently, keeping order and splitting off failures.
fn sweep<F>(points: &[Point3], width: usize, f: F) -> (Vec<Vec<f64>>, Failures)
where
    F: Fn(Point3) -> Result<Vec<f64>, Error> + Sync,
{
    let results: Vec<Result<Vec<f64>, Error>> = points.par_iter().map(|&x| f(x)).collect();
    let mut rows = Vec::with_capacity(points.len());
    let mut failures = Failures::default();
    for (&x, r) in points.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failures.note(x, e);
                let mut row = x.to_array().to_vec();
                row.resize(width, f64::NAN);
                rows.push(row);
            }
        }
    }
    (rows, failures)
}

fn push3(row: &mut Vec<f64>, v: Vec3) {
    row.extend_from_slice(&v.to_array());
}

fn fd_current(
    params: &ModelParams,
    cfg: &ChargeConfig,
    x: Point3,
) -> Result<Option<CurrentSample>, Error> {
    let h = default_step(x);
    if !stencil_clear(cfg, x, h, 2.0) {
        return Ok(None);
    }
    fd_currents_richardson(params, cfg, x, h).map(Some)
}

fn finish(written: Vec<PathBuf>, failures: Failures, what: &str) -> Result<Vec<PathBuf>, CliError> {
    failures.into_result(what)?;
    Ok(written)
}

#[derive(Serialize)]
struct GridExtra<'a> {
    model: &'static str,
    failures: &'a Failures,
}

pub fn sample(s: &Session) -> Result<Vec<PathBuf>, CliError> {
    let params = s.config.params()?;
    let cfg = s.config.charge_config()?;
    let points: Vec<Point3> = s.config.grid()?.points().collect();
    let columns = vec![
        "x",
        "y",
        "z",
        "Ex",
        "Ey",
        "Ez",
        "Hx",
        "Hy",
        "Hz",
        "jm_x",
        "jm_y",
        "jm_z",
        "energy_density",
    ];
    let width = columns.len();
    let (rows, failures) = sweep(&points, width, |x| {
        let st = FieldState::at(&cfg, &params, x)?;
        let jm = match analytic_currents(&params, &cfg, x)? {
            Some(j) => j.j_m,
            None => fd_current(&params, &cfg, x)?
                .map_or(Vec3::new(f64::NAN, f64::NAN, f64::NAN), |j| j.j_m),
        };
        let mut row = Vec::with_capacity(width);
        push3(&mut row, x);
        push3(&mut row, st.e);
        push3(&mut row, st.h);
        push3(&mut row, jm);
        row.push(energy_density(&params, &st)?);
        Ok(row)
    });
    let table = Table { columns, rows };
    let written = write_table(
        &s.out_dir,
        "sample",
        s.format,
        &s.meta("sample"),
        &table,
        &GridExtra {
            model: params.name(),
            failures: &failures,
        },
    )?;
    finish(written, failures, "sample")
}

pub fn current(s: &Session) -> Result<Vec<PathBuf>, CliError> {
    let params = s.config.params()?;
    let cfg = s.config.charge_config()?;
    let points: Vec<Point3> = s.config.grid()?.points().collect();
    let columns = vec![
        "x", "y", "z", "je_x", "je_y", "je_z", "jm_x", "jm_y", "jm_z", "analytic", "fd_je_x",
        "fd_je_y", "fd_je_z", "fd_jm_x", "fd_jm_y", "fd_jm_z",
    ];
    let width = columns.len();
    let nan3 = Vec3::new(f64::NAN, f64::NAN, f64::NAN);
    let (rows, failures) = sweep(&points, width, |x| {
        cfg.check_point(x)?;
        let exact = analytic_currents(&params, &cfg, x)?;
        let fd = fd_current(&params, &cfg, x)?;
        let best = exact.or(fd);
        let mut row = Vec::with_capacity(width);
        push3(&mut row, x);
        push3(&mut row, best.map_or(nan3, |j| j.j_e));
        push3(&mut row, best.map_or(nan3, |j| j.j_m));
        row.push(if exact.is_some() { 1.0 } else { 0.0 });
        push3(&mut row, fd.map_or(nan3, |j| j.j_e));
        push3(&mut row, fd.map_or(nan3, |j| j.j_m));
        Ok(row)
    });
    let table = Table { columns, rows };
    let written = write_table(
        &s.out_dir,
        "current",
        s.format,
        &s.meta("current"),
        &table,
        &GridExtra {
            model: params.name(),
            failures: &failures,
        },
    )?;
    finish(written, failures, "current")
}

fn continuous_row(
    src: &ContinuousSource,
    params: &ModelParams,
    quad: &QuadratureSpec,
    curl: bool,
    x: Point3,
) -> Result<Vec<f64>, Error> {
    let st = continuous_fields(src, params, x, quad)?;
    let mut row = Vec::with_capacity(25);
    push3(&mut row, x);
    row.push(newton_potential_of(&src.rho_e, x, quad)?);
    for v in [st.d, st.b, st.e, st.h] {
        push3(&mut row, v);
    }
    row.push(energy_density(params, &st)?);
    if curl {
        let h = 0.01 * src.rho_e.width().min(src.rho_m.width());
        push3(&mut row, fd_curl_e(src, params, x, h, quad)?);
        push3(&mut row, fd_curl_h(src, params, x, h, quad)?);
    }
    Ok(row)
}

pub fn continuous(s: &Session) -> Result<Vec<PathBuf>, CliError> {
    let params = s.config.params()?;
    let Some(src) = s.config.continuous_source()? else {
        return Err(CliError::Config(
            "the continuous command needs a `continuous` section".into(),
        ));
    };
    let quad = s.config.continuous_quadrature()?;
    let curl = s.config.continuous.as_ref().is_some_and(|c| c.curl);
    let points: Vec<Point3> = s.config.grid()?.points().collect();
    let mut columns = vec![
        "x",
        "y",
        "z",
        "u",
        "Dx",
        "Dy",
        "Dz",
        "Bx",
        "By",
        "Bz",
        "Ex",
        "Ey",
        "Ez",
        "Hx",
        "Hy",
        "Hz",
        "energy_density",
    ];
    if curl {
        columns.extend([
            "curlE_x", "curlE_y", "curlE_z", "curlH_x", "curlH_y", "curlH_z",
        ]);
    }
    let width = columns.len();
    let (rows, failures) = sweep(&points, width, |x| {
        continuous_row(&src, &params, &quad, curl, x)
    });

    #[derive(Serialize)]
    struct Extra<'a> {
        model: &'static str,
        total_q: f64,
        total_g: f64,
        failures: &'a Failures,
    }
    let extra = Extra {
        model: params.name(),
        total_q: src.total_q(),
        total_g: src.total_g(),
        failures: &failures,
    };
    let written = write_table(
        &s.out_dir,
        "continuous",
        s.format,
        &s.meta("continuous"),
        &Table { columns, rows },
        &extra,
    )?;
    finish(written, failures, "continuous")
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderEntry {
    pub radius: f64,
    pub flux_e: f64,
    pub flux_h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InnerFlux {
    pub index: usize,
    pub flux_e: f64,
    pub flux_h: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChargeReport {
    pub q_free: f64,
    pub g_free: f64,
    pub total_q: f64,
    pub total_g: f64,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub inner: Vec<InnerFlux>,
    pub flux_ladder: Vec<LadderEntry>,
}

/// Radii `R/8, R/4, R/2, R` together with configured ones below `R`, keeping those that enclose every charge.
fn ladder_radii(outer: f64, configured: &[f64], enclose: f64) -> Vec<f64> {
    let mut radii: Vec<f64> = [0.125, 0.25, 0.5, 1.0]
        .iter()
        .map(|k| k * outer)
        .chain(configured.iter().copied().filter(|r| *r < outer))
        .collect();
    radii.retain(|r| *r > enclose);
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    radii
}

pub fn charge_report(config: &Config, outer: Option<f64>) -> Result<ChargeReport, CliError> {
    let params = config.params()?;
    let cfg = config.charge_config()?;
    let mut quad = config.quadrature_for(&cfg)?;
    let outer = outer.unwrap_or_else(|| {
        quad.flux_radii
            .iter()
            .copied()
            .fold(quad.far_radius, f64::max)
    });
    let enclose = cfg.radius_about_centroid();
    if !(outer > enclose && outer.is_finite()) {
        return Err(CliError::Config(format!(
            "--R {outer} must enclose every charge (radius {enclose} about the centroid)"
        )));
    }
    let configured = quad.flux_radii.clone();
    quad.flux_radii = ladder_radii(outer, &configured, enclose);
    quad.far_radius = quad.far_radius.min(outer);
    quad.validate(&cfg)
        .map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
    let fc = free_charge_with_inner_spheres(&cfg, &params, &quad).map_err(numeric)?;
    let c = cfg.centroid();
    let flux_ladder = quad
        .flux_radii
        .par_iter()
        .map(|&r| {
            let e = flux_through_sphere(|x| Ok(FieldState::at(&cfg, &params, x)?.e), c, r, &quad)?;
            let h = flux_through_sphere(|x| Ok(FieldState::at(&cfg, &params, x)?.h), c, r, &quad)?;
            Ok(LadderEntry {
                radius: r,
                flux_e: e,
                flux_h: h,
            })
        })
        .collect::<Result<Vec<_>, Error>>()
        .map_err(numeric)?;
    Ok(ChargeReport {
        q_free: fc.q_free,
        g_free: fc.g_free,
        total_q: cfg.total_q(),
        total_g: cfg.total_g(),
        outer_radius: fc.outer_radius,
        inner_radius: quad.exclusion,
        inner: fc
            .inner_q
            .iter()
            .zip(&fc.inner_g)
            .enumerate()
            .map(|(index, (&q, &g))| InnerFlux {
                index,
                flux_e: q,
                flux_h: g,
            })
            .collect(),
        flux_ladder,
    })
}

pub fn charge(s: &Session, outer: Option<f64>) -> Result<Vec<PathBuf>, CliError> {
    let report = charge_report(&s.config, outer)?;
    let path = s.out_dir.join("charge.json");
    write_json(&path, &s.meta("charge"), &report)?;
    Ok(vec![path])
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyOut {
    pub model: &'static str,
    pub value: f64,
    pub converged: bool,
    pub near_charge_exponents: Vec<f64>,
    pub balls: Vec<f64>,
    pub middle: f64,
    pub shells: f64,
    pub tail: f64,
    pub far_radius: f64,
    pub evaluations: usize,
}

pub fn energy_report(config: &Config) -> Result<EnergyOut, CliError> {
    let params = config.params()?;
    let cfg = config.charge_config()?;
    let quad = config.quadrature_for(&cfg)?;
    let r = total_energy(&cfg, &params, &quad).map_err(numeric)?;
    Ok(EnergyOut {
        model: params.name(),
        value: r.value,
        converged: r.converged,
        near_charge_exponents: r.near_charge_exponents,
        balls: r.balls,
        middle: r.middle,
        shells: r.shells,
        tail: r.tail,
        far_radius: r.far_radius,
        evaluations: r.evaluations,
    })
}

pub fn energy(s: &Session) -> Result<Vec<PathBuf>, CliError> {
    let report = energy_report(&s.config)?;
    let path = s.out_dir.join("energy.json");
    write_json(&path, &s.meta("energy"), &report)?;
    Ok(vec![path])
}

/// Writes the report first; a failing suite then turns into a numeric failure.
pub fn verify(s: &Session) -> Result<Vec<PathBuf>, CliError> {
    let report = verify::run(&s.config, s.seed)?;
    let path = s.out_dir.join("verify.json");
    write_json(&path, &s.meta("verify"), &report)?;
    if report.passed {
        Ok(vec![path])
    } else {
        let failed: Vec<&str> = report
            .suites
            .iter()
            .filter(|s| !s.passed)
            .map(|s| s.name)
            .collect();
        Err(CliError::Numeric(format!(
            "suites failed: {} (report in {})",
            failed.join(", "),
            path.display()
        )))
    }
}
