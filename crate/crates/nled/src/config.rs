use std::path::{Path, PathBuf};
use std::sync::Arc;

use nled_core::continuous::{ContinuousSource, Density, Gaussian};
use nled_core::observables::{Grid, QuadratureSpec};
use nled_core::{Charge, ChargeConfig, ModelParams, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::lattice;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    #[serde(default)]
    pub charges: Vec<ChargeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousSection>,
    #[serde(default)]
    pub quadrature: QuadratureSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub output: OutputSection,
    /// Directory that relative sidecar paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Classical,
    Logarithmic,
    Exponential,
    FractionalPower,
    Quadratic,
    Maxwell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelName,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeEntry {
    pub pos: [f64; 3],
    #[serde(default)]
    pub q: f64,
    #[serde(default)]
    pub g: f64,
}

/// Built-in density shapes, or a lattice file described by a JSON sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensitySpec {
    Gaussian {
        center: [f64; 3],
        sigma: f64,
        charge: f64,
    },
    Mixture {
        components: Vec<GaussianEntry>,
    },
    Bump {
        center: [f64; 3],
        radius: f64,
        charge: f64,
    },
    Gridded {
        sidecar: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianEntry {
    pub center: [f64; 3],
    pub sigma: f64,
    pub charge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_e: Option<DensitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_m: Option<DensitySpec>,
    /// Also sample the finite-difference curls of `E` and `H`.
    #[serde(default)]
    pub curl: bool,
}

fn default_gamma() -> f64 {
    4.0
}

/// Overrides of the defaults derived from the charge layout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_subdivisions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub far_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclusion: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flux_radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_lo")]
    pub lo: [f64; 3],
    #[serde(default = "default_hi")]
    pub hi: [f64; 3],
    #[serde(default = "default_n")]
    pub n: [usize; 3],
}

fn default_lo() -> [f64; 3] {
    [-2.0; 3]
}

fn default_hi() -> [f64; 3] {
    [2.0; 3]
}

fn default_n() -> [usize; 3] {
    [21; 3]
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            lo: default_lo(),
            hi: default_hi(),
            n: default_n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Syntax {
    Json,
    Toml,
}

fn syntax_of(path: &Path) -> Syntax {
    match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => Syntax::Toml,
        _ => Syntax::Json,
    }
}

impl Config {
    /// Reads `.toml` files as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = match syntax_of(path) {
            Syntax::Toml => Self::from_toml(&text)?,
            Syntax::Json => Self::from_json(&text)?,
        };
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("invalid JSON config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("invalid TOML config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(format!("config has no TOML form: {e}")))
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if path.is_relative() => base.join(path),
            _ => path.to_path_buf(),
        }
    }

    /// SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn params(&self) -> Result<ModelParams, CliError> {
        let m = &self.model;
        let needs = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("model kind {:?} needs `{name}`", m.kind)))
        };
        let refuse = |name: &str, v: Option<f64>| match v {
            Some(_) => Err(CliError::Config(format!(
                "model kind {:?} takes no `{name}`",
                m.kind
            ))),
            None => Ok(()),
        };
        let built = match m.kind {
            ModelName::Classical
            | ModelName::Logarithmic
            | ModelName::Exponential
            | ModelName::Maxwell => {
                refuse("alpha", m.alpha)?;
                refuse("p", m.p)?;
                match m.kind {
                    ModelName::Classical => ModelParams::classical(m.beta, m.kappa),
                    ModelName::Logarithmic => ModelParams::logarithmic(m.beta, m.kappa),
                    ModelName::Exponential => ModelParams::exponential(m.beta, m.kappa),
                    _ => ModelParams::maxwell(m.kappa),
                }
            }
            ModelName::FractionalPower => {
                refuse("alpha", m.alpha)?;
                ModelParams::fractional_power(m.beta, m.kappa, needs("p", m.p)?)
            }
            ModelName::Quadratic => {
                refuse("p", m.p)?;
                ModelParams::quadratic(needs("alpha", m.alpha)?, m.kappa)
            }
        };
        built.map_err(|e| CliError::Config(format!("model: {e}")))
    }

    pub fn charge_config(&self) -> Result<ChargeConfig, CliError> {
        if self.charges.is_empty() {
            return Err(CliError::Config(
                "this command needs at least one entry in `charges`".into(),
            ));
        }
        let list = self
            .charges
            .iter()
            .map(|c| Charge::new(Vec3::from_array(c.pos), c.q, c.g))
            .collect();
        ChargeConfig::new(list).map_err(|e| CliError::Config(format!("charges: {e}")))
    }

    pub fn quadrature_for(&self, cfg: &ChargeConfig) -> Result<QuadratureSpec, CliError> {
        let q = &self.quadrature;
        let mut spec = QuadratureSpec::for_config(cfg);
        spec.rel_tol = q.rel_tol.unwrap_or(spec.rel_tol);
        spec.abs_tol = q.abs_tol.unwrap_or(spec.abs_tol);
        spec.max_subdivisions = q.max_subdivisions.unwrap_or(spec.max_subdivisions);
        spec.ball_radius = q.ball_radius.unwrap_or(spec.ball_radius);
        spec.far_radius = q.far_radius.unwrap_or(spec.far_radius);
        spec.exclusion = q.exclusion.unwrap_or(spec.exclusion);
        if let Some(r) = &q.flux_radii {
            spec.flux_radii = r.clone();
        }
        spec.validate(cfg)
            .map_err(|e| CliError::Config(format!("quadrature: {e}")))?;
        Ok(spec)
    }

    /// Tolerances for Newton potentials; the geometric fields only matter to point sources.
    pub fn continuous_quadrature(&self) -> Result<QuadratureSpec, CliError> {
        let q = &self.quadrature;
        let spec = QuadratureSpec {
            rel_tol: q.rel_tol.unwrap_or(1e-8),
            abs_tol: q.abs_tol.unwrap_or(1e-12),
            max_subdivisions: q.max_subdivisions.unwrap_or(400),
            ball_radius: q.ball_radius.unwrap_or(0.5),
            far_radius: q.far_radius.unwrap_or(10.0),
            exclusion: q.exclusion.unwrap_or(1e-9),
            flux_radii: q.flux_radii.clone().unwrap_or_default(),
        };
        if !(spec.rel_tol > 0.0 && spec.abs_tol >= 0.0) {
            return Err(CliError::Config(format!(
                "quadrature: tolerances must be positive (rel {}, abs {})",
                spec.rel_tol, spec.abs_tol
            )));
        }
        Ok(spec)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = &self.grid;
        if g.n.contains(&0) {
            return Err(CliError::Config(format!(
                "grid needs at least one node per axis, got {:?}",
                g.n
            )));
        }
        if g.lo.iter().chain(&g.hi).any(|v| !v.is_finite()) || (0..3).any(|a| g.lo[a] > g.hi[a]) {
            return Err(CliError::Config(format!(
                "grid bounds {:?}..{:?} are not ordered",
                g.lo, g.hi
            )));
        }
        Ok(Grid {
            lo: Vec3::from_array(g.lo),
            hi: Vec3::from_array(g.hi),
            n: g.n,
        })
    }

    pub fn continuous_source(&self) -> Result<Option<ContinuousSource>, CliError> {
        let Some(c) = &self.continuous else {
            return Ok(None);
        };
        let to_density = |spec: &Option<DensitySpec>| -> Result<Density, CliError> {
            let Some(spec) = spec else {
                return Ok(Density::Zero);
            };
            let bad = |e: nled_core::Error| CliError::Config(format!("continuous source: {e}"));
            match spec {
                DensitySpec::Gaussian {
                    center,
                    sigma,
                    charge,
                } => Density::gaussian(Vec3::from_array(*center), *sigma, *charge).map_err(bad),
                DensitySpec::Mixture { components } => Density::mixture(
                    components
                        .iter()
                        .map(|g| Gaussian {
                            center: Vec3::from_array(g.center),
                            sigma: g.sigma,
                            charge: g.charge,
                        })
                        .collect(),
                )
                .map_err(bad),
                DensitySpec::Bump {
                    center,
                    radius,
                    charge,
                } => Density::bump(Vec3::from_array(*center), *radius, *charge).map_err(bad),
                DensitySpec::Gridded { sidecar } => Ok(Density::Gridded(Arc::new(lattice::load(
                    &self.resolve(sidecar),
                )?))),
            }
        };
        let src = ContinuousSource::new(to_density(&c.rho_e)?, to_density(&c.rho_m)?, c.gamma)
            .map_err(|e| CliError::Config(format!("continuous source: {e}")))?;
        Ok(Some(src))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "model": {"kind": "classical", "beta": 1.0, "kappa": 0.5},
        "charges": [{"pos": [0.5, 0, 0], "q": 1}, {"pos": [-0.5, 0, 0], "q": -1, "g": 0.3}],
        "continuous": {"gamma": 4, "rho_e": {"kind": "mixture", "components": [
            {"center": [0, 0, 0], "sigma": 0.5, "charge": 1}]}},
        "quadrature": {"rel_tol": 1e-6},
        "grid": {"lo": [-1, -1, -1], "hi": [1, 1, 1], "n": [5, 5, 5]},
        "output": {"format": "csv", "seed": 7}
    }"#;

    #[test]
    fn json_and_toml_round_trip() {
        let cfg = Config::from_json(SAMPLE).unwrap();
        assert_eq!(Config::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(Config::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
        assert_eq!(
            Config::from_json(&cfg.to_json()).unwrap().hash(),
            cfg.hash()
        );
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = Config::from_json(
            r#"{"model": {"kind": "logarithmic"}, "charges": [{"pos": [0,0,0], "q": 1}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.model.beta, 1.0);
        assert_eq!(cfg.grid.n, [21; 3]);
        assert!(cfg.output.seed.is_none());
        let p = cfg.params().unwrap();
        assert_eq!(p.name(), "logarithmic");
        cfg.quadrature_for(&cfg.charge_config().unwrap()).unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Config::from_json(r#"{"model": {"kind": "bogus"}}"#).is_err());
        assert!(Config::from_json(r#"{"model": {"kind": "classical", "gamma": 2}}"#).is_err());
        let no_p = Config::from_json(r#"{"model": {"kind": "fractional_power"}}"#).unwrap();
        assert!(no_p.params().is_err());
        let stray = Config::from_json(r#"{"model": {"kind": "classical", "alpha": 1}}"#).unwrap();
        assert!(stray.params().is_err());
        let coincident = Config::from_json(r#"{"model": {"kind": "classical"}, "charges": [{"pos": [0,0,0], "q": 1}, {"pos": [0,0,0], "q": 2}]}"#).unwrap();
        assert!(coincident.charge_config().is_err());
        let slow = Config::from_json(r#"{"model": {"kind": "classical"}, "continuous": {"gamma": 3, "rho_e": {"kind": "gaussian", "center": [0,0,0], "sigma": 1, "charge": 1}}}"#).unwrap();
        assert!(slow.continuous_source().is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::from_json(SAMPLE).unwrap();
        let mut b = a.clone();
        b.model.beta = 2.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
