//! Lagrangian densities `L = f(s)` of the supported theories.
//!
//! Every model is normalized so that `f(0) = 0` and `f'(0) = 1`; the weak
//! field limit is Maxwell theory. `s = ½(E² − B²) + ½κ²(E·B)²` is the only
//! argument, and `f'(s)` is the field-dependent factor of the constitutive
//! relations `D = f'(s)(E + κ²(E·B)B)`, `H = f'(s)(B − κ²(E·B)E)`.

use alloc::format;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::sqrt;

/// A caller-supplied model function with analytic derivatives.
///
/// The admissible `s` form the open interval returned by [`Lagrangian::domain`].
pub trait Lagrangian: Send + Sync {
    fn f(&self, s: f64) -> f64;
    fn f_prime(&self, s: f64) -> f64;
    fn f_double_prime(&self, s: f64) -> f64;

    fn domain(&self) -> (f64, f64) {
        (f64::NEG_INFINITY, f64::INFINITY)
    }

    fn name(&self) -> &'static str {
        "custom"
    }
}

#[derive(Clone)]
pub enum ModelKind {
    /// `f(s) = (1 − √(1 − 2βs)) / β`.
    Classical,
    /// `f(s) = −ln(1 − βs) / β`.
    Logarithmic,
    /// `f(s) = (e^{βs} − 1) / β`.
    Exponential,
    /// `f(s) = ((1 + βs/p)^p − 1) / β`, `p ≥ 1`; `p = 1` is Maxwell theory.
    FractionalPower {
        p: f64,
    },
    /// `f(s) = s + αs²`; `β` is not used.
    Quadratic {
        alpha: f64,
    },
    Custom(Arc<dyn Lagrangian>),
}

impl fmt::Debug for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelKind::Classical => f.write_str("Classical"),
            ModelKind::Logarithmic => f.write_str("Logarithmic"),
            ModelKind::Exponential => f.write_str("Exponential"),
            ModelKind::FractionalPower { p } => write!(f, "FractionalPower {{ p: {p} }}"),
            ModelKind::Quadratic { alpha } => write!(f, "Quadratic {{ alpha: {alpha} }}"),
            ModelKind::Custom(l) => write!(f, "Custom({})", l.name()),
        }
    }
}

/// Model selection together with the Born parameter `β` and the coupling `κ`.
#[derive(Clone, Debug)]
pub struct ModelParams {
    kind: ModelKind,
    beta: f64,
    kappa: f64,
}

impl ModelParams {
    pub fn new(kind: ModelKind, beta: f64, kappa: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "kappa must be nonnegative, got {kappa}"
            )));
        }
        match &kind {
            ModelKind::FractionalPower { p } if !(*p >= 1.0 && p.is_finite()) => {
                return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
            }
            ModelKind::Quadratic { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => {
                return Err(Error::InvalidInput(format!(
                    "alpha must be positive, got {alpha}"
                )));
            }
            ModelKind::Custom(l) => check_custom(l.as_ref())?,
            _ => {}
        }
        Ok(Self { kind, beta, kappa })
    }

    pub fn classical(beta: f64, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Classical, beta, kappa)
    }

    pub fn logarithmic(beta: f64, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Logarithmic, beta, kappa)
    }

    pub fn exponential(beta: f64, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Exponential, beta, kappa)
    }

    pub fn fractional_power(beta: f64, kappa: f64, p: f64) -> Result<Self> {
        Self::new(ModelKind::FractionalPower { p }, beta, kappa)
    }

    /// The quadratic model carries `β = 1` nominally.
    pub fn quadratic(alpha: f64, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Quadratic { alpha }, 1.0, kappa)
    }

    /// Linear electrodynamics, `f(s) = s`.
    pub fn maxwell(kappa: f64) -> Result<Self> {
        Self::fractional_power(1.0, kappa, 1.0)
    }

    pub fn custom(lagrangian: Arc<dyn Lagrangian>, beta: f64, kappa: f64) -> Result<Self> {
        Self::new(ModelKind::Custom(lagrangian), beta, kappa)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Same model with a different `κ`.
    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.kind.clone(), self.beta, kappa)
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            ModelKind::Classical => "classical",
            ModelKind::Logarithmic => "logarithmic",
            ModelKind::Exponential => "exponential",
            ModelKind::FractionalPower { .. } => "fractional_power",
            ModelKind::Quadratic { .. } => "quadratic",
            ModelKind::Custom(l) => l.name(),
        }
    }

    /// `f'' ≡ 0`: Maxwell theory.
    pub fn is_linear(&self) -> bool {
        matches!(self.kind, ModelKind::FractionalPower { p } if p == 1.0)
    }

    /// Open interval of admissible `s`.
    pub fn domain(&self) -> (f64, f64) {
        let b = self.beta;
        match &self.kind {
            ModelKind::Classical => (f64::NEG_INFINITY, 0.5 / b),
            ModelKind::Logarithmic => (f64::NEG_INFINITY, 1.0 / b),
            ModelKind::FractionalPower { p } if !is_integer(*p) => (-p / b, f64::INFINITY),
            ModelKind::Custom(l) => l.domain(),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    pub fn check_domain(&self, s: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if !s.is_finite() {
            return Err(self.domain_error(s, "s is not finite"));
        }
        if s >= hi {
            return Err(self.domain_error(s, "above the upper edge"));
        }
        if s <= lo {
            return Err(self.domain_error(s, "below the lower edge"));
        }
        Ok(())
    }

    pub(crate) fn domain_error(&self, s: f64, reason: &'static str) -> Error {
        Error::DomainViolation {
            model: self.name(),
            s,
            reason,
        }
    }

    /// The value `s₀` below which `f'` stops being positive, when the model has one.
    pub(crate) fn f_prime_root(&self) -> Option<f64> {
        match &self.kind {
            ModelKind::FractionalPower { p } if *p > 1.0 => Some(-p / self.beta),
            ModelKind::Quadratic { alpha } => Some(-0.5 / alpha),
            _ => None,
        }
    }

    pub fn f(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let b = self.beta;
        Ok(match &self.kind {
            ModelKind::Classical => 2.0 * s / (1.0 + sqrt(1.0 - 2.0 * b * s)),
            ModelKind::Logarithmic => -libm::log1p(-b * s) / b,
            ModelKind::Exponential => libm::expm1(b * s) / b,
            ModelKind::FractionalPower { p } => {
                if *p == 1.0 {
                    s
                } else {
                    let x = b * s / p;
                    if x > -1.0 {
                        libm::expm1(p * libm::log1p(x)) / b
                    } else {
                        (libm::pow(1.0 + x, *p) - 1.0) / b
                    }
                }
            }
            ModelKind::Quadratic { alpha } => s + alpha * s * s,
            ModelKind::Custom(l) => l.f(s),
        })
    }

    pub fn f_prime(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let b = self.beta;
        Ok(match &self.kind {
            ModelKind::Classical => 1.0 / sqrt(1.0 - 2.0 * b * s),
            ModelKind::Logarithmic => 1.0 / (1.0 - b * s),
            ModelKind::Exponential => libm::exp(b * s),
            ModelKind::FractionalPower { p } => {
                if *p == 1.0 {
                    1.0
                } else {
                    libm::pow(1.0 + b * s / p, p - 1.0)
                }
            }
            ModelKind::Quadratic { alpha } => 1.0 + 2.0 * alpha * s,
            ModelKind::Custom(l) => l.f_prime(s),
        })
    }

    pub fn f_double_prime(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        let b = self.beta;
        Ok(match &self.kind {
            ModelKind::Classical => {
                let w = 1.0 - 2.0 * b * s;
                b / (w * sqrt(w))
            }
            ModelKind::Logarithmic => {
                let w = 1.0 - b * s;
                b / (w * w)
            }
            ModelKind::Exponential => b * libm::exp(b * s),
            ModelKind::FractionalPower { p } => {
                if *p == 1.0 {
                    0.0
                } else {
                    (p - 1.0) / p * b * libm::pow(1.0 + b * s / p, p - 2.0)
                }
            }
            ModelKind::Quadratic { alpha } => 2.0 * alpha,
            ModelKind::Custom(l) => l.f_double_prime(s),
        })
    }
}

/// Free-function spellings of the model evaluators.
pub fn f(params: &ModelParams, s: f64) -> Result<f64> {
    params.f(s)
}

pub fn f_prime(params: &ModelParams, s: f64) -> Result<f64> {
    params.f_prime(s)
}

pub fn f_double_prime(params: &ModelParams, s: f64) -> Result<f64> {
    params.f_double_prime(s)
}

fn is_integer(p: f64) -> bool {
    libm::floor(p) == p
}

const CUSTOM_DERIVATIVE_TOL: f64 = 1e-6;

/// Normalization and derivative consistency of a caller-supplied model.
fn check_custom(l: &dyn Lagrangian) -> Result<()> {
    let (lo, hi) = l.domain();
    if !(lo < 0.0 && hi > 0.0) {
        return Err(Error::InvalidInput(format!(
            "custom model domain ({lo}, {hi}) must contain s = 0"
        )));
    }
    let f0 = l.f(0.0);
    if f0.abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "custom model has f(0) = {f0}, expected 0"
        )));
    }
    let d0 = l.f_prime(0.0);
    if (d0 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "custom model has f'(0) = {d0}, expected 1"
        )));
    }
    // probe points kept well inside the domain
    let span = 0.5 * lo.abs().min(hi).min(1.0);
    for k in -4..=4 {
        let s = span * f64::from(k) / 4.0;
        let h = 1e-5 * (1.0f64).max(s.abs());
        let fd1 = (l.f(s + h) - l.f(s - h)) / (2.0 * h);
        let fd2 = (l.f_prime(s + h) - l.f_prime(s - h)) / (2.0 * h);
        let d1 = l.f_prime(s);
        let d2 = l.f_double_prime(s);
        if (d1 - fd1).abs() > CUSTOM_DERIVATIVE_TOL * d1.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "custom f' at s = {s} is {d1}, central difference of f gives {fd1}"
            )));
        }
        if (d2 - fd2).abs() > CUSTOM_DERIVATIVE_TOL * d2.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "custom f'' at s = {s} is {d2}, central difference of f' gives {fd2}"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn builtins() -> Vec<ModelParams> {
        alloc::vec![
            ModelParams::classical(1.3, 0.5).unwrap(),
            ModelParams::logarithmic(0.7, 0.5).unwrap(),
            ModelParams::exponential(0.9, 0.5).unwrap(),
            ModelParams::fractional_power(1.1, 0.5, 2.5).unwrap(),
            ModelParams::fractional_power(0.8, 0.5, 3.0).unwrap(),
            ModelParams::quadratic(0.4, 0.5).unwrap(),
        ]
    }

    struct Convex;

    impl Lagrangian for Convex {
        fn f(&self, s: f64) -> f64 {
            s + 0.5 * (libm::sqrt(1.0 + s * s) - 1.0)
        }
        fn f_prime(&self, s: f64) -> f64 {
            1.0 + 0.5 * s / libm::sqrt(1.0 + s * s)
        }
        fn f_double_prime(&self, s: f64) -> f64 {
            0.5 / libm::pow(1.0 + s * s, 1.5)
        }
    }

    struct WrongDerivative;

    impl Lagrangian for WrongDerivative {
        fn f(&self, s: f64) -> f64 {
            s + s * s
        }
        fn f_prime(&self, s: f64) -> f64 {
            1.0 + s
        }
        fn f_double_prime(&self, _s: f64) -> f64 {
            1.0
        }
    }

    struct Unnormalized;

    impl Lagrangian for Unnormalized {
        fn f(&self, s: f64) -> f64 {
            2.0 * s
        }
        fn f_prime(&self, _s: f64) -> f64 {
            2.0
        }
        fn f_double_prime(&self, _s: f64) -> f64 {
            0.0
        }
    }

    #[test]
    fn normalization_at_zero() {
        for m in builtins() {
            assert_eq!(m.f(0.0).unwrap(), 0.0, "{}", m.name());
            assert_eq!(m.f_prime(0.0).unwrap(), 1.0, "{}", m.name());
        }
    }

    #[test]
    fn classical_values() {
        let m = ModelParams::classical(1.0, 0.0).unwrap();
        assert_relative_eq!(m.f(0.375).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m.f_prime(0.375).unwrap(), 2.0, epsilon = 1e-15);
        assert!(matches!(m.f(0.5), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn logarithmic_domain_edge() {
        let m = ModelParams::logarithmic(2.0, 0.0).unwrap();
        assert!(m.f(0.4999).is_ok());
        assert!(matches!(m.f_prime(0.5), Err(Error::DomainViolation { .. })));
    }

    #[test]
    fn exponential_second_derivative_at_zero() {
        let m = ModelParams::exponential(2.0, 0.0).unwrap();
        assert_eq!(m.f_prime(0.0).unwrap(), 1.0);
        assert_eq!(m.f_double_prime(0.0).unwrap(), 2.0);
    }

    #[test]
    fn quadratic_derivatives() {
        let m = ModelParams::quadratic(0.5, 0.0).unwrap();
        assert_eq!(m.f_prime(1.0).unwrap(), 2.0);
        assert_eq!(m.f_double_prime(1.0).unwrap(), 1.0);
    }

    #[test]
    fn maxwell_is_identity() {
        let m = ModelParams::maxwell(0.0).unwrap();
        assert!(m.is_linear());
        for s in [-3.7, -0.2, 0.0, 0.6, 12.5] {
            assert_eq!(m.f(s).unwrap(), s);
            assert_eq!(m.f_prime(s).unwrap(), 1.0);
            assert_eq!(m.f_double_prime(s).unwrap(), 0.0);
        }
    }

    #[test]
    fn non_integer_power_has_lower_edge() {
        let m = ModelParams::fractional_power(1.0, 0.0, 2.5).unwrap();
        assert!(m.f(-2.4).is_ok());
        assert!(m.f(-2.5).is_err());
        let m3 = ModelParams::fractional_power(1.0, 0.0, 3.0).unwrap();
        assert!(m3.f(-10.0).is_ok());
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelParams::classical(0.0, 0.0).is_err());
        assert!(ModelParams::classical(1.0, -0.1).is_err());
        assert!(ModelParams::fractional_power(1.0, 0.0, 0.5).is_err());
        assert!(ModelParams::quadratic(0.0, 0.0).is_err());
    }

    #[test]
    fn custom_model_checks() {
        assert!(ModelParams::custom(Arc::new(Convex), 1.0, 0.3).is_ok());
        assert!(ModelParams::custom(Arc::new(WrongDerivative), 1.0, 0.3).is_err());
        assert!(ModelParams::custom(Arc::new(Unnormalized), 1.0, 0.3).is_err());
    }

    fn in_domain(m: &ModelParams, u: f64) -> f64 {
        // map u in (-1, 1) into the model domain, away from the edges
        let (lo, hi) = m.domain();
        let lo = if lo.is_finite() { lo * 0.95 } else { -5.0 };
        let hi = if hi.is_finite() { hi * 0.95 } else { 5.0 };
        lo + (hi - lo) * 0.5 * (u + 1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn derivatives_match_central_differences(u in -1.0f64..1.0, which in 0usize..6) {
            let m = &builtins()[which];
            let s = in_domain(m, u);
            let h = 1e-5 * s.abs().max(1e-2);
            let d1 = m.f_prime(s).unwrap();
            let fd1 = (m.f(s + h).unwrap() - m.f(s - h).unwrap()) / (2.0 * h);
            prop_assert!((d1 - fd1).abs() <= 1e-6 * d1.abs().max(1.0), "{} s={} {} vs {}", m.name(), s, d1, fd1);
            let d2 = m.f_double_prime(s).unwrap();
            let fd2 = (m.f_prime(s + h).unwrap() - m.f_prime(s - h).unwrap()) / (2.0 * h);
            prop_assert!((d2 - fd2).abs() <= 1e-6 * d2.abs().max(1.0), "{} s={} {} vs {}", m.name(), s, d2, fd2);
        }

        #[test]
        fn electrostatic_map_is_increasing(u in 0.0f64..1.0, which in 0usize..6) {
            let m = &builtins()[which];
            let hi = m.domain().1;
            let a_max = if hi.is_finite() { 2.0 * hi } else { 20.0 };
            let a1 = 0.999 * a_max * u;
            let a2 = a1 + 1e-3 * a_max;
            prop_assume!(a2 < a_max);
            let g = |a: f64| { let fp = m.f_prime(0.5 * a).unwrap(); fp * fp * a };
            prop_assert!(g(a2) > g(a1));
        }
    }
}
