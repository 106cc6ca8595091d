//! Point-source configurations and the Coulombic fields they prescribe.
//!
//! `D = Σ q_i r_i / (4π|r_i|³)` and `B = Σ g_i r_i / (4π|r_i|³)` with
//! `r_i = x − x_i`. Both are gradients (`D = −∇U_e`, `B = −∇U_m`), so they are
//! curl free and divergence free away from the charges. Evaluation closer than
//! the exclusion radius to any charge is refused with
//! [`Error::SingularPoint`].

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{CompensatedSum, CompensatedVec};
use crate::vector::{Point3, Vec3};
use crate::FOUR_PI;

/// Relative size of the default exclusion ball (times the configuration diameter).
pub const DEFAULT_EXCLUSION_FACTOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    pub position: Point3,
    /// Electric charge.
    pub q: f64,
    /// Magnetic charge.
    pub g: f64,
}

impl Charge {
    pub const fn new(position: Point3, q: f64, g: f64) -> Self {
        Self { position, q, g }
    }

    pub const fn electric(position: Point3, q: f64) -> Self {
        Self::new(position, q, 0.0)
    }

    pub const fn magnetic(position: Point3, g: f64) -> Self {
        Self::new(position, 0.0, g)
    }

    #[inline]
    pub fn strength(&self, kind: FieldKind) -> f64 {
        match kind {
            FieldKind::Electric => self.q,
            FieldKind::Magnetic => self.g,
        }
    }
}

/// Which of the two prescribable fields (or potentials) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    /// `D` and `U_e`, sourced by the `q_i`.
    Electric,
    /// `B` and `U_m`, sourced by the `g_i`.
    Magnetic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potential {
    pub value: f64,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargeConfig {
    charges: Vec<Charge>,
    exclusion: f64,
}

impl ChargeConfig {
    /// Validates the charges and installs the default exclusion radius,
    /// `1e-9 ×` the configuration diameter (`1e-9` for a single charge).
    pub fn new(charges: Vec<Charge>) -> Result<Self> {
        if charges.is_empty() {
            return Err(Error::InvalidInput("charge configuration is empty".into()));
        }
        for (i, c) in charges.iter().enumerate() {
            if !c.position.is_finite() || !c.q.is_finite() || !c.g.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "charge {i} has non-finite data"
                )));
            }
            if c.q == 0.0 && c.g == 0.0 {
                return Err(Error::InvalidInput(format!(
                    "charge {i} carries neither electric nor magnetic charge"
                )));
            }
        }
        for i in 0..charges.len() {
            for j in 0..i {
                if charges[i].position == charges[j].position {
                    return Err(Error::InvalidInput(format!(
                        "charges {j} and {i} share the position {:?}",
                        charges[i].position
                    )));
                }
            }
        }
        let mut cfg = Self {
            charges,
            exclusion: 0.0,
        };
        let d = cfg.diameter();
        let scale = if cfg.charges.len() == 1 || d == 0.0 {
            1.0
        } else {
            d
        };
        cfg.exclusion = DEFAULT_EXCLUSION_FACTOR * scale;
        Ok(cfg)
    }

    pub fn with_exclusion_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exclusion radius must be positive, got {radius}"
            )));
        }
        self.exclusion = radius;
        Ok(self)
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.exclusion
    }

    /// Largest pairwise distance (0 for one charge).
    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.charges.iter().enumerate() {
            for b in &self.charges[..i] {
                d = d.max(a.position.distance(b.position));
            }
        }
        d
    }

    /// Smallest pairwise distance (`f64::INFINITY` for one charge).
    pub fn min_separation(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.charges.iter().enumerate() {
            for b in &self.charges[..i] {
                d = d.min(a.position.distance(b.position));
            }
        }
        d
    }

    pub fn centroid(&self) -> Point3 {
        let mut s = CompensatedVec::new();
        for c in &self.charges {
            s.add(c.position);
        }
        s.value() / self.charges.len() as f64
    }

    /// Radius of the smallest centroid-centred ball containing every charge.
    pub fn radius_about_centroid(&self) -> f64 {
        let c = self.centroid();
        self.charges
            .iter()
            .map(|ch| ch.position.distance(c))
            .fold(0.0, f64::max)
    }

    pub fn total(&self, kind: FieldKind) -> f64 {
        let mut s = CompensatedSum::new();
        for c in &self.charges {
            s.add(c.strength(kind));
        }
        s.value()
    }

    pub fn total_q(&self) -> f64 {
        self.total(FieldKind::Electric)
    }

    pub fn total_g(&self) -> f64 {
        self.total(FieldKind::Magnetic)
    }

    pub fn is_electric_only(&self) -> bool {
        self.charges.iter().all(|c| c.g == 0.0)
    }

    pub fn is_magnetic_only(&self) -> bool {
        self.charges.iter().all(|c| c.q == 0.0)
    }

    /// Index of and distance to the nearest charge.
    pub fn nearest(&self, x: Point3) -> (usize, f64) {
        self.charges
            .iter()
            .enumerate()
            .map(|(i, c)| (i, x.distance(c.position)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// Errors with [`Error::SingularPoint`] when `x` lies within the exclusion radius.
    pub fn check_point(&self, x: Point3) -> Result<()> {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite evaluation point {x:?}"
            )));
        }
        let (index, distance) = self.nearest(x);
        if distance < self.exclusion {
            return Err(Error::SingularPoint {
                point: x,
                index,
                distance,
                radius: self.exclusion,
            });
        }
        Ok(())
    }

    /// `Σ s_i r_i / (4π|r_i|³)` with `s_i` the charge of the requested kind.
    pub fn field(&self, x: Point3, kind: FieldKind) -> Result<Vec3> {
        self.check_point(x)?;
        let mut acc = CompensatedVec::new();
        for c in &self.charges {
            let s = c.strength(kind);
            if s == 0.0 {
                continue;
            }
            let r = x - c.position;
            let d = r.norm();
            acc.add(r * (s / (FOUR_PI * d * d * d)));
        }
        Ok(acc.value())
    }

    pub fn displacement_field(&self, x: Point3) -> Result<Vec3> {
        self.field(x, FieldKind::Electric)
    }

    pub fn magnetic_field(&self, x: Point3) -> Result<Vec3> {
        self.field(x, FieldKind::Magnetic)
    }

    /// `B × D` summed pairwise, `Σ_{i<j} (g_i q_j − g_j q_i) v_i × v_j` with
    /// `v_i = r_i / (4π|r_i|³)`; self terms vanish identically.
    pub fn b_cross_d(&self, x: Point3) -> Result<Vec3> {
        self.check_point(x)?;
        let v: Vec<Vec3> = self
            .charges
            .iter()
            .map(|c| {
                let r = x - c.position;
                let d = r.norm();
                r / (FOUR_PI * d * d * d)
            })
            .collect();
        let mut acc = CompensatedVec::new();
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                let ci = &self.charges[i];
                let cj = &self.charges[j];
                let w = ci.g * cj.q - cj.g * ci.q;
                if w != 0.0 {
                    acc.add(v[i].cross(v[j]) * w);
                }
            }
        }
        Ok(acc.value())
    }

    /// `U(x) = Σ s_i / (4π|r_i|)`; the field is `−∇U`.
    pub fn scalar_potential(&self, x: Point3, kind: FieldKind) -> Result<Potential> {
        self.check_point(x)?;
        let mut acc = CompensatedSum::new();
        for c in &self.charges {
            let s = c.strength(kind);
            if s != 0.0 {
                acc.add(s / (FOUR_PI * x.distance(c.position)));
            }
        }
        Ok(Potential {
            value: acc.value(),
            kind,
        })
    }

    /// Jacobian `J[k][l] = ∂_k F_l` of the field of the requested kind.
    /// Symmetric because the field is a gradient.
    pub fn field_jacobian(&self, x: Point3, kind: FieldKind) -> Result<[[f64; 3]; 3]> {
        self.check_point(x)?;
        let mut acc = [[CompensatedSum::new(); 3]; 3];
        for c in &self.charges {
            let s = c.strength(kind);
            if s == 0.0 {
                continue;
            }
            let r = x - c.position;
            let d2 = r.norm2();
            let d = libm::sqrt(d2);
            let pre = s / (FOUR_PI * d2 * d);
            for (k, row) in acc.iter_mut().enumerate() {
                for (l, cell) in row.iter_mut().enumerate() {
                    let delta = if k == l { 1.0 } else { 0.0 };
                    cell.add(pre * (delta - 3.0 * r[k] * r[l] / d2));
                }
            }
        }
        let mut out = [[0.0; 3]; 3];
        for k in 0..3 {
            for l in 0..3 {
                out[k][l] = acc[k][l].value();
            }
        }
        Ok(out)
    }

    /// `∇|F|² = 2 J F`.
    pub fn grad_field_norm2(&self, x: Point3, kind: FieldKind) -> Result<Vec3> {
        let f = self.field(x, kind)?;
        let j = self.field_jacobian(x, kind)?;
        let row = |k: usize| 2.0 * (j[k][0] * f.x + j[k][1] * f.y + j[k][2] * f.z);
        Ok(Vec3::new(row(0), row(1), row(2)))
    }
}

/// `D(x)` of the configuration.
pub fn displacement_field(cfg: &ChargeConfig, x: Point3) -> Result<Vec3> {
    cfg.displacement_field(x)
}

/// `B(x)` of the configuration.
pub fn magnetic_field(cfg: &ChargeConfig, x: Point3) -> Result<Vec3> {
    cfg.magnetic_field(x)
}

pub fn scalar_potential(cfg: &ChargeConfig, x: Point3, kind: FieldKind) -> Result<Potential> {
    cfg.scalar_potential(x, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn single(q: f64, g: f64) -> ChargeConfig {
        ChargeConfig::new(vec![Charge::new(Vec3::ZERO, q, g)]).unwrap()
    }

    #[test]
    fn unit_coulomb_field() {
        let cfg = single(FOUR_PI, 0.0);
        let d = cfg.displacement_field(Vec3::X).unwrap();
        assert_relative_eq!(d.x, 1.0, epsilon = 1e-15);
        assert_eq!(d.y, 0.0);
        assert_eq!(d.z, 0.0);
    }

    #[test]
    fn opposite_pair_superposes_at_midpoint() {
        let cfg = ChargeConfig::new(vec![
            Charge::electric(Vec3::X, FOUR_PI),
            Charge::electric(-Vec3::X, -FOUR_PI),
        ])
        .unwrap();
        let d = cfg.displacement_field(Vec3::ZERO).unwrap();
        assert_relative_eq!(d.x, -2.0, epsilon = 1e-15);
        assert_eq!(d.y, 0.0);
    }

    #[test]
    fn evaluation_at_charge_is_singular() {
        let cfg = single(1.0, 0.0);
        assert!(matches!(
            cfg.displacement_field(Vec3::ZERO),
            Err(Error::SingularPoint { index: 0, .. })
        ));
        assert!(matches!(
            cfg.displacement_field(Vec3::new(1e-10, 0.0, 0.0)),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn magnetic_inverse_square() {
        let cfg = single(0.0, FOUR_PI);
        let b = cfg.magnetic_field(Vec3::new(0.0, 2.0, 0.0)).unwrap();
        assert_relative_eq!(b.y, 0.25, epsilon = 1e-15);
        assert_eq!(b.x, 0.0);
    }

    #[test]
    fn no_magnetic_charge_means_zero_b() {
        let cfg = single(1.0, 0.0);
        assert_eq!(
            cfg.magnetic_field(Vec3::new(0.3, -1.0, 2.0)).unwrap(),
            Vec3::ZERO
        );
    }

    #[test]
    fn mirror_pair_has_no_normal_component_on_midplane() {
        let cfg = ChargeConfig::new(vec![
            Charge::magnetic(Vec3::Z, 1.3),
            Charge::magnetic(-Vec3::Z, 1.3),
        ])
        .unwrap();
        for p in [Vec3::new(0.4, -0.7, 0.0), Vec3::new(3.0, 1.0, 0.0)] {
            assert_eq!(cfg.magnetic_field(p).unwrap().z, 0.0);
        }
    }

    #[test]
    fn potential_values() {
        let cfg = single(FOUR_PI, 0.0);
        let u = cfg
            .scalar_potential(Vec3::new(0.0, 0.0, 2.0), FieldKind::Electric)
            .unwrap();
        assert_relative_eq!(u.value, 0.5, epsilon = 1e-15);

        let pair = ChargeConfig::new(vec![
            Charge::electric(Vec3::new(0.0, 0.0, 1.0), 0.8),
            Charge::electric(Vec3::new(0.0, 0.0, -1.0), -0.8),
        ])
        .unwrap();
        let u = pair
            .scalar_potential(Vec3::new(0.3, 0.2, 0.0), FieldKind::Electric)
            .unwrap();
        assert_eq!(u.value, 0.0);
    }

    #[test]
    fn validation_rejects_bad_configs() {
        assert!(ChargeConfig::new(vec![]).is_err());
        assert!(ChargeConfig::new(vec![Charge::new(Vec3::ZERO, 0.0, 0.0)]).is_err());
        assert!(ChargeConfig::new(vec![
            Charge::electric(Vec3::X, 1.0),
            Charge::electric(Vec3::X, 2.0)
        ])
        .is_err());
    }

    #[test]
    fn default_exclusion_scales_with_diameter() {
        assert_eq!(single(1.0, 0.0).exclusion_radius(), 1e-9);
        let cfg = ChargeConfig::new(vec![
            Charge::electric(Vec3::ZERO, 1.0),
            Charge::electric(Vec3::new(4.0, 0.0, 0.0), 1.0),
        ])
        .unwrap();
        assert_relative_eq!(cfg.exclusion_radius(), 4e-9);
    }

    #[test]
    fn jacobian_is_symmetric_and_traceless() {
        let cfg = ChargeConfig::new(vec![
            Charge::electric(Vec3::new(0.2, 0.1, -0.3), 1.0),
            Charge::electric(Vec3::new(-0.5, 0.4, 0.6), -2.0),
        ])
        .unwrap();
        let j = cfg
            .field_jacobian(Vec3::new(0.7, -0.2, 0.1), FieldKind::Electric)
            .unwrap();
        for k in 0..3 {
            for l in 0..3 {
                assert_relative_eq!(j[k][l], j[l][k], epsilon = 1e-14);
            }
        }
        assert!((j[0][0] + j[1][1] + j[2][2]).abs() < 1e-13);
    }
}
