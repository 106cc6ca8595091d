//! Central-difference gradient, Jacobian, curl and divergence of sampled fields.
//!
//! These are independent of every closed form in the crate and serve as the
//! oracle for the analytic currents and residual identities.

use crate::error::Result;
use crate::sources::ChargeConfig;
use crate::vector::{Point3, Vec3};

/// `h = 1e-4 · max(1, |x|)`.
pub fn default_step(x: Point3) -> f64 {
    1e-4 * x.norm().max(1.0)
}

/// Whether every node of a stencil of half-width `reach · h` stays out of the exclusion balls.
pub fn stencil_clear(cfg: &ChargeConfig, x: Point3, h: f64, reach: f64) -> bool {
    cfg.nearest(x).1 > cfg.exclusion_radius() + reach * h * 1.75
}

/// Second-order gradient of a scalar field.
pub fn fd_gradient<F: FnMut(Point3) -> Result<f64>>(mut f: F, x: Point3, h: f64) -> Result<Vec3> {
    let mut g = [0.0; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let e = Vec3::axis(k) * h;
        *gk = (f(x + e)? - f(x - e)?) / (2.0 * h);
    }
    Ok(Vec3::from_array(g))
}

/// Fourth-order gradient of a scalar field.
pub fn fd_gradient4<F: FnMut(Point3) -> Result<f64>>(mut f: F, x: Point3, h: f64) -> Result<Vec3> {
    let mut g = [0.0; 3];
    for (k, gk) in g.iter_mut().enumerate() {
        let e = Vec3::axis(k) * h;
        let f1 = f(x + e)? - f(x - e)?;
        let f2 = f(x + e * 2.0)? - f(x - e * 2.0)?;
        *gk = (8.0 * f1 - f2) / (12.0 * h);
    }
    Ok(Vec3::from_array(g))
}

/// `J[k][l] = ∂_k F_l`, second order.
pub fn fd_jacobian<F: FnMut(Point3) -> Result<Vec3>>(
    mut field: F,
    x: Point3,
    h: f64,
) -> Result<[[f64; 3]; 3]> {
    let mut j = [[0.0; 3]; 3];
    for (k, row) in j.iter_mut().enumerate() {
        let e = Vec3::axis(k) * h;
        let diff = (field(x + e)? - field(x - e)?) / (2.0 * h);
        *row = diff.to_array();
    }
    Ok(j)
}

/// `J[k][l] = ∂_k F_l`, fourth order.
pub fn fd_jacobian4<F: FnMut(Point3) -> Result<Vec3>>(
    mut field: F,
    x: Point3,
    h: f64,
) -> Result<[[f64; 3]; 3]> {
    let mut j = [[0.0; 3]; 3];
    for (k, row) in j.iter_mut().enumerate() {
        let e = Vec3::axis(k) * h;
        let d1 = field(x + e)? - field(x - e)?;
        let d2 = field(x + e * 2.0)? - field(x - e * 2.0)?;
        *row = ((d1 * 8.0 - d2) / (12.0 * h)).to_array();
    }
    Ok(j)
}

pub fn curl_of_jacobian(j: &[[f64; 3]; 3]) -> Vec3 {
    Vec3::new(j[1][2] - j[2][1], j[2][0] - j[0][2], j[0][1] - j[1][0])
}

pub fn div_of_jacobian(j: &[[f64; 3]; 3]) -> f64 {
    j[0][0] + j[1][1] + j[2][2]
}

/// Curl on the 6-point central stencil.
pub fn fd_curl<F: FnMut(Point3) -> Result<Vec3>>(field: F, x: Point3, h: f64) -> Result<Vec3> {
    Ok(curl_of_jacobian(&fd_jacobian(field, x, h)?))
}

/// Divergence on the 6-point central stencil.
pub fn fd_div<F: FnMut(Point3) -> Result<Vec3>>(field: F, x: Point3, h: f64) -> Result<f64> {
    Ok(div_of_jacobian(&fd_jacobian(field, x, h)?))
}

/// Richardson combination `(4 C(h/2) − C(h)) / 3` of two curls.
pub fn fd_curl_richardson<F: FnMut(Point3) -> Result<Vec3>>(
    mut field: F,
    x: Point3,
    h: f64,
) -> Result<Vec3> {
    let coarse = fd_curl(&mut field, x, h)?;
    let fine = fd_curl(&mut field, x, 0.5 * h)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

/// Richardson combination of two divergences.
pub fn fd_div_richardson<F: FnMut(Point3) -> Result<Vec3>>(
    mut field: F,
    x: Point3,
    h: f64,
) -> Result<f64> {
    let coarse = fd_div(&mut field, x, h)?;
    let fine = fd_div(&mut field, x, 0.5 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}
