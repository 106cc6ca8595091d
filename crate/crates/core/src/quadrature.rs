//! One-dimensional adaptive Gauss–Kronrod quadrature and product rules on the sphere.

use crate::error::{Error, Result};
use crate::math::CompensatedSum;
use crate::vector::Vec3;
use alloc::vec::Vec;
use core::f64::consts::PI;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_subdivisions: usize,
}

impl Tolerance {
    pub const fn new(rel: f64, abs: f64, max_subdivisions: usize) -> Self {
        Self {
            rel,
            abs,
            max_subdivisions,
        }
    }

    fn met(&self, value: f64, error: f64) -> bool {
        error <= self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl Integral {
    /// The value, or [`Error::QuadratureNonConvergence`] naming `what`.
    pub fn require(self, what: &str) -> Result<f64> {
        if self.converged {
            Ok(self.value)
        } else {
            Err(Error::QuadratureNonConvergence(alloc::format!(
                "{what}: estimate {} with error {}",
                self.value,
                self.error
            )))
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn kronrod<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<Segment> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let fx = f(c - h * XGK[i])? + f(c + h * XGK[i])?;
        k += WGK[i] * fx;
        if i % 2 == 1 {
            g += WG[i / 2] * fx;
        }
    }
    if !k.is_finite() {
        return Err(Error::QuadratureNonConvergence(alloc::format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    Ok(Segment {
        a,
        b,
        value: k * h,
        error: ((k - g) * h).abs(),
    })
}

/// Globally adaptive 15-point Gauss–Kronrod integration of `f` over `[a, b]`.
///
/// Splits the segment with the largest error estimate until the total error
/// meets `tol` or the subdivision budget is spent.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Integral> {
    integrate_breaks(&mut f, &[a, b], tol)
}

/// As [`integrate`] with the interval pre-split at `breaks` (sorted, first and last are the limits).
pub fn integrate_breaks<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<Integral> {
    let mut segs: Vec<Segment> = Vec::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            segs.push(kronrod(&mut f, w[0], w[1])?);
        }
    }
    let mut evaluations = 15 * segs.len();
    let total = |segs: &[Segment]| {
        let mut v = CompensatedSum::new();
        let mut e = 0.0;
        for s in segs {
            v.add(s.value);
            e += s.error;
        }
        (v.value(), e)
    };
    let (mut value, mut error) = total(&segs);
    let mut splits = 0;
    while !tol.met(value, error) && splits < tol.max_subdivisions {
        let worst = segs
            .iter()
            .enumerate()
            .fold(0, |w, (i, s)| if s.error > segs[w].error { i } else { w });
        let s = segs[worst];
        let m = 0.5 * (s.a + s.b);
        if !(m > s.a && m < s.b) {
            break;
        }
        segs[worst] = kronrod(&mut f, s.a, m)?;
        segs.push(kronrod(&mut f, m, s.b)?);
        evaluations += 30;
        splits += 1;
        (value, error) = total(&segs);
    }
    Ok(Integral {
        value,
        error,
        evaluations,
        converged: tol.met(value, error),
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() <= 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss–Legendre in `cos θ` times the trapezoid rule in `φ` on the unit sphere.
///
/// With `n` polar and `2n` azimuthal nodes the rule integrates spherical
/// harmonics of degree below `2n` exactly; weights sum to `4π`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    nodes: Vec<(Vec3, f64)>,
}

impl SphereRule {
    pub fn product(n: usize) -> Self {
        let n = n.max(1);
        let (ct, wt) = gauss_legendre(n);
        let m = 2 * n;
        let dphi = 2.0 * PI / m as f64;
        let mut nodes = Vec::with_capacity(n * m);
        for (c, w) in ct.iter().zip(&wt) {
            let st = libm::sqrt((1.0 - c * c).max(0.0));
            for j in 0..m {
                let phi = (j as f64 + 0.5) * dphi;
                nodes.push((
                    Vec3::new(st * libm::cos(phi), st * libm::sin(phi), *c),
                    w * dphi,
                ));
            }
        }
        Self { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[(Vec3, f64)] {
        &self.nodes
    }

    /// `∮ f(n) dΩ` over unit directions `n`.
    pub fn integrate<F: FnMut(Vec3) -> Result<f64>>(&self, mut f: F) -> Result<f64> {
        let mut s = CompensatedSum::new();
        for (n, w) in &self.nodes {
            s.add(w * f(*n)?);
        }
        Ok(s.value())
    }
}

/// Sphere integral with the product order doubled from `start` until two
/// successive estimates agree; returns the estimate and the order used.
pub fn sphere_adaptive<F: FnMut(Vec3) -> Result<f64>>(
    mut f: F,
    start: usize,
    max_order: usize,
    rel: f64,
    abs: f64,
) -> Result<(Integral, usize)> {
    let mut n = start.max(2);
    let mut prev = SphereRule::product(n).integrate(&mut f)?;
    let mut evaluations = 2 * n * n;
    loop {
        let next_n = 2 * n;
        let rule = SphereRule::product(next_n);
        let cur = rule.integrate(&mut f)?;
        evaluations += rule.len();
        let error = (cur - prev).abs();
        let converged = error <= abs.max(rel * cur.abs());
        if converged || next_n >= max_order {
            return Ok((
                Integral {
                    value: cur,
                    error,
                    evaluations,
                    converged,
                },
                next_n,
            ));
        }
        prev = cur;
        n = next_n;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: Tolerance = Tolerance::new(1e-12, 1e-300, 200);

    #[test]
    fn legendre_rules_are_exact_for_polynomials() {
        for n in [1, 2, 5, 8, 17, 64] {
            let (x, w) = gauss_legendre(n);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 {
                    0.0
                } else {
                    2.0 / (deg as f64 + 1.0)
                };
                assert!((q - exact).abs() <= 1e-13, "n={n} deg={deg} {q} {exact}");
            }
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn kronrod_smooth_and_singular() {
        let r = integrate(|x| Ok(libm::exp(x)), 0.0, 1.0, TOL).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, core::f64::consts::E - 1.0, max_relative = 1e-14);
        let r = integrate(
            |x| Ok(1.0 / libm::sqrt(x)),
            0.0,
            1.0,
            Tolerance::new(1e-10, 0.0, 500),
        )
        .unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0, max_relative = 1e-9);
        let r = integrate_breaks(|x| Ok(x.abs()), &[-1.0, 0.0, 2.0], TOL).unwrap();
        assert_relative_eq!(r.value, 2.5, max_relative = 1e-14);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let r = integrate(|x| Ok(1.0 / x), 1e-300, 1.0, Tolerance::new(1e-14, 0.0, 3)).unwrap();
        assert!(!r.converged);
        assert!(r.require("test").is_err());
    }

    #[test]
    fn integrand_errors_propagate() {
        let r = integrate(
            |x| {
                if x > 0.5 {
                    Err(Error::InvalidInput("boom".into()))
                } else {
                    Ok(x)
                }
            },
            0.0,
            1.0,
            TOL,
        );
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn sphere_rule_moments() {
        let rule = SphereRule::product(6);
        assert_relative_eq!(
            rule.integrate(|_| Ok(1.0)).unwrap(),
            4.0 * PI,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            rule.integrate(|n| Ok(n.x * n.x)).unwrap(),
            4.0 * PI / 3.0,
            max_relative = 1e-14
        );
        assert!(rule.integrate(|n| Ok(n.x * n.y * n.z)).unwrap().abs() <= 1e-14);
        assert_relative_eq!(
            rule.integrate(|n| Ok(n.x.powi(4) * n.y.powi(2))).unwrap(),
            4.0 * PI / 35.0,
            max_relative = 1e-13
        );
    }

    #[test]
    fn adaptive_sphere_resolves_offset_source() {
        let c = Vec3::new(0.0, 0.0, 0.5);
        let (r, _) = sphere_adaptive(|n| Ok(1.0 / (n - c).norm()), 4, 256, 1e-12, 0.0).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.value, 4.0 * PI, max_relative = 1e-11);
    }
}
