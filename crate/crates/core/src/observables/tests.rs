use super::*;
use crate::sources::Charge;
use crate::FOUR_PI;
use alloc::vec;
use approx::assert_relative_eq;
use proptest::prelude::*;

/// `∫₀^∞ (√(ρ⁴+1) − ρ²) dρ = Γ(1/4)² / (6√π)`.
const BORN_INFELD_INTEGRAL: f64 = 1.23604978486758127895590023146;

fn single(q: f64, g: f64) -> ChargeConfig {
    ChargeConfig::new(vec![Charge::new(Vec3::ZERO, q, g)]).unwrap()
}

fn models(kappa: f64) -> Vec<ModelParams> {
    vec![
        ModelParams::classical(1.0, kappa).unwrap(),
        ModelParams::logarithmic(0.7, kappa).unwrap(),
        ModelParams::exponential(1.3, kappa).unwrap(),
        ModelParams::fractional_power(1.0, kappa, 2.5).unwrap(),
        ModelParams::quadratic(0.4, kappa).unwrap(),
    ]
}

fn state(params: &ModelParams, d: Vec3, b: Vec3) -> FieldState {
    FieldState::from_prescribed(params, d, b).unwrap().0
}

#[test]
fn zero_fields_carry_no_energy() {
    for k in [0.0, 1.0] {
        for p in models(k) {
            assert_eq!(
                energy_density(&p, &FieldState::zero()).unwrap(),
                0.0,
                "{}",
                p.name()
            );
            assert_eq!(
                energy_density_generic(&p, &FieldState::zero()).unwrap(),
                0.0
            );
        }
    }
}

#[test]
fn classical_electrostatic_value() {
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let h = energy_density(&p, &state(&p, Vec3::X, Vec3::ZERO)).unwrap();
    assert_relative_eq!(h, 1.0 / (2f64.sqrt() + 1.0), max_relative = 1e-15);
    let b = energy_density(&p, &state(&p, Vec3::ZERO, Vec3::new(0.0, 2.0, 0.0))).unwrap();
    assert_relative_eq!(b, 4.0 / (5f64.sqrt() + 1.0), max_relative = 1e-15);
}

#[test]
fn logarithmic_static_forms() {
    let beta = 0.7;
    let p = ModelParams::logarithmic(beta, 0.0).unwrap();
    let st = state(&p, Vec3::new(0.3, -1.2, 2.0), Vec3::ZERO);
    let e2 = st.e.norm2();
    let w = 1.0 - 0.5 * beta * e2;
    assert_relative_eq!(
        energy_density(&p, &st).unwrap(),
        e2 / w + libm::log(w) / beta,
        max_relative = 1e-13
    );
    let st = state(&p, Vec3::ZERO, Vec3::new(1.5, 0.0, -0.5));
    let b2 = st.b.norm2();
    assert_relative_eq!(
        energy_density(&p, &st).unwrap(),
        libm::log(1.0 + 0.5 * beta * b2) / beta,
        max_relative = 1e-13
    );
}

#[test]
fn exponential_closed_form() {
    let beta = 1.3;
    let p = ModelParams::exponential(beta, 0.6).unwrap();
    let st = state(&p, Vec3::new(0.8, 0.2, -0.4), Vec3::new(0.1, 0.9, 0.3));
    let e = st.e;
    let w = beta * (e.norm2() + 0.36 * e.dot(st.b).powi(2));
    let plain = (1.0 - libm::exp(beta * st.s) * (1.0 - w)) / beta;
    assert_relative_eq!(
        energy_density(&p, &st).unwrap(),
        plain,
        max_relative = 1e-12
    );
}

#[test]
fn quadratic_closed_form() {
    let p = ModelParams::quadratic(0.4, 0.5).unwrap();
    let st = state(&p, Vec3::new(0.5, 0.1, 0.2), Vec3::new(0.2, 0.3, -0.1));
    let direct = st.e.dot(st.d) - p.f(st.s).unwrap();
    assert_relative_eq!(
        energy_density(&p, &st).unwrap(),
        direct,
        max_relative = 1e-12
    );
}

#[test]
fn special_forms_match_generic() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    for k in [0.0, 0.5, 1.0] {
        for p in models(k) {
            for _ in 0..300 {
                let scale = libm::pow(10.0, rng.random_range(-3.0..2.0));
                let mut v = || {
                    Vec3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    ) * scale
                };
                let (d, b) = (v(), v() * 0.3);
                let Ok((st, _)) = FieldState::from_prescribed(&p, d, b) else {
                    continue;
                };
                let a = energy_density(&p, &st).unwrap();
                let g = energy_density_generic(&p, &st).unwrap();
                assert!(
                    (a - g).abs() <= 1e-10 * a.abs().max(1e-300),
                    "{} k={k} {a} {g} d={d:?} b={b:?}",
                    p.name()
                );
            }
        }
    }
}

#[test]
fn small_fields_are_quadratic() {
    for k in [0.0, 1.0] {
        for p in models(k) {
            let d = Vec3::new(3e-7, -1e-7, 2e-7);
            let b = Vec3::new(1e-7, 2e-7, 0.0);
            let h = energy_density(&p, &state(&p, d, b)).unwrap();
            assert_relative_eq!(h, 0.5 * (d.norm2() + b.norm2()), max_relative = 1e-8);
        }
    }
}

#[test]
fn kappa_zero_dyon_density_diverges_like_r4() {
    let (q, g) = (2.0, 1.0);
    let cfg = single(q, g);
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let r = 1e-4;
    let h = energy_density_at(&cfg, &p, PROBE_RAY * r).unwrap();
    assert_relative_eq!(
        h * r.powi(4),
        q * g / (FOUR_PI * FOUR_PI),
        max_relative = 1e-3
    );
}

#[test]
fn dyon_near_field_with_coupling() {
    let (q, g, beta, kappa) = (1.0, 1.0, 1.0, 1.0);
    let cfg = single(q, g);
    let p = ModelParams::classical(beta, kappa).unwrap();
    let r = 1e-3;
    let h = energy_density_at(&cfg, &p, PROBE_RAY * r).unwrap();
    let c = libm::sqrt(beta * q * q + kappa * kappa * g * g) / (FOUR_PI * libm::sqrt(beta) * kappa);
    assert!((h * r * r / c - 1.0).abs() <= 0.01, "{} {c}", h * r * r);
    let log = ModelParams::logarithmic(beta, kappa).unwrap();
    let h = energy_density_at(&cfg, &log, PROBE_RAY * r).unwrap();
    assert!((h * r * r * FOUR_PI * kappa / q.abs() - 1.0).abs() <= 0.01);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn energy_density_is_nonnegative(
        d in (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64),
        b in (-50.0..50.0f64, -50.0..50.0f64, -50.0..50.0f64),
        k in 0.0..2.0f64,
        which in 0usize..5,
    ) {
        let p = &models(k)[which];
        let d = Vec3::new(d.0, d.1, d.2);
        let b = Vec3::new(b.0, b.1, b.2);
        if let Ok((st, _)) = FieldState::from_prescribed(p, d, b) {
            let h = energy_density(p, &st).unwrap();
            prop_assert!(h >= 0.0, "{} {h}", p.name());
        }
    }
}

fn radial_oracle(params: &ModelParams, q: f64) -> f64 {
    let h = |r: f64| {
        let d = q / (FOUR_PI * r * r);
        energy_density(params, &state(params, Vec3::new(d, 0.0, 0.0), Vec3::ZERO)).unwrap()
    };
    let tol = Tolerance::new(1e-12, 0.0, 2000);
    let (lo, hi) = (1e-14_f64, 1e7_f64);
    let body = integrate(
        |t| {
            let r = libm::exp(t);
            Ok(4.0 * PI * r * r * r * h(r))
        },
        libm::log(lo),
        libm::log(hi),
        tol,
    )
    .unwrap();
    assert!(body.converged);
    body.value + 4.0 * PI * lo * lo * lo * h(lo) + q * q / (8.0 * PI * hi)
}

#[test]
fn single_charge_energy() {
    let (q, beta) = (1.0, 1.0);
    let p = ModelParams::classical(beta, 0.0).unwrap();
    let exact =
        BORN_INFELD_INTEGRAL * libm::pow(q, 1.5) * libm::pow(beta, -0.25) / libm::sqrt(FOUR_PI);
    let oracle = radial_oracle(&p, q);
    assert_relative_eq!(oracle, exact, max_relative = 1e-9);
    let cfg = single(q, 0.0);
    let mut quad = QuadratureSpec::for_config(&cfg);
    quad.rel_tol = 1e-7;
    let rep = total_energy(&cfg, &p, &quad).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(
        (rep.value - oracle).abs() <= 1e-4 * oracle,
        "{} {oracle}",
        rep.value
    );
    assert!(
        (rep.near_charge_exponents[0] + 2.0).abs() < 0.05,
        "{:?}",
        rep.near_charge_exponents
    );
}

#[test]
fn dyon_energy_finite_only_with_coupling() {
    let cfg = single(1.0, 1.0);
    let mut quad = QuadratureSpec::for_config(&cfg);
    quad.rel_tol = 1e-6;
    let rep = total_energy(&cfg, &ModelParams::classical(1.0, 1.0).unwrap(), &quad).unwrap();
    assert!(rep.converged, "{rep:?}");
    assert!(rep.value.is_finite() && rep.value > 0.0);
    assert!((rep.near_charge_exponents[0] + 2.0).abs() < 0.1);
    let rep = total_energy(&cfg, &ModelParams::classical(1.0, 0.0).unwrap(), &quad).unwrap();
    assert!(!rep.converged);
    assert!(
        (rep.near_charge_exponents[0] + 4.0).abs() < 0.1,
        "{:?}",
        rep.near_charge_exponents
    );
}

#[test]
fn exponent_probes() {
    let radii: Vec<f64> = (0..6)
        .map(|k| 1e-3 * libm::pow(10.0, -0.5 * k as f64))
        .collect();
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let s = divergence_exponent_probe(&single(1.0, 0.0), &p, 0, &radii).unwrap();
    assert!((s + 2.0).abs() < 0.05, "{s}");
    let s = divergence_exponent_probe(&single(1.0, 1.0), &p, 0, &radii).unwrap();
    assert!((s + 4.0).abs() < 0.1, "{s}");
    let log = ModelParams::logarithmic(1.0, 1.0).unwrap();
    let s = divergence_exponent_probe(&single(1.0, 1.0), &log, 0, &radii).unwrap();
    assert!((s + 2.0).abs() < 0.1, "{s}");
    assert!(divergence_exponent_probe(&single(1.0, 0.0), &p, 0, &[1e-3, 1e-2]).is_err());
    assert!(matches!(
        divergence_exponent_probe(&single(1.0, 0.0), &p, 0, &[1e-3, 1e-12]),
        Err(Error::SingularPoint { .. })
    ));
}

#[test]
fn flux_of_a_single_charge() {
    let (q, beta, r) = (1.0, 1.0, 10.0);
    let cfg = single(q, 0.0);
    let p = ModelParams::classical(beta, 0.0).unwrap();
    let quad = QuadratureSpec::for_config(&cfg);
    let flux = flux_charge(|x| Ok(FieldState::at(&cfg, &p, x)?.e), r, &quad).unwrap();
    let exact = 1.0 / libm::sqrt(1.0 + beta * q * q / (16.0 * PI * PI * r.powi(4)));
    assert!((flux - exact).abs() <= 1e-10, "{flux} {exact}");
}

fn three() -> ChargeConfig {
    ChargeConfig::new(vec![
        Charge::electric(Vec3::new(1.0, 0.0, 0.0), 1.0),
        Charge::electric(Vec3::new(-0.5, 0.8, 0.0), -2.0),
        Charge::electric(Vec3::new(0.0, -0.6, 0.7), 0.5),
    ])
    .unwrap()
}

#[test]
fn flux_of_three_charges() {
    let cfg = three();
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let quad = QuadratureSpec::for_config(&cfg);
    let flux = flux_charge(|x| Ok(FieldState::at(&cfg, &p, x)?.e), 50.0, &quad).unwrap();
    assert!((flux + 0.5).abs() <= 1e-4 * 0.5, "{flux}");
    for r in [3.0, 10.0, 40.0] {
        let fd = flux_charge(|x| cfg.displacement_field(x), r, &quad).unwrap();
        assert!((fd + 0.5).abs() <= 1e-10, "{fd}");
    }
    let ladder = flux_ladder(&cfg, &p, &[2.0, 4.0, 8.0, 16.0, 32.0], &quad).unwrap();
    let gaps: Vec<f64> = ladder.iter().map(|(_, f)| (f + 0.5).abs()).collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
}

#[test]
fn free_charges_of_a_kappa_zero_dyon() {
    let cfg = single(2.0, 1.0);
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let quad = QuadratureSpec::for_config(&cfg);
    let fc = free_charge_with_inner_spheres(&cfg, &p, &quad).unwrap();
    assert!((fc.q_free - 1.0).abs() <= 1e-3, "{fc:?}");
    assert!((fc.g_free + 1.0).abs() <= 1e-3, "{fc:?}");
    let coupled =
        free_charge_with_inner_spheres(&cfg, &ModelParams::classical(1.0, 1.0).unwrap(), &quad)
            .unwrap();
    assert!(
        (coupled.q_free - 2.0).abs() <= 1e-3 && (coupled.g_free - 1.0).abs() <= 1e-3,
        "{coupled:?}"
    );
}

#[test]
fn free_charges_of_electric_sources() {
    let cfg = three();
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let fc = free_charge_with_inner_spheres(&cfg, &p, &QuadratureSpec::for_config(&cfg)).unwrap();
    assert!((fc.q_free + 0.5).abs() <= 1e-6, "{fc:?}");
    assert!(fc.g_free.abs() <= 1e-12);
}

#[test]
fn quadrature_spec_validation() {
    let cfg = three();
    let good = QuadratureSpec::for_config(&cfg);
    assert!(good.validate(&cfg).is_ok());
    let mut bad = good.clone();
    bad.ball_radius = 10.0;
    assert!(bad.validate(&cfg).is_err());
    let mut bad = good.clone();
    bad.exclusion = 0.0;
    assert!(bad.validate(&cfg).is_err());
    let mut bad = good.clone();
    bad.far_radius = 0.5;
    assert!(bad.validate(&cfg).is_err());
}

#[test]
fn residuals_of_linear_theory() {
    let cfg = ChargeConfig::new(vec![
        Charge::new(Vec3::X, 1.0, 0.5),
        Charge::new(-Vec3::X, -2.0, 1.0),
    ])
    .unwrap();
    let p = ModelParams::fractional_power(1.0, 0.0, 1.0).unwrap();
    let rep = residual_suite(&cfg, &p, Grid::cube(2.0, 5).points());
    assert!(rep.failures.is_empty());
    for v in [
        rep.max_structural(),
        rep.max_curl_e,
        rep.max_curl_h,
        rep.max_faraday.unwrap(),
        rep.max_ampere.unwrap(),
    ] {
        assert!(v <= 1e-6, "{rep:?}");
    }
}

#[test]
fn residuals_of_two_electric_charges() {
    let cfg = ChargeConfig::new(vec![
        Charge::electric(Vec3::X, 1.0),
        Charge::electric(-Vec3::X, 2.0),
    ])
    .unwrap();
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let grid = Grid {
        lo: Vec3::new(-2.0, -2.0, -2.0),
        hi: Vec3::new(2.0, 2.0, 2.0),
        n: [6, 6, 6],
    };
    let rep = residual_suite(&cfg, &p, grid.points());
    assert!(rep.failures.is_empty());
    assert!(rep.max_faraday.unwrap() <= 1e-5, "{:?}", rep.max_faraday);
    assert!(rep.max_curl_e > 1e-3, "{}", rep.max_curl_e);
    assert!(rep.max_structural() <= 1e-6);
}

#[test]
fn residuals_of_a_coupled_dyon() {
    let cfg = single(1.0, 1.0);
    let p = ModelParams::classical(1.0, 1.0).unwrap();
    let grid = Grid {
        lo: Vec3::new(-2.0, -1.9, -1.7),
        hi: Vec3::new(2.0, 2.1, 2.3),
        n: [5, 5, 5],
    };
    let rep = residual_suite(&cfg, &p, grid.points());
    assert!(rep.failures.is_empty());
    assert!(rep.max_faraday.is_none());
    assert!(rep.max_curl_e <= 1e-6 && rep.max_curl_h <= 1e-6, "{rep:?}");
}

#[test]
fn widely_separated_energies_add() {
    let p = ModelParams::classical(1.0, 0.0).unwrap();
    let pair = ChargeConfig::new(vec![
        Charge::electric(Vec3::new(500.0, 0.0, 0.0), 1.0),
        Charge::electric(Vec3::new(-500.0, 0.0, 0.0), 1.0),
    ])
    .unwrap();
    let mut quad = QuadratureSpec::for_config(&pair);
    quad.ball_radius = 200.0;
    quad.rel_tol = 1e-6;
    let both = total_energy(&pair, &p, &quad).unwrap();
    let one = BORN_INFELD_INTEGRAL / libm::sqrt(FOUR_PI);
    assert!(both.converged, "{both:?}");
    assert!(
        (both.value / (2.0 * one) - 1.0).abs() < 0.01,
        "{} {}",
        both.value,
        2.0 * one
    );
}
