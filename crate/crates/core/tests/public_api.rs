use nled_core::currents::analytic_currents;
use nled_core::observables::energy_density_at;
use nled_core::{Charge, ChargeConfig, FieldState, ModelParams, Vec3, FOUR_PI};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec3> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

#[test]
fn dipole_fields_and_currents() -> Result<(), nled_core::Error> {
    let cfg = ChargeConfig::new(vec![
        Charge::electric(Vec3::new(0.5, 0.0, 0.0), 1.0),
        Charge::electric(Vec3::new(-0.5, 0.0, 0.0), -2.0),
    ])?;
    let model = ModelParams::classical(1.0, 0.0)?;
    let x = Vec3::new(0.1, 0.3, 0.2);
    let state = FieldState::at(&cfg, &model, x)?;
    assert!(state.e.norm() < 1.0);
    assert_eq!(state.h, Vec3::ZERO);
    let j = analytic_currents(&model, &cfg, x)?.expect("electric-only currents are closed form");
    assert_eq!(j.j_e, Vec3::ZERO);
    assert!(j.j_m.norm() > 0.0);
    Ok(())
}

proptest! {
    #[test]
    fn single_charge_field_is_radial_and_saturated(q in 0.1..10.0f64, beta in 0.1..10.0f64, x in point()) {
        prop_assume!(x.norm() > 1e-2);
        let cfg = ChargeConfig::new(vec![Charge::electric(Vec3::ZERO, q)]).unwrap();
        let p = ModelParams::classical(beta, 0.0).unwrap();
        let e = FieldState::at(&cfg, &p, x).unwrap().e;
        let d = q / (FOUR_PI * x.norm2());
        let expected = d / (1.0 + beta * d * d).sqrt();
        prop_assert!((e.norm() - expected).abs() <= 1e-12 * expected);
        prop_assert!(e.cross(x).norm() <= 1e-12 * e.norm() * x.norm());
    }

    #[test]
    fn energy_density_is_non_negative(q1 in -3.0..3.0f64, g2 in -3.0..3.0f64, kappa in 0.0..2.0f64, x in point()) {
        let cfg = ChargeConfig::new(vec![
            Charge::new(Vec3::new(0.4, 0.0, 0.0), q1, 0.0),
            Charge::new(Vec3::new(-0.4, 0.2, 0.0), 0.5, g2),
        ])
        .unwrap();
        prop_assume!(cfg.nearest(x).1 > 0.05);
        for p in [ModelParams::classical(1.0, kappa).unwrap(), ModelParams::logarithmic(1.0, kappa).unwrap()] {
            prop_assert!(energy_density_at(&cfg, &p, x).unwrap() >= 0.0);
        }
    }
}
