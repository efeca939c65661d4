use pairspec::field::*;
use pairspec::semianalytic::*;
use proptest::prelude::*;

fn field() -> impl Strategy<Value = FieldConfig> {
    (0.01f64..1.0, 0.05f64..2.0, 5.0f64..200.0, -3.2f64..3.2, -1.0f64..1.0).prop_map(|(e0, omega, tau, phi, delta)| FieldConfig { e0, omega, tau, phi, delta })
}

proptest! {
    #[test]
    fn field_magnitude_bounded(cfg in field(), t in -1e3f64..1e3) {
        let e = electric_field(&cfg, t);
        prop_assert!(e.norm() <= cfg.e0 * (1.0 + 1e-12));
    }

    #[test]
    fn gamma_scales_with_frequency(cfg in field(), k in 0.1f64..10.0) {
        let g = keldysh_gamma(&cfg).unwrap();
        let scaled = FieldConfig { omega: cfg.omega * k, ..cfg };
        prop_assert!((keldysh_gamma(&scaled).unwrap() - k * g).abs() <= 1e-12 * k * g);
    }

    #[test]
    fn effective_mass_ignores_polarization(cfg in field(), d in -1.0f64..1.0) {
        let m = effective_mass(&cfg);
        prop_assert_eq!(m, effective_mass(&cfg.with_delta(d)));
        prop_assert!(m >= 1.0);
    }

    #[test]
    fn validated_configs_are_finite(cfg in field()) {
        prop_assert!(cfg.validate().is_ok());
    }

    #[test]
    fn fn_value_nonnegative(qx in -1.5f64..1.5, qy in -1.5f64..1.5, e0 in 0.05f64..0.5, n in 6u32..10, boson in any::<bool>()) {
        let cfg = FieldConfig::new(e0, 0.4);
        let sconf = SemianalyticConfig { spin: if boson { Spin::Boson } else { Spin::Fermion }, ..Default::default() };
        match fn_value(Momentum3::new(qx, qy, 0.0), n, &cfg, &sconf) {
            Ok(v) => prop_assert!(v >= 0.0 && v.is_finite()),
            Err(SemiError::RingAbsent(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn interference_factor_in_range(qx in -3.0f64..3.0, omega in 0.05f64..2.0, n in 1u32..20) {
        let v = interference_factor(qx, omega, n, Spin::Fermion);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&v));
    }

    #[test]
    fn predicted_nodes_are_frequency_lattice(omega in 0.2f64..0.6, n in 1u32..12) {
        let cfg = FieldConfig::new(0.1, omega);
        if let Ok(nodes) = node_positions(n, &cfg, Spin::Fermion) {
            for x in node_qx(&nodes) {
                let k = x / omega;
                let frac = (k - k.floor()).min(k.ceil() - k);
                prop_assert!(frac < 1e-9 || (frac - 0.5).abs() < 1e-9, "qx {x} omega {omega}");
            }
        }
    }
}
