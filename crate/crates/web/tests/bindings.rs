use pairspec_browser::*;

#[test]
fn prediction_matches_library() {
    let p = predict(0.4, 0.4, 7, 8).unwrap();
    assert_eq!(p.min_photon_number, 7);
    assert!((p.gamma - 1.0).abs() < 1e-15);
    assert_eq!(p.rings.iter().map(|r| r.node_count).collect::<Vec<_>>(), vec![8, 10]);
    assert!((p.rings[0].radius.unwrap() - 0.67823).abs() < 5e-6);
    let json: serde_json::Value = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(json["rings"][1]["n"], 8);
}

#[test]
fn closed_channels_are_reported() {
    let p = predict(0.4, 0.4, 1, 3).unwrap();
    assert!(p.rings.iter().all(|r| !r.present && r.radius.is_none() && r.node_count == 0));
}

#[test]
fn map_is_symmetric_and_nonnegative() {
    let side = 41;
    let m = semianalytic_map(0.1, 0.4, 8, 1.2, side, false).unwrap();
    assert_eq!(m.len(), side * side);
    assert!(m.iter().all(|v| *v >= 0.0 && v.is_finite()));
    assert!(m.iter().any(|v| *v > 0.0));
    let tol = 1e-9 * m.iter().cloned().fold(0.0, f64::max);
    for r in 0..side {
        for c in 0..side {
            let a = m[r * side + c];
            assert!((a - m[r * side + side - 1 - c]).abs() <= tol);
            assert!((a - m[(side - 1 - r) * side + c]).abs() <= tol);
        }
    }
}

#[test]
fn line_scan_matches_solver() {
    let v = line_scan(0.4, 0.4, 0.0, 100.0, 0.3, -0.2, 0.2, 3).unwrap();
    let cfg = pairspec::field::FieldConfig::new(0.4, 0.4);
    let f = pairspec::dhw::solve_point(pairspec::field::Momentum3::new(0.2, 0.3, 0.0), &cfg, &Default::default())
        .unwrap()
        .f_final;
    assert_eq!(v[2], f);
    assert!((v[0] - v[2]).abs() <= 1e-6 * f);
}

#[test]
fn bad_inputs_are_errors() {
    assert!(predict(0.4, 0.0, 7, 8).is_err());
    assert!(predict(0.0, 0.4, 7, 8).is_err());
    assert!(predict(0.4, 0.4, 8, 7).is_err());
    assert!(semianalytic_map(0.1, 0.4, 8, 1.0, 1, false).is_err());
    assert!(line_scan(0.4, 0.4, 0.0, 100.0, 0.0, 0.5, 0.5, 10).is_err());
    assert!(line_scan(0.4, 0.4, 2.0, 100.0, 0.0, 0.0, 0.5, 10).is_err());
}
