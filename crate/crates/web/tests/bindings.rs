use rydres_web::{preparation, presets, resonance, target_kind};

#[test]
fn presets_are_the_dimer_rows() {
    let p = presets();
    assert_eq!(p.len(), 4);
    assert_eq!(p[0].target, "bell_minus");
    assert_eq!(p[2].kt_over_w, Some(1.2));
}

#[test]
fn row_one_preparation() {
    let row = &presets()[0];
    let kind = target_kind(&row.target, 0.0).unwrap();
    let p = preparation(kind, row.params, 5.0, 2.0, 1.0, 20).unwrap();
    assert_eq!(p.times.len(), 21);
    assert!((p.f_d[20] - 0.992).abs() < 0.005, "{}", p.f_d[20]);
    assert!(p.f_d_steady > 0.99);
    for pops in &p.p_phi {
        assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-8);
    }
}

#[test]
fn resonance_numbers() {
    let r = resonance(5.0, 2.0, 7.0, 100.0, true, 1.0).unwrap();
    assert!((r.params.delta_p - 83.37).abs() < 0.01);
    assert!((r.params.delta_c + 32.93).abs() < 0.01);
    assert!(r.ordered);
    assert_eq!(r.survival.len(), 201);
    assert!((r.survival[0] - 1.0).abs() < 1e-12);
}

#[test]
fn unknown_target() {
    assert!(target_kind("ghz", 1.0).is_none());
}
