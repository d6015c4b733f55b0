use cbo_core::branin::{branin, coupled_evaluate, disk_constraint, GLOBAL_MINIMUM};

#[test]
fn dense_grid_never_undercuts_the_minimum() {
    let mut lowest = f64::INFINITY;
    for i in 0..1000 {
        let x1 = -5.0 + 15.0 * i as f64 / 999.0;
        for j in 0..1000 {
            let x2 = 15.0 * j as f64 / 999.0;
            lowest = lowest.min(branin(x1, x2));
        }
    }
    assert!(lowest >= 0.397_887 - 1e-6, "{lowest}");
    assert!(lowest - GLOBAL_MINIMUM < 1e-2);
}

#[test]
fn coupled_evaluation_is_the_pair_of_oracles() {
    // distance^2 from the disk center by hand
    let cases = [(std::f64::consts::PI, 2.275, 27.71), (-std::f64::consts::PI, 12.275, 54.63), (0.0, 0.0, 62.5)];
    for (x1, x2, d2) in cases {
        let (f, c) = coupled_evaluate(x1, x2);
        assert_eq!(f, branin(x1, x2));
        assert_eq!(c, d2 <= 50.0);
        assert_eq!(c, disk_constraint(x1, x2));
        assert_eq!(coupled_evaluate(x1, x2), (f, c));
    }
    assert!((coupled_evaluate(0.0, 0.0).0 - 55.60).abs() < 0.01);
}
