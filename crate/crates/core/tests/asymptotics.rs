use approx::assert_relative_eq;
use gelshoot::asymptotics::{
    alpha_residual, alpha_root, critical_delta, gamma1_series, laplace_quantities, psi_asymptotics_check, psi_log,
    psi_residual, psi_series_eval, tail_exponents, w_derivative, GAMMA1_FLOOR,
};
use proptest::prelude::*;
use std::f64::consts::LN_2;

#[test]
fn alpha_root_special_values() {
    assert_relative_eq!(alpha_root(1.0).unwrap(), 1.0, epsilon = 1e-12);
    assert_relative_eq!(alpha_root(LN_2).unwrap(), 2.2991138, epsilon = 1e-7);
    assert!(alpha_root(2.0 * LN_2).unwrap_err().is_domain());
    assert!(alpha_root(-1.0).is_err());
}

#[test]
fn series_coefficients_follow_recursion() {
    let p = gamma1_series(1.0, -1.0, 10).unwrap();
    let a = &p.coefficients;
    let lhs2 = 2.0 * p.alpha / (1.0 - (-2.0 * p.alpha).exp2()) - 2.0;
    assert_relative_eq!(a[2] * lhs2, a[1] * a[1], max_relative = 1e-14);
    assert!(gamma1_series(1.0, 0.5, 10).unwrap_err().is_domain());
    assert!(gamma1_series(1.0, -1.0, 1).is_err());
}

#[test]
fn zero_slope_gives_constant() {
    let p = gamma1_series(0.9, 0.0, 20).unwrap();
    assert!(p.coefficients[1..].iter().all(|&c| c == 0.0));
    let t = p.continue_to(5.0, 1e-12).unwrap();
    assert!(t.values().iter().all(|v| (v - 1.0).abs() < 1e-14));
}

#[test]
fn ln2_profile_stops_at_floor() {
    let p = gamma1_series(LN_2, -1.0, 60).unwrap();
    let t = p.continue_to(100.0, 1e-12).unwrap();
    assert!(t.y_end() < 100.0 && t.last_value() < GAMMA1_FLOOR);
}

#[test]
fn psi_series_solves_linear_equation() {
    for (eps, y) in [(0.1, 3.0), (0.05, 10.0), (0.2, 0.5)] {
        let r = psi_residual(eps, y).unwrap();
        assert!(r.abs() < 1e-12, "{eps} {y}: {r:e}");
        let (v, _) = psi_series_eval(eps, y).unwrap();
        assert_relative_eq!(v.ln(), psi_log(eps, y).unwrap(), max_relative = 1e-12);
    }
    assert!(psi_log(0.0, 1.0).unwrap_err().is_domain());
}

#[test]
fn laplace_derivative_of_w() {
    let h = 1e-5;
    for eta in [0.75, 1.0, 2.0] {
        let fd = (laplace_quantities(eta + h).unwrap().w - laplace_quantities(eta - h).unwrap().w) / (2.0 * h);
        assert_relative_eq!(fd, w_derivative(eta).unwrap(), max_relative = 1e-7);
    }
    assert!(laplace_quantities(0.5).unwrap_err().is_domain());
}

#[test]
fn ratio_trend_at_other_eta() {
    let rows = psi_asymptotics_check(0.75, &[0.1, 0.05, 0.02]).unwrap();
    assert!(rows.windows(2).all(|w| w[1].r.abs() < w[0].r.abs()));
}

#[test]
fn critical_delta_is_tiny_and_shrinks() {
    let a = critical_delta(0.05, 1.0).unwrap();
    let b = critical_delta(0.025, 1.0).unwrap();
    assert!(a.delta > 0.0 && a.delta < 1e-4 && b.delta < a.delta);
    assert_relative_eq!(a.y_bar, 20.0);
    assert_relative_eq!(a.matching_slope, laplace_quantities(1.0).unwrap().t_star);
}

#[test]
fn tail_relations_close_to_first_order() {
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.05, 0.02, 0.01] {
        let t = tail_exponents(eps, 1.0).unwrap();
        assert_relative_eq!(t.alpha, t.beta - 1.0);
        let gap = t.closure_gap();
        assert!(gap < 3.0 * eps && gap < prev, "eps {eps}: gap {gap}");
        prev = gap;
    }
    assert!(tail_exponents(0.6, 1.0).is_err());
}

proptest! {
    #[test]
    fn alpha_root_residual_vanishes(b in 0.05f64..1.38) {
        let a = alpha_root(b).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!(alpha_residual(b, a).abs() < 1e-12);
    }
}
