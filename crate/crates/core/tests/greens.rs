use approx::assert_relative_eq;
use gelshoot::greens::{
    bounds_audit, c0_moment, compare_routes, contour_term_quadrature, contour_term_residues, eta_derivative_series,
    g_by_ode, gtilde_quadrature, gtilde_residues, q, q_eval_with_bound, q_scaled, q_table_csv, GreensEval,
};
use gelshoot::quad;

#[test]
fn q_series_tail_bound_is_honest() {
    for xi in [0.1, 1.0, 3.0, 6.0] {
        let (v10, b10) = q_eval_with_bound(xi, 12);
        let (v40, _) = q_eval_with_bound(xi, 40);
        assert!((v10 - v40).abs() <= b10 * 1.0001 + 1e-16, "xi {xi}");
    }
}

#[test]
fn q_scaled_is_e_to_xi_q() {
    for xi in [0.3, 1.7, 4.0] {
        assert_relative_eq!(q_scaled(xi), xi.exp() * q(xi), max_relative = 1e-10);
    }
}

#[test]
fn eta_response_matches_integral() {
    let direct = quad::integrate(|x| (-x).exp() * q(x), 0.0, 60.0, 1e-14);
    assert_relative_eq!(eta_derivative_series(), direct, max_relative = 1e-9);
    assert_relative_eq!(eta_derivative_series(), -0.0605621, epsilon = 1e-6);
    assert!(c0_moment() > 0.0);
}

#[test]
fn contour_terms_match_residues() {
    let cfg = GreensEval::default();
    for n in 1..=4 {
        for s in [-3.0, -0.5, 0.4, 2.0, 5.0] {
            let (v, tail) = contour_term_quadrature(n, s, &cfg);
            let exact = contour_term_residues(n, s);
            assert!((v - exact).abs() < 1e-8 + 10.0 * tail, "n {n} s {s}: {v} vs {exact}");
        }
    }
}

#[test]
fn routes_agree_far_from_source() {
    let cfg = GreensEval::default();
    for (x, xi) in [(8.0, 1.0), (6.0, 0.5), (4.5, 4.0)] {
        let r = compare_routes(x, xi, &cfg, 1e-12).unwrap();
        assert!(r.rel_diff_residues < 1e-6 && r.rel_diff_quadrature < 1e-6, "{r:?}");
    }
}

#[test]
fn source_conditions() {
    assert_eq!(g_by_ode(0.5, 1.0, 1e-10).unwrap(), 0.0);
    assert_eq!(g_by_ode(1.0, 1.0, 1e-10).unwrap(), 1.0);
    assert!(g_by_ode(2.0, 0.0, 1e-10).unwrap_err().is_domain());
    let cfg = GreensEval::default();
    assert!(gtilde_quadrature(1.0, 2.0, &cfg).unwrap_err().is_domain());
    let bad = GreensEval { l_tilde: 0.4, ..cfg };
    assert!(gtilde_quadrature(3.0, 1.0, &bad).is_err());
    let v = gtilde_quadrature(3.0, 1.0, &cfg).unwrap();
    assert!(!v.truncation_warning && v.terms >= 1);
    assert!((v.value - gtilde_residues(3.0, 1.0, &cfg)).abs() < 1e-9);
}

#[test]
fn exponential_bounds_hold_on_samples() {
    let cfg = GreensEval::default();
    let xis: Vec<f64> = (0..60).map(|k| 0.1 * k as f64).collect();
    let pairs: Vec<(f64, f64)> = (1..40).map(|k| (1.0 + 0.5 * k as f64, 1.0)).collect();
    let triples = [(5.0, 0.5, 0.7), (5.0, 1.0, 2.0), (9.0, 2.0, 2.1)];
    let rep = bounds_audit(&xis, &pairs, &triples, &cfg);
    assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    assert!(rep.gtilde_rate < rep.rate_bound);
    assert!(rep.c_q.is_finite() && rep.c_gtilde.is_finite() && rep.c_lipschitz_xi.is_finite());
}

#[test]
fn q_table_rows() {
    let csv = q_table_csv(&[0.0, 1.0, 2.0], 40);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("xi,Q,tail_bound"));
}
