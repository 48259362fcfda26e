use gelshoot::fixedpoint::{
    apply_t, apply_t_by_kernel, bbar_of_gamma, eps_of_eta, f_eval, graded_grid, picard_from, picard_solve,
    FixedPointConfig, FixedPointState, DELTA_CAP,
};
use gelshoot::greens::{c0_moment, eta_derivative_series, GreensEval};
use gelshoot::Error;

fn small() -> FixedPointConfig {
    FixedPointConfig { nodes: 800, ..FixedPointConfig::default() }
}

#[test]
fn grid_is_graded_and_spans_range() {
    let g = graded_grid(40.0, 101);
    assert_eq!(g[0], 0.0);
    assert!((g[100] - 40.0).abs() < 1e-12);
    assert!(g[1] - g[0] < g[100] - g[99]);
}

#[test]
fn kernel_form_matches_differential_form() {
    let cfg = small();
    let w = FixedPointState::from_fn(0.02, 0.01, &cfg, |x| (0.01 * x * (-x).exp(), 0.01 * (1.0 - x) * (-x).exp()));
    let tw = apply_t(&w, &cfg).unwrap();
    let g = GreensEval::default();
    for x in [0.5, 2.0, 5.0] {
        let k = apply_t_by_kernel(&w, x, &g);
        assert!((k - tw.w_at(x)).abs() < 1e-9, "x {x}: {k} vs {}", tw.w_at(x));
    }
}

#[test]
fn linear_response_at_zero_perturbation() {
    // At W = 0 the functional is linear in (eps, eta) to leading order.
    let cfg = small();
    let h = 1e-5;
    let fe = apply_t(&FixedPointState::zero(h, 0.0, &cfg), &cfg).unwrap().f_value / h;
    let fh = apply_t(&FixedPointState::zero(0.0, h, &cfg), &cfg).unwrap().f_value / h;
    assert!((fe - c0_moment()).abs() < 1e-5, "{fe}");
    assert!((fh - eta_derivative_series()).abs() < 1e-5, "{fh}");
}

#[test]
fn picard_contracts_and_fixes() {
    let cfg = small();
    let w = picard_solve(0.005, 0.005, &cfg).unwrap();
    let again = apply_t(&w, &cfg).unwrap();
    let d = again.w.iter().zip(&w.w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    assert!(d < 1e-11);
    assert!(w.sup_norm() < 0.1);
    assert!((f_eval(&w) - again.f_value).abs() < 1e-10);
    // Restarting from the fixed point converges immediately.
    let r = picard_from(w, &cfg).unwrap();
    assert_eq!(r.iterations, 1);
}

#[test]
fn picard_reports_non_contraction() {
    let cfg = FixedPointConfig { max_iter: 60, ..small() };
    match picard_solve(3.0, 0.0, &cfg) {
        Err(Error::NonContraction { history }) => assert!(history.len() >= 4),
        Err(Error::NoConvergence(_)) | Err(Error::BlowUp { .. }) | Err(Error::StepUnderflow { .. }) => {}
        other => panic!("expected failure, got {:?}", other.map(|s| s.iterations)),
    }
}

#[test]
fn eps_of_eta_domain_and_root() {
    let cfg = small();
    assert!(eps_of_eta(0.2, 1e-12, &cfg).unwrap_err().is_domain());
    let (eps, st) = eps_of_eta(0.0, 1e-12, &cfg).unwrap();
    assert_eq!(eps, 0.0);
    assert!(st.sup_norm() < 1e-14);
    let (eps, st) = eps_of_eta(0.01, 1e-12, &cfg).unwrap();
    assert!(eps > 0.0 && f_eval(&st).abs() < 1e-10);
}

#[test]
fn bbar_profile_reconstruction() {
    let r = bbar_of_gamma(13.0, &FixedPointConfig::default()).unwrap();
    let p = r.params().unwrap();
    assert!((r.eta - p.eta).abs() < 1e-12);
    assert!((r.h_profile(0.0) - 1.0).abs() < 1e-12);
    assert!(r.phi_profile(1.0) > 0.0);
    assert!(r.decay_fit.delta <= DELTA_CAP && r.decay_fit.observed_rate > 0.5);
    assert!(bbar_of_gamma(3.0, &FixedPointConfig::default()).unwrap_err().is_domain());
}
