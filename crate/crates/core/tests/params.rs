use approx::assert_relative_eq;
use gelshoot::params::{
    b_star_formula, explicit_solution_residual, h_equation_residual, local_series, ExplicitSolution,
    ProfileKind, ProfileVariables,
};
use gelshoot::stability::p_ratio;
use gelshoot::ModelParams;
use proptest::prelude::*;

#[test]
fn derived_quantities_for_gamma_two() {
    let p = ModelParams::new(2.0, 4.0).unwrap();
    assert_relative_eq!(p.b0, 2.0);
    assert_relative_eq!(p.theta, 2.0);
    assert_relative_eq!(p.phi_inf, 1.0);
    assert_relative_eq!(p.sigma, 2f64.sqrt(), epsilon = 1e-15);
    assert_relative_eq!(p.q, 2f64.powf(-0.25), epsilon = 1e-15);
    assert_relative_eq!(p.a, 2.75);
}

#[test]
fn rejects_bad_input() {
    assert!(ModelParams::new(1.0, 2.0).unwrap_err().is_domain());
    assert!(ModelParams::new(2.0, 0.0).unwrap_err().is_domain());
    assert!(ModelParams::new(f64::NAN, 2.0).is_err());
    let p = ModelParams::new(2.0, 3.0).unwrap();
    assert!(explicit_solution_residual(&p, ExplicitSolution::PhiInf, &[1.0, 0.5]).is_err());
    assert!(explicit_solution_residual(&p, ExplicitSolution::PhiInf, &[0.0, 1.0]).is_err());
}

#[test]
fn json_has_flat_keys() {
    let v = ModelParams::new(3.0, 2.0).unwrap().to_json();
    for k in ["gamma", "b", "a", "sigma", "q", "d", "theta", "b0", "eps_delay", "phi_inf"] {
        assert!(v.get(k).is_some(), "missing {k}");
    }
}

#[test]
fn constant_profile_solves_h_equation() {
    let grid: Vec<f64> = (1..50).map(|k| 0.2 * k as f64).collect();
    for (g, b) in [(1.5, 3.0), (2.0, 2.5), (4.0, 1.2)] {
        let p = ModelParams::new(g, b).unwrap();
        let r = explicit_solution_residual(&p, ExplicitSolution::HInf, &grid).unwrap();
        assert!(r < 1e-12 * p.phi_inf.max(1.0), "{r}");
    }
}

#[test]
fn local_series_solves_equation_near_origin() {
    let p = ModelParams::new(2.0, 3.0).unwrap();
    let s = local_series(&p, 40);
    for y in [0.01, 0.05, 0.1, 0.2] {
        let r = h_equation_residual(&p, y, |t| s.eval_with_derivative(t));
        assert!(r.abs() < 1e-13, "y = {y}: {r:e}");
    }
}

#[test]
fn profile_conversion_of_power_law() {
    // Phi_0 = x^(1/b0) is H = 1 and phi = y.
    let p = ModelParams::new(3.0, 1.0).unwrap();
    let xs: Vec<f64> = (1..20).map(|k| 0.3 * k as f64).collect();
    let vals = xs.iter().map(|x| x.powf(1.0 / p.b0)).collect();
    let phi = ProfileVariables::new(ProfileKind::Phi, xs, vals).unwrap();
    let h = phi.convert(&p, ProfileKind::H);
    assert!(h.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    let lp = phi.convert(&p, ProfileKind::LogPhi);
    for (z, v) in lp.grid.iter().zip(&lp.values) {
        assert_relative_eq!(*v, z.exp(), max_relative = 1e-14);
    }
    assert!(ProfileVariables::new(ProfileKind::F, vec![1.0], vec![]).is_err());
}

proptest! {
    #[test]
    fn parameter_identities(gamma in 1.05f64..20.0, b in 0.1f64..50.0) {
        let p = ModelParams::new(gamma, b).unwrap();
        prop_assert!((p.sigma - p.theta * p.q * p.q).abs() <= 1e-12 * p.sigma);
        prop_assert!((p.d + p.q.ln()).abs() <= 1e-13);
        prop_assert!((p.eps_delay - (1.0 - p.q)).abs() <= 1e-14);
        prop_assert!((p.eta * p.sigma - 1.0).abs() <= 1e-12);
        prop_assert!((1.0 / p.b - (1.0 + gamma - p.a)).abs() <= 1e-12);
    }

    #[test]
    fn b_star_matches_ratio_form(gamma in 1.05f64..40.0) {
        let rho = 1.0 - (1.0 - gamma).exp2();
        let b0 = 2.0 / (gamma - 1.0);
        let lhs = b_star_formula(gamma);
        // Rounding rho costs about eps * 2^(gamma-1) relative in 1 - rho, hence in the log.
        let cond = f64::EPSILON * (gamma - 1.0).exp2() / ((gamma - 1.0) * std::f64::consts::LN_2);
        prop_assert!((lhs - b0 * p_ratio(rho).unwrap()).abs() <= (1e-10 + 4.0 * cond) * lhs);
        prop_assert!(lhs > b0);
    }

    #[test]
    fn conversion_round_trip(gamma in 1.1f64..6.0, b in 0.3f64..8.0, seed in 0.1f64..3.0) {
        let p = ModelParams::new(gamma, b).unwrap();
        let xs: Vec<f64> = (1..12).map(|k| seed * k as f64).collect();
        let fs: Vec<f64> = xs.iter().map(|x| (-x).exp() + 0.1).collect();
        let f = ProfileVariables::new(ProfileKind::F, xs, fs).unwrap();
        let back = f.convert(&p, ProfileKind::LogPhi).convert(&p, ProfileKind::F);
        for (a, c) in f.values.iter().zip(&back.values) {
            prop_assert!((a - c).abs() <= 1e-10 * a.abs());
        }
        for (a, c) in f.grid.iter().zip(&back.grid) {
            prop_assert!((a - c).abs() <= 1e-11 * a);
        }
    }
}
