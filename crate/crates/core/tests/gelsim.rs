use approx::assert_relative_eq;
use gelshoot::gelsim::{
    evolve_chain, evolve_chain_with, evolve_joint, gelation_scan, loglog_interpolant, selfsimilar_residual,
    single_site_exact, Boundary, DyadicChain, InitData, StepPlan,
};
use gelshoot::ModelParams;
use proptest::prelude::*;

#[test]
fn chain_validation() {
    assert!(DyadicChain::new(0.0, 2.0, vec![1.0], Boundary::Empty).is_err());
    assert!(DyadicChain::new(1.0, 2.0, vec![], Boundary::Empty).is_err());
    assert!(DyadicChain::new(1.0, 2.0, vec![-1.0], Boundary::Empty).is_err());
}

#[test]
fn single_site_long_time() {
    let ch = DyadicChain::new(2.0, 1.5, vec![3.0], Boundary::Empty).unwrap();
    let out = evolve_chain(&ch, 40.0, 1e-12).unwrap();
    assert_relative_eq!(out.f[0], single_site_exact(2.0, 1.5, 3.0, 40.0), max_relative = 1e-10);
}

#[test]
fn mass_conserved_on_closed_chain() {
    // Without outflow at the top, mass moves up but is conserved while the top is still empty.
    let ch = DyadicChain::from_fn(1.0, 2.0, 25, Boundary::Empty, |x| if x < 2.0 { 1.0 } else { 0.0 }).unwrap();
    let m0 = ch.mass();
    let out = evolve_chain(&ch, 0.3, 1e-10).unwrap();
    assert!(out.f.iter().all(|&v| v >= 0.0));
    assert_relative_eq!(out.mass(), m0, max_relative = 1e-8);
}

#[test]
fn fixed_plan_must_reach_end() {
    let ch = DyadicChain::new(1.0, 2.0, vec![1.0, 0.5], Boundary::Empty).unwrap();
    let (a, log) = evolve_chain_with(&ch, 1.0, &StepPlan::Adaptive { tol: 1e-9 }).unwrap();
    let (b, _) = evolve_chain_with(&ch, 1.0, &StepPlan::Fixed(log.steps.clone())).unwrap();
    assert_eq!(a, b);
    assert!(evolve_chain_with(&ch, 1.0, &StepPlan::Fixed(vec![0.1])).is_err());
}

#[test]
fn gelation_for_gamma_two() {
    let d = gelation_scan(2.0, InitData::Monodisperse { c: 1.0 }, 4, 40, 8.0, 1e-8).unwrap();
    let t = d.t_hat_median.expect("gelation time");
    assert!(t > 1.0 && t < 8.0, "{t}");
    let b = d.b_hat.expect("b estimate");
    assert!((b - 2.2436).abs() < 0.1, "{b}");
    // Mass is conserved well before gelation.
    let early: Vec<f64> = d.mass_history.iter().filter(|(s, _)| *s < 0.5 * t).map(|m| m.1).collect();
    let m0 = early[0];
    assert!(early.iter().all(|m| (m / m0 - 1.0).abs() < 1e-6));
}

#[test]
fn no_gelation_below_one() {
    let d = gelation_scan(0.5, InitData::Exponential, 4, 30, 8.0, 1e-8).unwrap();
    assert!(d.t_hat_median.is_none());
    assert!(gelation_scan(2.0, InitData::Exponential, 0, 30, 1.0, 1e-8).is_err());
}

#[test]
fn power_law_interpolant_and_residual() {
    let p = ModelParams::new(3.0, 2.0).unwrap();
    let a0 = 0.5 * (p.gamma + 3.0);
    let xs: Vec<f64> = (0..40).map(|k| 0.01 * 1.3f64.powi(k)).collect();
    let fs: Vec<f64> = xs.iter().map(|x| x.powf(-a0)).collect();
    let f = loglog_interpolant(xs, fs).unwrap();
    let (v, dv) = f(2.0);
    assert_relative_eq!(v, 2f64.powf(-a0), max_relative = 1e-12);
    assert_relative_eq!(dv, -a0 * 2f64.powf(-a0 - 1.0), max_relative = 1e-12);
    // The stationary law is self-similar only at b = b0.
    let grid: Vec<f64> = (1..20).map(|k| 0.5 * k as f64).collect();
    assert!(selfsimilar_residual(&f, &grid, &p) > 1e-3);
    let p0 = ModelParams::new(3.0, 1.0).unwrap();
    assert!(selfsimilar_residual(&f, &grid, &p0) < 1e-12);
    assert!(loglog_interpolant(vec![1.0, 2.0], vec![1.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn joint_evolution_decouples(seeds in prop::collection::vec(1.0f64..2.0, 2..5), gamma in 1.2f64..3.0) {
        let chains: Vec<DyadicChain> = seeds
            .iter()
            .map(|&x0| DyadicChain::from_fn(x0, gamma, 10, Boundary::Empty, |x| (-x).exp()).unwrap())
            .collect();
        let (joint, log) = evolve_joint(&chains, 0.3, &StepPlan::Adaptive { tol: 1e-8 }, false).unwrap();
        for (c, j) in chains.iter().zip(&joint) {
            let (solo, _) = evolve_chain_with(c, 0.3, &StepPlan::Fixed(log.steps.clone())).unwrap();
            prop_assert!(solo.f.iter().zip(&j.f).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn densities_stay_non_negative(c in 0.1f64..5.0, gamma in 1.1f64..4.0) {
        let ch = DyadicChain::from_fn(1.0, gamma, 12, Boundary::Empty, |x| c * (-x).exp()).unwrap();
        let out = evolve_chain(&ch, 1.0, 1e-9).unwrap();
        prop_assert!(out.f.iter().all(|&v| v >= 0.0 && v.is_finite()));
    }
}
