use approx::assert_relative_eq;
use gelshoot::exec::{par_map, seq_map};
use gelshoot::stability::{
    b_star, default_r, stability_empirical, stability_scan, winding_number, CharProblem, Perturbation,
};
use gelshoot::ModelParams;
use num_complex::Complex64;

#[test]
fn unstable_side_has_one_conjugate_pair() {
    let p = ModelParams::new(2.0, 2.2).unwrap();
    let w = winding_number(&p, default_r(&p), 20_000).unwrap();
    assert_eq!(w.winding, 2);
    assert_eq!(w.upper_loops, 1);
    assert!(w.min_distance > 0.0);
    let p = ModelParams::new(2.0, 3.0).unwrap();
    assert_eq!(winding_number(&p, default_r(&p), 20_000).unwrap().winding, 0);
}

#[test]
fn winding_rejects_small_radius() {
    let p = ModelParams::new(2.0, 3.0).unwrap();
    assert!(winding_number(&p, 1.0, 1000).unwrap_err().is_domain());
}

#[test]
fn critical_delay_puts_root_on_axis() {
    // At b* the characteristic function vanishes at i t with sin(d t) = t.
    let g = 3.0;
    let p = ModelParams::new(g, b_star(g).unwrap()).unwrap();
    let cp = CharProblem::new(&p);
    assert_relative_eq!(cp.d_tilde, cp.d_star, max_relative = 1e-12);
    let t = (1.0 - cp.sigma_tilde * cp.sigma_tilde).sqrt();
    assert!(cp.f(Complex64::new(0.0, t)).norm() < 1e-12);
}

#[test]
fn sign_of_stability_follows_b_star() {
    for g in [1.5, 4.0, 10.0] {
        let bs = b_star(g).unwrap();
        assert!(CharProblem::new(&ModelParams::new(g, bs * 1.01).unwrap()).is_stable());
        assert!(!CharProblem::new(&ModelParams::new(g, bs * 0.99).unwrap()).is_stable());
    }
}

#[test]
fn scan_matches_sequential_evaluation() {
    let bs = [1.5, 2.0, 2.4, 2.6, 3.5, 8.0];
    let rows: Vec<i64> = stability_scan(2.0, &bs).into_iter().map(|r| r.unwrap().winding).collect();
    let seq = seq_map(&bs, |&b| {
        let p = ModelParams::new(2.0, b).unwrap();
        winding_number(&p, default_r(&p), 20_000).unwrap().winding
    });
    assert_eq!(rows, seq);
    assert_eq!(par_map(&bs, |b| b * 2.0), seq_map(&bs, |b| b * 2.0));
}

#[test]
fn empirical_decay_rate_sign() {
    let stable = ModelParams::new(3.0, 2.0).unwrap();
    let r = stability_empirical(&stable, Perturbation::cos(0.05 * stable.phi_inf), 200.0).unwrap();
    assert!(r.decays && r.rate < 0.0, "{r:?}");
    let unstable = ModelParams::new(3.0, 0.8).unwrap();
    let r = stability_empirical(&unstable, Perturbation::cos(0.05 * unstable.phi_inf), 200.0).unwrap();
    assert!(!r.decays && r.left_neighbourhood, "{r:?}");
    assert!(stability_empirical(&stable, Perturbation::cos(stable.phi_inf), 10.0).is_err());
    let z = stability_empirical(&stable, Perturbation::zero(), 50.0).unwrap();
    assert!(z.final_deviation < 1e-12);
}
