use gelshoot::shooting::{
    classify, integrate_profile, limit_trajectory, plateau_diagnostics, scan_b, z_horizon, ClassifyTols,
    Classification,
};
use gelshoot::{Error, ModelParams};

#[test]
fn scan_orders_behaviours_in_b() {
    let tols = ClassifyTols::default();
    let grid = [2.02, 2.1, 2.3, 2.45, 3.0, 6.0];
    let pts = scan_b(2.0, &grid, 1e3, &tols);
    let tags: Vec<&str> = pts.iter().map(|p| p.result.as_ref().unwrap().tag()).collect();
    assert_eq!(tags, ["SignChange", "SignChange", "Oscillating", "Oscillating", "ConvergesToConstant", "ConvergesToConstant"]);
}

#[test]
fn classify_rejects_power_law_parameter() {
    let p = ModelParams::new(2.0, 2.0).unwrap();
    assert!(classify(&p, 1e3, &ClassifyTols::default()).unwrap_err().is_domain());
    let p = ModelParams::new(2.0, 3.0).unwrap();
    assert!(classify(&p, 0.5, &ClassifyTols::default()).unwrap_err().is_domain());
}

#[test]
fn profile_phases_agree_at_handover() {
    let p = ModelParams::new(3.0, 2.0).unwrap();
    let run = integrate_profile(&p, 5.0, &ClassifyTols::default()).unwrap();
    let y = run.h.y_end();
    let from_phi = run.phi.as_ref().unwrap().eval(y.ln()).unwrap() / y;
    assert!((run.h_at(y).unwrap() - from_phi).abs() < 1e-12);
    assert!(run.y_reached() > 100.0);
    // H starts at one.
    assert!((run.h_at(1e-6).unwrap() - 1.0).abs() < 1e-5);
}

#[test]
fn horizon_respects_minimum() {
    let t = ClassifyTols::default();
    assert_eq!(z_horizon(10.0, &t), t.z_horizon_min);
    assert_eq!(z_horizon(1e30, &t), 1e30f64.ln());
}

#[test]
fn sign_change_location_is_stable() {
    let p = ModelParams::new(2.0, 2.05).unwrap();
    let at = |tol: f64| match classify(&p, 1e3, &ClassifyTols { integ_tol: tol, ..Default::default() }).unwrap().class {
        Classification::SignChange { y_cross } => y_cross,
        c => panic!("{c:?}"),
    };
    let (a, b) = (at(1e-9), at(1e-11));
    assert!((a - b).abs() < 1e-5 * a, "{a} vs {b}");
}

#[test]
fn plateaus_shrink_by_a_constant_factor() {
    for eps in [0.03, 0.05] {
        let traj = limit_trajectory(eps, 1e6, 1e-10, 1e-9).unwrap();
        let rep = plateau_diagnostics(&traj, eps).unwrap();
        assert!(rep.plateaus.len() >= 2, "eps {eps}");
        let target = gelshoot::greens::c0_moment() * eps;
        assert!(rep.ratios.iter().all(|r| (r / target - 1.0).abs() < 0.3), "{:?}", rep.ratios);
        assert!(rep.plateaus.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 < w[0].1));
        assert!(rep.floor > 0.0);
    }
}

#[test]
fn pure_exponential_has_no_plateaus() {
    let traj = limit_trajectory(0.0, 20.0, 1e-10, 1e-9).unwrap();
    assert!(matches!(plateau_diagnostics(&traj, 0.0), Err(Error::NoPlateaus { .. })));
}
