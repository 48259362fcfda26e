use gelshoot::delay::{
    integrate, integrate_with, series_start, DelayEquation, InitialSegment, IntegrateOptions, StopReason,
};
use gelshoot::params::DEFAULT_SERIES_TERMS;
use gelshoot::{Error, ModelParams};

#[test]
fn linear_equation_before_first_image() {
    // With a jump at xi the delayed term vanishes until x = 2 xi.
    let t = integrate(&DelayEquation::LinearG, InitialSegment::Jump { at: 1.0, value: 1.0 }, 1.9, 1e-12).unwrap();
    for x in [1.1, 1.4, 1.77, 1.9] {
        let v = t.eval(x).unwrap();
        assert!((v - (x - 1.0f64).exp()).abs() < 1e-11, "{x}: {v}");
    }
}

#[test]
fn dense_output_between_nodes() {
    let eq = DelayEquation::LimitH { eps: 0.0 };
    let init = series_start(&eq, DEFAULT_SERIES_TERMS, 1.0).unwrap();
    let mut o = IntegrateOptions::new(1e-11);
    o.atol = 1e-300;
    let t = integrate_with(&eq, init, 8.0, &o, |_, _| false).unwrap();
    assert_eq!(t.stop, StopReason::Completed);
    let mut worst: f64 = 0.0;
    for k in 0..=1000 {
        let y = 8.0 * k as f64 / 1000.0;
        let (v, dv) = t.eval_with_derivative(y).unwrap();
        worst = worst.max(((v - (-y).exp()) / (-y).exp()).abs());
        worst = worst.max(((dv + (-y).exp()) / (-y).exp()).abs() * 1e-2);
    }
    assert!(worst < 1e-9, "{worst:e}");
    assert!(matches!(t.eval(9.0), Err(Error::OutOfRange { .. })));
}

#[test]
fn stop_predicate_ends_run() {
    let eq = DelayEquation::LimitH { eps: 0.0 };
    let init = series_start(&eq, DEFAULT_SERIES_TERMS, 1.0).unwrap();
    let t = integrate_with(&eq, init, 50.0, &IntegrateOptions::new(1e-10), |_, u| u < 0.01).unwrap();
    assert!(matches!(t.stop, StopReason::Event(_)));
    assert!(t.last_value() < 0.01 && t.y_end() < 5.0);
}

#[test]
fn blow_up_is_error_or_truncation() {
    // sigma < 1: H grows and blows up at finite y.
    let p = ModelParams::new(2.0, 1.0).unwrap();
    assert!(p.sigma < 1.0);
    let eq = DelayEquation::h_equation(&p);
    let init = || series_start(&eq, DEFAULT_SERIES_TERMS, 1.0).unwrap();
    let mut o = IntegrateOptions::new(1e-10);
    o.value_cap = 1e6;
    let e = integrate_with(&eq, init(), 100.0, &o, |_, _| false).unwrap_err();
    assert!(matches!(e, Error::BlowUp { .. }), "{e:?}");
    o.truncate_on_blowup = true;
    let t = integrate_with(&eq, init(), 100.0, &o, |_, _| false).unwrap();
    assert!(matches!(t.stop, StopReason::BlowUp(_)));
    assert!(t.y_end() < 100.0 && t.last_value() > 1e5);
}

#[test]
fn step_budget_is_enforced() {
    let p = ModelParams::new(2.0, 3.0).unwrap();
    let eq = DelayEquation::phi_equation(&p);
    let mut o = IntegrateOptions::new(1e-10);
    o.max_steps = 50;
    let e = integrate_with(&eq, InitialSegment::history(-p.d, 0.0, |_| (5.0, 0.0)), 10.0, &o, |_, _| false).unwrap_err();
    assert!(matches!(e, Error::StepLimit { steps: 50, .. }), "{e:?}");
}

#[test]
fn constant_state_is_preserved() {
    let p = ModelParams::new(3.0, 2.0).unwrap();
    let c = p.phi_inf;
    let t = integrate(&DelayEquation::phi_equation(&p), InitialSegment::history(-p.d, 0.0, move |_| (c, 0.0)), 30.0, 1e-10)
        .unwrap();
    assert!(t.values().iter().all(|v| (v - c).abs() < 1e-12));
}

#[test]
fn csv_has_header_and_rows() {
    let eq = DelayEquation::LimitH { eps: 0.1 };
    let t = integrate(&eq, series_start(&eq, 30, 1.0).unwrap(), 3.0, 1e-8).unwrap();
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with('y'));
    assert_eq!(lines.count(), t.nodes().len());
}
