//! One function per subcommand.

use crate::config::RunConfig;
use crate::output::{Cell, Output, Table};
use gelshoot::asymptotics::{
    critical_delta, gamma1_b1_limit, gamma1_series, gamma1_shape, laplace_quantities, psi_asymptotics_check,
    tail_exponents, w_derivative,
};
use gelshoot::exec::par_map;
use gelshoot::fixedpoint::{bbar_of_gamma, eps_of_eta, picard_solve, FixedPointConfig};
use gelshoot::gelsim::{gelation_scan, InitData};
use gelshoot::greens::{compare_routes, q_eval_with_bound, GreensEval};
use gelshoot::shooting::{bracket_bbar, classify, integrate_profile, scan_b, ClassifyTols, Classification};
use gelshoot::stability::{b_star, default_r, stability_scan, winding_number};
use gelshoot::{Error, ModelParams, Result};
use serde_json::{json, Value};
use std::f64::consts::LN_2;

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("serializable result")
}

fn params(c: &RunConfig) -> Result<ModelParams> {
    ModelParams::new(c.f64_req("gamma")?, c.f64_req("b")?)
}

fn tols(c: &RunConfig) -> Result<ClassifyTols> {
    let d = ClassifyTols::default();
    Ok(ClassifyTols { integ_tol: c.f64_or("tol", d.integ_tol)?, ..d })
}

pub fn params_cmd(c: &RunConfig) -> Result<Output> {
    let p = params(c)?;
    let mut v = p.to_json();
    v["eta"] = json!(p.eta);
    v["b_star"] = json!(p.b_star);
    Ok(Output::Json(v))
}

/// `H(y)` on the series/pantograph phase and `phi(z)` beyond.
pub fn profile(c: &RunConfig) -> Result<Output> {
    let p = params(c)?;
    let run = integrate_profile(&p, c.f64_or("y_max", 1e3)?.ln(), &tols(c)?)?;
    let mut rows: Vec<Vec<f64>> = run.h.nodes().into_iter().zip(run.h.values()).map(|(y, h)| vec![y, h, y * h]).collect();
    if let Some(phi) = &run.phi {
        for (z, v) in phi.nodes().into_iter().zip(phi.values()).skip(1) {
            let y = z.exp();
            rows.push(vec![y, v / y, v]);
        }
    }
    Ok(Output::Table(Table::numeric(&["y", "H", "phi"], rows)))
}

pub fn classify_cmd(c: &RunConfig) -> Result<Output> {
    let p = params(c)?;
    let cl = classify(&p, c.f64_or("y_max", 1e3)?, &tols(c)?)?;
    Ok(Output::Json(to_value(&cl.class)))
}

fn event_of(c: &Classification) -> f64 {
    match c {
        Classification::SignChange { y_cross } => *y_cross,
        Classification::Undetermined { y_max_reached } => *y_max_reached,
        _ => f64::NAN,
    }
}

pub fn scan_b_cmd(c: &RunConfig) -> Result<Output> {
    let gamma = c.f64_req("gamma")?;
    let b0 = 2.0 / (gamma - 1.0);
    let grid = c.grid((b0 * 1.01, b0 * 4.0, 16, true))?;
    let pts = scan_b(gamma, &grid, c.f64_or("y_max", 1e3)?, &tols(c)?);
    let mut t = Table::new(&["gamma", "b", "class", "y_event", "extra"]);
    for p in pts {
        let (class, y, extra) = match &p.result {
            Ok(cl) => (cl.tag().to_string(), event_of(cl), to_value(cl).to_string()),
            Err(e) => ("Error".to_string(), f64::NAN, json!({"error": e.kind(), "message": e.to_string()}).to_string()),
        };
        t.rows.push(vec![Cell::Num(gamma), Cell::Num(p.b), Cell::Text(class), Cell::Num(y), Cell::Text(extra)]);
    }
    Ok(Output::Table(t))
}

pub fn bracket_cmd(c: &RunConfig) -> Result<Output> {
    let br = bracket_bbar(c.f64_req("gamma")?, c.f64_or("tol", 1e-3)?, c.f64_or("y_max", 500.0)?, &ClassifyTols::default())?;
    Ok(Output::Json(to_value(&br)))
}

pub fn b_star_cmd(c: &RunConfig) -> Result<Output> {
    let v = b_star(c.f64_req("gamma")?)?;
    let digits = c.usize_or("digits", 4)?;
    Ok(Output::Text(format!("{v:.digits$}")))
}

pub fn winding_cmd(c: &RunConfig) -> Result<Output> {
    let p = params(c)?;
    let r = winding_number(&p, default_r(&p), c.usize_or("terms", 20_000)?)?;
    let summary = json!({
        "gamma": p.gamma, "b": p.b, "winding": r.winding, "upper_loops": r.upper_loops,
        "r": r.r, "min_distance": r.min_distance, "b_star": p.b_star,
    });
    let t = Table::numeric(&["t", "re", "im"], r.samples.iter().map(|s| vec![s.0, s.1, s.2]));
    Ok(Output::Both(summary, t))
}

pub fn stability_scan_cmd(c: &RunConfig) -> Result<Output> {
    let gamma = c.f64_req("gamma")?;
    let bs = b_star(gamma)?;
    let grid = c.grid((bs / 2.5, bs * 2.5, 16, true))?;
    let mut t = Table::new(&["gamma", "b", "winding", "d_tilde", "d_star"]);
    for row in stability_scan(gamma, &grid) {
        let r = row?;
        t.rows.push(vec![r.gamma.into(), r.b.into(), Cell::Int(r.winding), r.d_tilde.into(), r.d_star.into()]);
    }
    Ok(Output::Table(t))
}

pub fn greens_q(c: &RunConfig) -> Result<Output> {
    let grid = c.grid((0.0, 10.0, 101, false))?;
    let n = c.usize_or("terms", 40)?;
    let rows = par_map(&grid, |&x| {
        let (v, b) = q_eval_with_bound(x, n);
        vec![x, v, b]
    });
    Ok(Output::Table(Table::numeric(&["xi", "Q", "tail_bound"], rows)))
}

pub fn greens_verify(c: &RunConfig) -> Result<Output> {
    let pts = match (c.get("x"), c.get("xi")) {
        (Some(_), Some(_)) => vec![(c.f64_req("x")?, c.f64_req("xi")?)],
        (None, None) => vec![(2.0, 1.0), (3.0, 1.0), (5.0, 2.0)],
        _ => return Err(Error::domain("give both --x and --xi or neither")),
    };
    let tol = c.f64_or("tol", 1e-12)?;
    let cfg = GreensEval::default();
    let res: Vec<_> = par_map(&pts, |&(x, xi)| compare_routes(x, xi, &cfg, tol)).into_iter().collect::<Result<_>>()?;
    let t = Table::numeric(
        &["x", "xi", "g_ode", "g_quadrature", "g_residues", "rel_diff_quadrature", "rel_diff_residues"],
        res.iter().map(|r| vec![r.x, r.xi, r.g_ode, r.g_quadrature, r.g_residues, r.rel_diff_quadrature, r.rel_diff_residues]),
    );
    Ok(Output::Table(t))
}

fn fp_config(c: &RunConfig) -> Result<FixedPointConfig> {
    let d = FixedPointConfig::default();
    Ok(FixedPointConfig { tol: c.f64_or("tol", d.tol)?, ..d })
}

pub fn fixedpoint_cmd(c: &RunConfig) -> Result<Output> {
    let (eps, eta) = (c.f64_req("eps")?, c.f64_req("eta")?);
    let st = picard_solve(eps, eta, &fp_config(c)?)?;
    let summary = json!({
        "eps": eps, "eta": eta, "iterations": st.iterations, "F": st.f_value,
        "sup_norm": st.sup_norm(), "sup_diff_history": st.sup_diff_history, "decay_fit": to_value(&st.decay_fit()),
    });
    Ok(Output::Both(summary, Table::numeric(&["x", "h", "W"], st.profile_rows())))
}

pub fn eps_of_eta_cmd(c: &RunConfig) -> Result<Output> {
    let cfg = fp_config(c)?;
    let etas = match c.get("eta") {
        Some(_) => vec![c.f64_req("eta")?],
        None => c.grid((0.0025, 0.02, 4, true))?,
    };
    let res: Vec<(f64, f64)> = par_map(&etas, |&eta| eps_of_eta(eta, 1e-13, &cfg).map(|(e, _)| (eta, e)))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(Output::Table(Table::numeric(&["eta", "eps", "ratio"], res.iter().map(|&(h, e)| vec![h, e, e / h]))))
}

pub fn bbar_cmd(c: &RunConfig) -> Result<Output> {
    let r = bbar_of_gamma(c.f64_req("gamma")?, &fp_config(c)?)?;
    Ok(Output::Both(to_value(&r), Table::numeric(&["x", "h", "W"], r.state.profile_rows())))
}

pub fn gamma1_cmd(c: &RunConfig) -> Result<Output> {
    let b = c.f64_or("b", LN_2)?;
    let a1 = c.f64_or("a1", -1.0)?;
    let prof = gamma1_series(b, a1, c.usize_or("terms", 60)?)?;
    let traj = prof.continue_to(c.f64_or("x_end", 50.0)?, c.f64_or("tol", 1e-12)?)?;
    let shape = gamma1_shape(&prof, &traj)?;
    let mut summary = json!({ "b": b, "a1": a1, "alpha": prof.alpha, "switch_point": prof.switch_point(), "shape": to_value(&shape) });
    if (b - 1.0).abs() < 1e-15 && a1 < 0.0 {
        summary["b1_limit"] = to_value(&gamma1_b1_limit(a1)?);
    }
    let t = Table::numeric(
        &["x", "Phi", "dPhi"],
        traj.nodes().into_iter().zip(traj.values()).zip(traj.derivatives()).map(|((x, v), d)| vec![x, v, d]),
    );
    Ok(Output::Both(summary, t))
}

pub fn psi_asym(c: &RunConfig) -> Result<Output> {
    let eta = c.f64_or("eta", 1.0)?;
    let eps = match c.get("eps") {
        Some(_) => vec![c.f64_req("eps")?],
        None => c.grid((0.005, 0.1, 5, true))?,
    };
    let rows = psi_asymptotics_check(eta, &eps)?;
    Ok(Output::Table(Table::numeric(
        &["eps", "logPsi", "logPred", "r"],
        rows.iter().rev().map(|r| vec![r.eps, r.log_psi, r.log_pred, r.r]),
    )))
}

pub fn laplace_cmd(c: &RunConfig) -> Result<Output> {
    let eta = c.f64_or("eta", 1.0)?;
    let mut v = to_value(&laplace_quantities(eta)?);
    v["W_prime"] = json!(w_derivative(eta)?);
    Ok(Output::Json(v))
}

pub fn tails_cmd(c: &RunConfig) -> Result<Output> {
    let eps = c.f64_req("eps")?;
    let eta = c.f64_or("eta", 1.0)?;
    let t = tail_exponents(eps, eta)?;
    let mut v = to_value(&t);
    v["closure_gap"] = json!(t.closure_gap());
    v["critical"] = to_value(&critical_delta(eps, eta)?);
    Ok(Output::Json(v))
}

pub fn simulate_cmd(c: &RunConfig) -> Result<Output> {
    let init = match c.get("init").unwrap_or("monodisperse") {
        "monodisperse" => InitData::Monodisperse { c: 1.0 },
        "exponential" => InitData::Exponential,
        o => return Err(Error::domain(format!("unknown init '{o}', expected monodisperse or exponential"))),
    };
    let d = gelation_scan(
        c.f64_req("gamma")?,
        init,
        c.usize_or("chains", 8)?,
        c.usize_or("levels", 40)?,
        c.f64_or("t_end", 8.0)?,
        c.f64_or("tol", 1e-8)?,
    )?;
    let t = Table::numeric(&["t", "mass"], d.mass_history.iter().map(|m| vec![m.0, m.1]));
    Ok(Output::Both(to_value(&d), t))
}

/// Image of the imaginary axis under the characteristic function.
pub fn fig2(c: &RunConfig) -> Result<Output> {
    match winding_cmd(c)? {
        Output::Both(_, t) => Ok(Output::Table(t)),
        _ => unreachable!(),
    }
}

/// `phi` against `z` and `H` against `y = e^z` over the whole run.
pub fn fig3(c: &RunConfig) -> Result<Output> {
    let p = params(c)?;
    let run = integrate_profile(&p, c.f64_or("y_max", 1e12)?.ln().max(1.0), &tols(c)?)?;
    let mut rows: Vec<Vec<f64>> = run
        .h
        .nodes()
        .into_iter()
        .zip(run.h.values())
        .filter(|(y, _)| *y > 0.0)
        .map(|(y, h)| vec![y.ln(), y * h, y, h])
        .collect();
    if let Some(phi) = &run.phi {
        for (z, v) in phi.nodes().into_iter().zip(phi.values()).skip(1) {
            rows.push(vec![z, v, z.exp(), v / z.exp()]);
        }
    }
    Ok(Output::Table(Table::numeric(&["z", "phi", "y", "H"], rows)))
}
