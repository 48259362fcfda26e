//! Stability of the constant state `phi_inf`: the explicit boundary `b*`,
//! root counting for the characteristic function by the argument principle,
//! and direct simulation of perturbed histories.
//!
//! Linearising `phi' = phi - theta phi(z-d)^2 + phi^2` about `phi_inf` and
//! rescaling gives the characteristic function
//! `F(mu) = mu - sigma~ + exp(-d~ mu)` with `sigma~ = (theta+1)/(2 theta)`
//! and `d~ = 2 theta d/(theta - 1)`.

use crate::delay::{integrate_with, DelayEquation, InitialSegment, IntegrateOptions, StopReason};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::params::{b_star_formula, ModelParams};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};

/// Stability boundary `b*(gamma)`.
pub fn b_star(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0 && gamma.is_finite()) {
        return Err(Error::domain(format!("gamma must be > 1, got {gamma}")));
    }
    Ok(b_star_formula(gamma))
}

/// Large-gamma limit of `b*`: `3 sqrt(3) ln 2 / pi`.
pub fn b_star_limit() -> f64 {
    3.0 * 3.0f64.sqrt() * LN_2 / PI
}

/// `b*/b0` as a function of `rho = 1 - 2^-(gamma-1)`.
pub fn p_ratio(rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::domain(format!("rho must lie in (0,1), got {rho}")));
    }
    Ok((-(-rho).ln_1p() / rho) * (rho - 0.25 * rho * rho).sqrt() / (1.0 - 0.5 * rho).acos())
}

/// Rescaled characteristic problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharProblem {
    pub theta: f64,
    pub sigma_tilde: f64,
    pub d_tilde: f64,
    pub d_star: f64,
}

impl CharProblem {
    pub fn new(p: &ModelParams) -> Self {
        let theta = p.theta;
        let s = (theta + 1.0) / (2.0 * theta);
        Self {
            theta,
            sigma_tilde: s,
            d_tilde: 2.0 * theta / (theta - 1.0) * p.d,
            d_star: s.acos() / (1.0 - s * s).sqrt(),
        }
    }

    /// `F(mu) = mu - sigma~ + exp(-d~ mu)`.
    pub fn f(&self, mu: Complex64) -> Complex64 {
        mu - self.sigma_tilde + (-self.d_tilde * mu).exp()
    }

    /// Image of `i t`: `(-sigma~ + cos(d~ t)) + i (t - sin(d~ t))`.
    pub fn sigma1(&self, t: f64) -> Complex64 {
        let dt = self.d_tilde * t;
        Complex64::new(-self.sigma_tilde + dt.cos(), t - dt.sin())
    }

    /// True when the linearisation is stable (`d~ < d*`).
    pub fn is_stable(&self) -> bool {
        self.d_tilde < self.d_star
    }
}

/// Argument-principle count of characteristic roots with positive real part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingResult {
    /// Turns of the closed image curve around the origin, i.e. the number of
    /// roots in the open right half plane (conjugate pairs count twice).
    pub winding: i64,
    /// Turns made by the `t >= 0` branch alone: roots with positive imaginary part.
    pub upper_loops: i64,
    /// Truncation of the imaginary axis.
    pub r: f64,
    /// Samples `(t, Re, Im)` of the image of the imaginary axis.
    pub samples: Vec<(f64, f64, f64)>,
    /// Closest approach of the curve to the origin.
    pub min_distance: f64,
}

/// Default truncation `max(50, 20/d~)`.
pub fn default_r(p: &ModelParams) -> f64 {
    50.0f64.max(20.0 / CharProblem::new(p).d_tilde)
}

/// Count turns of the image of the boundary of the half disk of radius `r`.
///
/// The imaginary-axis part is sampled (`n_samples` base points, bisected
/// wherever the angle step exceeds 0.3 rad); the arc is added analytically,
/// since `F(mu)/mu` stays within distance `(1 + sigma~)/r < 1` of 1 there.
pub fn winding_number(params: &ModelParams, r: f64, n_samples: usize) -> Result<WindingResult> {
    let cp = CharProblem::new(params);
    let need = 2.0 * (2.0 + cp.sigma_tilde);
    if !(r > need) {
        return Err(Error::domain(format!("R = {r} too small; need R > {need}")));
    }
    let n = n_samples.max(16);
    let ts: Vec<f64> = (0..=n).map(|k| r - 2.0 * r * k as f64 / n as f64).collect();
    let mut samples = Vec::with_capacity(n + 1);
    let mut min_dist = f64::INFINITY;
    let mut total = 0.0;
    let mut upper = 0.0;
    for w in ts.windows(2) {
        let a = refine_angle(&cp, w[0], w[1], 0, &mut min_dist);
        total += a;
        if w[1] >= 0.0 {
            upper += a;
        }
    }
    for &t in &ts {
        let v = cp.sigma1(t);
        samples.push((t, v.re, v.im));
        min_dist = min_dist.min(v.norm());
    }
    if min_dist < 1e-8 {
        return Err(Error::OriginOnCurve { dist: min_dist });
    }
    let top = Complex64::new(0.0, r);
    let arc = PI + (cp.f(top) / top).arg() - (cp.f(-top) / (-top)).arg();
    let turns = (total + arc) / (2.0 * PI);
    // Upper branch closed by the quarter arc and the positive real axis, on
    // which F is real and positive when there are no real positive roots.
    let re_end = cp.f(Complex64::new(r, 0.0));
    let quarter = PI / 2.0 + (cp.f(top) / top).arg() - (re_end / r).arg();
    let upper_turns = (upper + quarter) / (2.0 * PI);
    Ok(WindingResult {
        winding: turns.round() as i64,
        upper_loops: upper_turns.round().max(0.0) as i64,
        r,
        samples,
        min_distance: min_dist,
    })
}

/// Angle increment of `F(i t)` from `t0` to `t1`, bisecting until each
/// piece turns by less than 0.3 rad.
fn refine_angle(cp: &CharProblem, t0: f64, t1: f64, depth: u32, min_dist: &mut f64) -> f64 {
    let a = cp.sigma1(t0);
    let b = cp.sigma1(t1);
    *min_dist = min_dist.min(b.norm());
    let d = (b / a).arg();
    if d.abs() < 0.3 || depth > 40 {
        return d;
    }
    let m = 0.5 * (t0 + t1);
    refine_angle(cp, t0, m, depth + 1, min_dist) + refine_angle(cp, m, t1, depth + 1, min_dist)
}

/// Perturbation of the constant history: `amplitude cos(frequency z + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbation {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

impl Perturbation {
    pub fn cos(amplitude: f64) -> Self {
        Self { amplitude, frequency: 1.0, phase: 0.0 }
    }

    pub fn zero() -> Self {
        Self::cos(0.0)
    }

    pub fn eval(&self, z: f64) -> (f64, f64) {
        let arg = self.frequency * z + self.phase;
        (self.amplitude * arg.cos(), -self.amplitude * self.frequency * arg.sin())
    }
}

/// Outcome of simulating a perturbed constant state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub b: f64,
    pub gamma: f64,
    /// Deviation decays to zero within the horizon.
    pub decays: bool,
    /// Fitted exponential rate of the deviation envelope (negative = decay).
    pub rate: f64,
    pub initial_deviation: f64,
    /// `sup |phi - phi_inf|` over the last window.
    pub final_deviation: f64,
    /// The run ended early through a sign change or blow-up.
    pub left_neighbourhood: bool,
    pub z_reached: f64,
}

/// Integrate the shift equation from `phi_inf + perturbation` on `[-d, 0]`
/// up to `z = horizon` and measure the deviation from `phi_inf`.
pub fn stability_empirical(params: &ModelParams, pert: Perturbation, horizon: f64) -> Result<DecayReport> {
    let phi_inf = params.phi_inf;
    if pert.amplitude.abs() >= 0.1 * phi_inf {
        return Err(Error::domain("perturbation must be smaller than 0.1 phi_inf"));
    }
    if !(horizon > 0.0) {
        return Err(Error::domain("horizon must be positive"));
    }
    let init = InitialSegment::history(-params.d, 0.0, move |z| {
        let (v, dv) = pert.eval(z);
        (phi_inf + v, dv)
    });
    let eq = DelayEquation::phi_equation(params);
    let mut opts = IntegrateOptions::new(1e-10);
    // Leaving the neighbourhood is all we need to know; a low cap keeps the
    // finite-z blow-up of phi' ~ phi^2 from driving steps to underflow.
    opts.value_cap = 1e6 * phi_inf;
    opts.truncate_on_blowup = true;
    let traj = integrate_with(&eq, init, horizon, &opts, |_, u| u < 0.0)?;
    let zs = traj.nodes();
    let dev: Vec<f64> = traj.values().iter().map(|u| (u - phi_inf).abs()).collect();
    let initial = pert.amplitude.abs();
    let z_end = traj.y_end();
    let left = traj.stop != StopReason::Completed;
    // Envelope: maximum deviation over windows of one delay-scaled period.
    let win = (4.0 * params.d).max(2.0 * PI).min(0.25 * horizon);
    let mut env: Vec<(f64, f64)> = Vec::new();
    let mut start = 0.0;
    while start + win <= z_end + 1e-12 {
        let m = zs
            .iter()
            .zip(&dev)
            .filter(|(z, _)| **z >= start && **z <= start + win)
            .map(|(_, d)| *d)
            .fold(0.0f64, f64::max);
        env.push((start + 0.5 * win, m));
        start += win;
    }
    let final_dev = env.last().map_or(initial, |e| e.1);
    // Fit where the deviation is still resolved above roundoff.
    let resolved: Vec<(f64, f64)> =
        env.iter().copied().filter(|e| e.1 > 1e-12 * phi_inf.max(1.0)).collect();
    let skip = if resolved.len() >= 8 { resolved.len() / 2 } else { 0 };
    let rate = fit_rate(&resolved[skip..]);
    let decays = !left && final_dev <= 1e-3 * initial;
    Ok(DecayReport {
        b: params.b,
        gamma: params.gamma,
        decays,
        rate,
        initial_deviation: initial,
        final_deviation: final_dev,
        left_neighbourhood: left,
        z_reached: z_end,
    })
}

/// Least-squares slope of `ln v` against `z`.
fn fit_rate(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + (p.0 - mx) * (p.1.ln() - my), b + (p.0 - mx).powi(2)));
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// One row of a stability scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRow {
    pub gamma: f64,
    pub b: f64,
    pub winding: i64,
    pub d_tilde: f64,
    pub d_star: f64,
}

/// Winding numbers over a grid of `b`, evaluated in parallel.
pub fn stability_scan(gamma: f64, bs: &[f64]) -> Vec<Result<StabilityRow>> {
    par_map(bs, |&b| {
        let p = ModelParams::new(gamma, b)?;
        let cp = CharProblem::new(&p);
        let w = winding_number(&p, default_r(&p), 20_000)?;
        Ok(StabilityRow { gamma, b, winding: w.winding, d_tilde: cp.d_tilde, d_star: cp.d_star })
    })
}

/// Locate the change of winding number in `b` by bisection on `[lo, hi]`.
pub fn winding_transition(gamma: f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let w = |b: f64| -> Result<i64> {
        let p = ModelParams::new(gamma, b)?;
        Ok(winding_number(&p, default_r(&p), 4000)?.winding)
    };
    let wlo = w(lo)?;
    if wlo == w(hi)? {
        return Err(Error::NoConvergence("winding identical at both ends".into()));
    }
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        match w(m) {
            Ok(v) if v == wlo => lo = m,
            Ok(_) => hi = m,
            // The curve passes through the origin: this is the transition.
            Err(Error::OriginOnCurve { .. }) => return Ok(m),
            Err(e) => return Err(e),
        }
    }
    Ok(0.5 * (lo + hi))
}
