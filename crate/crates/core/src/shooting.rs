//! Long-time classification of the profile in the shooting parameter `b`,
//! bisection for the critical value, and plateau diagnostics for the
//! stair-like solutions of the limit equation.
//!
//! The profile is integrated in two phases: the H equation from the analytic
//! series at the origin up to `y = 1`, then the constant-shift equation for
//! `phi(z) = y H(y)`, `z = ln y`, whose constant state `phi_inf` makes
//! convergence and oscillation easy to read off.

use crate::delay::{
    integrate_with, series_start, DelayEquation, DenseTrajectory, InitialSegment, IntegrateOptions,
    StopReason,
};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::params::{ModelParams, DEFAULT_SERIES_TERMS};
use serde::Serialize;
use std::sync::Arc;

/// Decision thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyTols {
    /// A value below `-tol_neg` counts as a sign change.
    pub tol_neg: f64,
    /// Convergence: `|phi - phi_inf| < tol_conv` over the trailing window.
    pub tol_conv: f64,
    /// Trailing window length in `z`.
    pub window: f64,
    /// Minimum half-swing between consecutive extrema.
    pub osc_amplitude: f64,
    pub min_extrema: usize,
    /// Integrator tolerance.
    pub integ_tol: f64,
    /// The run always reaches at least this `z`, whatever `y_max` says.
    pub z_horizon_min: f64,
}

impl Default for ClassifyTols {
    fn default() -> Self {
        Self {
            tol_neg: 1e-9,
            tol_conv: 1e-6,
            window: 10.0,
            osc_amplitude: 1e-4,
            min_extrema: 3,
            integ_tol: 1e-10,
            z_horizon_min: 40.0,
        }
    }
}

/// Long-time behaviour of a profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class")]
pub enum Classification {
    SignChange { y_cross: f64 },
    ConvergesToConstant { tail_residual: f64, phi_inf: f64 },
    Oscillating { num_extrema: usize, min_level: f64, plateau_ratios: Vec<f64> },
    Undetermined { y_max_reached: f64 },
}

impl Classification {
    pub fn tag(&self) -> &'static str {
        match self {
            Classification::SignChange { .. } => "SignChange",
            Classification::ConvergesToConstant { .. } => "ConvergesToConstant",
            Classification::Oscillating { .. } => "Oscillating",
            Classification::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn is_sign_change(&self) -> bool {
        matches!(self, Classification::SignChange { .. })
    }
}

/// The two integration phases of one profile.
#[derive(Debug, Clone)]
pub struct ProfileRun {
    pub params: ModelParams,
    /// `H(y)` on `[0, y_switch]`.
    pub h: Arc<DenseTrajectory>,
    /// `phi(z)` from `z = ln y_switch` on, absent if H already changed sign.
    pub phi: Option<Arc<DenseTrajectory>>,
}

impl ProfileRun {
    /// `H(y)` from whichever phase covers `y`.
    pub fn h_at(&self, y: f64) -> Result<f64> {
        if y <= self.h.y_end() {
            return self.h.eval(y);
        }
        match &self.phi {
            Some(p) => Ok(p.eval(y.ln())? / y),
            None => Err(Error::OutOfRange { at: y, lo: 0.0, hi: self.h.y_end() }),
        }
    }

    /// `phi(z) = y H(y)`.
    pub fn phi_at(&self, z: f64) -> Result<f64> {
        match &self.phi {
            Some(p) if z >= p.y_start() => p.eval(z),
            _ => {
                let y = z.exp();
                Ok(y * self.h.eval(y)?)
            }
        }
    }

    /// Largest `y` reached.
    pub fn y_reached(&self) -> f64 {
        self.phi.as_ref().map_or(self.h.y_end(), |p| p.y_end().exp())
    }
}

/// Integrate the profile for `params` up to `z_end = ln y_end`, stopping at
/// the first value below `-tol_neg`.
pub fn integrate_profile(params: &ModelParams, z_end: f64, tols: &ClassifyTols) -> Result<ProfileRun> {
    let y_switch = 1.0f64.min(z_end.exp());
    let heq = DelayEquation::h_equation(params);
    let init = series_start(&heq, DEFAULT_SERIES_TERMS, y_switch).expect("H series");
    let mut opts = IntegrateOptions::new(tols.integ_tol);
    opts.truncate_on_blowup = true;
    let tol_neg = tols.tol_neg;
    let h = if init.end() < y_switch {
        Arc::new(integrate_with(&heq, init, y_switch, &opts, |_, u| u < -tol_neg)?)
    } else {
        // The series alone covers the span.
        let end = init.end();
        let series = match &init {
            InitialSegment::Series { series, .. } => series.clone(),
            _ => unreachable!(),
        };
        let hist = InitialSegment::Series { series, end: 0.5 * end };
        Arc::new(integrate_with(&heq, hist, end, &opts, |_, u| u < -tol_neg)?)
    };
    if h.stop != StopReason::Completed || h.y_end() >= z_end.exp() {
        return Ok(ProfileRun { params: *params, h, phi: None });
    }
    let z0 = h.y_end().ln();
    let hh = Arc::clone(&h);
    let hist = InitialSegment::history(z0 - params.d, z0, move |z| {
        let y = z.exp();
        let (v, dv) = hh.eval_with_derivative(y).unwrap_or((f64::NAN, f64::NAN));
        // d/dz (y H) = y H + y^2 H'
        (y * v, y * v + y * y * dv)
    });
    let peq = DelayEquation::phi_equation(params);
    let phi = integrate_with(&peq, hist, z_end, &opts, |_, u| u < -tol_neg)?;
    Ok(ProfileRun { params: *params, h, phi: Some(Arc::new(phi)) })
}

/// Classification together with the trajectories that support it.
#[derive(Debug, Clone)]
pub struct Classified {
    pub class: Classification,
    pub run: ProfileRun,
}

/// Horizon used for a given `y_max`.
pub fn z_horizon(y_max: f64, tols: &ClassifyTols) -> f64 {
    y_max.ln().max(tols.z_horizon_min)
}

/// Classify the long-time behaviour for `(gamma, b)`.
pub fn classify(params: &ModelParams, y_max: f64, tols: &ClassifyTols) -> Result<Classified> {
    if params.b <= params.b0 {
        return Err(Error::domain(format!("b = {} must exceed b0 = {}", params.b, params.b0)));
    }
    if !(y_max > 1.0) {
        return Err(Error::domain("y_max must exceed 1"));
    }
    let z_end = z_horizon(y_max, tols);
    let run = integrate_profile(params, z_end, tols)?;
    let class = decide(&run, tols);
    Ok(Classified { class, run })
}

/// Last zero of the dense output before the end of a run that stopped below zero.
fn zero_crossing(traj: &DenseTrajectory) -> f64 {
    let ys = traj.nodes();
    let us = traj.values();
    let Some(i) = us.iter().rposition(|&u| u >= 0.0) else {
        return traj.y_start();
    };
    if i + 1 >= ys.len() {
        return traj.y_end();
    }
    let (mut lo, mut hi) = (ys[i], ys[i + 1]);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        match traj.eval(mid) {
            Ok(v) if v >= 0.0 => lo = mid,
            _ => hi = mid,
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi.abs() {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn decide(run: &ProfileRun, tols: &ClassifyTols) -> Classification {
    let phi_inf = run.params.phi_inf;
    // Sign change: the stop event or blow-up downwards.
    let last_h = run.h.last_value();
    if run.h.stop != StopReason::Completed || last_h < -tols.tol_neg {
        return Classification::SignChange { y_cross: zero_crossing(&run.h) };
    }
    let Some(phi) = &run.phi else {
        return Classification::Undetermined { y_max_reached: run.h.y_end() };
    };
    match phi.stop {
        StopReason::Event(_) => return Classification::SignChange { y_cross: zero_crossing(phi).exp() },
        StopReason::BlowUp(z) => {
            if phi.last_value() < 0.0 {
                return Classification::SignChange { y_cross: zero_crossing(phi).exp() };
            }
            return Classification::Undetermined { y_max_reached: z.exp() };
        }
        StopReason::Completed => {}
    }
    let zs = phi.nodes();
    let us = phi.values();
    let z_end = phi.y_end();
    // Convergence over the trailing window, including step midpoints.
    let lo = z_end - tols.window;
    let mut tail = 0.0f64;
    for (&z, &u) in zs.iter().zip(&us) {
        if z >= lo {
            tail = tail.max((u - phi_inf).abs());
        }
    }
    for (z, u, _) in phi.midpoints() {
        if z >= lo {
            tail = tail.max((u - phi_inf).abs());
        }
    }
    if z_end - phi.y_start() >= tols.window && tail < tols.tol_conv {
        return Classification::ConvergesToConstant { tail_residual: tail, phi_inf };
    }
    let ext = extrema(phi);
    let significant: Vec<&(f64, f64)> = ext
        .windows(2)
        .filter(|w| 0.5 * (w[1].1 - w[0].1).abs() > tols.osc_amplitude)
        .map(|w| &w[1])
        .collect();
    let min_level = us.iter().copied().fold(f64::INFINITY, f64::min);
    if significant.len() >= tols.min_extrema && min_level > 0.0 {
        // Stair heights: H at successive maxima of phi.
        let peaks: Vec<f64> = ext
            .iter()
            .enumerate()
            .filter(|(i, e)| {
                let prev = if *i > 0 { ext[i - 1].1 } else { f64::NEG_INFINITY };
                let next = ext.get(i + 1).map_or(f64::NEG_INFINITY, |n| n.1);
                e.1 > prev && e.1 > next
            })
            .map(|(_, e)| e.1 * (-e.0).exp())
            .collect();
        let plateau_ratios = peaks.windows(2).map(|w| w[1] / w[0]).collect();
        return Classification::Oscillating { num_extrema: significant.len(), min_level, plateau_ratios };
    }
    Classification::Undetermined { y_max_reached: z_end.exp() }
}

/// Interior local extrema `(z, value)` located from sign changes of the
/// stored derivative, refined by the Hermite interpolant.
fn extrema(traj: &DenseTrajectory) -> Vec<(f64, f64)> {
    let zs = traj.nodes();
    let ds = traj.derivatives();
    let mut out = Vec::new();
    for i in 1..zs.len() {
        if ds[i - 1] * ds[i] < 0.0 {
            let (mut a, mut b) = (zs[i - 1], zs[i]);
            let sa = ds[i - 1].signum();
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                let dm = traj.eval_with_derivative(m).map(|v| v.1).unwrap_or(0.0);
                if dm.signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            let z = 0.5 * (a + b);
            if let Ok(v) = traj.eval(z) {
                out.push((z, v));
            }
        }
    }
    out
}

/// One point of a parameter scan.
#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub b: f64,
    pub result: Result<Classification>,
}

/// Classify every `b` in the grid; failures are recorded per point.
pub fn scan_b(gamma: f64, b_grid: &[f64], y_max: f64, tols: &ClassifyTols) -> Vec<ScanPoint> {
    par_map(b_grid, |&b| ScanPoint {
        b,
        result: ModelParams::new(gamma, b).and_then(|p| classify(&p, y_max, tols)).map(|c| c.class),
    })
}

/// Numerical bracket for the critical parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalBracket {
    pub gamma: f64,
    /// Classified as sign-changing.
    pub b_lo: f64,
    /// Classified as not sign-changing.
    pub b_hi: f64,
    pub width: f64,
}

impl CriticalBracket {
    pub fn contains(&self, b: f64) -> bool {
        self.b_lo <= b && b <= self.b_hi
    }
}

/// Bisection on `[b0 + delta, b*]` between sign-changing and other behaviour.
pub fn bracket_bbar(gamma: f64, tol_b: f64, y_max: f64, tols: &ClassifyTols) -> Result<CriticalBracket> {
    if !(tol_b > 0.0) {
        return Err(Error::domain("tol_b must be positive"));
    }
    let p = ModelParams::new(gamma, 2.0)?;
    let mut lo = p.b0 * (1.0 + 1e-3);
    let mut hi = p.b_star;
    let is_sc = |b: f64| -> Result<(bool, String)> {
        let c = classify(&ModelParams::new(gamma, b)?, y_max, tols)?.class;
        Ok((c.is_sign_change(), c.tag().to_string()))
    };
    let (lo_sc, lo_tag) = is_sc(lo)?;
    let (hi_sc, hi_tag) = is_sc(hi)?;
    if lo_sc == hi_sc || !lo_sc {
        return Err(Error::BracketFailure { b_lo: lo, lo: lo_tag, b_hi: hi, hi: hi_tag });
    }
    while hi - lo > tol_b {
        let mid = 0.5 * (lo + hi);
        if is_sc(mid)?.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        log::debug!("bracket [{lo}, {hi}]");
    }
    Ok(CriticalBracket { gamma, b_lo: lo, b_hi: hi, width: hi - lo })
}

/// Plateau levels of a stair-like solution and their successive ratios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlateauReport {
    pub eps: f64,
    /// `(y, level)` at the flattest point of each plateau.
    pub plateaus: Vec<(f64, f64)>,
    pub ratios: Vec<f64>,
    /// `min h(y)(1 + y)` over the computed span.
    pub floor: f64,
}

/// Maximum `|d ln h / d ln y|` for a point to count as a plateau.
pub const PLATEAU_SLOPE_TOL: f64 = 0.5;

/// Detect plateaus as interior local minima of the logarithmic slope
/// `|y h'/h|` that are flatter than [`PLATEAU_SLOPE_TOL`].
pub fn plateau_diagnostics(traj: &DenseTrajectory, eps: f64) -> Result<PlateauReport> {
    let ys = traj.nodes();
    let us = traj.values();
    let ds = traj.derivatives();
    let mut slope = Vec::with_capacity(ys.len());
    let mut floor = f64::INFINITY;
    for i in 0..ys.len() {
        floor = floor.min(us[i] * (1.0 + ys[i]));
        slope.push(if us[i] > 0.0 { (ys[i] * ds[i] / us[i]).abs() } else { f64::INFINITY });
    }
    let mut plateaus = Vec::new();
    for i in 1..ys.len().saturating_sub(1) {
        if slope[i] < PLATEAU_SLOPE_TOL && slope[i] <= slope[i - 1] && slope[i] < slope[i + 1] {
            plateaus.push((ys[i], us[i]));
        }
    }
    if plateaus.len() < 2 {
        return Err(Error::NoPlateaus { found: plateaus.len() });
    }
    let ratios = plateaus.windows(2).map(|w| w[1].1 / w[0].1).collect();
    Ok(PlateauReport { eps, plateaus, ratios, floor })
}

/// Integrate the limit equation `h' = -h(y(1+eps)/2)^2`, `h(0) = 1`, to `y_end`.
///
/// Stops at the first value below `-tol_neg` (reported through `stop`).
pub fn limit_trajectory(eps: f64, y_end: f64, tol: f64, tol_neg: f64) -> Result<DenseTrajectory> {
    let eq = DelayEquation::LimitH { eps };
    let init = series_start(&eq, DEFAULT_SERIES_TERMS, 1.0).expect("limit series");
    let mut opts = IntegrateOptions::new(tol);
    // Plateau levels shrink geometrically, so control is purely relative.
    opts.atol = 1e-300;
    opts.truncate_on_blowup = true;
    integrate_with(&eq, init, y_end, &opts, |_, u| u < -tol_neg)
}
