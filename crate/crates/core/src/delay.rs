//! Adaptive integrator for delay ODEs `u'(y) = f(y, u(y), u(lag(y)))` with
//! `lag(y) < y`, covering proportional (pantograph) and constant-shift delays.
//!
//! Stepping is classical RK4 with step doubling: the difference between one
//! full step and two half steps estimates the local error, and the
//! Richardson-extrapolated value is kept. Each accepted step stores start,
//! midpoint and end values and derivatives, so the dense output is a quintic
//! Hermite interpolant that never limits the global order.
//!
//! The step is limited so that every delayed argument falls in territory that
//! is already computed, and step ends are forced onto the propagated images
//! of the initial-data discontinuity.

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::params::{ModelParams, PowerSeries};
use std::fmt::Write as _;
use std::sync::Arc;

/// Right-hand side of a delay equation with a single delayed argument.
pub trait DelayRhs: Sync {
    /// Delayed argument; must satisfy `lag(y) < y` on the integration span.
    fn lag(&self, y: f64) -> f64;
    /// Inverse of `lag`: the abscissa whose delayed argument is `p`.
    fn lag_inverse(&self, p: f64) -> f64;
    /// `u'` given the current and delayed values.
    fn f(&self, y: f64, u: f64, u_lag: f64) -> f64;
}

/// The delay equations that appear in the profile problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayEquation {
    /// `H' = -sigma H(q y)^2 + H^2`.
    H { sigma: f64, q: f64 },
    /// `phi' = phi - theta phi(z - d)^2 + phi^2`.
    Phi { theta: f64, d: f64 },
    /// `h' = -h(y (1 + eps)/2)^2`.
    LimitH { eps: f64 },
    /// `h' = -h(x (1 + eps)/2)^2 + eta h^2`.
    RescaledH { eps: f64, eta: f64 },
    /// `phi' = phi - 2 phi(x/2)`.
    LinearG,
    /// `b x Phi' = -Phi(x/2)^2 + Phi^2`.
    PhiGamma1 { b: f64 },
}

impl DelayEquation {
    pub fn h_equation(p: &ModelParams) -> Self {
        DelayEquation::H { sigma: p.sigma, q: p.q }
    }

    pub fn phi_equation(p: &ModelParams) -> Self {
        DelayEquation::Phi { theta: p.theta, d: p.d }
    }

    /// Ratio `lag(y)/y` for the proportional delays, `None` for the shift.
    pub fn ratio(&self) -> Option<f64> {
        match *self {
            DelayEquation::H { q, .. } => Some(q),
            DelayEquation::Phi { .. } => None,
            DelayEquation::LimitH { eps } | DelayEquation::RescaledH { eps, .. } => {
                Some(0.5 * (1.0 + eps))
            }
            DelayEquation::LinearG | DelayEquation::PhiGamma1 { .. } => Some(0.5),
        }
    }

    /// Analytic series at the origin with `u(0) = 1`, for the quadratic
    /// pantograph equations that are regular there.
    pub fn origin_series(&self, n: usize) -> Option<PowerSeries> {
        match *self {
            DelayEquation::H { sigma, q } => {
                Some(PowerSeries::quadratic_recursion(1.0, n, |m| 1.0 - sigma * q.powi(m as i32)))
            }
            DelayEquation::LimitH { eps } => {
                let p = 0.5 * (1.0 + eps);
                Some(PowerSeries::quadratic_recursion(1.0, n, |m| -p.powi(m as i32)))
            }
            DelayEquation::RescaledH { eps, eta } => {
                let p = 0.5 * (1.0 + eps);
                Some(PowerSeries::quadratic_recursion(1.0, n, |m| eta - p.powi(m as i32)))
            }
            _ => None,
        }
    }
}

impl DelayRhs for DelayEquation {
    fn lag(&self, y: f64) -> f64 {
        match *self {
            DelayEquation::Phi { d, .. } => y - d,
            _ => self.ratio().unwrap() * y,
        }
    }

    fn lag_inverse(&self, p: f64) -> f64 {
        match *self {
            DelayEquation::Phi { d, .. } => p + d,
            _ => p / self.ratio().unwrap(),
        }
    }

    fn f(&self, y: f64, u: f64, ul: f64) -> f64 {
        match *self {
            DelayEquation::H { sigma, .. } => -sigma * ul * ul + u * u,
            DelayEquation::Phi { theta, .. } => u - theta * ul * ul + u * u,
            DelayEquation::LimitH { .. } => -ul * ul,
            DelayEquation::RescaledH { eta, .. } => -ul * ul + eta * u * u,
            DelayEquation::LinearG => u - 2.0 * ul,
            DelayEquation::PhiGamma1 { b } => (u * u - ul * ul) / (b * y),
        }
    }
}

/// Shared closure returning `(value, derivative)`.
pub type HistoryFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Data on and below the start of the integration span.
#[derive(Clone)]
pub enum InitialSegment {
    /// Truncated power series, valid on `[expansion_point, end]`.
    Series { series: PowerSeries, end: f64 },
    /// Value `value` at `at`, identically zero below.
    Jump { at: f64, value: f64 },
    /// Arbitrary history on `[start, end]`.
    History { start: f64, end: f64, f: HistoryFn },
}

impl std::fmt::Debug for InitialSegment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialSegment::Series { series, end } => f
                .debug_struct("Series")
                .field("terms", &series.coefficients.len())
                .field("end", end)
                .finish(),
            InitialSegment::Jump { at, value } => {
                f.debug_struct("Jump").field("at", at).field("value", value).finish()
            }
            InitialSegment::History { start, end, .. } => {
                f.debug_struct("History").field("start", start).field("end", end).finish()
            }
        }
    }
}

impl InitialSegment {
    pub fn history(start: f64, end: f64, f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        InitialSegment::History { start, end, f: Arc::new(f) }
    }

    /// Where stepping begins.
    pub fn end(&self) -> f64 {
        match self {
            InitialSegment::Series { end, .. } | InitialSegment::History { end, .. } => *end,
            InitialSegment::Jump { at, .. } => *at,
        }
    }

    /// Lowest abscissa covered.
    pub fn start(&self) -> f64 {
        match self {
            InitialSegment::Series { series, .. } => series.expansion_point,
            InitialSegment::Jump { .. } => f64::NEG_INFINITY,
            InitialSegment::History { start, .. } => *start,
        }
    }

    /// Value and derivative; `left` selects the left limit at a jump.
    fn value(&self, p: f64, left: bool) -> Result<(f64, f64)> {
        let lo = self.start();
        if p < lo || p > self.end() {
            return Err(Error::OutOfRange { at: p, lo, hi: self.end() });
        }
        Ok(match self {
            InitialSegment::Series { series, .. } => series.eval_with_derivative(p),
            InitialSegment::Jump { at, value } => {
                if p < *at || left {
                    (0.0, 0.0)
                } else {
                    (*value, 0.0)
                }
            }
            InitialSegment::History { f, .. } => f(p),
        })
    }

    /// Point at which the solution may be non-smooth.
    fn discontinuity(&self) -> Option<f64> {
        match self {
            InitialSegment::Series { .. } => None,
            InitialSegment::Jump { at, .. } => Some(*at),
            InitialSegment::History { end, .. } => Some(*end),
        }
    }
}

/// One accepted step with the data needed for quintic Hermite output.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    y0: f64,
    y1: f64,
    u0: f64,
    um: f64,
    u1: f64,
    du0: f64,
    dum: f64,
    du1: f64,
}

impl Segment {
    /// Newton coefficients for nodes t = 0, 0, 1/2, 1/2, 1, 1.
    fn newton(&self) -> [f64; 6] {
        let h = self.y1 - self.y0;
        let z = [0.0, 0.0, 0.5, 0.5, 1.0, 1.0];
        let v = [self.u0, self.u0, self.um, self.um, self.u1, self.u1];
        let dv = [self.du0 * h, self.du0 * h, self.dum * h, self.dum * h, self.du1 * h, self.du1 * h];
        let mut q = v;
        let mut c = [0.0; 6];
        c[0] = q[0];
        for j in 1..6 {
            for i in (j..6).rev() {
                q[i] = if j == 1 && z[i] == z[i - 1] {
                    dv[i]
                } else {
                    (q[i] - q[i - 1]) / (z[i] - z[i - j])
                };
            }
            c[j] = q[j];
        }
        c
    }

    fn interp(&self, y: f64) -> (f64, f64) {
        let h = self.y1 - self.y0;
        let t = (y - self.y0) / h;
        let c = self.newton();
        let z = [0.0, 0.0, 0.5, 0.5, 1.0];
        // Horner in Newton form, carrying the derivative.
        let mut p = c[5];
        let mut dp = 0.0;
        for k in (0..5).rev() {
            dp = dp * (t - z[k]) + p;
            p = p * (t - z[k]) + c[k];
        }
        (p, dp / h)
    }
}

/// Why stepping ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopReason {
    /// Reached the end of the span.
    Completed,
    /// A caller-supplied event fired at this abscissa.
    Event(f64),
    /// Value exceeded the cap; only with `truncate_on_blowup`.
    BlowUp(f64),
}

/// Step statistics and conditioning.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
    /// Largest observed `|df/du|` along the solution.
    pub max_local_lipschitz: f64,
}

/// Adaptive-grid solution with interpolable history.
#[derive(Debug, Clone)]
pub struct DenseTrajectory {
    segs: Vec<Segment>,
    y_start: f64,
    u_start: f64,
    du_start: f64,
    pub init: InitialSegment,
    pub stop: StopReason,
    pub stats: StepStats,
}

impl DenseTrajectory {
    /// First node.
    pub fn y_start(&self) -> f64 {
        self.y_start
    }

    /// Last node.
    pub fn y_end(&self) -> f64 {
        self.segs.last().map_or(self.y_start, |s| s.y1)
    }

    /// Node abscissae.
    pub fn nodes(&self) -> Vec<f64> {
        std::iter::once(self.y_start).chain(self.segs.iter().map(|s| s.y1)).collect()
    }

    /// Node values.
    pub fn values(&self) -> Vec<f64> {
        std::iter::once(self.u_start).chain(self.segs.iter().map(|s| s.u1)).collect()
    }

    /// Node derivatives (left limits except at the first node).
    pub fn derivatives(&self) -> Vec<f64> {
        std::iter::once(self.du_start).chain(self.segs.iter().map(|s| s.du1)).collect()
    }

    /// Step midpoints with value and derivative.
    pub fn midpoints(&self) -> Vec<(f64, f64, f64)> {
        self.segs.iter().map(|s| (0.5 * (s.y0 + s.y1), s.um, s.dum)).collect()
    }

    pub fn last_value(&self) -> f64 {
        self.segs.last().map_or(self.u_start, |s| s.u1)
    }

    /// Interpolated value.
    pub fn eval(&self, y: f64) -> Result<f64> {
        self.eval_with_derivative(y).map(|v| v.0)
    }

    /// Interpolated value and derivative.
    pub fn eval_with_derivative(&self, y: f64) -> Result<(f64, f64)> {
        self.lookup(y, false)
    }

    fn lookup(&self, y: f64, left: bool) -> Result<(f64, f64)> {
        if y < self.y_start || (left && y == self.y_start) {
            return self.init.value(y, left);
        }
        if y == self.y_start {
            return Ok((self.u_start, self.du_start));
        }
        let end = self.y_end();
        // Delayed arguments computed in floating point may overshoot the
        // last node by a few ulps.
        let y = if y > end && y <= end + 8.0 * f64::EPSILON * end.abs().max(1.0) { end } else { y };
        if y > end || y.is_nan() {
            return Err(Error::OutOfRange { at: y, lo: self.init.start(), hi: end });
        }
        let i = self.segs.partition_point(|s| s.y1 < y);
        let s = &self.segs[i];
        if y == s.y1 {
            return Ok((s.u1, s.du1));
        }
        Ok(s.interp(y))
    }

    /// Reuse this trajectory (up to `until`) as initial data for a new run.
    pub fn as_history(self: &Arc<Self>, until: f64) -> InitialSegment {
        let t = Arc::clone(self);
        let start = match &self.init {
            InitialSegment::Jump { .. } => self.y_start,
            other => other.start(),
        };
        InitialSegment::History {
            start,
            end: until,
            f: Arc::new(move |y| t.eval_with_derivative(y).unwrap_or((f64::NAN, f64::NAN))),
        }
    }

    /// CSV with columns `y,value,derivative`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,value,derivative\n");
        for ((y, u), du) in self.nodes().into_iter().zip(self.values()).zip(self.derivatives()) {
            let _ = writeln!(out, "{},{},{}", fmt17(y), fmt17(u), fmt17(du));
        }
        out
    }
}

/// Integrator settings.
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    /// Relative tolerance.
    pub rtol: f64,
    /// Absolute tolerance.
    pub atol: f64,
    /// `|u|` above this is a blow-up.
    pub value_cap: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    /// Extra abscissae that step ends must hit.
    pub breakpoints: Vec<f64>,
    /// How many images of the initial discontinuity to force.
    pub breakpoint_levels: usize,
    /// Return a truncated trajectory instead of an error on blow-up.
    pub truncate_on_blowup: bool,
    /// Accepted-step budget; exceeding it is an error.
    pub max_steps: usize,
}

impl IntegrateOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            value_cap: 1e12,
            h_init: None,
            h_max: f64::INFINITY,
            breakpoints: Vec::new(),
            breakpoint_levels: 12,
            truncate_on_blowup: false,
            max_steps: 2_000_000,
        }
    }
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self::new(1e-10)
    }
}

/// Integrate over `[init.end(), y_end]` with default options and tolerance `tol`.
pub fn integrate(
    rhs: &dyn DelayRhs,
    init: InitialSegment,
    y_end: f64,
    tol: f64,
) -> Result<DenseTrajectory> {
    integrate_with(rhs, init, y_end, &IntegrateOptions::new(tol), |_, _| false)
}

/// Integrate with full options; `stop(y, u)` is checked after every
/// accepted step and ends the run when it returns true.
pub fn integrate_with(
    rhs: &dyn DelayRhs,
    init: InitialSegment,
    y_end: f64,
    opts: &IntegrateOptions,
    mut stop: impl FnMut(f64, f64) -> bool,
) -> Result<DenseTrajectory> {
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::domain("tolerances must be positive"));
    }
    let y0 = init.end();
    if !(y_end > y0) {
        return Err(Error::domain(format!("empty span [{y0}, {y_end}]")));
    }
    let span = y_end - y0;
    let (u0, _) = init.value(y0, false)?;
    let mut traj = DenseTrajectory {
        segs: Vec::new(),
        y_start: y0,
        u_start: u0,
        du_start: 0.0,
        init,
        stop: StopReason::Completed,
        stats: StepStats::default(),
    };
    let ul0 = traj.lookup(rhs.lag(y0), false)?.0;
    traj.du_start = rhs.f(y0, u0, ul0);

    // Forced step ends: images of the initial discontinuity plus user points.
    let mut bps: Vec<f64> = opts.breakpoints.iter().copied().filter(|&b| b > y0 && b < y_end).collect();
    if let Some(mut p) = traj.init.discontinuity() {
        for _ in 0..opts.breakpoint_levels {
            p = rhs.lag_inverse(p);
            if !(p < y_end) {
                break;
            }
            if p > y0 {
                bps.push(p);
            }
        }
    }
    bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    bps.dedup();
    let mut next_bp = 0;

    let mut y = y0;
    let mut u = u0;
    let mut h = opts.h_init.unwrap_or(1e-3 * span).min(opts.h_max);

    while y < y_end {
        let reach = rhs.lag_inverse(y) - y;
        if !(reach > 0.0) {
            return Err(Error::domain(format!("delayed argument not behind y at y = {y}")));
        }
        let mut target = y_end;
        while next_bp < bps.len() && bps[next_bp] <= y * (1.0 + 4.0 * f64::EPSILON) + f64::MIN_POSITIVE {
            next_bp += 1;
        }
        if next_bp < bps.len() {
            target = target.min(bps[next_bp]);
        }
        let mut hs = h.min(reach).min(opts.h_max);
        let room = target - y;
        let mut snapped = false;
        if hs >= room {
            hs = room;
            snapped = true;
        } else if 1.5 * hs > room {
            hs = 0.5 * room;
        }
        // Underflow is judged against the local abscissa scale so that very
        // long spans over geometric step sequences stay usable.
        let h_min = 1e-14 * span.min(y.abs().max(1.0));
        if hs < h_min && !snapped {
            return Err(Error::StepUnderflow { at: y, h: hs });
        }
        let y1 = if snapped { target } else { y + hs };
        let hs = y1 - y;

        let step = rk4_doubled(rhs, &traj, y, u, hs)?;
        traj.stats.rhs_evals += 11;
        let scale = opts.atol + opts.rtol * u.abs().max(step.u1.abs());
        let err = (step.u1 - step.full) / 15.0;
        // Never ask for less than a few ulps of the solution itself.
        let floor = 64.0 * f64::EPSILON * u.abs().max(step.u1.abs());
        let norm = err.abs() / (scale * hs.min(1.0)).max(floor);
        let factor = if norm == 0.0 { 4.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 4.0) };
        if !norm.is_finite() || norm > 1.0 {
            traj.stats.rejected += 1;
            h = hs * if norm.is_finite() { factor.min(0.9) } else { 0.25 };
            if h < 1e-14 * span.min(y.abs().max(1.0)) {
                return Err(Error::StepUnderflow { at: y, h });
            }
            continue;
        }
        let u1 = step.u1 + err;
        if !u1.is_finite() || u1.abs() > opts.value_cap {
            if opts.truncate_on_blowup {
                traj.stop = StopReason::BlowUp(y1);
                break;
            }
            return Err(Error::BlowUp { at: y1, value: u1.abs() });
        }
        let ul1 = traj.lookup(rhs.lag(y1), true)?.0;
        let du1 = rhs.f(y1, u1, ul1);
        let du0 = step.k1;
        traj.stats.rhs_evals += 2;
        let delta = 1e-7 * (1.0 + u1.abs());
        let lip = ((rhs.f(y1, u1 + delta, ul1) - du1) / delta).abs();
        traj.stats.max_local_lipschitz = traj.stats.max_local_lipschitz.max(lip);
        traj.segs.push(Segment { y0: y, y1, u0: u, um: step.um, u1, du0, dum: step.dum, du1 });
        traj.stats.accepted += 1;
        if traj.stats.accepted >= opts.max_steps && y1 < y_end {
            return Err(Error::StepLimit { at: y1, steps: opts.max_steps });
        }
        y = y1;
        u = u1;
        h = hs * factor;
        if stop(y, u) {
            traj.stop = StopReason::Event(y);
            break;
        }
    }
    Ok(traj)
}

struct DoubledStep {
    full: f64,
    um: f64,
    dum: f64,
    u1: f64,
    k1: f64,
}

/// One RK4 step of size `h` and two of size `h/2` from `(y, u)`.
fn rk4_doubled(rhs: &dyn DelayRhs, traj: &DenseTrajectory, y: f64, u: f64, h: f64) -> Result<DoubledStep> {
    // Delayed values at the five abscissae used by the three RK4 steps.
    let mut d = [0.0; 5];
    for (k, dk) in d.iter_mut().enumerate() {
        let yk = if k == 4 { y + h } else { y + 0.25 * k as f64 * h };
        *dk = traj.lookup(rhs.lag(yk), k > 0)?.0;
    }
    let f = |yy: f64, uu: f64, dl: f64| rhs.f(yy, uu, dl);
    let k1 = f(y, u, d[0]);
    let rk = |ya: f64, ua: f64, ka: f64, hh: f64, dm: f64, db: f64| {
        let k2 = f(ya + 0.5 * hh, ua + 0.5 * hh * ka, dm);
        let k3 = f(ya + 0.5 * hh, ua + 0.5 * hh * k2, dm);
        let k4 = f(ya + hh, ua + hh * k3, db);
        ua + hh / 6.0 * (ka + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let full = rk(y, u, k1, h, d[2], d[4]);
    let um = rk(y, u, k1, 0.5 * h, d[1], d[2]);
    let ym = y + 0.5 * h;
    let dum = f(ym, um, d[2]);
    let u1 = rk(ym, um, dum, 0.5 * h, d[3], d[4]);
    Ok(DoubledStep { full, um, dum, u1, k1 })
}

/// First failure found by [`monotonicity_and_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MonotonicityViolation {
    /// `H' >= 0` while `H` is still positive.
    NotDecreasing { y: f64, h: f64, dh: f64 },
    /// `H(y) > 1/(1 + (sigma - 1) y) + slack`.
    BoundExceeded { y: f64, h: f64, bound: f64 },
}

/// Result of checking the monotone-decay properties of an H trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub points_checked: usize,
    pub violations: Vec<MonotonicityViolation>,
}

impl MonotonicityReport {
    pub fn first_violation(&self) -> Option<MonotonicityViolation> {
        self.violations.first().copied()
    }

    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check `H' < 0` while `H > 1e-9` and `H(y) <= 1/(1 + (sigma-1) y) + 1e-9`
/// at every node and step midpoint. At `sigma = 1` only `H' <= 0` is required.
pub fn monotonicity_and_bound_check(traj: &DenseTrajectory, params: &ModelParams) -> MonotonicityReport {
    const SLACK: f64 = 1e-9;
    let strict = params.sigma > 1.0;
    let mut pts: Vec<(f64, f64, f64)> = traj
        .nodes()
        .into_iter()
        .zip(traj.values())
        .zip(traj.derivatives())
        .map(|((y, u), du)| (y, u, du))
        .collect();
    pts.extend(traj.midpoints());
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut violations = Vec::new();
    for &(y, h, dh) in &pts {
        if h > SLACK && (dh > 0.0 || (strict && dh >= 0.0)) {
            violations.push(MonotonicityViolation::NotDecreasing { y, h, dh });
        }
        let bound = 1.0 / (1.0 + (params.sigma - 1.0) * y);
        if h > bound + SLACK {
            violations.push(MonotonicityViolation::BoundExceeded { y, h, bound });
        }
    }
    MonotonicityReport { points_checked: pts.len(), violations }
}

/// Series start for an equation regular at the origin: the series is used
/// up to the point where its last terms drop below `1e-14`.
pub fn series_start(eq: &DelayEquation, n: usize, cap: f64) -> Option<InitialSegment> {
    let series = eq.origin_series(n)?;
    let end = series.switch_point(1e-14, cap);
    Some(InitialSegment::Series { series, end })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_reproduces_quintic() {
        let p = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x.powi(3) - x.powi(4) + 0.3 * x.powi(5);
        let dp = |x: f64| 1.0 - 4.0 * x + 1.5 * x * x - 4.0 * x.powi(3) + 1.5 * x.powi(4);
        let (a, b) = (0.3, 1.1);
        let m = 0.5 * (a + b);
        let s = Segment { y0: a, y1: b, u0: p(a), um: p(m), u1: p(b), du0: dp(a), dum: dp(m), du1: dp(b) };
        for i in 0..=10 {
            let x = a + (b - a) * i as f64 / 10.0;
            let (v, dv) = s.interp(x);
            assert!((v - p(x)).abs() < 1e-13);
            assert!((dv - dp(x)).abs() < 1e-11);
        }
    }
}
