//! Large-gamma construction of the critical profile as a perturbation of
//! `e^-x`.
//!
//! Writing `h = e^-x + W` in `h' = -h(x(1+eps)/2)^2 + eta h^2` gives
//! `W' = -2 e^(-x/2) W(x/2) + R[W]` with the source
//! `R[W] = e^-x - e^-(1+eps)x + 2e^(-x/2) W(x/2) - 2e^(-px) W(px) - W(px)^2 + eta (e^-x + W)^2`,
//! `p = (1+eps)/2`. Its decaying solution is `T[W] = V - F`, where `V` solves
//! the linear delay equation from `V(0) = 0` and
//! `F = int_0^inf e^xi Q(xi) R[W](xi) dxi` is the limit of `V` at infinity.
//! A fixed point with `F = 0` is a positive, exponentially decaying profile.

use crate::delay::{integrate_with, DelayRhs, InitialSegment, IntegrateOptions};
use crate::error::{Error, Result};
use crate::greens::{gtilde_residues, q_scaled, GreensEval};
use crate::params::ModelParams;
use crate::quad;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Settings of the fixed-point solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPointConfig {
    /// Right end of the grid.
    pub x_max: f64,
    /// Number of grid nodes.
    pub nodes: usize,
    /// Tolerance of the linear delay integration.
    pub ode_tol: f64,
    /// Picard stopping tolerance on the sup-norm difference.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { x_max: 40.0, nodes: 2000, ode_tol: 1e-13, tol: 1e-12, max_iter: 100 }
    }
}

/// Largest weight exponent used in the envelope fit.
pub const DELTA_CAP: f64 = 0.49;

/// Exponential envelope of `W`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub m: f64,
    pub delta: f64,
    /// Decay rate of the tail envelope before capping.
    pub observed_rate: f64,
}

/// Gridded perturbation `W` with Picard diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointState {
    pub grid: Vec<f64>,
    pub w: Vec<f64>,
    /// `W'` on the grid, from the differential form of the map.
    pub dw: Vec<f64>,
    pub eps: f64,
    pub eta: f64,
    /// `F` of the last application of the map.
    pub f_value: f64,
    pub iterations: usize,
    pub sup_diff_history: Vec<f64>,
}

/// Grid on `[0, x_max]` graded toward the origin.
pub fn graded_grid(x_max: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            x_max * (0.3 * t + 0.7 * t * t)
        })
        .collect()
}

impl FixedPointState {
    /// `W = 0` on the default grid.
    pub fn zero(eps: f64, eta: f64, cfg: &FixedPointConfig) -> Self {
        let grid = graded_grid(cfg.x_max, cfg.nodes);
        let n = grid.len();
        Self { grid, w: vec![0.0; n], dw: vec![0.0; n], eps, eta, f_value: 0.0, iterations: 0, sup_diff_history: Vec::new() }
    }

    /// State from an arbitrary function `x -> (W, W')` on the default grid.
    pub fn from_fn(eps: f64, eta: f64, cfg: &FixedPointConfig, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let mut s = Self::zero(eps, eta, cfg);
        for (i, &x) in s.grid.iter().enumerate() {
            let (v, d) = f(x);
            s.w[i] = v;
            s.dw[i] = d;
        }
        s
    }

    pub fn x_max(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    /// Cubic Hermite interpolant; beyond the grid the last value decays like `e^(-x/2)`.
    pub fn w_at(&self, x: f64) -> f64 {
        let xm = self.x_max();
        if x >= xm {
            return *self.w.last().unwrap() * (-0.5 * (x - xm)).exp();
        }
        if x <= 0.0 {
            return self.w[0];
        }
        let i = self.grid.partition_point(|&g| g <= x) - 1;
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1, d0, d1) = (self.w[i], self.w[i + 1], self.dw[i] * h, self.dw[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
    }

    /// `h = e^-x + W`.
    pub fn h_at(&self, x: f64) -> f64 {
        (-x).exp() + self.w_at(x)
    }

    pub fn sup_norm(&self) -> f64 {
        self.w.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Envelope fit `|W(x)| <= (eps + eta) M e^(-delta x)` with `delta` in
    /// the weight range `(0, 1/2)`. The observed rate comes from the decay of
    /// the running tail maximum of `|W|` over the middle of the grid; `delta`
    /// is that rate capped at [`DELTA_CAP`], and `M` is the smallest constant
    /// for which the bound holds on the grid.
    pub fn decay_fit(&self) -> DecayFit {
        let n = self.grid.len();
        let mut env = vec![0.0; n];
        let mut m = 0.0f64;
        for i in (0..n).rev() {
            m = m.max(self.w[i].abs());
            env[i] = m;
        }
        let xm = self.x_max();
        let pts: Vec<(f64, f64)> = self
            .grid
            .iter()
            .zip(&env)
            .filter(|(x, e)| **x >= 0.2 * xm && **x <= 0.6 * xm && **e > 1e-300)
            .map(|(x, e)| (*x, e.ln()))
            .collect();
        let observed_rate = if pts.len() >= 2 {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            -num / den
        } else {
            0.0
        };
        let delta = observed_rate.min(DELTA_CAP);
        let scale = (self.eps + self.eta).abs().max(f64::MIN_POSITIVE);
        let mfit = self
            .grid
            .iter()
            .zip(&self.w)
            .map(|(x, w)| w.abs() * (delta * x).exp() / scale)
            .fold(0.0, f64::max);
        DecayFit { m: mfit, delta, observed_rate }
    }

    /// Profile rows `(x, h, W)` at the grid nodes.
    pub fn profile_rows(&self) -> Vec<Vec<f64>> {
        self.grid.iter().zip(&self.w).map(|(&x, &w)| vec![x, (-x).exp() + w, w]).collect()
    }
}

/// Source term `R[W](x; eps, eta)`.
pub fn r_eval(w: &FixedPointState, x: f64, eps: f64, eta: f64) -> f64 {
    let p = 0.5 * (1.0 + eps);
    let e = (-x).exp();
    let wp = w.w_at(p * x);
    let w0 = w.w_at(x);
    // e^-x - e^-(1+eps)x without cancellation.
    let diff = -e * (-eps * x).exp_m1();
    diff + 2.0 * (-0.5 * x).exp() * w.w_at(0.5 * x) - 2.0 * (-p * x).exp() * wp - wp * wp
        + eta * (e + w0) * (e + w0)
}

struct VEquation<'a> {
    w: &'a FixedPointState,
    eps: f64,
    eta: f64,
}

impl DelayRhs for VEquation<'_> {
    fn lag(&self, y: f64) -> f64 {
        0.5 * y
    }
    fn lag_inverse(&self, p: f64) -> f64 {
        2.0 * p
    }
    fn f(&self, y: f64, _u: f64, ul: f64) -> f64 {
        -2.0 * (-0.5 * y).exp() * ul + r_eval(self.w, y, self.eps, self.eta)
    }
}

/// `F(W, eps, eta) = int_0^inf e^xi Q(xi) R[W](xi) dxi`.
pub fn f_functional(w: &FixedPointState, eps: f64, eta: f64) -> f64 {
    let xm = w.x_max();
    let mut pts = vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    pts.retain(|&p| p < xm);
    pts.extend([xm, 2.0 * xm, 4.0 * xm]);
    quad::integrate_pieces(|x| q_scaled(x) * r_eval(w, x, eps, eta), &pts, 1e-15)
}

/// `F` of a converged state.
pub fn f_eval(state: &FixedPointState) -> f64 {
    f_functional(state, state.eps, state.eta)
}

/// One application of the map: returns `T[W]` on the same grid, with `F`.
pub fn apply_t(w: &FixedPointState, cfg: &FixedPointConfig) -> Result<FixedPointState> {
    let (eps, eta) = (w.eps, w.eta);
    let rhs = VEquation { w, eps, eta };
    // Short Taylor segment at the origin: V = R0 x + (R1 - R0) x^2 / 2.
    let x0 = 1e-5;
    let r0 = r_eval(w, 0.0, eps, eta);
    let dr = 1e-6;
    let r1 = (r_eval(w, dr, eps, eta) - r0) / dr;
    let c2 = 0.5 * (r1 - r0);
    let init = InitialSegment::history(0.0, x0, move |x| (r0 * x + c2 * x * x, r0 + 2.0 * c2 * x));
    let mut opts = IntegrateOptions::new(cfg.ode_tol);
    opts.atol = cfg.ode_tol * 1e-2;
    opts.breakpoint_levels = 0;
    let xm = w.x_max();
    let v = integrate_with(&rhs, init, xm, &opts, |_, _| false)?;
    let f = f_functional(w, eps, eta);
    let mut out = w.clone();
    for (i, &x) in w.grid.iter().enumerate() {
        let (vv, dv) = v.eval_with_derivative(x)?;
        out.w[i] = vv - f;
        out.dw[i] = dv;
    }
    out.f_value = f;
    let tail = (v.last_value() - f).abs();
    if tail > 1e-8 {
        log::warn!("V(x_max) - F = {tail:e}: grid may be too short");
    }
    Ok(out)
}

/// `T[W](x)` through the kernel representation
/// `-int_x^inf e^xi Q R + int_0^x e^(xi - x) G~(x, xi) R dxi`; used to
/// verify the differential form at isolated points.
pub fn apply_t_by_kernel(w: &FixedPointState, x: f64, cfg: &GreensEval) -> f64 {
    let (eps, eta) = (w.eps, w.eta);
    let r = |s: f64| r_eval(w, s, eps, eta);
    let xm = w.x_max().max(x);
    let outer = quad::integrate_pieces(|s| q_scaled(s) * r(s), &[x, x + 1.0, x + 4.0, xm + 40.0], 1e-14);
    // G~ changes form where x = 2^n xi.
    let mut pts = vec![0.0];
    let mut k = 1usize << 12;
    while k >= 2 {
        let p = x / k as f64;
        if p > 1e-12 {
            pts.push(p);
        }
        k /= 2;
    }
    pts.push(x);
    pts.dedup();
    let inner = quad::integrate_pieces(|s| (s - x).exp() * gtilde_residues(x, s, cfg) * r(s), &pts, 1e-13);
    inner - outer
}

/// Iterate `W <- T[W]` from `W = 0` until the sup-norm change is below `cfg.tol`.
pub fn picard_solve(eps: f64, eta: f64, cfg: &FixedPointConfig) -> Result<FixedPointState> {
    picard_from(FixedPointState::zero(eps, eta, cfg), cfg)
}

/// Picard iteration from a given start.
pub fn picard_from(mut w: FixedPointState, cfg: &FixedPointConfig) -> Result<FixedPointState> {
    let mut hist: Vec<f64> = Vec::new();
    let mut increases = 0;
    for it in 1..=cfg.max_iter {
        let next = apply_t(&w, cfg)?;
        let diff = next.w.iter().zip(&w.w).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if let Some(&last) = hist.last() {
            if diff > last {
                increases += 1;
            } else {
                increases = 0;
            }
        }
        hist.push(diff);
        w = next;
        w.iterations = it;
        w.sup_diff_history = hist.clone();
        if !diff.is_finite() || increases >= 3 {
            return Err(Error::NonContraction { history: hist });
        }
        if diff < cfg.tol {
            return Ok(w);
        }
    }
    Err(Error::NoConvergence(format!("Picard iteration after {} steps, last diff {:e}", cfg.max_iter, hist.last().unwrap_or(&f64::NAN))))
}

/// Root `eps(eta)` of `F` with the state at the root.
pub fn eps_of_eta(eta: f64, tol: f64, cfg: &FixedPointConfig) -> Result<(f64, FixedPointState)> {
    if !(eta >= 0.0 && eta <= 0.05) {
        return Err(Error::domain(format!("eta must lie in [0, 0.05], got {eta}")));
    }
    let f_at = |e: f64| -> Result<(f64, FixedPointState)> {
        let s = picard_solve(e, eta, cfg)?;
        let f = f_eval(&s);
        Ok((f, s))
    };
    let (f0, s0) = f_at(0.0)?;
    if f0.abs() < tol {
        return Ok((0.0, s0));
    }
    let mut lo = 0.0;
    let mut hi = 10.0 * eta;
    let (mut fhi, _) = f_at(hi)?;
    if fhi.signum() == f0.signum() {
        hi *= 2.0;
        fhi = f_at(hi)?.0;
        if fhi.signum() == f0.signum() {
            return Err(Error::NoSignChange { lo, hi, f_lo: f0, f_hi: fhi });
        }
    }
    let flo_sign = f0.signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let (fm, sm) = f_at(mid)?;
        if fm.abs() < tol || hi - lo < 1e-15 {
            return Ok((mid, sm));
        }
        if fm.signum() == flo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence("bisection for eps(eta)".into()))
}

/// Critical parameter for large gamma with its profile.
#[derive(Debug, Clone, Serialize)]
pub struct BbarResult {
    pub gamma: f64,
    pub bbar: f64,
    pub eta: f64,
    pub eps: f64,
    pub iterations: usize,
    pub decay_fit: DecayFit,
    /// Minimum of `h = e^-x + W` on the grid.
    pub h_min: f64,
    #[serde(skip)]
    pub state: FixedPointState,
}

impl BbarResult {
    /// `H(y) = h(sigma y)` for the original profile variable.
    pub fn h_profile(&self, y: f64) -> f64 {
        let sigma = 1.0 / self.eta;
        self.state.h_at(sigma * y)
    }

    /// `Phi(x) = y H(y)`, `y = x^(1/b)`.
    pub fn phi_profile(&self, x: f64) -> f64 {
        let y = x.powf(1.0 / self.bbar);
        y * self.h_profile(y)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.gamma, self.bbar)
    }
}

/// Solve `eta = 2^(2/b + 1 - gamma)`, `2^(1/b) = 2/(1+eps)`, `eps = eps(eta)`
/// by damped iteration from `b = 1`.
pub fn bbar_of_gamma(gamma: f64, cfg: &FixedPointConfig) -> Result<BbarResult> {
    if !(gamma > 1.0) {
        return Err(Error::domain("gamma must exceed 1"));
    }
    let mut b = 1.0;
    let mut last = None;
    for it in 1..=60 {
        let eta = (2.0 / b + 1.0 - gamma).exp2();
        if eta > 0.05 {
            return Err(Error::domain(format!("eta = {eta} too large at gamma = {gamma}; need larger gamma")));
        }
        let (eps, state) = eps_of_eta(eta, 1e-13, cfg)?;
        let b_new = LN_2 / (LN_2 - eps.ln_1p());
        let step = b_new - b;
        b = b_new;
        last = Some((eta, eps, state, it));
        if step.abs() < 1e-12 {
            break;
        }
    }
    let (eta, eps, state, iterations) = last.expect("at least one iteration");
    let h_min = state.grid.iter().map(|&x| state.h_at(x)).fold(f64::INFINITY, f64::min);
    if let Some(i) = state.grid.iter().position(|&x| state.h_at(x) < -1e-9) {
        return Err(Error::PositivityViolation { at: state.grid[i], value: state.h_at(state.grid[i]) });
    }
    let decay_fit = state.decay_fit();
    Ok(BbarResult { gamma, bbar: b, eta, eps, iterations, decay_fit, h_min, state })
}
