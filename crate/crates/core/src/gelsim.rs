//! Time evolution of the diagonal-kernel coagulation equation
//! `f_t(xi) = 1/4 (xi/2)^(gamma+1) f(xi/2)^2 - xi^(gamma+1) f(xi)^2`.
//!
//! The equation only couples `xi` with `xi/2`, so it splits exactly into
//! dyadic chains `xi_k = xi0 2^k` that evolve independently.

use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::params::ModelParams;
use serde::Serialize;
use std::f64::consts::LN_2;

/// Density entering below the first site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    /// `f(xi0/2) = 0`.
    Empty,
    /// `f(xi0/2)` held at the given value.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DyadicChain {
    pub xi0: f64,
    pub gamma: f64,
    pub t: f64,
    pub f: Vec<f64>,
    pub boundary: Boundary,
}

impl DyadicChain {
    pub fn new(xi0: f64, gamma: f64, f: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if !(xi0 > 0.0) || f.is_empty() {
            return Err(Error::domain("chain needs xi0 > 0 and at least one site"));
        }
        if f.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("chain densities must be finite and non-negative"));
        }
        Ok(Self { xi0, gamma, t: 0.0, f, boundary })
    }

    /// Chain with `f_k = g(xi_k)` on levels `0..=k_max`.
    pub fn from_fn(xi0: f64, gamma: f64, k_max: usize, boundary: Boundary, g: impl Fn(f64) -> f64) -> Result<Self> {
        let f = (0..=k_max).map(|k| g(xi0 * (k as f64).exp2())).collect();
        Self::new(xi0, gamma, f, boundary)
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.xi0 * (k as f64).exp2()
    }

    pub fn sizes(&self) -> Vec<f64> {
        (0..self.f.len()).map(|k| self.xi(k)).collect()
    }

    fn weights(&self) -> Vec<f64> {
        self.sizes().iter().map(|x| x.powf(self.gamma + 1.0)).collect()
    }

    fn inflow(&self) -> f64 {
        match self.boundary {
            Boundary::Empty => 0.0,
            Boundary::Fixed(v) => 0.25 * (0.5 * self.xi0).powf(self.gamma + 1.0) * v * v,
        }
    }

    /// Right-hand side at the current state.
    pub fn rhs(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.f.len()];
        chain_rhs(&self.weights(), self.inflow(), &self.f, &mut out);
        out
    }

    /// `sum xi_k^2 f_k`: the mass carried by the chain, per unit of `ln xi`.
    pub fn mass(&self) -> f64 {
        self.f.iter().enumerate().map(|(k, v)| self.xi(k).powi(2) * v).sum()
    }
}

fn chain_rhs(w: &[f64], inflow: f64, f: &[f64], out: &mut [f64]) {
    let mut gain = inflow;
    for k in 0..f.len() {
        let loss = w[k] * f[k] * f[k];
        out[k] = gain - loss;
        gain = 0.25 * loss;
    }
}

/// Closed form of a single site with no inflow.
pub fn single_site_exact(xi0: f64, gamma: f64, c: f64, t: f64) -> f64 {
    c / (1.0 + xi0.powf(gamma + 1.0) * c * t)
}

/// Step selection for [`evolve_chain_with`].
#[derive(Debug, Clone, PartialEq)]
pub enum StepPlan {
    Adaptive { tol: f64 },
    /// Replay a recorded sequence of step sizes.
    Fixed(Vec<f64>),
}

/// Accepted steps of one evolution.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvolveLog {
    pub steps: Vec<f64>,
    pub rejected: usize,
    /// Accepted values in `[-atol, 0)` reset to zero.
    pub clamped: usize,
    /// `(t, f)` after every accepted step, when requested.
    #[serde(skip)]
    pub history: Vec<(f64, Vec<f64>)>,
}

/// Density above which a run is treated as blowing up.
pub const DENSITY_CAP: f64 = 1e12;

// Dormand-Prince 5(4); the equation is autonomous, so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Coupled system of several chains stepped together.
struct System<'a> {
    chains: &'a [DyadicChain],
    w: Vec<Vec<f64>>,
    inflow: Vec<f64>,
    offsets: Vec<usize>,
}

impl<'a> System<'a> {
    fn new(chains: &'a [DyadicChain]) -> Self {
        let mut offsets = vec![0];
        for c in chains {
            offsets.push(offsets.last().unwrap() + c.f.len());
        }
        Self {
            chains,
            w: chains.iter().map(|c| c.weights()).collect(),
            inflow: chains.iter().map(|c| c.inflow()).collect(),
            offsets,
        }
    }

    fn rhs(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.chains.len() {
            let (a, b) = (self.offsets[i], self.offsets[i + 1]);
            chain_rhs(&self.w[i], self.inflow[i], &y[a..b], &mut out[a..b]);
        }
    }
}

/// One Dormand-Prince step; returns the new state and the error estimate.
fn dp_step(sys: &System, y: &[f64], k1: &[f64], h: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut k: Vec<Vec<f64>> = vec![k1.to_vec()];
    let mut tmp = vec![0.0; n];
    for s in 1..7 {
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate() {
                acc += A[s][j] * kj[i];
            }
            tmp[i] = y[i] + h * acc;
        }
        let mut ks = vec![0.0; n];
        sys.rhs(&tmp, &mut ks);
        k.push(ks);
    }
    // Stage 7 is evaluated at the fifth-order solution (FSAL).
    let y_new = tmp.clone();
    let err: Vec<f64> = (0..n).map(|i| h * (0..7).map(|s| E[s] * k[s][i]).sum::<f64>()).collect();
    (y_new, err, k.pop().unwrap())
}

/// Reset admitted negative values to zero and refresh the stage-7 slopes.
///
/// The exact flow keeps `f >= 0`, while `f < 0` runs off to `-inf` in time
/// `1/(w |f|)`. Both step plans go through here so a replay is bitwise exact.
fn project_nonnegative(sys: &System, y: &mut [f64], k7: &mut [f64]) -> usize {
    let mut n = 0;
    for v in y.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
            n += 1;
        }
    }
    if n > 0 {
        sys.rhs(y, k7);
    }
    n
}

/// Evolve several chains with one shared step sequence.
pub fn evolve_joint(chains: &[DyadicChain], t_end: f64, plan: &StepPlan, keep_history: bool) -> Result<(Vec<DyadicChain>, EvolveLog)> {
    evolve_until(chains, t_end, plan, keep_history, |_| false)
}

/// As [`evolve_joint`], ending early after the first accepted step at which
/// `stop` holds for the concatenated state.
pub fn evolve_until(
    chains: &[DyadicChain],
    t_end: f64,
    plan: &StepPlan,
    keep_history: bool,
    stop: impl Fn(&[f64]) -> bool,
) -> Result<(Vec<DyadicChain>, EvolveLog)> {
    if chains.is_empty() {
        return Ok((Vec::new(), EvolveLog::default()));
    }
    let t0 = chains[0].t;
    if chains.iter().any(|c| c.t != t0) {
        return Err(Error::domain("chains must share the start time"));
    }
    if !(t_end > t0) {
        return Err(Error::domain(format!("t_end = {t_end} must exceed t = {t0}")));
    }
    let sys = System::new(chains);
    let mut y: Vec<f64> = chains.iter().flat_map(|c| c.f.iter().copied()).collect();
    let scale = y.iter().fold(0.0f64, |m, v| m.max(*v)).max(f64::MIN_POSITIVE);
    let mut k1 = vec![0.0; y.len()];
    sys.rhs(&y, &mut k1);
    let mut t = t0;
    let mut log = EvolveLog::default();
    if keep_history {
        log.history.push((t, y.clone()));
    }
    let accept = |y_new: &[f64], t: f64| -> Result<()> {
        if let Some(v) = y_new.iter().find(|v| !v.is_finite() || **v > DENSITY_CAP) {
            return Err(Error::BlowUp { at: t, value: *v });
        }
        Ok(())
    };
    match plan {
        StepPlan::Fixed(steps) => {
            let mut stopped = false;
            for (i, &h) in steps.iter().enumerate() {
                let (y_new, _, mut k7) = dp_step(&sys, &y, &k1, h);
                // The adaptive path lands exactly on t_end with its last step.
                t = if i + 1 == steps.len() && ((t + h) - t_end).abs() <= 1e-12 * t_end.abs() { t_end } else { t + h };
                accept(&y_new, t)?;
                y = y_new;
                log.clamped += project_nonnegative(&sys, &mut y, &mut k7);
                k1 = k7;
                log.steps.push(h);
                if keep_history {
                    log.history.push((t, y.clone()));
                }
                if stop(&y) {
                    stopped = true;
                    break;
                }
            }
            if !stopped && t < t_end * (1.0 - 1e-12) {
                return Err(Error::domain(format!("step plan ends at t = {t}, before t_end = {t_end}")));
            }
        }
        StepPlan::Adaptive { tol } => {
            let tol = *tol;
            // Absolute floors follow the stationary scaling xi^-(gamma+3)/2, so
            // small densities at large sizes stay under relative control.
            let atol: Vec<f64> = chains
                .iter()
                .flat_map(|c| {
                    let e = -(c.gamma + 3.0) / 2.0;
                    (0..c.f.len()).map(move |k| tol * 1e-6 * scale * (k as f64 * e).exp2())
                })
                .collect();
            let rate = k1.iter().zip(&y).zip(&atol).map(|((d, v), a)| d.abs() / (v.abs() + a)).fold(0.0, f64::max);
            let mut h = if rate > 0.0 { (0.01 / rate).min(t_end - t0) } else { t_end - t0 };
            let mut guard = 0usize;
            while t < t_end {
                guard += 1;
                if guard > 50_000_000 {
                    return Err(Error::NoConvergence("chain evolution step budget".into()));
                }
                let last = t + h >= t_end * (1.0 - 4.0 * f64::EPSILON);
                let hs = if last { t_end - t } else { h };
                let (y_new, err, mut k7) = dp_step(&sys, &y, &k1, hs);
                let mut norm: f64 = 0.0;
                let mut negative = false;
                for i in 0..y.len() {
                    let sc = atol[i] + tol * y[i].abs().max(y_new[i].abs());
                    norm = norm.max(err[i].abs() / sc);
                    if y_new[i] < -atol[i] {
                        negative = true;
                    }
                }
                if norm <= 1.0 && !negative {
                    t = if last { t_end } else { t + hs };
                    accept(&y_new, t)?;
                    y = y_new;
                    log.clamped += project_nonnegative(&sys, &mut y, &mut k7);
                    k1 = k7;
                    if stop(&y) {
                        log.steps.push(hs);
                        if keep_history {
                            log.history.push((t, y.clone()));
                        }
                        break;
                    }
                    log.steps.push(hs);
                    if keep_history {
                        log.history.push((t, y.clone()));
                    }
                    let fac = if norm > 0.0 { 0.9 * norm.powf(-0.2) } else { 5.0 };
                    h = hs * fac.clamp(0.2, 5.0);
                } else {
                    log.rejected += 1;
                    let fac = if negative { 0.25 } else { (0.9 * norm.powf(-0.2)).clamp(0.1, 0.9) };
                    h = hs * fac;
                    if h < 1e-15 * t.abs().max(1e-300) {
                        return Err(Error::StepUnderflow { at: t, h });
                    }
                }
            }
        }
    }
    let mut out = chains.to_vec();
    for (i, c) in out.iter_mut().enumerate() {
        c.f.copy_from_slice(&y[sys.offsets[i]..sys.offsets[i + 1]]);
        c.t = t;
    }
    if let Some(c) = out.iter().flat_map(|c| c.f.iter()).find(|v| **v < -1e-12 * scale) {
        return Err(Error::PositivityViolation { at: t, value: *c });
    }
    Ok((out, log))
}

/// Evolve one chain to `t_end`.
pub fn evolve_chain(chain: &DyadicChain, t_end: f64, tol: f64) -> Result<DyadicChain> {
    Ok(evolve_chain_with(chain, t_end, &StepPlan::Adaptive { tol })?.0)
}

pub fn evolve_chain_with(chain: &DyadicChain, t_end: f64, plan: &StepPlan) -> Result<(DyadicChain, EvolveLog)> {
    let (mut v, log) = evolve_joint(std::slice::from_ref(chain), t_end, plan, false)?;
    Ok((v.pop().unwrap(), log))
}

/// Relative residual of the self-similar profile equation
/// `-a b F - b x F' - 1/4 (x/2)^(gamma+1) F(x/2)^2 + x^(gamma+1) F^2`,
/// each point scaled by the sum of the term magnitudes; `profile` returns
/// `(F, F')`.
pub fn selfsimilar_residual(profile: impl Fn(f64) -> (f64, f64), grid: &[f64], params: &ModelParams) -> f64 {
    let (a, b, g1) = (params.a, params.b, params.gamma + 1.0);
    grid.iter()
        .map(|&x| {
            let (f, df) = profile(x);
            let (fh, _) = profile(0.5 * x);
            let terms = [-a * b * f, -b * x * df, -0.25 * (0.5 * x).powf(g1) * fh * fh, x.powf(g1) * f * f];
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            if scale == 0.0 {
                0.0
            } else {
                terms.iter().sum::<f64>().abs() / scale
            }
        })
        .fold(0.0, f64::max)
}

/// Interpolant of a sampled positive profile, linear in `(ln x, ln F)` with
/// slopes from three-point differences; exact for power laws.
pub fn loglog_interpolant(xs: Vec<f64>, fs: Vec<f64>) -> Result<impl Fn(f64) -> (f64, f64)> {
    if xs.len() < 3 || xs.len() != fs.len() || fs.iter().any(|v| !(*v > 0.0)) || xs.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
        return Err(Error::domain("log-log interpolation needs >= 3 increasing positive samples"));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let lf: Vec<f64> = fs.iter().map(|f| f.ln()).collect();
    Ok(move |x: f64| {
        let l = x.ln();
        let i = lx.partition_point(|&v| v <= l).clamp(1, lx.len() - 1) - 1;
        let s = (lf[i + 1] - lf[i]) / (lx[i + 1] - lx[i]);
        let v = (lf[i] + s * (l - lx[i])).exp();
        (v, s * v / x)
    })
}

/// Initial data for a gelation scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum InitData {
    /// `f = c` on the first level of every chain, zero above.
    Monodisperse { c: f64 },
    /// `f = e^-xi`.
    Exponential,
}

/// Outcome of a scan over log-spaced chains.
#[derive(Debug, Clone, Serialize)]
pub struct SimDiagnostics {
    pub gamma: f64,
    pub chains: usize,
    pub levels: usize,
    pub t_end: f64,
    /// Per chain: time at which each level first reaches half its running maximum.
    pub arrival_times: Vec<Vec<f64>>,
    /// Per chain extrapolated gelation time, `None` when arrivals do not accelerate.
    pub t_hat: Vec<Option<f64>>,
    /// Median over chains.
    pub t_hat_median: Option<f64>,
    /// `b` from the geometric ratio `2^(-1/b)` of arrival increments.
    pub b_hat: Option<f64>,
    /// `(t, mass)` with mass `ln 2 / n sum xi^2 f`.
    pub mass_history: Vec<(f64, f64)>,
    /// Snapshot times `T^ - tau` (median `T^`) used for the collapse test;
    /// each chain is sampled at its own `T^ - tau`.
    pub collapse_times: Vec<f64>,
    /// Sup-distance of `x^a F(x)` between consecutive rescaled snapshots.
    pub collapse_distance: Vec<f64>,
}

fn initial_chain(xi0: f64, gamma: f64, levels: usize, init: InitData) -> Result<DyadicChain> {
    DyadicChain::from_fn(xi0, gamma, levels - 1, Boundary::Empty, |xi| match init {
        InitData::Monodisperse { c } => {
            if xi < 2.0 {
                c
            } else {
                0.0
            }
        }
        InitData::Exponential => (-xi).exp(),
    })
}

/// Arrival times of each level: first crossing of half the level's maximum.
fn arrivals(hist: &[(f64, Vec<f64>)], levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|k| {
            let peak = hist.iter().map(|(_, f)| f[k]).fold(0.0, f64::max);
            if peak <= 0.0 {
                return f64::NAN;
            }
            let half = 0.5 * peak;
            if hist[0].1[k] >= half {
                return hist[0].0;
            }
            for w in hist.windows(2) {
                let (t0, f0) = (w[0].0, w[0].1[k]);
                let (t1, f1) = (w[1].0, w[1].1[k]);
                if f1 >= half {
                    return t0 + (t1 - t0) * (half - f0) / (f1 - f0);
                }
            }
            f64::NAN
        })
        .collect()
}

/// Levels next to the top are distorted by the open end and by the early
/// stop, and are left out of the arrival fit and the collapse test.
pub const TOP_EXCLUDED: usize = 8;

/// Range of the similarity variable `x` over which snapshots are compared;
/// small `x` still carries the initial data.
pub const COLLAPSE_WINDOW: (f64, f64) = (1e-2, 1e2);

/// Aitken extrapolation of accelerating arrivals below the excluded top
/// levels, with the increment ratio.
fn extrapolate(arr: &[f64]) -> Option<(f64, f64)> {
    let usable: Vec<f64> = arr.iter().take(arr.len().saturating_sub(TOP_EXCLUDED)).copied().collect();
    if usable.len() < 6 || usable.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let n = usable.len();
    let d1 = usable[n - 2] - usable[n - 3];
    let d2 = usable[n - 1] - usable[n - 2];
    let d0 = usable[n - 3] - usable[n - 4];
    if !(d1 > 0.0 && d2 > 0.0 && d2 < d1 && d1 < d0) {
        return None;
    }
    let r = d2 / d1;
    Some((usable[n - 1] + d2 * r / (1.0 - r), r))
}

/// Evolve `n_chains` chains with seeds log-spaced in `[1, 2)` and estimate
/// the gelation time and the approach to self-similarity.
pub fn gelation_scan(gamma: f64, init: InitData, n_chains: usize, levels: usize, t_end: f64, tol: f64) -> Result<SimDiagnostics> {
    if n_chains == 0 || levels < 8 {
        return Err(Error::domain("need at least one chain and eight levels"));
    }
    let seeds: Vec<f64> = (0..n_chains).map(|j| (j as f64 / n_chains as f64).exp2()).collect();
    // A chain is finished once mass reaches its top level: the arrivals are
    // then known and the stiff post-gelation outflow is not needed.
    let top = levels - 1;
    let e0 = (gamma + 3.0) / 2.0;
    let runs: Vec<Result<(DyadicChain, EvolveLog)>> = par_map(&seeds, |&s| {
        let c = initial_chain(s, gamma, levels, init)?;
        let w_top = (s * (top as f64).exp2()).powf(e0);
        let (v, log) = evolve_until(std::slice::from_ref(&c), t_end, &StepPlan::Adaptive { tol }, true, |y| {
            y[top] * w_top >= 1e-3
        })?;
        Ok((v.into_iter().next().unwrap(), log))
    });
    let runs: Vec<(DyadicChain, EvolveLog)> = runs.into_iter().collect::<Result<_>>()?;
    let arrival_times: Vec<Vec<f64>> = runs.iter().map(|(_, l)| arrivals(&l.history, levels)).collect();
    let ext: Vec<Option<(f64, f64)>> = arrival_times.iter().map(|a| extrapolate(a)).collect();
    let t_hat: Vec<Option<f64>> = ext.iter().map(|e| e.map(|v| v.0)).collect();
    let median = |mut v: Vec<f64>| -> Option<f64> {
        if v.is_empty() {
            return None;
        }
        v.sort_by(|a, b| a.total_cmp(b));
        Some(v[v.len() / 2])
    };
    let t_hat_median = median(t_hat.iter().flatten().copied().collect());
    let r_med = median(ext.iter().flatten().map(|e| e.1).collect());
    let b_hat = r_med.map(|r| -LN_2 / r.ln());

    // State of a chain at time t by linear interpolation of its history.
    let state_at = |log: &EvolveLog, t: f64| -> Option<Vec<f64>> {
        let h = &log.history;
        if t < h[0].0 || t > h[h.len() - 1].0 {
            return None;
        }
        let j = h.partition_point(|(tt, _)| *tt < t).min(h.len() - 1);
        if j == 0 {
            return Some(h[0].1.clone());
        }
        let (t0, f0, t1, f1) = (h[j - 1].0, &h[j - 1].1, h[j].0, &h[j].1);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        Some(f0.iter().zip(f1).map(|(a, b)| a + w * (b - a)).collect())
    };

    // Mass, `ln 2 / n sum xi^2 f`, while every chain is still running.
    let t_mass = runs.iter().map(|(_, l)| l.history.last().unwrap().0).fold(t_end, f64::min);
    let n_mass = 41;
    let mass_history: Vec<(f64, f64)> = (0..n_mass)
        .map(|i| {
            let t = t_mass * i as f64 / (n_mass - 1) as f64;
            let m: f64 = runs
                .iter()
                .zip(&seeds)
                .filter_map(|((_, log), &s)| {
                    state_at(log, t).map(|f| f.iter().enumerate().map(|(k, v)| (s * (k as f64).exp2()).powi(2) * v).sum::<f64>())
                })
                .sum();
            (t, m * LN_2 / n_chains as f64)
        })
        .collect();

    // Chains gel independently, so each is rescaled about its own T^:
    // samples (ln x, x^a F(x)) with x = tau^b xi, F = tau^(-ab) f at t = T^ - tau.
    let (mut collapse_times, mut collapse_distance) = (Vec::new(), Vec::new());
    if let (Some(th), Some(b)) = (t_hat_median, b_hat) {
        let a = 1.0 + gamma - 1.0 / b;
        let t_min = t_hat.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let taus: Vec<f64> = (0..6).map(|j| 0.5 * t_min * 0.5f64.powi(j)).collect();
        collapse_times = taus.iter().map(|tau| th - tau).collect();
        let snaps: Vec<Vec<(f64, f64)>> = taus
            .iter()
            .map(|&tau| {
                let mut pts = Vec::new();
                for (((_, log), &s), tj) in runs.iter().zip(&seeds).zip(&t_hat) {
                    let Some(tj) = tj else { continue };
                    let Some(f) = state_at(log, tj - tau) else { continue };
                    for (k, fk) in f.iter().enumerate().take(levels.saturating_sub(TOP_EXCLUDED)) {
                        let x = tau.powf(b) * s * (k as f64).exp2();
                        pts.push((x.ln(), x.powf(a) * tau.powf(-a * b) * fk));
                    }
                }
                pts.sort_by(|p, q| p.0.total_cmp(&q.0));
                pts
            })
            .collect();
        let interp = |pts: &[(f64, f64)], l: f64| {
            let i = pts.partition_point(|p| p.0 <= l).clamp(1, pts.len() - 1) - 1;
            let (x0, y0, x1, y1) = (pts[i].0, pts[i].1, pts[i + 1].0, pts[i + 1].1);
            if x1 > x0 {
                y0 + (y1 - y0) * (l - x0) / (x1 - x0)
            } else {
                y0
            }
        };
        for w in snaps.windows(2) {
            if w[0].len() < 2 || w[1].len() < 2 {
                collapse_distance.push(f64::NAN);
                continue;
            }
            let lo = w[0][0].0.max(w[1][0].0).max(COLLAPSE_WINDOW.0.ln());
            let hi = w[0][w[0].len() - 1].0.min(w[1][w[1].len() - 1].0).min(COLLAPSE_WINDOW.1.ln());
            let mut d: f64 = 0.0;
            if hi > lo {
                for i in 0..=200 {
                    let l = lo + (hi - lo) * i as f64 / 200.0;
                    d = d.max((interp(&w[0], l) - interp(&w[1], l)).abs());
                }
            }
            collapse_distance.push(d);
        }
    }
    Ok(SimDiagnostics {
        gamma,
        chains: n_chains,
        levels,
        t_end,
        arrival_times,
        t_hat,
        t_hat_median,
        b_hat,
        mass_history,
        collapse_times,
        collapse_distance,
    })
}
