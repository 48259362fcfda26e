//! Homogeneity close to one: the exact `gamma = 1` profiles, the linearized
//! series `Psi`, its Laplace-method asymptotics and the far-field tails.

use crate::delay::{integrate_with, DelayEquation, DenseTrajectory, InitialSegment, IntegrateOptions};
use crate::error::{Error, Result};
use crate::exec::par_map;
use crate::params::PowerSeries;
use crate::quad;
use serde::Serialize;
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

/// Positive root of `b alpha / (2 (1 - 2^-alpha)) = 1`.
///
/// The left side increases from `b/(2 ln 2)` at `alpha = 0+`, so a positive
/// root exists iff `b < 2 ln 2`.
pub fn alpha_root(b: f64) -> Result<f64> {
    if !(b > 0.0 && b < 2.0 * LN_2) {
        return Err(Error::domain(format!("alpha_root needs 0 < b < 2 ln 2, got {b}")));
    }
    let g = |a: f64| b * a / (2.0 * -(-a * LN_2).exp_m1()) - 1.0;
    let mut lo = 1e-12;
    let mut hi = 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Residual `b alpha / (2(1 - 2^-alpha)) - 1`.
pub fn alpha_residual(b: f64, alpha: f64) -> f64 {
    b * alpha / (2.0 * -(-alpha * LN_2).exp_m1()) - 1.0
}

/// Smallest resolved value of a decaying `gamma = 1` profile.
pub const GAMMA1_FLOOR: f64 = 1e-12;

/// `Phi(x) = 1 + sum a_n x^(n alpha)` for `b x Phi' = Phi^2 - Phi(x/2)^2`.
#[derive(Debug, Clone, Serialize)]
pub struct Gamma1Profile {
    pub b: f64,
    pub alpha: f64,
    pub a1: f64,
    /// Coefficients in the variable `X = x^alpha`, starting with `a_0 = 1`.
    pub coefficients: Vec<f64>,
    pub n: usize,
    /// Radius estimate in `X`.
    pub radius_estimate: f64,
}

/// Series solution with the free coefficient `a1 <= 0`.
pub fn gamma1_series(b: f64, a1: f64, n: usize) -> Result<Gamma1Profile> {
    if a1 > 0.0 {
        return Err(Error::domain("a1 must be non-positive"));
    }
    if n < 2 {
        return Err(Error::domain("need at least two terms"));
    }
    let alpha = alpha_root(b)?;
    let mut a = vec![0.0; n + 1];
    a[0] = 1.0;
    a[1] = a1;
    for k in 2..=n {
        let ka = k as f64 * alpha;
        let lhs = k as f64 * b * alpha / -(-ka * LN_2).exp_m1() - 2.0;
        let conv: f64 = (1..k).map(|m| a[m] * a[k - m]).sum();
        a[k] = conv / lhs;
    }
    let growth = (n / 2..=n)
        .filter(|&k| a[k] != 0.0)
        .map(|k| a[k].abs().powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    let radius_estimate = if growth > 0.0 { 1.0 / growth } else { f64::INFINITY };
    Ok(Gamma1Profile { b, alpha, a1, coefficients: a, n, radius_estimate })
}

impl Gamma1Profile {
    fn series(&self) -> PowerSeries {
        PowerSeries {
            coefficients: self.coefficients.clone(),
            expansion_point: 0.0,
            validity_radius_estimate: self.radius_estimate,
        }
    }

    /// `(Phi, Phi')` from the series.
    pub fn eval_series(&self, x: f64) -> (f64, f64) {
        if x <= 0.0 {
            return (1.0, 0.0);
        }
        let big_x = x.powf(self.alpha);
        let (v, dv) = self.series().eval_with_derivative(big_x);
        (v, dv * self.alpha * big_x / x)
    }

    /// Where the series hands over to the integrator.
    pub fn switch_point(&self) -> f64 {
        self.series().switch_point(1e-15, 1.0).powf(1.0 / self.alpha)
    }

    /// Continue the series solution to `x_end` with the delay integrator.
    ///
    /// For `b = ln 2` the run stops once `Phi` falls below [`GAMMA1_FLOOR`]:
    /// roundoff perturbs the vanishing additive constant of the integrated
    /// form, so smaller values are not resolved.
    pub fn continue_to(&self, x_end: f64, tol: f64) -> Result<Arc<DenseTrajectory>> {
        let xs = self.switch_point();
        let me = self.clone();
        let init = InitialSegment::history(0.0, xs, move |x| me.eval_series(x));
        let mut opts = IntegrateOptions::new(tol);
        opts.atol = 1e-300;
        opts.breakpoint_levels = 0;
        opts.truncate_on_blowup = true;
        let eq = DelayEquation::PhiGamma1 { b: self.b };
        Ok(Arc::new(integrate_with(&eq, init, x_end.max(xs), &opts, |_, u| u < GAMMA1_FLOOR)?))
    }
}

/// Run of the `b = 1` analytic solution with `Phi'(0) = a1`.
#[derive(Debug, Clone, Serialize)]
pub struct Gamma1LimitReport {
    pub a1: f64,
    pub limit: f64,
    /// `(1 - ln 2)/ln 2`.
    pub expected: f64,
    pub x_end: f64,
    /// Fitted `|Phi - limit| ~ C x^-rate` over the last decades.
    pub tail_rate: f64,
}

/// Long-`x` value of the `b = 1` solution.
///
/// The approach to the limit is algebraic in `x` (exponential in `ln x`), so
/// the run goes to `x = 1e9`.
pub fn gamma1_b1_limit(a1: f64) -> Result<Gamma1LimitReport> {
    if !(a1 < 0.0) {
        return Err(Error::domain("a1 must be negative"));
    }
    let prof = gamma1_series(1.0, a1, 60)?;
    let x_end = 1e9;
    let traj = prof.continue_to(x_end, 1e-12)?;
    if traj.y_end() < x_end {
        return Err(Error::NoConvergence(format!("b = 1 run stopped at x = {}", traj.y_end())));
    }
    let limit = traj.last_value();
    let expected = (1.0 - LN_2) / LN_2;
    // Rate from |Phi - limit| at two decades away from the end.
    let d1 = (traj.eval(1e4)? - limit).abs();
    let d2 = (traj.eval(1e6)? - limit).abs();
    let tail_rate = if d1 > 0.0 && d2 > 0.0 { (d1 / d2).ln() / (100.0f64).ln() } else { f64::NAN };
    Ok(Gamma1LimitReport { a1, limit, expected, x_end, tail_rate })
}

/// `ln Psi(y)` of the linearized series, summed in log space.
///
/// `Psi(y) = y + sum_{n>=1} 2^n prod_{k<=n}(1 - (1-eps)^k)/(n+1)! y^(n+1)`.
pub fn psi_log(eps: f64, y: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("eps must lie in (0, 1)"));
    }
    if !(y > 0.0) {
        return Err(Error::domain("log Psi needs y > 0"));
    }
    let ly = y.ln();
    let l1e = (-eps).ln_1p();
    // log of term n: n ln 2 + sum ln(1 - (1-eps)^k) - ln (n+1)! + (n+1) ln y.
    let mut s = ly;
    let mut terms = vec![ly];
    let mut n = 0usize;
    let mut peak = ly;
    loop {
        n += 1;
        s += LN_2 + (-(n as f64 * l1e).exp()).ln_1p() - ((n + 1) as f64).ln() + ly;
        terms.push(s);
        peak = peak.max(s);
        // Term ratio is below 2y/(n+1); stop once past the peak and negligible.
        if (n as f64) > 2.0 * y && s < peak - 40.0 {
            break;
        }
        if n > 10_000_000 {
            return Err(Error::NoConvergence("Psi series".into()));
        }
    }
    let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - m).exp()).sum();
    Ok(m + sum.ln())
}

/// `(Psi(y), Psi'(y))` by direct summation; `Psi` overflows past about `1e300`.
pub fn psi_series_eval(eps: f64, y: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::domain("eps must lie in (0, 1)"));
    }
    let mut c = 1.0; // coefficient of y^(n+1)
    let mut v = y;
    let mut dv = 1.0;
    let mut pow = y; // y^n before the update
    let one_m = 1.0 - eps;
    let mut q = 1.0;
    let mut n = 0usize;
    loop {
        n += 1;
        q *= one_m;
        c *= 2.0 * (1.0 - q) / (n + 1) as f64;
        let dt = c * (n + 1) as f64 * pow;
        pow *= y;
        let t = c * pow;
        v += t;
        dv += dt;
        if !v.is_finite() {
            return Err(Error::BlowUp { at: y, value: v });
        }
        if n as f64 > 2.0 * y && t.abs() < 1e-17 * v.abs() && dt.abs() < 1e-17 * dv.abs() {
            break;
        }
    }
    Ok((v, dv))
}

/// Residual `Psi'(y) - 2 Psi(y) + 2 Psi((1-eps) y) - 1`, relative to `Psi'`.
pub fn psi_residual(eps: f64, y: f64) -> Result<f64> {
    let (v, dv) = psi_series_eval(eps, y)?;
    let (vl, _) = psi_series_eval(eps, (1.0 - eps) * y)?;
    Ok((dv - 2.0 * v + 2.0 * vl - 1.0) / dv.abs().max(1.0))
}

/// Laplace-method constants of `Psi(eta/eps) ~ U eps^(-1/2) e^(W/eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplaceQuantities {
    pub eta: f64,
    pub t_star: f64,
    #[serde(rename = "W")]
    pub w: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "U")]
    pub u: f64,
}

/// `t/(1 - e^-t)`, continuous at zero.
fn t_ratio(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 + 0.5 * t
    } else {
        t / -(-t).exp_m1()
    }
}

pub fn laplace_quantities(eta: f64) -> Result<LaplaceQuantities> {
    if !(eta > 0.5) {
        return Err(Error::domain(format!("eta must exceed 1/2, got {eta}")));
    }
    let target = 2.0 * eta;
    let mut lo = 0.0;
    let mut hi = 1.0;
    while t_ratio(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_ratio(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * hi {
            break;
        }
    }
    let ts = 0.5 * (lo + hi);
    let w = quad::integrate(|t| (target / t_ratio(t)).ln(), 0.0, ts, 1e-13);
    let em = -(-ts).exp_m1();
    let d = -(ts * (-ts).exp() / em - 1.0) / (2.0 * ts);
    let u = eta * PI.sqrt() * em.sqrt() / (d.sqrt() * ts.powf(1.5));
    Ok(LaplaceQuantities { eta, t_star: ts, w, d, u })
}

/// `dW/d eta = t*(eta)/eta`; the boundary term vanishes because the integrand
/// is zero at `t*`.
pub fn w_derivative(eta: f64) -> Result<f64> {
    Ok(laplace_quantities(eta)?.t_star / eta)
}

/// One row of the asymptotic comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiRatioRow {
    pub eps: f64,
    #[serde(rename = "logPsi")]
    pub log_psi: f64,
    #[serde(rename = "logPred")]
    pub log_pred: f64,
    pub r: f64,
}

/// `r(eps) = ln Psi(eta/eps) - [ln U - ln(eps)/2 + W/eps]` for each `eps`.
pub fn psi_asymptotics_check(eta: f64, eps_list: &[f64]) -> Result<Vec<PsiRatioRow>> {
    let lq = laplace_quantities(eta)?;
    par_map(eps_list, |&eps| {
        let log_psi = psi_log(eps, eta / eps)?;
        let log_pred = lq.u.ln() - 0.5 * eps.ln() + lq.w / eps;
        Ok(PsiRatioRow { eps, log_psi, log_pred, r: log_psi - log_pred })
    })
    .into_iter()
    .collect()
}

/// Critical perturbation size with the matching data of the transition layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalDelta {
    pub eps: f64,
    pub eta_bar: f64,
    pub delta: f64,
    pub log_delta: f64,
    /// Slope `W'(eta_bar)` of the matching profile `1 - e^(W' (y - y_bar))`.
    pub matching_slope: f64,
    /// `y_bar = eta_bar / eps`.
    pub y_bar: f64,
}

/// `delta = sqrt(eps) e^(-W(eta_bar)/eps) / U(eta_bar)`.
pub fn critical_delta(eps: f64, eta_bar: f64) -> Result<CriticalDelta> {
    if !(eps > 0.0) {
        return Err(Error::domain("eps must be positive"));
    }
    let lq = laplace_quantities(eta_bar)?;
    let log_delta = 0.5 * eps.ln() - lq.w / eps - lq.u.ln();
    Ok(CriticalDelta {
        eps,
        eta_bar,
        delta: log_delta.exp(),
        log_delta,
        matching_slope: lq.t_star / eta_bar,
        y_bar: eta_bar / eps,
    })
}

/// Exponents and prefactor ratios of the two far-field regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailExponents {
    pub eps: f64,
    pub eta_bar: f64,
    pub beta: f64,
    pub alpha: f64,
    /// `K1/c1 = 4 beta (1-eps)^2`.
    pub k1_over_c1: f64,
    pub sigma_rate: f64,
    /// `K0/c0 = 4 ln 2 / eta_bar`.
    pub k0_over_c0: f64,
    /// `K1/c1` implied by matching the two regimes, `4 ln 2 / eps`.
    pub k1_over_c1_matched: f64,
}

impl TailExponents {
    /// Carry `(K0, c0)` of the transition regime to `(K1, c1)` of the far
    /// tail through `K0 = K1 y_bar^alpha`, `c0 = c1 y_bar^beta`.
    pub fn match_constants(&self, c0: f64) -> (f64, f64) {
        let yb = self.eta_bar / self.eps;
        let k0 = self.k0_over_c0 * c0;
        let k1 = k0 * yb.powf(-self.alpha);
        let c1 = c0 * yb.powf(-self.beta);
        (k1, c1)
    }

    /// Relative gap between the exact far-tail relation and its matched,
    /// leading-order form; `O(eps)`.
    pub fn closure_gap(&self) -> f64 {
        (self.k1_over_c1 - self.k1_over_c1_matched).abs() / self.k1_over_c1_matched
    }
}

pub fn tail_exponents(eps: f64, eta_bar: f64) -> Result<TailExponents> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::domain("eps must lie in (0, 0.5)"));
    }
    if !(eta_bar > 0.0) {
        return Err(Error::domain("eta_bar must be positive"));
    }
    let beta = -LN_2 / (-eps).ln_1p();
    Ok(TailExponents {
        eps,
        eta_bar,
        beta,
        alpha: beta - 1.0,
        k1_over_c1: 4.0 * beta * (1.0 - eps).powi(2),
        sigma_rate: LN_2 / eta_bar,
        k0_over_c0: 4.0 * LN_2 / eta_bar,
        k1_over_c1_matched: 4.0 * LN_2 / eps,
    })
}

/// Shape checks on a continued `gamma = 1` profile.
#[derive(Debug, Clone, Serialize)]
pub struct Gamma1ShapeReport {
    pub x_end: f64,
    pub positive: bool,
    pub decreasing: bool,
    /// Largest `Phi(2x) / Phi(x)^2` over the tail samples.
    pub max_halving_ratio: f64,
    /// Largest `|b Phi(x) - int_{x/2}^x Phi^2/s ds - (b - ln 2)|`.
    pub integrated_residual: f64,
}

/// Positivity, monotonicity, the halving inequality and the integrated form
/// along a continued profile.
pub fn gamma1_shape(prof: &Gamma1Profile, traj: &DenseTrajectory) -> Result<Gamma1ShapeReport> {
    let vals = traj.values();
    let ders = traj.derivatives();
    let positive = vals.iter().all(|&v| v > 0.0);
    let decreasing = prof.a1 == 0.0 || ders.iter().skip(1).all(|&d| d < 0.0);
    let x_end = traj.y_end();
    let phi = |x: f64| -> f64 {
        if x <= traj.y_start() {
            prof.eval_series(x).0
        } else {
            traj.eval(x).unwrap_or(f64::NAN)
        }
    };
    let mut max_ratio: f64 = 0.0;
    let mut resid: f64 = 0.0;
    let n = 200;
    for i in 1..=n {
        let x = x_end * i as f64 / n as f64;
        if 2.0 * x <= x_end && x >= 0.25 * x_end {
            max_ratio = max_ratio.max(phi(2.0 * x) / phi(x).powi(2));
        }
        let integral = quad::integrate(|s| phi(s).powi(2) / s, 0.5 * x, x, 1e-13);
        resid = resid.max((prof.b * phi(x) - integral - (prof.b - LN_2)).abs());
    }
    Ok(Gamma1ShapeReport { x_end, positive, decreasing, max_halving_ratio: max_ratio, integrated_residual: resid })
}
