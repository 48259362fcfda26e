//! Model parameters, the F / Phi / H / phi changes of variables, explicit
//! reference solutions and the analytic power series at the origin.

use crate::error::{Error, Result};
use serde::Serialize;
use std::f64::consts::LN_2;

/// Homogeneity `gamma`, shooting parameter `b`, and everything derived from them.
///
/// All fields are computed once at construction. Serializes to a flat JSON
/// object; `eta` and `b_star` are convenience fields and are not serialized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    pub gamma: f64,
    pub b: f64,
    /// Exponent `a` with `b = 1/(1 + gamma - a)`.
    pub a: f64,
    /// `2^(gamma - 1 - 2/b)`.
    pub sigma: f64,
    /// Delay ratio `2^(-1/b)`.
    pub q: f64,
    /// Constant shift `ln 2 / b` in logarithmic variables.
    pub d: f64,
    /// `2^(gamma - 1)`.
    pub theta: f64,
    /// Exponent of the explicit power-law profile, `2/(gamma - 1)`.
    pub b0: f64,
    /// `1 - q`.
    pub eps_delay: f64,
    /// Constant profile `1/(2^(gamma-1) - 1)`.
    pub phi_inf: f64,
    /// `2^(2/b + 1 - gamma)`, the small parameter of the large-gamma rescaling.
    #[serde(skip)]
    pub eta: f64,
    /// Stability boundary for this `gamma`.
    #[serde(skip)]
    pub b_star: f64,
}

impl ModelParams {
    pub fn new(gamma: f64, b: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(Error::domain(format!("gamma must be > 1, got {gamma}")));
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(Error::domain(format!("b must be > 0, got {b}")));
        }
        let theta = (gamma - 1.0).exp2();
        let d = LN_2 / b;
        debug_assert!((d * b - LN_2).abs() <= 4.0 * f64::EPSILON * LN_2);
        let q = (-1.0 / b).exp2();
        Ok(Self {
            gamma,
            b,
            a: 1.0 + gamma - 1.0 / b,
            sigma: (gamma - 1.0 - 2.0 / b).exp2(),
            q,
            d,
            theta,
            b0: 2.0 / (gamma - 1.0),
            eps_delay: -(-d).exp_m1(),
            phi_inf: 1.0 / (theta - 1.0),
            eta: (2.0 / b + 1.0 - gamma).exp2(),
            b_star: b_star_formula(gamma),
        })
    }

    /// JSON object with the serialized keys.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("params serialize")
    }
}

/// Closed-form stability boundary
/// `b* = 2^g ln2 sqrt(1 - s^2) / ((2^(g-1) - 1) arccos s)` with `s = 1/2 + 2^-g`.
pub fn b_star_formula(gamma: f64) -> f64 {
    let s = 0.5 + (-gamma).exp2();
    gamma.exp2() * LN_2 * (1.0 - s * s).sqrt() / (((gamma - 1.0).exp2() - 1.0) * s.acos())
}

/// Convenience: `make_params` under its descriptive name.
pub fn make_params(gamma: f64, b: f64) -> Result<ModelParams> {
    ModelParams::new(gamma, b)
}

/// Truncated power series `sum a_n y^n` around the origin.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSeries {
    pub coefficients: Vec<f64>,
    pub expansion_point: f64,
    /// Heuristic radius `1/c` from the geometric bound `|a_n| <= c^n`.
    pub validity_radius_estimate: f64,
}

impl PowerSeries {
    /// Series of a quadratic pantograph equation `u' = lambda(y) u(y)^2` type
    /// recursion: `a_{n+1} = lambda_n/(n+1) * sum_k a_k a_{n-k}`.
    pub fn quadratic_recursion(a0: f64, n: usize, lambda: impl Fn(usize) -> f64) -> Self {
        let mut a = vec![0.0; n + 1];
        a[0] = a0;
        let mut c: f64 = 0.0;
        for m in 0..n {
            let l = lambda(m);
            c = c.max(l.abs());
            let conv: f64 = (0..=m).map(|k| a[k] * a[m - k]).sum();
            a[m + 1] = l * conv / (m as f64 + 1.0);
        }
        let radius = if c > 0.0 { 1.0 / c } else { f64::INFINITY };
        Self { coefficients: a, expansion_point: 0.0, validity_radius_estimate: radius }
    }

    /// Value and truncation estimate (magnitude of the last term).
    pub fn eval(&self, y: f64) -> (f64, f64) {
        let t = y - self.expansion_point;
        let n = self.coefficients.len();
        if t.abs() > self.validity_radius_estimate {
            log::warn!("series evaluated at {y} beyond radius estimate {}", self.validity_radius_estimate);
        }
        let v = self.coefficients.iter().rev().fold(0.0, |acc, &c| acc * t + c);
        let last = self.coefficients.last().copied().unwrap_or(0.0);
        (v, (last * t.powi(n as i32 - 1)).abs())
    }

    /// Value and first derivative.
    pub fn eval_with_derivative(&self, y: f64) -> (f64, f64) {
        let t = y - self.expansion_point;
        let mut v = 0.0;
        let mut dv = 0.0;
        for &c in self.coefficients.iter().rev() {
            dv = dv * t + v;
            v = v * t + c;
        }
        (v, dv)
    }

    /// Largest `y` at which every one of the last few terms is below `tol`.
    ///
    /// Capped by half the radius estimate and by `cap`.
    pub fn switch_point(&self, tol: f64, cap: f64) -> f64 {
        let n = self.coefficients.len();
        let mut y = cap.min(0.5 * self.validity_radius_estimate);
        for k in n.saturating_sub(4)..n {
            let c = self.coefficients[k].abs();
            if k > 0 && c > 0.0 {
                y = y.min((tol / c).powf(1.0 / k as f64));
            }
        }
        y
    }
}

/// Default truncation order of the local series.
pub const DEFAULT_SERIES_TERMS: usize = 40;

/// Analytic solution of `H' = -sigma H(qy)^2 + H^2`, `H(0) = 1`.
pub fn local_series(params: &ModelParams, n: usize) -> PowerSeries {
    let (sigma, q) = (params.sigma, params.q);
    PowerSeries::quadratic_recursion(1.0, n.max(1), |m| 1.0 - sigma * q.powi(m as i32))
}

/// Horner evaluation with truncation estimate.
pub fn series_eval(series: &PowerSeries, y: f64) -> (f64, f64) {
    series.eval(y)
}

/// Which explicit closed form to substitute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExplicitSolution {
    /// `Phi_0(x) = x^(1/b0)` in the Phi equation.
    Phi0,
    /// `Phi(x) = phi_inf` in the Phi equation.
    PhiInf,
    /// `H(y) = phi_inf / y` in the H equation.
    HInf,
}

/// Residual of the Phi equation `b x Phi' = Phi - theta Phi(x/2)^2 + Phi^2`.
pub fn phi_equation_residual(p: &ModelParams, x: f64, phi: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (v, dv) = phi(x);
    let (vh, _) = phi(0.5 * x);
    p.b * x * dv - (v - p.theta * vh * vh + v * v)
}

/// Residual of the H equation `H' = -sigma H(qy)^2 + H^2`.
pub fn h_equation_residual(p: &ModelParams, y: f64, h: impl Fn(f64) -> (f64, f64)) -> f64 {
    let (v, dv) = h(y);
    let (vq, _) = h(p.q * y);
    dv - (-p.sigma * vq * vq + v * v)
}

/// Maximum residual of a closed-form solution over `grid`.
pub fn explicit_solution_residual(
    params: &ModelParams,
    which: ExplicitSolution,
    grid: &[f64],
) -> Result<f64> {
    if grid.iter().any(|&x| !(x > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("grid must be strictly positive and increasing"));
    }
    let p = *params;
    let r = grid.iter().map(|&x| match which {
        ExplicitSolution::Phi0 => {
            let e = 1.0 / p.b0;
            phi_equation_residual(&p, x, |s| (s.powf(e), e * s.powf(e - 1.0)))
        }
        ExplicitSolution::PhiInf => phi_equation_residual(&p, x, |_| (p.phi_inf, 0.0)),
        ExplicitSolution::HInf => {
            h_equation_residual(&p, x, |y| (p.phi_inf / y, -p.phi_inf / (y * y)))
        }
    });
    Ok(r.fold(0.0, |m, v| m.max(v.abs())))
}

/// The four equivalent descriptions of a self-similar profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    /// `F(x)`, the profile in the self-similar ansatz.
    F,
    /// `Phi(x) = x^(gamma+1) F(x)`.
    Phi,
    /// `H(y) = Phi/y`, `y = x^(1/b)`.
    H,
    /// `phi(z) = y H(y)`, `z = ln y`.
    LogPhi,
}

impl ProfileKind {
    fn rank(self) -> u8 {
        match self {
            ProfileKind::F => 0,
            ProfileKind::Phi => 1,
            ProfileKind::H => 2,
            ProfileKind::LogPhi => 3,
        }
    }
}

/// Profile values on a grid, tagged with the variables they are expressed in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileVariables {
    pub kind: ProfileKind,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl ProfileVariables {
    pub fn new(kind: ProfileKind, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::domain("grid and values differ in length"));
        }
        Ok(Self { kind, grid, values })
    }

    /// Re-express in another set of variables.
    pub fn convert(&self, params: &ModelParams, to: ProfileKind) -> Self {
        let mut cur = self.clone();
        while cur.kind != to {
            cur = if cur.kind.rank() < to.rank() { cur.up(params) } else { cur.down(params) };
        }
        cur
    }

    fn map(&self, kind: ProfileKind, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (grid, values) = self.grid.iter().zip(&self.values).map(|(&s, &v)| f(s, v)).unzip();
        Self { kind, grid, values }
    }

    fn up(&self, p: &ModelParams) -> Self {
        match self.kind {
            ProfileKind::F => self.map(ProfileKind::Phi, |x, f| (x, x.powf(p.gamma + 1.0) * f)),
            ProfileKind::Phi => self.map(ProfileKind::H, |x, phi| {
                let y = x.powf(1.0 / p.b);
                (y, phi / y)
            }),
            ProfileKind::H => self.map(ProfileKind::LogPhi, |y, h| (y.ln(), y * h)),
            ProfileKind::LogPhi => self.clone(),
        }
    }

    fn down(&self, p: &ModelParams) -> Self {
        match self.kind {
            ProfileKind::F => self.clone(),
            ProfileKind::Phi => self.map(ProfileKind::F, |x, phi| (x, phi * x.powf(-(p.gamma + 1.0)))),
            ProfileKind::H => self.map(ProfileKind::Phi, |y, h| (y.powf(p.b), y * h)),
            ProfileKind::LogPhi => self.map(ProfileKind::H, |z, phi| {
                let y = z.exp();
                (y, phi / y)
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recursion_matches_hand_values() {
        let p = ModelParams::new(2.0, 4.0).unwrap();
        let s = local_series(&p, 2);
        assert!((s.coefficients[1] + 0.414_213_562_373_095).abs() < 1e-12);
        assert!((s.coefficients[2] - 0.078_372_2).abs() < 1e-7);
    }

    #[test]
    fn derivative_eval_consistent() {
        let p = ModelParams::new(2.0, 4.0).unwrap();
        let s = local_series(&p, 20);
        let (_, d) = s.eval_with_derivative(0.2);
        let fd = (s.eval(0.2 + 1e-6).0 - s.eval(0.2 - 1e-6).0) / 2e-6;
        assert!((d - fd).abs() < 1e-8);
    }
}
