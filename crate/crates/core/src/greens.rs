//! Fundamental solution of `phi' = phi - 2 phi(x/2) + delta(x - xi)`.
//!
//! It splits as `G(x, xi) = e^x Q(xi) + G~(x, xi)` with
//! `Q(xi) = sum_n (-1)^n 4^n e^(-2^n xi) / prod_{j=1..n} (2^j - 1)` and
//! `G~(x, xi) = sum_{n>=1} c_n J_n(x - 2^n xi)`, `c_n = (-1)^n 4^n / 2^(n(n+1)/2)`,
//! where `J_n(s)` is the contour integral of `e^(s z) / prod_{j=0..n} (z - 2^-j)`
//! along `Re z = L~` with `1/2 < L~ < 1`.
//!
//! Three routes are provided: direct integration of the delay equation
//! (reference), residues of the contour integrals (exact), and numerical
//! contour quadrature (verification).

use crate::delay::{integrate, DelayEquation, InitialSegment};
use crate::error::{Error, Result};
use crate::io::csv_table;
use crate::quad;
use num_complex::Complex64;
use serde::Serialize;

/// Settings for evaluating `Q` and `G~`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensEval {
    /// Terms in the `Q` series.
    pub n_q: usize,
    /// Abscissa of the contour, in `(1/2, 1)`.
    pub l_tilde: f64,
    /// Truncation of the contour parameter.
    pub t_max: f64,
    /// Minimum number of quadrature nodes per term.
    pub nodes: usize,
    /// Maximum number of `G~` terms; fewer are used once terms drop below `1e-14`.
    pub n_terms: usize,
}

impl Default for GreensEval {
    fn default() -> Self {
        Self { n_q: 40, l_tilde: 0.75, t_max: 200.0, nodes: 4096, n_terms: 40 }
    }
}

impl GreensEval {
    pub fn validate(&self) -> Result<()> {
        if !(self.l_tilde > 0.5 && self.l_tilde < 1.0) {
            return Err(Error::domain("contour abscissa must lie in (1/2, 1)"));
        }
        if !(self.t_max > 0.0) || self.n_terms == 0 || self.n_q == 0 {
            return Err(Error::domain("invalid Green's function settings"));
        }
        Ok(())
    }
}

/// `(-1)^n 4^n / prod_{j=1..n} (2^j - 1)`.
pub fn q_coefficient(n: usize) -> f64 {
    let mut c = 1.0;
    for j in 1..=n {
        c *= -4.0 / ((j as f64).exp2() - 1.0);
    }
    c
}

/// Partial sum of `Q` through term `n`, with the next term as error bound.
pub fn q_eval_with_bound(xi: f64, n: usize) -> (f64, f64) {
    let mut s = 0.0;
    for k in 0..=n {
        s += q_coefficient(k) * (-(k as f64).exp2() * xi).exp();
    }
    let next = (q_coefficient(n + 1) * (-((n + 1) as f64).exp2() * xi).exp()).abs();
    (s, next)
}

/// `Q(xi)` summed through term `n`.
pub fn q_eval(xi: f64, n: usize) -> f64 {
    q_eval_with_bound(xi, n).0
}

/// Terms needed so that every omitted term is below `1e-17`.
fn q_terms_needed(xi: f64) -> usize {
    (2..60).find(|&n| q_eval_with_bound(xi, n).1 < 1e-17).unwrap_or(60)
}

/// `Q(xi)` to full precision.
pub fn q(xi: f64) -> f64 {
    q_eval(xi, q_terms_needed(xi))
}

/// `e^xi Q(xi)`, evaluated without overflow for large `xi`.
pub fn q_scaled(xi: f64) -> f64 {
    let n = q_terms_needed(xi);
    (0..=n).map(|k| q_coefficient(k) * ((1.0 - (k as f64).exp2()) * xi).exp()).sum()
}

/// `c0 = int_0^inf xi Q(xi) dxi = sum (-1)^n / prod (2^j - 1)`, by series.
pub fn c0_moment() -> f64 {
    (0..40).map(|n| q_coefficient(n) / 4f64.powi(n as i32)).sum()
}

/// `c0` by adaptive quadrature of `xi Q(xi)`.
pub fn c0_quadrature() -> f64 {
    quad::integrate(|x| x * q(x), 0.0, 80.0, 1e-14)
}

/// `int_0^inf e^-xi Q(xi) dxi = sum c_n/(1 + 2^n)`, the response of the
/// fixed-point functional to the small parameter `eta`.
pub fn eta_derivative_series() -> f64 {
    (0..40).map(|n| q_coefficient(n) / (1.0 + (n as f64).exp2())).sum()
}

/// Reference route: integrate the delay equation from a unit jump at `xi`.
pub fn g_by_ode(x: f64, xi: f64, tol: f64) -> Result<f64> {
    if !(xi > 0.0) {
        return Err(Error::domain("xi must be positive"));
    }
    if x < xi {
        return Ok(0.0);
    }
    if x == xi {
        return Ok(1.0);
    }
    let t = integrate(&DelayEquation::LinearG, InitialSegment::Jump { at: xi, value: 1.0 }, x, tol)?;
    t.eval(x)
}

/// `(-1)^n 4^n / 2^(n(n+1)/2)`.
pub fn gtilde_coefficient(n: usize) -> f64 {
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    sign * (2.0 * n as f64 - 0.5 * (n * (n + 1)) as f64).exp2()
}

fn poles(n: usize) -> Vec<f64> {
    (0..=n).map(|j| (-(j as f64)).exp2()).collect()
}

/// Exact `J_n(s)` by residues: for `s < 0` close to the right (pole at 1),
/// otherwise to the left (poles `2^-k`, `k = 1..n`).
pub fn contour_term_residues(n: usize, s: f64) -> f64 {
    let p = poles(n);
    let res = |k: usize| {
        let den: f64 = (0..=n).filter(|&j| j != k).map(|j| p[k] - p[j]).product();
        (s * p[k]).exp() / den
    };
    if s < 0.0 {
        -res(0)
    } else {
        (1..=n).map(res).sum()
    }
}

/// `(1/2 pi i) int_{Re z = L} e^(s z) / (z - c)^(m+1) dz`, for `m >= 1`.
fn comparison_exact(c: f64, l: f64, m: usize, s: f64) -> f64 {
    let fact: f64 = (1..=m).map(|k| k as f64).product();
    let v = s.powi(m as i32) * (s * c).exp() / fact;
    if c < l {
        if s > 0.0 {
            v
        } else {
            0.0
        }
    } else if s < 0.0 {
        -v
    } else {
        0.0
    }
}

/// One contour term by quadrature, with a tail estimate.
///
/// Two comparison poles straddling the line remove the two leading orders
/// of the large-`|t|` expansion; their contour integrals are added back
/// exactly. The remainder is integrated with composite Gauss-Legendre on
/// panels fine enough for both the poles and the `e^(i s t)` oscillation.
pub fn contour_term_quadrature(n: usize, s: f64, cfg: &GreensEval) -> (f64, f64) {
    let l = cfg.l_tilde;
    let p = poles(n);
    let mean = p.iter().sum::<f64>() / (n + 1) as f64;
    let (cm, cp) = (l - 0.2, l + 0.2);
    let a = (mean - cm) / (cp - cm);
    let b = 1.0 - a;
    let m1 = (n + 1) as i32;
    let rem_c = |t: f64| {
        let z = Complex64::new(l, t);
        let r: Complex64 = p.iter().map(|&pj| z - pj).product::<Complex64>().inv();
        let cmp = a * (z - cp).powi(m1).inv() + b * (z - cm).powi(m1).inv();
        (s * z).exp() * (r - cmp)
    };
    let rem = |t: f64| rem_c(t).re;
    let width = 0.25f64.min(1.0 / s.abs().max(1e-300));
    let panels = ((cfg.t_max / width).ceil() as usize).max(cfg.nodes / 16).max(1);
    let edges: Vec<f64> = (0..=panels).map(|k| cfg.t_max * k as f64 / panels as f64).collect();
    // The integrand at -t is the conjugate of that at t.
    let body = quad::composite_gl(rem, &edges) / std::f64::consts::PI;
    // The remainder decays like t^-(n+3), so its tail is about t |rem(t)|/(n+2).
    let tail = 2.0 * rem_c(cfg.t_max).norm() * cfg.t_max / (std::f64::consts::PI * (n as f64 + 2.0));
    let exact = a * comparison_exact(cp, l, n, s) + b * comparison_exact(cm, l, n, s);
    (body + exact, tail)
}

/// `G~` by contour quadrature, with a truncation flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GtildeValue {
    pub value: f64,
    pub tail_estimate: f64,
    pub terms: usize,
    /// Estimated tail above `1e-8`.
    pub truncation_warning: bool,
}

/// Magnitude bound for term `n`, used to stop the sum.
fn term_bound(n: usize, s: f64, l: f64) -> f64 {
    let dist: f64 = poles(n).iter().map(|&p| (l - p).abs()).product();
    gtilde_coefficient(n).abs() * (l * s).exp() / dist
}

fn active_terms(x: f64, xi: f64, cfg: &GreensEval) -> Vec<(usize, f64)> {
    let mut out = Vec::new();
    for n in 1..=cfg.n_terms {
        let s = x - (n as f64).exp2() * xi;
        if term_bound(n, s, cfg.l_tilde) < 1e-16 && s < 0.0 {
            break;
        }
        out.push((n, s));
    }
    out
}

/// Verification route: `G~(x, xi)` by numerical contour quadrature.
pub fn gtilde_quadrature(x: f64, xi: f64, cfg: &GreensEval) -> Result<GtildeValue> {
    cfg.validate()?;
    if !(x > xi && xi > 0.0) {
        return Err(Error::domain("need x > xi > 0"));
    }
    let terms = active_terms(x, xi, cfg);
    let mut value = 0.0;
    let mut tail = 0.0;
    for &(n, s) in &terms {
        let (j, t) = contour_term_quadrature(n, s, cfg);
        let c = gtilde_coefficient(n);
        value += c * j;
        tail += c.abs() * t;
    }
    if tail > 1e-8 {
        log::warn!("G~({x}, {xi}) contour tail estimate {tail:e}");
    }
    Ok(GtildeValue { value, tail_estimate: tail, terms: terms.len(), truncation_warning: tail > 1e-8 })
}

/// Exact route: `G~(x, xi)` summed by residues.
pub fn gtilde_residues(x: f64, xi: f64, cfg: &GreensEval) -> f64 {
    active_terms(x, xi, cfg)
        .into_iter()
        .map(|(n, s)| gtilde_coefficient(n) * contour_term_residues(n, s))
        .sum()
}

/// `G(x, xi) = e^x Q(xi) + G~(x, xi)` through the residue route.
pub fn g_by_residues(x: f64, xi: f64, cfg: &GreensEval) -> f64 {
    if x < xi {
        return 0.0;
    }
    (x - xi).exp() * q_scaled(xi) + gtilde_residues(x, xi, cfg)
}

/// Closed form of the `n = 1` term, `c_1 J_1(x - 2 xi)`.
pub fn first_term_closed_form(x: f64, xi: f64) -> f64 {
    if x < 2.0 * xi {
        4.0 * (x - 2.0 * xi).exp()
    } else {
        4.0 * (0.5 * x - xi).exp()
    }
}

/// Three-route comparison at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouteComparison {
    pub x: f64,
    pub xi: f64,
    pub g_ode: f64,
    pub g_quadrature: f64,
    pub g_residues: f64,
    pub rel_diff_quadrature: f64,
    pub rel_diff_residues: f64,
}

/// Evaluate `G` by all three routes.
pub fn compare_routes(x: f64, xi: f64, cfg: &GreensEval, tol: f64) -> Result<RouteComparison> {
    let g_ode = g_by_ode(x, xi, tol)?;
    let eq = (x - xi).exp() * q_scaled(xi);
    let g_quadrature = eq + gtilde_quadrature(x, xi, cfg)?.value;
    let g_residues = g_by_residues(x, xi, cfg);
    let rel = |v: f64| (v - g_ode).abs() / g_ode.abs().max(1e-300);
    Ok(RouteComparison {
        x,
        xi,
        g_ode,
        g_quadrature,
        g_residues,
        rel_diff_quadrature: rel(g_quadrature),
        rel_diff_residues: rel(g_residues),
    })
}

/// Fitted constants of the exponential bounds on `Q` and `G~`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    /// `max |Q(xi)| e^xi`.
    pub c_q: f64,
    /// `max |G~(x, xi)| e^(-L~ (x - xi))`.
    pub c_gtilde: f64,
    /// Least-squares growth rate of `ln |G~|` in `x - xi` over the tail samples.
    pub gtilde_rate: f64,
    /// Bound exponent `1 - beta = L~`.
    pub rate_bound: f64,
    /// `max |e^a Q(a) - e^b Q(b)| e^a / |a - b|` over the pairs.
    pub c_lipschitz_xi: f64,
    pub violations: Vec<String>,
}

/// Fit the constants of the bounds on the given samples.
///
/// `pairs` are `(x, xi)` points for `G~`; `triples` are `(x, xi1, xi2)`
/// with `xi1 < xi2`, used for the Lipschitz bound of `e^xi Q(xi)`.
pub fn bounds_audit(xis: &[f64], pairs: &[(f64, f64)], triples: &[(f64, f64, f64)], cfg: &GreensEval) -> BoundsReport {
    let mut violations = Vec::new();
    let c_q = xis.iter().map(|&x| q_scaled(x).abs()).fold(0.0, f64::max);
    let l = cfg.l_tilde;
    let mut c_g = 0.0f64;
    let mut pts = Vec::new();
    for &(x, xi) in pairs {
        if !(x > xi) {
            violations.push(format!("sample ({x}, {xi}) has x <= xi"));
            continue;
        }
        let g = gtilde_residues(x, xi, cfg);
        c_g = c_g.max(g.abs() * (-l * (x - xi)).exp());
        if g.abs() > 0.0 {
            pts.push((x - xi, g.abs().ln()));
        }
    }
    // Growth rate over the far half of the samples.
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let tail = &pts[pts.len() / 2..];
    let rate = if tail.len() >= 2 {
        let n = tail.len() as f64;
        let mx = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let my = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
        num / den
    } else {
        0.0
    };
    if rate > l + 0.01 {
        violations.push(format!("G~ growth rate {rate} exceeds {l}"));
    }
    let mut c_lip = 0.0f64;
    for &(x, a, b) in triples {
        if !(x > b && b > a) {
            violations.push(format!("triple ({x}, {a}, {b}) not ordered"));
            continue;
        }
        let r = (q_scaled(a) - q_scaled(b)).abs() / (b - a);
        c_lip = c_lip.max(r * a.exp());
    }
    BoundsReport { c_q, c_gtilde: c_g, gtilde_rate: rate, rate_bound: l, c_lipschitz_xi: c_lip, violations }
}

/// Tabulated `Q` with alternating-tail bound, as CSV `xi,Q,tail_bound`.
pub fn q_table_csv(xis: &[f64], n: usize) -> String {
    csv_table(
        &["xi", "Q", "tail_bound"],
        xis.iter().map(|&x| {
            let (v, b) = q_eval_with_bound(x, n);
            vec![x, v, b]
        }),
    )
}
