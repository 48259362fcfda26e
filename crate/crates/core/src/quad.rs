//! Quadrature helpers: double-exponential adaptive rules from the
//! `quadrature` crate, and composite Gauss-Legendre for oscillatory
//! contour integrals.

use std::sync::OnceLock;

/// Integral of `f` over `[a, b]` to absolute accuracy `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// Integral over `[a, inf)` of a function that decays at least like a power,
/// by the map `x = a + t/(1-t)`.
pub fn integrate_to_inf(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let om = 1.0 - t;
        let v = f(a + t / om) / (om * om);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Piecewise integral over consecutive breakpoints.
pub fn integrate_pieces(f: impl Fn(f64) -> f64, pts: &[f64], tol: f64) -> f64 {
    pts.windows(2).map(|w| integrate(&f, w[0], w[1], tol)).sum()
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point Gauss-Legendre over consecutive panel edges.
pub fn composite_gl<T>(f: impl Fn(f64) -> T, edges: &[f64]) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T> + Default + Copy,
{
    let (x, w) = gl16();
    let mut acc = T::default();
    for e in edges.windows(2) {
        let (c, r) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        let mut s = T::default();
        for (xi, wi) in x.iter().zip(w) {
            s = s + f(c + r * xi) * *wi;
        }
        acc = acc + s * r;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn semi_infinite() {
        let v = integrate_to_inf(|x| (-x).exp(), 0.0, 1e-12);
        assert!((v - 1.0).abs() < 1e-10);
    }
}
