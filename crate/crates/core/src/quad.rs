//! Composite Gauss–Legendre quadrature with panel doubling.

use std::sync::OnceLock;

const ORDER: usize = 16;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(ORDER))
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Fixed composite rule with `panels` equal panels on `[a, b]`.
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * width;
        let mut panel = 0.0;
        for &(x, w) in rule() {
            panel += w * f(mid + half * x);
        }
        total += panel * half;
    }
    total
}

/// Integral of `f` on `[a, b]`, doubling the panel count until two successive
/// estimates agree to `rel_tol` (relative) or `1e-300` (absolute).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut panels = 4;
    let mut last = integrate_panels(&f, a, b, panels);
    while panels < 1 << 16 {
        panels *= 2;
        let next = integrate_panels(&f, a, b, panels);
        if (next - last).abs() <= rel_tol * next.abs() + 1e-300 {
            return next;
        }
        last = next;
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let s: f64 = gauss_legendre(16).iter().map(|p| p.1).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_exactness() {
        // 16 nodes integrate degree 31 exactly
        let v = integrate_panels(&|x: f64| x.powi(30), -1.0, 1.0, 1);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_moment() {
        let v = integrate(|r: f64| r * r * (-r * r / 2.0).exp(), 0.0, 40.0, 1e-13);
        assert!((v - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
    }
}
