//! Axisymmetric Dirichlet eigenproblem on a spherical cap in three dimensions.
//!
//! On the cap `{θ < θ₀}` of the unit sphere the first eigenfunction depends on the
//! polar angle only and solves the Legendre equation
//!
//! ```text
//! m'' + cot(θ) m' + p(p + 1) m = 0,   m'(0) = 0,   m(θ₀) = 0,
//! ```
//!
//! so the cone exponent is the smallest degree `p` whose regular solution vanishes
//! at `θ₀`. The regular solution is shot outward from the pole with RK4 and the
//! degree is found by bisection on the predicate "the shot solution changes sign
//! in `(0, θ₀]`", which is monotone in `p` by Sturm comparison.

use crate::error::{Error, Result};

/// Default number of θ-grid intervals used both for shooting and for the stored profile.
pub const DEFAULT_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreSolver {
    pub p_lo: f64,
    pub p_hi: f64,
    pub grid: usize,
}

impl Default for LegendreSolver {
    fn default() -> Self {
        Self {
            p_lo: 1e-3,
            p_hi: 1e3,
            grid: DEFAULT_GRID,
        }
    }
}

/// Angular profile `m₁(θ)` on a uniform grid over `[0, θ₀]`, normalised so its
/// maximum is 1. Values between nodes use cubic Hermite interpolation with the
/// derivatives produced by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct AngularProfile {
    theta0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl AngularProfile {
    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn nodes(&self) -> usize {
        self.values.len()
    }

    /// `m₁(θ)`, clamped to zero outside `[0, θ₀)`.
    pub fn eval(&self, theta: f64) -> f64 {
        if !(0.0..self.theta0).contains(&theta) {
            return 0.0;
        }
        let s = theta / self.step;
        let i = (s.floor() as usize).min(self.values.len() - 2);
        let t = s - i as f64;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1;
        v.max(0.0)
    }
}

/// Result of the cap eigenproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct CapEigen {
    pub p: f64,
    /// `λ₁ = p(p + 1)`.
    pub eigenvalue: f64,
    /// Boundary value `m₁(θ₀)` of the normalised shot solution at the returned `p`.
    pub residual: f64,
    pub profile: AngularProfile,
}

/// Smallest `p > 0` with `P_p(cos θ₀) = 0`, to relative tolerance `tol`.
pub fn legendre_eigen_p(theta0: f64, tol: f64) -> Result<CapEigen> {
    LegendreSolver::default().solve(theta0, tol)
}

impl LegendreSolver {
    pub fn solve(&self, theta0: f64, tol: f64) -> Result<CapEigen> {
        if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
            return Err(Error::InvalidCone(format!(
                "cap half-angle {theta0} outside (0, π)"
            )));
        }
        if !(tol > 0.0) || !(self.p_lo > 0.0) || !(self.p_hi > self.p_lo) || self.grid < 16 {
            return Err(Error::InvalidArgument(format!(
                "bad solver settings: tol={tol}, bracket=[{}, {}], grid={}",
                self.p_lo, self.p_hi, self.grid
            )));
        }
        let crosses = |p: f64| first_sign_change(&shoot(p, theta0, self.grid).0);
        if crosses(self.p_lo) || !crosses(self.p_hi) {
            return Err(Error::SolverFailure(format!(
                "no sign change of the boundary value for p in [{}, {}] at θ₀={theta0}",
                self.p_lo, self.p_hi
            )));
        }
        let (mut lo, mut hi) = (self.p_lo, self.p_hi);
        while hi - lo > tol * hi {
            let mid = 0.5 * (lo + hi);
            if crosses(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let p = 0.5 * (lo + hi);
        let (mut values, mut slopes) = shoot(p, theta0, self.grid);
        let peak = values.iter().cloned().fold(f64::MIN, f64::max);
        for v in values.iter_mut() {
            *v /= peak;
        }
        for s in slopes.iter_mut() {
            *s /= peak;
        }
        let residual = *values.last().unwrap();
        Ok(CapEigen {
            p,
            eigenvalue: p * (p + 1.0),
            residual,
            profile: AngularProfile {
                theta0,
                step: theta0 / self.grid as f64,
                values,
                slopes,
            },
        })
    }
}

fn first_sign_change(values: &[f64]) -> bool {
    values.iter().skip(1).any(|&v| v <= 0.0)
}

/// Regular solution with `m(0) = 1` sampled at `θ_i = i θ₀ / grid`, with its derivative.
fn shoot(p: f64, theta0: f64, grid: usize) -> (Vec<f64>, Vec<f64>) {
    let lambda = p * (p + 1.0);
    let h = theta0 / grid as f64;
    let mut values = Vec::with_capacity(grid + 1);
    let mut slopes = Vec::with_capacity(grid + 1);
    values.push(1.0);
    slopes.push(0.0);
    // The pole is a regular singular point; start one node out from the series.
    let (mut m, mut dm) = series_start(p, h);
    values.push(m);
    slopes.push(dm);
    let rhs = |theta: f64, m: f64, dm: f64| -> (f64, f64) {
        (dm, -dm * theta.cos() / theta.sin() - lambda * m)
    };
    for i in 1..grid {
        let t = i as f64 * h;
        let (k1m, k1d) = rhs(t, m, dm);
        let (k2m, k2d) = rhs(t + 0.5 * h, m + 0.5 * h * k1m, dm + 0.5 * h * k1d);
        let (k3m, k3d) = rhs(t + 0.5 * h, m + 0.5 * h * k2m, dm + 0.5 * h * k2d);
        let (k4m, k4d) = rhs(t + h, m + h * k3m, dm + h * k3d);
        m += h / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
        dm += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        values.push(m);
        slopes.push(dm);
    }
    (values, slopes)
}

/// `P_p(cos θ)` and its θ-derivative from the hypergeometric series
/// `2F1(-p, p+1; 1; s)` in `s = (1 − cos θ)/2`. Only used one grid step from the
/// pole, where `s` is tiny and the series converges in a handful of terms.
fn series_start(p: f64, theta: f64) -> (f64, f64) {
    let s = 0.5 * (1.0 - theta.cos());
    let mut coeff = 1.0;
    let mut pow = 1.0;
    let mut value = 1.0;
    let mut dvalue_ds = 0.0;
    for k in 0..200 {
        let kf = k as f64;
        coeff *= (kf - p) * (kf + p + 1.0) / ((kf + 1.0) * (kf + 1.0));
        // c_{k+1} s^k contributes (k+1) c_{k+1} s^k to the derivative
        let slope_term = (kf + 1.0) * coeff * pow;
        dvalue_ds += slope_term;
        pow *= s;
        let term = coeff * pow;
        value += term;
        if term.abs() < 1e-18 * value.abs() && slope_term.abs() < 1e-18 * dvalue_ds.abs() {
            break;
        }
    }
    (value, dvalue_ds * 0.5 * theta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hemisphere_has_degree_one() {
        let eig = legendre_eigen_p(PI / 2.0, 1e-12).unwrap();
        assert!((eig.p - 1.0).abs() < 1e-9, "p = {}", eig.p);
        assert!((eig.eigenvalue - 2.0).abs() < 1e-8);
    }

    #[test]
    fn profile_matches_cosine_on_hemisphere() {
        let eig = legendre_eigen_p(PI / 2.0, 1e-12).unwrap();
        for &t in &[0.0, 0.3, 0.77, 1.2, 1.5] {
            assert!((eig.profile.eval(t) - f64::cos(t)).abs() < 1e-8, "θ={t}");
        }
        assert_eq!(eig.profile.eval(PI / 2.0 + 0.1), 0.0);
        assert_eq!(eig.profile.nodes(), DEFAULT_GRID + 1);
    }

    #[test]
    fn narrow_and_wide_caps_bracket_the_hemisphere() {
        let narrow = legendre_eigen_p(PI / 3.0, 1e-10).unwrap();
        assert!(narrow.p > 1.0 && narrow.p < 3.0);
        assert!(narrow.residual.abs() < 1e-8);
        let wide = legendre_eigen_p(2.0 * PI / 3.0, 1e-10).unwrap();
        assert!(wide.p > 0.0 && wide.p < 1.0);
    }

    #[test]
    fn empty_bracket_is_solver_failure() {
        let solver = LegendreSolver {
            p_lo: 10.0,
            p_hi: 20.0,
            grid: 2000,
        };
        assert!(matches!(
            solver.solve(PI / 2.0, 1e-8),
            Err(Error::SolverFailure(_))
        ));
    }

    #[test]
    fn rejects_degenerate_angles() {
        assert!(legendre_eigen_p(0.0, 1e-8).is_err());
        assert!(legendre_eigen_p(PI, 1e-8).is_err());
    }
}
