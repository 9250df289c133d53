//! Cones with apex at the origin, their exact geometry, and the positive harmonic
//! function of Brownian motion killed on leaving them.
//!
//! Every cone is open: the apex and boundary points are not members, and the
//! harmonic function `u` vanishes there. `u` is homogeneous, `u(λx) = λ^p u(x)`.

mod legendre;

pub use legendre::{legendre_eigen_p, AngularProfile, CapEigen, LegendreSolver};

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use statrs::function::gamma::gamma;

use crate::error::{check_dim, Error, Result};
use crate::quad::integrate;

/// Tolerance used when solving the spherical-cap eigenproblem at construction.
pub const CAP_TOLERANCE: f64 = 1e-12;

/// Serialisable description of a cone: variant name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConeSpec {
    HalfLine,
    HalfSpace { d: usize },
    #[serde(rename = "wedge2d")]
    Wedge2D { omega_radians: f64 },
    Orthant { d: usize },
    #[serde(rename = "circular_cone3d")]
    CircularCone3D { theta0_radians: f64 },
}

#[derive(Debug, Clone)]
enum Shape {
    HalfLine,
    HalfSpace(usize),
    Wedge { omega: f64 },
    Orthant(usize),
    Circular { theta0: f64, profile: Arc<AngularProfile> },
}

/// A validated cone together with its harmonic data.
#[derive(Debug, Clone)]
pub struct Cone {
    spec: ConeSpec,
    shape: Shape,
    harmonic: HarmonicData,
}

/// Exponent and eigenvalue of the cone's harmonic function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarmonicData {
    pub p: f64,
    /// Principal Dirichlet eigenvalue of the spherical Laplacian on the cone's cross-section.
    pub eigenvalue: f64,
    /// Constant `C` with `u(x) ≤ C |x|^p` on the cone.
    pub growth_constant: f64,
}

/// `p = √(λ₁ + (d/2 − 1)²) − (d/2 − 1)`.
pub fn exponent_from_eigenvalue(eigenvalue: f64, d: usize) -> f64 {
    let shift = d as f64 / 2.0 - 1.0;
    (eigenvalue + shift * shift).sqrt() - shift
}

impl Cone {
    pub fn new(spec: ConeSpec) -> Result<Self> {
        let (shape, harmonic) = match spec {
            ConeSpec::HalfLine => (
                Shape::HalfLine,
                HarmonicData {
                    p: 1.0,
                    eigenvalue: 0.0,
                    growth_constant: 1.0,
                },
            ),
            ConeSpec::HalfSpace { d } => {
                if d == 0 {
                    return Err(Error::InvalidCone("half-space needs d ≥ 1".into()));
                }
                (
                    Shape::HalfSpace(d),
                    HarmonicData {
                        p: 1.0,
                        eigenvalue: (d - 1) as f64,
                        growth_constant: 1.0,
                    },
                )
            }
            ConeSpec::Wedge2D { omega_radians } => {
                if !(omega_radians > 0.0 && omega_radians < 2.0 * PI) {
                    return Err(Error::InvalidCone(format!(
                        "wedge opening {omega_radians} outside (0, 2π)"
                    )));
                }
                let p = PI / omega_radians;
                (
                    Shape::Wedge {
                        omega: omega_radians,
                    },
                    HarmonicData {
                        p,
                        eigenvalue: p * p,
                        growth_constant: 1.0,
                    },
                )
            }
            ConeSpec::Orthant { d } => {
                if d == 0 {
                    return Err(Error::InvalidCone("orthant needs d ≥ 1".into()));
                }
                let df = d as f64;
                (
                    Shape::Orthant(d),
                    HarmonicData {
                        p: df,
                        eigenvalue: df * (2.0 * df - 2.0),
                        // max of Π xᵢ on the unit sphere, attained on the diagonal
                        growth_constant: df.powf(-df / 2.0),
                    },
                )
            }
            ConeSpec::CircularCone3D { theta0_radians } => {
                let eig = legendre_eigen_p(theta0_radians, CAP_TOLERANCE)?;
                (
                    Shape::Circular {
                        theta0: theta0_radians,
                        profile: Arc::new(eig.profile),
                    },
                    HarmonicData {
                        p: eig.p,
                        eigenvalue: eig.eigenvalue,
                        growth_constant: 1.0,
                    },
                )
            }
        };
        Ok(Self {
            spec,
            shape,
            harmonic,
        })
    }

    pub fn half_line() -> Self {
        Self::new(ConeSpec::HalfLine).expect("half-line is always valid")
    }

    pub fn half_space(d: usize) -> Result<Self> {
        Self::new(ConeSpec::HalfSpace { d })
    }

    pub fn wedge(omega_radians: f64) -> Result<Self> {
        Self::new(ConeSpec::Wedge2D { omega_radians })
    }

    pub fn orthant(d: usize) -> Result<Self> {
        Self::new(ConeSpec::Orthant { d })
    }

    pub fn circular(theta0_radians: f64) -> Result<Self> {
        Self::new(ConeSpec::CircularCone3D { theta0_radians })
    }

    pub fn spec(&self) -> &ConeSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::HalfLine => 1,
            Shape::HalfSpace(d) | Shape::Orthant(d) => d,
            Shape::Wedge { .. } => 2,
            Shape::Circular { .. } => 3,
        }
    }

    pub fn harmonic(&self) -> HarmonicData {
        self.harmonic
    }

    /// Homogeneity exponent `p` of `u`.
    pub fn exponent(&self) -> f64 {
        self.harmonic.p
    }

    /// Unit interior direction `x₀`; `t·x₀` is in the cone for all `t > 0`.
    pub fn axis(&self) -> Vec<f64> {
        match self.shape {
            Shape::HalfLine => vec![1.0],
            Shape::HalfSpace(d) => {
                let mut v = vec![0.0; d];
                v[d - 1] = 1.0;
                v
            }
            Shape::Wedge { omega } => vec![(omega / 2.0).cos(), (omega / 2.0).sin()],
            Shape::Orthant(d) => vec![1.0 / (d as f64).sqrt(); d],
            Shape::Circular { .. } => vec![0.0, 0.0, 1.0],
        }
    }

    /// Membership in the open cone. Points of the wrong dimension are never members.
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match &self.shape {
            Shape::HalfLine => x[0] > 0.0,
            Shape::HalfSpace(d) => x[d - 1] > 0.0,
            Shape::Orthant(_) => x.iter().all(|&v| v > 0.0),
            Shape::Wedge { omega } => match polar_angle(x[0], x[1]) {
                Some(theta) => theta > 0.0 && theta < *omega,
                None => false,
            },
            Shape::Circular { theta0, .. } => match colatitude(x) {
                Some(theta) => theta < *theta0,
                None => false,
            },
        }
    }

    /// Euclidean distance to `∂K` for interior points, 0 otherwise.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.shape {
            Shape::HalfLine => x[0],
            Shape::HalfSpace(d) => x[d - 1],
            Shape::Orthant(_) => x.iter().cloned().fold(f64::INFINITY, f64::min),
            Shape::Wedge { omega } => {
                let r = x[0].hypot(x[1]);
                let theta = polar_angle(x[0], x[1]).unwrap_or(0.0);
                ray_distance(r, theta).min(ray_distance(r, omega - theta))
            }
            Shape::Circular { theta0, .. } => {
                let r = norm(x);
                let theta = colatitude(x).unwrap_or(0.0);
                // the nearest boundary generator is the one in the same meridian
                ray_distance(r, theta0 - theta)
            }
        }
    }

    /// Positive harmonic function `u`, zero outside the open cone.
    pub fn harmonic_u(&self, x: &[f64]) -> f64 {
        if !self.contains(x) {
            return 0.0;
        }
        match &self.shape {
            Shape::HalfLine => x[0],
            Shape::HalfSpace(d) => x[d - 1],
            Shape::Orthant(_) => x.iter().product(),
            Shape::Wedge { omega } => {
                let r = x[0].hypot(x[1]);
                let theta = polar_angle(x[0], x[1]).unwrap_or(0.0);
                r.powf(self.harmonic.p) * (PI * theta / omega).sin()
            }
            Shape::Circular { profile, .. } => {
                let r = norm(x);
                let theta = colatitude(x).unwrap_or(0.0);
                r.powf(self.harmonic.p) * profile.eval(theta)
            }
        }
    }

    /// `∫_Σ m₁ dσ` over the cone's cross-section of the unit sphere.
    ///
    /// Closed forms for the product-type cones, quadrature for the others.
    pub fn angular_mass(&self) -> f64 {
        match &self.shape {
            Shape::HalfLine => 1.0,
            // volume of the unit (d−1)-ball
            Shape::HalfSpace(d) => {
                let k = (*d - 1) as f64;
                PI.powf(k / 2.0) / gamma(k / 2.0 + 1.0)
            }
            // from ∫_{ℝ₊^d} Π xᵢ e^{−|x|²/2} dx = 1
            Shape::Orthant(d) => {
                let df = *d as f64;
                1.0 / (2f64.powf(df - 1.0) * gamma(df))
            }
            Shape::Wedge { omega } => integrate(|t| (PI * t / omega).sin(), 0.0, *omega, 1e-13),
            Shape::Circular { theta0, profile } => {
                2.0 * PI * integrate(|t| profile.eval(t) * t.sin(), 0.0, *theta0, 1e-12)
            }
        }
    }

    /// Central-difference Laplacian of `u` at `x`, relative to `u(x)`.
    pub fn check_harmonicity(&self, x: &[f64], h: f64) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let distance = self.boundary_distance(x);
        if !(h > 0.0) || distance <= 2.0 * h * (self.dim() as f64).sqrt() {
            return Err(Error::StepTooLarge { h, distance });
        }
        let centre = self.harmonic_u(x);
        let mut probe = x.to_vec();
        let mut laplacian = 0.0;
        for i in 0..x.len() {
            probe[i] = x[i] + h;
            let plus = self.harmonic_u(&probe);
            probe[i] = x[i] - h;
            let minus = self.harmonic_u(&probe);
            probe[i] = x[i];
            laplacian += (plus - 2.0 * centre + minus) / (h * h);
        }
        Ok(laplacian / centre)
    }

    /// Empirical extremes of `u(x) / (|x|^{p−1} d(x))` over `points`.
    pub fn check_assumption_g(&self, points: &[Vec<f64>]) -> Result<(f64, f64)> {
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        let p = self.harmonic.p;
        let mut upper = f64::MIN;
        let mut lower = f64::MAX;
        for x in points {
            check_dim(self.dim(), x.len())?;
            let d = self.boundary_distance(x);
            if d <= 0.0 {
                return Err(Error::InvalidArgument(format!("{x:?} is not interior")));
            }
            let ratio = self.harmonic_u(x) / (norm(x).powf(p - 1.0) * d);
            upper = upper.max(ratio);
            lower = lower.min(ratio);
        }
        Ok((upper, lower))
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Polar angle in `[0, 2π)`, `None` at the origin.
fn polar_angle(x: f64, y: f64) -> Option<f64> {
    if x == 0.0 && y == 0.0 {
        return None;
    }
    let a = y.atan2(x);
    Some(if a < 0.0 { a + 2.0 * PI } else { a })
}

/// Angle from the positive last axis, `None` at the origin.
fn colatitude(x: &[f64]) -> Option<f64> {
    let radial = x[0].hypot(x[1]);
    if radial == 0.0 && x[2] == 0.0 {
        return None;
    }
    Some(radial.atan2(x[2]))
}

/// Distance from a point at radius `r` to a ray from the origin at angle `delta` away.
fn ray_distance(r: f64, delta: f64) -> f64 {
    if delta < FRAC_PI_2 {
        r * delta.sin()
    } else {
        r
    }
}
