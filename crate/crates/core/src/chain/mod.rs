//! Markov transition kernels `x → x + ξ(x)` and their moment structure.

mod diagnostics;
mod rng;

pub use diagnostics::{moment_diagnostics, MomentReport};
pub use rng::{derive_seed, PathRng, RngState};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::gamma;

use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};

/// Slowly varying envelope `γ(t) = log(e + t)^{-2}` used by the drift and
/// one-step-error diagnostics.
pub fn gamma_envelope(t: f64) -> f64 {
    let l = (std::f64::consts::E + t).ln();
    1.0 / (l * l)
}

/// Serialisable model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    IidGaussian {
        dim: usize,
    },
    /// Independent ±1 coordinates (product simple random walk).
    IidLattice {
        dim: usize,
    },
    /// Independent symmetric Pareto-type coordinates with unit variance.
    IidHeavyTail {
        dim: usize,
        a: f64,
    },
    /// A base model plus a deterministic drift `c / (1 + d(x))^{1+δ}` along the cone axis.
    PerturbedDrift {
        base: Box<ModelSpec>,
        c: f64,
        delta: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Base {
    Gaussian,
    Lattice,
    /// Coordinate law `±scale·W`, `P(W > w) = w^{-a}` for `w ≥ 1`.
    HeavyTail { a: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Drift {
    c: f64,
    delta: f64,
}

/// A validated transition kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel {
    spec: ModelSpec,
    dim: usize,
    base: Base,
    drift: Option<Drift>,
}

impl ChainModel {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let (dim, base, drift) = match &spec {
            ModelSpec::PerturbedDrift { base, c, delta } => {
                if matches!(**base, ModelSpec::PerturbedDrift { .. }) {
                    return Err(Error::InvalidModel("drift perturbations do not nest".into()));
                }
                if !(*c >= 0.0 && c.is_finite()) || !(*delta > 0.0 && delta.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "perturbation needs c ≥ 0 and δ > 0, got c={c}, δ={delta}"
                    )));
                }
                let (dim, b) = Self::base_of(base)?;
                (dim, b, Some(Drift { c: *c, delta: *delta }))
            }
            other => {
                let (dim, b) = Self::base_of(other)?;
                (dim, b, None)
            }
        };
        Ok(Self {
            spec,
            dim,
            base,
            drift,
        })
    }

    fn base_of(spec: &ModelSpec) -> Result<(usize, Base)> {
        let (dim, base) = match *spec {
            ModelSpec::IidGaussian { dim } => (dim, Base::Gaussian),
            ModelSpec::IidLattice { dim } => (dim, Base::Lattice),
            ModelSpec::IidHeavyTail { dim, a } => {
                if !(a > 2.0 && a.is_finite()) {
                    return Err(Error::InvalidModel(format!("tail index {a} must exceed 2")));
                }
                (
                    dim,
                    Base::HeavyTail {
                        a,
                        scale: ((a - 2.0) / a).sqrt(),
                    },
                )
            }
            ModelSpec::PerturbedDrift { .. } => unreachable!("handled by caller"),
        };
        if dim == 0 || (matches!(base, Base::Lattice) && dim > 63) {
            return Err(Error::InvalidModel(format!("unsupported dimension {dim}")));
        }
        Ok((dim, base))
    }

    pub fn gaussian(dim: usize) -> Self {
        Self::new(ModelSpec::IidGaussian { dim }).expect("valid dimension")
    }

    pub fn lattice(dim: usize) -> Self {
        Self::new(ModelSpec::IidLattice { dim }).expect("valid dimension")
    }

    pub fn heavy_tail(dim: usize, a: f64) -> Result<Self> {
        Self::new(ModelSpec::IidHeavyTail { dim, a })
    }

    pub fn perturbed(base: ModelSpec, c: f64, delta: f64) -> Result<Self> {
        Self::new(ModelSpec::PerturbedDrift {
            base: Box::new(base),
            c,
            delta,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Increments have mean zero and identity second-moment matrix at every state.
    pub fn satisfies_m2_exactly(&self) -> bool {
        self.drift.is_none_or(|d| d.c == 0.0)
    }

    /// Pure product simple random walk: integer states, exact enumeration possible.
    pub fn is_lattice(&self) -> bool {
        self.base == Base::Lattice && self.drift.is_none()
    }

    /// Per-coordinate spacing of the reachable set at a fixed time (parity sublattice).
    pub fn lattice_spacing(&self) -> Option<f64> {
        self.is_lattice().then_some(2.0)
    }

    /// Drift magnitude `c / (1 + d(x))^{1+δ}` along the cone axis; 0 without perturbation.
    pub fn drift_at(&self, cone: &Cone, x: &[f64]) -> f64 {
        match self.drift {
            Some(Drift { c, delta }) if c > 0.0 => {
                c / (1.0 + cone.boundary_distance(x)).powf(1.0 + delta)
            }
            _ => 0.0,
        }
    }

    /// Draws one increment into `out`.
    #[inline]
    pub fn sample_increment(&self, cone: &Cone, x: &[f64], rng: &mut PathRng, out: &mut [f64]) {
        match self.base {
            Base::Lattice => {
                let bits = rng.next_bits(self.dim as u32);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
                }
            }
            Base::Gaussian => {
                for o in out.iter_mut() {
                    *o = rng.sample(StandardNormal);
                }
            }
            Base::HeavyTail { a, scale } => {
                for o in out.iter_mut() {
                    let w = rng.open_unit().powf(-1.0 / a);
                    let sign = if rng.next_bits(1) == 1 { 1.0 } else { -1.0 };
                    *o = sign * scale * w;
                }
            }
        }
        if self.drift.is_some() {
            let m = self.drift_at(cone, x);
            if m != 0.0 {
                for (o, a) in out.iter_mut().zip(cone.axis()) {
                    *o += m * a;
                }
            }
        }
    }

    /// Advances `x` by one step in place. Killing is the caller's job.
    #[inline]
    pub fn step_in_place(&self, cone: &Cone, x: &mut [f64], rng: &mut PathRng) {
        if self.base == Base::Lattice && self.drift.is_none() {
            let bits = rng.next_bits(self.dim as u32);
            for (i, v) in x.iter_mut().enumerate() {
                *v += if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
            }
            return;
        }
        let mut buf = [0.0f64; 8];
        if x.len() <= buf.len() {
            let inc = &mut buf[..x.len()];
            self.sample_increment(cone, x, rng, inc);
            for (v, i) in x.iter_mut().zip(inc.iter()) {
                *v += i;
            }
        } else {
            let mut inc = vec![0.0; x.len()];
            self.sample_increment(cone, x, rng, &mut inc);
            for (v, i) in x.iter_mut().zip(inc) {
                *v += i;
            }
        }
    }

    /// Functional form of one step: `(x + ξ, advanced state)`.
    pub fn step(&self, cone: &Cone, x: &[f64], state: RngState) -> Result<(Vec<f64>, RngState)> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, cone.dim())?;
        let mut rng = PathRng::new(state);
        let mut next = x.to_vec();
        self.step_in_place(cone, &mut next, &mut rng);
        Ok((next, rng.state()))
    }

    /// Exact increment law at `x` when it has finite support.
    pub fn finite_support_at(&self, cone: &Cone, x: &[f64]) -> Option<Vec<(Vec<f64>, f64)>> {
        if self.base != Base::Lattice {
            return None;
        }
        let d = self.dim;
        let weight = 0.5f64.powi(d as i32);
        let m = self.drift_at(cone, x);
        let axis = cone.axis();
        Some(
            (0..1u64 << d)
                .map(|bits| {
                    let inc = (0..d)
                        .map(|i| {
                            let s = if (bits >> i) & 1 == 1 { 1.0 } else { -1.0 };
                            s + if m != 0.0 { m * axis[i] } else { 0.0 }
                        })
                        .collect();
                    (inc, weight)
                })
                .collect(),
        )
    }

    fn drift_bound(&self) -> f64 {
        self.drift.map_or(0.0, |d| d.c)
    }

    /// Upper bound on `sup_x P_x(|X(1) − x| > t)`.
    pub fn majorant_tail(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("threshold {t} must be ≥ 0")));
        }
        let c = self.drift_bound();
        let shifted = (t - c).max(0.0);
        let d = self.dim as f64;
        let bound = match self.base {
            Base::Lattice => {
                if t >= d.sqrt() + c {
                    0.0
                } else {
                    1.0
                }
            }
            Base::Gaussian => ChiSquared::new(d)
                .map_err(|e| Error::Unsupported(e.to_string()))?
                .sf(shifted * shifted),
            Base::HeavyTail { a, .. } => (self.heavy_tail_constant(a) * shifted.powf(-a)).min(1.0),
        };
        Ok(bound)
    }

    /// `K` in the heavy-tail majorant `min(1, K t^{-a})`: a union bound over coordinates.
    fn heavy_tail_constant(&self, a: f64) -> f64 {
        let d = self.dim as f64;
        let scale = ((a - 2.0) / a).sqrt();
        d * (scale * d.sqrt()).powf(a)
    }

    /// Human-readable analytic form of the majorant tail.
    pub fn majorant_form(&self) -> String {
        let c = self.drift_bound();
        let d = self.dim as f64;
        match self.base {
            Base::Lattice => format!("P(Y>t) = 1{{t < {}}}", d.sqrt() + c),
            Base::Gaussian => format!("P(Y>t) = P(chi_{} > t - {c})", self.dim),
            Base::HeavyTail { a, .. } => format!(
                "P(Y>t) = min(1, {} (t - {c})^-{a})",
                self.heavy_tail_constant(a)
            ),
        }
    }

    /// `E[Y²]` for the majorant `Y`.
    pub fn majorant_second_moment(&self) -> f64 {
        let c = self.drift_bound();
        let d = self.dim as f64;
        let (first, second) = match self.base {
            Base::Lattice => (d.sqrt(), d),
            Base::Gaussian => {
                let mean_chi = std::f64::consts::SQRT_2 * gamma((d + 1.0) / 2.0) / gamma(d / 2.0);
                (mean_chi, d)
            }
            Base::HeavyTail { a, .. } => {
                let k = self.heavy_tail_constant(a);
                let t0 = k.powf(1.0 / a).max(0.0);
                (
                    t0 + k * t0.powf(1.0 - a) / (a - 1.0),
                    t0 * t0 + 2.0 * k * t0.powf(2.0 - a) / (a - 2.0),
                )
            }
        };
        second + 2.0 * c * first + c * c
    }
}
