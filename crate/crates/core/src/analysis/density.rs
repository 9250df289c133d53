//! Comparison of conditioned endpoints with the limit density `c u(z) e^{−|z|²/2}`.
//!
//! The comparison is made on the radial marginal. Under the limit law `|Z|²/2` is
//! Gamma distributed with shape `(p + d)/2`, which gives the equal-probability bins
//! in closed form; the normalizer `c` itself is obtained by quadrature.

use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use statrs::function::gamma::gamma_lr;

use crate::chain::PathRng;
use crate::cone::Cone;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_panels};

/// Minimum sample size accepted by [`conditional_limit_check`].
pub const MIN_DENSITY_SAMPLES: usize = 10_000;

/// Radius beyond which the reference mass is below `e^{−800}`.
const RADIAL_CUTOFF: f64 = 40.0;

/// Normalized limit density of the conditioned walk in a cone.
#[derive(Debug, Clone)]
pub struct LimitDensity {
    cone: Cone,
    p: f64,
    dim: usize,
    radial_integral: f64,
    angular_mass: f64,
    normalizer: f64,
}

impl LimitDensity {
    pub fn new(cone: &Cone) -> Self {
        let p = cone.exponent();
        let dim = cone.dim();
        let k = p + dim as f64 - 1.0;
        let radial_integral = integrate(|r| r.powf(k) * (-0.5 * r * r).exp(), 0.0, RADIAL_CUTOFF, 1e-14);
        let angular_mass = cone.angular_mass();
        Self {
            cone: cone.clone(),
            p,
            dim,
            radial_integral,
            angular_mass,
            normalizer: 1.0 / (radial_integral * angular_mass),
        }
    }

    /// The constant `c`.
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn radial_integral(&self) -> f64 {
        self.radial_integral
    }

    pub fn angular_mass(&self) -> f64 {
        self.angular_mass
    }

    pub fn eval(&self, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        self.normalizer * self.cone.harmonic_u(z) * (-0.5 * r2).exp()
    }

    /// Shape parameter of the Gamma law of `|Z|²/2`.
    pub fn radial_shape(&self) -> f64 {
        0.5 * (self.p + self.dim as f64)
    }

    /// Density of `|Z|` under the limit law.
    pub fn radial_pdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.normalizer * self.angular_mass * r.powf(self.p + self.dim as f64 - 1.0) * (-0.5 * r * r).exp()
    }

    pub fn radial_cdf(&self, r: f64) -> f64 {
        if r <= 0.0 {
            0.0
        } else {
            gamma_lr(self.radial_shape(), 0.5 * r * r)
        }
    }

    pub fn radial_quantile(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, RADIAL_CUTOFF);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.radial_cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Total mass of the normalized density, by an independent fixed-panel quadrature.
    pub fn total_mass(&self) -> f64 {
        integrate_panels(&|r| self.radial_pdf(r), 0.0, RADIAL_CUTOFF, 4096)
    }
}

/// Histogram comparison of conditioned endpoints with the limit density.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCheck {
    pub dim: usize,
    pub p: f64,
    pub samples: usize,
    /// Interior radial bin edges; the first bin starts at 0 and the last is open.
    pub edges: Vec<f64>,
    pub reference_probs: Vec<f64>,
    pub empirical_probs: Vec<f64>,
    /// Limit density of `|Z|` at the bin medians.
    pub reference_density: Vec<f64>,
    pub total_variation: f64,
    pub chi_square: f64,
    pub normalizer: f64,
    /// Quadrature mass of the normalized reference.
    pub reference_mass: f64,
    /// Radius holding 99.9% of the reference mass.
    pub window_radius: f64,
    /// Lattice cell width used for the continuity correction, if any.
    pub cell_width: Option<f64>,
}

/// Deterministic sub-grid points per coordinate for the continuity correction.
fn subgrid(dim: usize) -> usize {
    match dim {
        1 => 32,
        2 => 8,
        _ => 4,
    }
}

/// TV distance and chi-square of the radial histogram of `samples` against the
/// limit law on `bins` equal-probability bins.
///
/// With `cell_width = Some(h)` each lattice sample is spread uniformly over the
/// cube of side `h` around it before binning.
pub fn conditional_limit_check(
    samples: &[Vec<f64>],
    cone: &Cone,
    bins: usize,
    cell_width: Option<f64>,
) -> Result<DensityCheck> {
    if samples.len() < MIN_DENSITY_SAMPLES {
        return Err(Error::TooFewSamples {
            got: samples.len(),
            needed: MIN_DENSITY_SAMPLES,
        });
    }
    if bins < 2 {
        return Err(Error::InvalidArgument("need at least two bins".into()));
    }
    let dim = cone.dim();
    if let Some(bad) = samples.iter().find(|z| z.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: bad.len(),
        });
    }
    let density = LimitDensity::new(cone);
    let edges: Vec<f64> = (1..bins)
        .map(|i| density.radial_quantile(i as f64 / bins as f64))
        .collect();
    let mut counts = vec![0.0; bins];
    let bin_of = |r: f64| edges.partition_point(|&e| e <= r);
    match cell_width {
        None => {
            for z in samples {
                counts[bin_of(norm(z))] += 1.0;
            }
        }
        Some(h) => {
            let s = subgrid(dim);
            let total = s.pow(dim as u32);
            let weight = 1.0 / total as f64;
            let offsets: Vec<f64> = (0..s).map(|j| h * ((j as f64 + 0.5) / s as f64 - 0.5)).collect();
            let mut point = vec![0.0; dim];
            for z in samples {
                for idx in 0..total {
                    let mut rest = idx;
                    for (q, c) in point.iter_mut().zip(z) {
                        *q = c + offsets[rest % s];
                        rest /= s;
                    }
                    counts[bin_of(norm(&point))] += weight;
                }
            }
        }
    }
    let nf = samples.len() as f64;
    let empirical_probs: Vec<f64> = counts.iter().map(|c| c / nf).collect();
    let mut cdf = Vec::with_capacity(bins + 1);
    cdf.push(0.0);
    cdf.extend(edges.iter().map(|&e| density.radial_cdf(e)));
    cdf.push(1.0);
    let reference_probs: Vec<f64> = cdf.windows(2).map(|w| w[1] - w[0]).collect();
    let total_variation = 0.5
        * empirical_probs
            .iter()
            .zip(&reference_probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    let chi_square = nf
        * empirical_probs
            .iter()
            .zip(&reference_probs)
            .map(|(a, b)| (a - b).powi(2) / b)
            .sum::<f64>();
    let reference_density = (0..bins)
        .map(|i| density.radial_pdf(density.radial_quantile((i as f64 + 0.5) / bins as f64)))
        .collect();
    Ok(DensityCheck {
        dim,
        p: density.p,
        samples: samples.len(),
        edges,
        reference_probs,
        empirical_probs,
        reference_density,
        total_variation,
        chi_square,
        normalizer: density.normalizer(),
        reference_mass: density.total_mass(),
        window_radius: density.radial_quantile(0.999),
        cell_width,
    })
}

/// Radii `|Z|` drawn directly from the limit law, `|Z| = √(2G)` with `G ~ Gamma((p+d)/2, 1)`.
pub fn sample_reference_radii(cone: &Cone, count: usize, seed: u64) -> Vec<f64> {
    let shape = 0.5 * (cone.exponent() + cone.dim() as f64);
    let law = Gamma::new(shape, 1.0).expect("positive shape");
    let mut rng = PathRng::for_path(seed, 0);
    (0..count).map(|_| (2.0 * law.sample(&mut rng)).sqrt()).collect()
}

/// Noise floor: the same check run on `count` exact draws from the limit law.
///
/// Each radius is placed on the cone axis, which leaves the radial histogram unchanged.
pub fn reference_self_check(cone: &Cone, count: usize, bins: usize, seed: u64) -> Result<DensityCheck> {
    let axis = cone.axis();
    let samples: Vec<Vec<f64>> = sample_reference_radii(cone, count, seed)
        .into_iter()
        .map(|r| axis.iter().map(|a| a * r).collect())
        .collect();
    conditional_limit_check(&samples, cone, bins, None)
}

fn norm(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::gamma::gamma;
    use std::f64::consts::PI;

    fn closed_radial(k: f64) -> f64 {
        2f64.powf((k - 1.0) / 2.0) * gamma((k + 1.0) / 2.0)
    }

    #[test]
    fn normalizers_and_mass() {
        let cones = [
            Cone::half_line(),
            Cone::half_space(3).unwrap(),
            Cone::orthant(2).unwrap(),
            Cone::wedge(2.0 * PI / 3.0).unwrap(),
            Cone::circular(PI / 3.0).unwrap(),
        ];
        for cone in &cones {
            let dens = LimitDensity::new(cone);
            let k = cone.exponent() + cone.dim() as f64 - 1.0;
            assert!((dens.radial_integral() / closed_radial(k) - 1.0).abs() < 1e-10);
            assert!((dens.total_mass() - 1.0).abs() < 1e-6, "{:?}", cone.spec());
        }
        // Rayleigh: c = 1 in 1D; orthant: ∫ Π zᵢ e^{−|z|²/2} = 1
        assert!((LimitDensity::new(&Cone::half_line()).normalizer() - 1.0).abs() < 1e-12);
        assert!((LimitDensity::new(&Cone::orthant(2).unwrap()).normalizer() - 1.0).abs() < 1e-12);
        // wedge angular mass 2ω/π
        let w = Cone::wedge(1.0).unwrap();
        assert!((w.angular_mass() - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn quarter_plane_radial_marginal() {
        // u = z₁z₂ = r² sin2θ / 2; integrating the angle over (0, π/2) gives r³ e^{−r²/2} / 2
        let dens = LimitDensity::new(&Cone::orthant(2).unwrap());
        for r in [0.3f64, 1.0, 2.2] {
            let expected = 0.5 * r.powi(3) * (-0.5 * r * r).exp();
            assert!((dens.radial_pdf(r) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn reference_draws_reach_noise_floor() {
        let c = reference_self_check(&Cone::half_line(), 100_000, 20, 3).unwrap();
        assert!(c.total_variation < 0.02);
        let s: f64 = c.reference_probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        for q in &c.reference_probs {
            assert!((q - 0.05).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_samples() {
        let s = vec![vec![1.0]; 10];
        assert_eq!(
            conditional_limit_check(&s, &Cone::half_line(), 20, None).unwrap_err(),
            Error::TooFewSamples {
                got: 10,
                needed: MIN_DENSITY_SAMPLES
            }
        );
    }

    #[test]
    fn rayleigh_mean_of_reference_draws() {
        let r = sample_reference_radii(&Cone::half_line(), 200_000, 9);
        let m = r.iter().sum::<f64>() / r.len() as f64;
        let sd = ((4.0 - PI) / 2.0 / r.len() as f64).sqrt();
        assert!((m - (PI / 2.0).sqrt()).abs() < 4.0 * sd);
    }
}
