use serde::Serialize;

use super::{gamma_envelope, ChainModel, PathRng, RngState};
use crate::cone::{norm, Cone};
use crate::error::{check_dim, Error, Result};

/// Half-width of the reported confidence intervals, in standard errors.
pub const MOMENT_CI_Z: f64 = 4.0;

/// Empirical one-step moments at a fixed state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub samples: usize,
    pub mean: Vec<f64>,
    pub mean_se: Vec<f64>,
    /// `E[ξᵢ ξⱼ]`, row-major `d × d`.
    pub second_moments: Vec<Vec<f64>>,
    pub second_moments_se: Vec<Vec<f64>>,
    /// Entries whose interval excludes the zero-mean / identity target.
    pub flags: Vec<String>,
    /// `|mean| · d(x) / γ(d(x))`; small when the drift is `o(γ(d)/d)`.
    pub drift_envelope_ratio: f64,
}

pub fn moment_diagnostics(
    model: &ChainModel,
    cone: &Cone,
    x: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MomentReport> {
    check_dim(model.dim(), x.len())?;
    check_dim(cone.dim(), x.len())?;
    if samples < 1000 {
        return Err(Error::TooFewSamples {
            got: samples,
            needed: 1000,
        });
    }
    let d = x.len();
    let mut rng = PathRng::new(RngState::new(seed, 0));
    let mut inc = vec![0.0; d];
    let mut sum = vec![0.0; d];
    let mut sum_sq = vec![0.0; d];
    let mut prod = vec![vec![0.0; d]; d];
    let mut prod_sq = vec![vec![0.0; d]; d];
    for _ in 0..samples {
        model.sample_increment(cone, x, &mut rng, &mut inc);
        for i in 0..d {
            sum[i] += inc[i];
            sum_sq[i] += inc[i] * inc[i];
            for j in 0..d {
                let v = inc[i] * inc[j];
                prod[i][j] += v;
                prod_sq[i][j] += v * v;
            }
        }
    }
    let nf = samples as f64;
    let se = |s: f64, s2: f64| {
        let m = s / nf;
        ((s2 / nf - m * m).max(0.0) / (nf - 1.0)).sqrt()
    };
    let mean: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let mean_se: Vec<f64> = (0..d).map(|i| se(sum[i], sum_sq[i])).collect();
    let second_moments: Vec<Vec<f64>> = prod
        .iter()
        .map(|row| row.iter().map(|s| s / nf).collect())
        .collect();
    let second_moments_se: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| se(prod[i][j], prod_sq[i][j])).collect())
        .collect();

    let mut flags = Vec::new();
    for i in 0..d {
        if mean[i].abs() > MOMENT_CI_Z * mean_se[i] {
            flags.push(format!("mean[{i}]"));
        }
        for j in 0..d {
            let target = if i == j { 1.0 } else { 0.0 };
            if (second_moments[i][j] - target).abs() > MOMENT_CI_Z * second_moments_se[i][j] {
                flags.push(format!("second_moment[{i}][{j}]"));
            }
        }
    }
    let dist = cone.boundary_distance(x);
    let drift_envelope_ratio = norm(&mean) * dist / gamma_envelope(dist);
    Ok(MomentReport {
        samples,
        mean,
        mean_se,
        second_moments,
        second_moments_se,
        flags,
        drift_envelope_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ModelSpec;

    #[test]
    fn lattice_moments_are_exact_on_the_diagonal() {
        let cone = Cone::orthant(3).unwrap();
        let r = moment_diagnostics(&ChainModel::lattice(3), &cone, &[5.0, 5.0, 5.0], 1_000_000, 4)
            .unwrap();
        for i in 0..3 {
            assert_eq!(r.second_moments[i][i], 1.0);
            for j in 0..3 {
                if i != j {
                    assert!(r.second_moments[i][j].abs() < 0.01);
                }
            }
        }
        assert!(r.flags.is_empty(), "{:?}", r.flags);
    }

    #[test]
    fn gaussian_mean_is_small() {
        let cone = Cone::half_space(2).unwrap();
        let r = moment_diagnostics(&ChainModel::gaussian(2), &cone, &[0.0, 3.0], 100_000, 9)
            .unwrap();
        assert!(r.mean.iter().all(|m| m.abs() < 0.02));
    }

    #[test]
    fn zero_perturbation_reports_identically() {
        let cone = Cone::half_line();
        let base = ChainModel::lattice(1);
        let pert = ChainModel::perturbed(ModelSpec::IidLattice { dim: 1 }, 0.0, 2.0).unwrap();
        let a = moment_diagnostics(&base, &cone, &[4.0], 10_000, 3).unwrap();
        let b = moment_diagnostics(&pert, &cone, &[4.0], 10_000, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn drift_inflates_the_axis_second_moment_by_its_square() {
        let cone = Cone::half_line();
        let m = ChainModel::perturbed(ModelSpec::IidLattice { dim: 1 }, 0.5, 0.5).unwrap();
        let x = [3.0];
        let r = moment_diagnostics(&m, &cone, &x, 100_000, 1).unwrap();
        let drift = m.drift_at(&cone, &x);
        // (±1 + m)² has mean 1 + m² exactly
        assert!((r.second_moments[0][0] - (1.0 + drift * drift)).abs() < 5.0 * r.second_moments_se[0][0] + 1e-12);
        assert!(drift * drift <= 0.25 / 4f64.powf(3.0) + 1e-15);
        assert!(r.flags.iter().any(|f| f == "mean[0]"));
    }

    #[test]
    fn needs_enough_samples() {
        let cone = Cone::half_line();
        assert!(moment_diagnostics(&ChainModel::lattice(1), &cone, &[1.0], 10, 0).is_err());
    }
}
