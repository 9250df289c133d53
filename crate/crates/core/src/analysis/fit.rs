//! Power-law fits of survival curves and κ-ratio constancy.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mc::SurvivalCurve;

/// Minimum number of usable points in a tail fit.
pub const MIN_FIT_POINTS: usize = 4;
/// A point is usable when `P̂ > SIGNAL_TO_NOISE · se`.
pub const SIGNAL_TO_NOISE: f64 = 10.0;

/// Weighted least-squares line `y = intercept + slope · x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
}

/// Fits a line with weights `w`. With `inverse_variance` the weights are taken as
/// `1/σ²` and the slope error is `1/√Sxx`; otherwise the error comes from the residuals.
pub fn weighted_line(x: &[f64], y: &[f64], w: &[f64], inverse_variance: bool) -> Result<LineFit> {
    let k = x.len();
    if k < 2 || y.len() != k || w.len() != k {
        return Err(Error::InsufficientPoints {
            usable: k.min(y.len()).min(w.len()),
            needed: 2,
        });
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..k {
        let dx = x[i] - xm;
        let dy = y[i] - ym;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if !(sxx > 0.0) {
        return Err(Error::InvalidArgument("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let mut rss = 0.0;
    let mut max_abs_residual: f64 = 0.0;
    for i in 0..k {
        let r = y[i] - intercept - slope * x[i];
        rss += w[i] * r * r;
        max_abs_residual = max_abs_residual.max(r.abs());
    }
    let slope_se = if inverse_variance {
        1.0 / sxx.sqrt()
    } else if k > 2 {
        (rss / (k - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_se,
        r_squared,
        max_abs_residual,
    })
}

/// Tail fit of `log P̂` against `log n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
    /// Grid points used by the fit.
    pub n: Vec<u64>,
    /// `n^{p/2} P̂_x(τ > n)` at the used points.
    pub kappa_ratio: Vec<f64>,
    /// `max / min` of the κ-ratio sequence.
    pub kappa_spread: f64,
}

/// WLS fit over the points with `n ≥ n_min` and `P̂ > 10 se`.
///
/// Weights are `(P̂/se)²`, the delta-method inverse variance of `log P̂`. Curves
/// with zero standard error everywhere (exact data) are fitted unweighted.
pub fn fit_tail_exponent(curve: &SurvivalCurve, n_min: u64, p: f64) -> Result<FitResult> {
    let used: Vec<usize> = (0..curve.n.len())
        .filter(|&i| {
            curve.n[i] >= n_min.max(1) && curve.p_hat[i] > SIGNAL_TO_NOISE * curve.se[i]
        })
        .collect();
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientPoints {
            usable: used.len(),
            needed: MIN_FIT_POINTS,
        });
    }
    let x: Vec<f64> = used.iter().map(|&i| (curve.n[i] as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|&i| curve.p_hat[i].ln()).collect();
    let weighted = used.iter().all(|&i| curve.se[i] > 0.0);
    let w: Vec<f64> = if weighted {
        used.iter()
            .map(|&i| (curve.p_hat[i] / curve.se[i]).powi(2))
            .collect()
    } else {
        vec![1.0; used.len()]
    };
    let line = weighted_line(&x, &y, &w, weighted)?;
    let kappa_ratio: Vec<f64> = used
        .iter()
        .map(|&i| (curve.n[i] as f64).powf(p / 2.0) * curve.p_hat[i])
        .collect();
    Ok(FitResult {
        slope: line.slope,
        slope_se: line.slope_se,
        intercept: line.intercept,
        r_squared: line.r_squared,
        max_abs_residual: line.max_abs_residual,
        n: used.iter().map(|&i| curve.n[i]).collect(),
        kappa_spread: spread(&kappa_ratio),
        kappa_ratio,
    })
}

fn spread(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    max / min
}

/// `n^{p/2} P̂_x(τ > n) / V̂(x)` across starting points at a common horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaReport {
    pub n: u64,
    pub x0: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    /// `max / min` of `kappa`; exactly 1 for a single start.
    pub spread: f64,
}

/// κ estimates at the largest grid point shared by every curve.
pub fn kappa_constancy(curves: &[SurvivalCurve], v_hat: &[f64], p: f64) -> Result<KappaReport> {
    if curves.is_empty() {
        return Err(Error::EmptySample);
    }
    if curves.len() != v_hat.len() {
        return Err(Error::DimensionMismatch {
            expected: curves.len(),
            got: v_hat.len(),
        });
    }
    let n = curves[0]
        .n
        .iter()
        .rev()
        .find(|m| curves.iter().all(|c| c.n.contains(m)))
        .copied()
        .ok_or_else(|| Error::InvalidArgument("curves share no grid point".into()))?;
    let mut kappa = Vec::with_capacity(curves.len());
    for (curve, &v) in curves.iter().zip(v_hat) {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!("V̂ = {v} is not positive")));
        }
        let (p_hat, _) = curve.at(n).expect("shared grid point");
        kappa.push((n as f64).powf(p / 2.0) * p_hat / v);
    }
    Ok(KappaReport {
        n,
        x0: curves.iter().map(|c| c.provenance.x0.clone()).collect(),
        spread: spread(&kappa),
        kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ModelSpec;
    use crate::cone::ConeSpec;
    use crate::mc::Provenance;

    fn synthetic(n: &[u64], p: impl Fn(f64) -> f64, se: f64) -> SurvivalCurve {
        let p_hat: Vec<f64> = n.iter().map(|&m| p(m as f64)).collect();
        SurvivalCurve {
            n: n.to_vec(),
            se: p_hat.iter().map(|v| v * se).collect(),
            p_hat,
            paths: 1,
            provenance: Provenance {
                cone: ConeSpec::HalfLine,
                model: ModelSpec::IidLattice { dim: 1 },
                x0: vec![1.0],
                seed: 0,
            },
        }
    }

    #[test]
    fn exact_power_law_recovered() {
        let n: Vec<u64> = (4..12).map(|k| 1 << k).collect();
        for se in [0.0, 0.01] {
            let c = synthetic(&n, |m| 0.8 * m.powf(-0.37), se);
            let fit = fit_tail_exponent(&c, 1, 0.74).unwrap();
            assert!((fit.slope + 0.37).abs() < 1e-10);
            assert!((fit.r_squared - 1.0).abs() < 1e-10);
            assert!((fit.kappa_spread - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_curve_has_zero_slope() {
        let n = [16, 32, 64, 128, 256];
        let fit = fit_tail_exponent(&synthetic(&n, |_| 1.0, 0.0), 1, 0.0).unwrap();
        assert_eq!(fit.slope, 0.0);
    }

    #[test]
    fn too_few_points() {
        let n = [16, 32, 64, 128, 256];
        let err = fit_tail_exponent(&synthetic(&n, |m| 1.0 / m, 0.01), 64, 2.0).unwrap_err();
        assert_eq!(err, Error::InsufficientPoints { usable: 3, needed: 4 });
    }

    #[test]
    fn kappa_single_start_spread_is_one() {
        let c = synthetic(&[16, 64], |m| 2.0 / m.sqrt(), 0.01);
        let r = kappa_constancy(&[c], &[2.0], 1.0).unwrap();
        assert_eq!(r.spread, 1.0);
        assert!((r.kappa[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kappa_spread_is_scale_free() {
        let a = synthetic(&[16, 64], |m| 1.0 / m.sqrt(), 0.01);
        let b = synthetic(&[16, 64], |m| 3.1 / m.sqrt(), 0.01);
        let base = kappa_constancy(&[a.clone(), b.clone()], &[1.0, 3.0], 1.0).unwrap();
        let scaled = kappa_constancy(&[a, b], &[7.0, 21.0], 1.0).unwrap();
        assert!((base.spread - scaled.spread).abs() < 1e-14);
    }
}
