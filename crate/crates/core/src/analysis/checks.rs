//! Monte Carlo checks of the boundary-layer, concentration, one-step-defect and
//! truncated-mass estimates.

use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use crate::chain::{derive_seed, gamma_envelope, ChainModel};
use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};
use crate::mc::{estimate_f, estimate_survival, run_paths, walk, FEstimate, Merge, NGrid};

use super::fit::weighted_line;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn binomial_se(p: f64, paths: u64) -> f64 {
    (p * (1.0 - p) / paths as f64).sqrt()
}

/// Seed for a start point, independent of which other points are evaluated.
fn point_seed(seed: u64, x: &[f64]) -> u64 {
    x.iter().fold(seed, |s, v| derive_seed(s, v.to_bits()))
}

/// One `ε` row of the boundary-layer table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLayerRow {
    pub epsilon: f64,
    pub candidates: usize,
    pub sup: f64,
    pub sup_se: f64,
    pub argmax: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLayerReport {
    pub n: u64,
    pub grid_step: f64,
    pub paths: u64,
    pub rows: Vec<BoundaryLayerRow>,
    /// OLS slope of `log sup` against `log ε`: the empirical exponent `q`.
    pub slope: f64,
    pub slope_se: f64,
}

/// `sup P̂_x(τ > n)` over grid points with `d(x) ≤ ε√n` and `|x| ≤ √n`.
///
/// Start points lie on `1 + grid_step · ℤ` in every coordinate. Each point is
/// simulated once with a seed derived from its coordinates, so the sups are
/// nested across `ε`.
#[allow(clippy::too_many_arguments)]
pub fn boundary_layer_check(
    model: &ChainModel,
    cone: &Cone,
    n: u64,
    epsilons: &[f64],
    grid_step: f64,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<BoundaryLayerReport> {
    check_dim(model.dim(), cone.dim())?;
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument("ε grid must be nonempty within (0, 1]".into()));
    }
    if !(grid_step > 0.0) {
        return Err(Error::InvalidArgument("grid step must be positive".into()));
    }
    let root = (n as f64).sqrt();
    let eps_max = epsilons.iter().cloned().fold(0.0, f64::max);
    let lo = ((-root - 1.0) / grid_step).ceil() as i64;
    let hi = ((root - 1.0) / grid_step).floor() as i64;
    let dim = cone.dim();
    let side = (hi - lo + 1).max(0) as usize;
    let grid = NGrid::new(vec![n])?;
    // (boundary distance, P̂, se, x)
    let mut evaluated: Vec<(f64, f64, f64, Vec<f64>)> = Vec::new();
    for idx in 0..side.pow(dim as u32) {
        let mut rest = idx;
        let x: Vec<f64> = (0..dim)
            .map(|_| {
                let j = lo + (rest % side) as i64;
                rest /= side;
                1.0 + grid_step * j as f64
            })
            .collect();
        let d = cone.boundary_distance(&x);
        if !cone.contains(&x) || d > eps_max * root || norm(&x) > root {
            continue;
        }
        let curve = estimate_survival(model, cone, &x, &grid, paths, point_seed(seed, &x), threads)?;
        evaluated.push((d, curve.p_hat[0], curve.se[0], x));
    }
    let mut rows: Vec<BoundaryLayerRow> = epsilons
        .iter()
        .map(|&epsilon| {
            let mut row = BoundaryLayerRow {
                epsilon,
                candidates: 0,
                sup: 0.0,
                sup_se: 0.0,
                argmax: Vec::new(),
            };
            for (d, p, se, x) in &evaluated {
                if *d <= epsilon * root {
                    row.candidates += 1;
                    if row.argmax.is_empty() || *p > row.sup {
                        row.sup = *p;
                        row.sup_se = *se;
                        row.argmax = x.clone();
                    }
                }
            }
            row
        })
        .collect();
    rows.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let usable: Vec<&BoundaryLayerRow> = rows.iter().filter(|r| r.sup > 0.0).collect();
    let (slope, slope_se) = if usable.len() >= 2 {
        let x: Vec<f64> = usable.iter().map(|r| r.epsilon.ln()).collect();
        let y: Vec<f64> = usable.iter().map(|r| r.sup.ln()).collect();
        let fit = weighted_line(&x, &y, &vec![1.0; x.len()], false)?;
        (fit.slope, fit.slope_se)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(BoundaryLayerReport {
        n,
        grid_step,
        paths,
        rows,
        slope,
        slope_se,
    })
}

/// Concentration bound evaluated in the statement form (second moment omitted)
/// and in the proof form (with `E|Y|²`), both clipped to 1.
fn fuk_exponential_term(d: f64, n: f64, z: f64, y: f64, second_moment: f64) -> (f64, f64) {
    let a = z / (d.sqrt() * y);
    let log_term = |m: f64| (2.0 * d).ln() + a + a * (n * d.sqrt() * m / (z * y)).ln();
    (log_term(1.0).exp().min(1.0), log_term(second_moment).exp().min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FukNagaevRow {
    pub z: f64,
    pub y: f64,
    /// `P̂(|X(n) − x| > z)`.
    pub lhs: f64,
    pub lhs_se: f64,
    /// `P̂(|X(n) − x| > z, max_k |X(k) − X(k−1)| < y)`.
    pub lhs_truncated: f64,
    pub lhs_truncated_se: f64,
    pub rhs_statement: f64,
    pub rhs_proof: f64,
    /// `n P(Y > y)` from the model's majorant.
    pub jump_term: f64,
    pub pass_truncated: bool,
    pub pass_full: bool,
    pub pass_statement_form: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FukNagaevReport {
    pub n: u64,
    pub paths: u64,
    pub second_moment: f64,
    pub rows: Vec<FukNagaevRow>,
    /// Rows failing either proof-form verdict.
    pub violations: usize,
}

/// Empirical check of the truncated and full concentration bounds on free walks.
///
/// Verdicts use the proof form: `lhŝ − 3σ ≤ rhs`.
#[allow(clippy::too_many_arguments)]
pub fn fuk_nagaev_check(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    n: u64,
    z_values: &[f64],
    y_values: &[f64],
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<FukNagaevReport> {
    check_dim(model.dim(), cone.dim())?;
    check_dim(model.dim(), x0.len())?;
    if z_values.iter().chain(y_values).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("z and y must be positive".into()));
    }
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let dim = model.dim();
    // (|X(n) − x|, max increment norm) per path, in path order
    let records: Vec<(f64, f64)> = run_paths(paths, threads, seed, Vec::new, |_, rng, acc| {
        let mut x = x0.to_vec();
        let mut inc = vec![0.0; dim];
        let mut max_inc: f64 = 0.0;
        for _ in 0..n {
            model.sample_increment(cone, &x, rng, &mut inc);
            max_inc = max_inc.max(norm(&inc));
            for (v, i) in x.iter_mut().zip(&inc) {
                *v += i;
            }
        }
        let disp: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        acc.push((disp, max_inc));
    });
    let second_moment = model.majorant_second_moment();
    let nf = paths as f64;
    let mut rows = Vec::new();
    for &z in z_values {
        for &y in y_values {
            let mut full = 0u64;
            let mut truncated = 0u64;
            for &(disp, max_inc) in &records {
                if disp > z {
                    full += 1;
                    if max_inc < y {
                        truncated += 1;
                    }
                }
            }
            let lhs = full as f64 / nf;
            let lhs_truncated = truncated as f64 / nf;
            let lhs_se = binomial_se(lhs, paths);
            let lhs_truncated_se = binomial_se(lhs_truncated, paths);
            let (rhs_statement, rhs_proof) =
                fuk_exponential_term(dim as f64, n as f64, z, y, second_moment);
            let jump_term = n as f64 * model.majorant_tail(y)?;
            rows.push(FukNagaevRow {
                z,
                y,
                lhs,
                lhs_se,
                lhs_truncated,
                lhs_truncated_se,
                rhs_statement,
                rhs_proof,
                jump_term,
                pass_truncated: lhs_truncated - 3.0 * lhs_truncated_se <= rhs_proof,
                pass_full: lhs - 3.0 * lhs_se <= (rhs_proof + jump_term).min(1.0),
                pass_statement_form: lhs_truncated - 3.0 * lhs_truncated_se <= rhs_statement
                    && lhs - 3.0 * lhs_se <= (rhs_statement + jump_term).min(1.0),
            });
        }
    }
    let violations = rows.iter().filter(|r| !(r.pass_truncated && r.pass_full)).count();
    Ok(FukNagaevReport {
        n,
        paths,
        second_moment,
        rows,
        violations,
    })
}

/// Kendall's tau-a of `y` against `x`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> f64 {
    let k = x.len().min(y.len());
    if k < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            s += sign(x[j] - x[i]) * sign(y[j] - y[i]);
        }
    }
    s / (k * (k - 1) / 2) as f64
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `β(x) = |x|^{p−1} d(x)^{−1} γ(d(x))`.
pub fn beta_envelope(cone: &Cone, x: &[f64]) -> f64 {
    let d = cone.boundary_distance(x);
    norm(x).powf(cone.exponent() - 1.0) * gamma_envelope(d) / d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FEnvelopeRow {
    pub x: Vec<f64>,
    pub distance: f64,
    pub f: FEstimate,
    pub beta: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FEnvelopeReport {
    /// Rows sorted by boundary distance.
    pub rows: Vec<FEnvelopeRow>,
    /// Kendall tau of the ratio against `d(x)`; a nonincreasing trend has tau ≤ 0.
    pub kendall_tau: f64,
}

/// Tabulates `|f̂(x)| / β(x)` along the given points.
pub fn f_envelope_check(
    model: &ChainModel,
    cone: &Cone,
    points: &[Vec<f64>],
    samples: u64,
    seed: u64,
) -> Result<FEnvelopeReport> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut rows = Vec::with_capacity(points.len());
    for (i, x) in points.iter().enumerate() {
        let f = estimate_f(model, cone, x, samples, derive_seed(seed, i as u64))?;
        let beta = beta_envelope(cone, x);
        rows.push(FEnvelopeRow {
            x: x.clone(),
            distance: cone.boundary_distance(x),
            ratio: f.magnitude() / beta,
            f,
            beta,
        });
    }
    rows.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    let d: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let r: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    Ok(FEnvelopeReport {
        kendall_tau: kendall_tau(&d, &r),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedMassRow {
    pub a: f64,
    /// `Ê_x[u(X(n)); τ > n, |X(n)| > A√n] / u(x + R x₀)`.
    pub ratio: f64,
    pub se: f64,
    /// `ratio` divided by its untruncated value.
    pub fraction: f64,
    /// Limit of `fraction` under the conditional limit law.
    pub limit_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruncatedMassReport {
    pub n: u64,
    pub paths: u64,
    pub shift: f64,
    pub denominator: f64,
    pub untruncated: f64,
    pub rows: Vec<TruncatedMassRow>,
    /// Ratios are nonincreasing in `A`.
    pub monotone: bool,
}

#[derive(Debug, Clone)]
struct Sums {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Merge for Sums {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.sum.iter_mut().zip(other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(other.sum_sq) {
            *a += b;
        }
        self
    }
}

/// Killed `u`-mass beyond `A√n`, relative to `u(x + R x₀)` with `x₀` the cone axis.
#[allow(clippy::too_many_arguments)]
pub fn truncated_mass_check(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    n: u64,
    a_grid: &[f64],
    shift: f64,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<TruncatedMassReport> {
    check_dim(model.dim(), cone.dim())?;
    check_dim(cone.dim(), x0.len())?;
    if !cone.contains(x0) {
        return Err(Error::InvalidArgument(format!("x0 {x0:?} not interior")));
    }
    if a_grid.is_empty() || a_grid.iter().any(|&a| !(a >= 0.0)) {
        return Err(Error::InvalidArgument("A grid must be nonempty and ≥ 0".into()));
    }
    if paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let grid = NGrid::new(vec![n])?;
    let root = (n as f64).sqrt();
    // slot 0 is the untruncated expectation
    let levels: Vec<f64> = std::iter::once(-1.0).chain(a_grid.iter().copied()).collect();
    let k = levels.len();
    let acc = run_paths(
        paths,
        threads,
        seed,
        || Sums {
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
        },
        |_, rng, acc| {
            let mut x = x0.to_vec();
            let mut end = None;
            walk(model, cone, &mut x, &grid, rng, |_, state| {
                end = Some((cone.harmonic_u(state), norm(state) / root));
            });
            if let Some((u, r)) = end {
                for (i, &a) in levels.iter().enumerate() {
                    if r > a {
                        acc.sum[i] += u;
                        acc.sum_sq[i] += u * u;
                    }
                }
            }
        },
    );
    let shifted: Vec<f64> = x0.iter().zip(cone.axis()).map(|(v, a)| v + shift * a).collect();
    let denominator = cone.harmonic_u(&shifted);
    let nf = paths as f64;
    let stats: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let m = acc.sum[i] / nf;
            let se = ((acc.sum_sq[i] / nf - m * m).max(0.0) / (nf - 1.0)).sqrt();
            (m / denominator, se / denominator)
        })
        .collect();
    let untruncated = stats[0].0;
    let shape = cone.exponent() + 0.5 * cone.dim() as f64;
    let rows: Vec<TruncatedMassRow> = a_grid
        .iter()
        .zip(&stats[1..])
        .map(|(&a, &(ratio, se))| TruncatedMassRow {
            a,
            ratio,
            se,
            fraction: if untruncated > 0.0 { ratio / untruncated } else { 0.0 },
            limit_fraction: if a > 0.0 { gamma_ur(shape, 0.5 * a * a) } else { 1.0 },
        })
        .collect();
    let mut order: Vec<&TruncatedMassRow> = rows.iter().collect();
    order.sort_by(|p, q| p.a.total_cmp(&q.a));
    let monotone = order.windows(2).all(|w| w[1].ratio <= w[0].ratio);
    Ok(TruncatedMassReport {
        n,
        paths,
        shift,
        denominator,
        untruncated,
        rows,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn kendall_tau_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau(&x, &[4.0, 3.0, 2.0, 1.0]), -1.0);
        assert_eq!(kendall_tau(&x, &[1.0, 2.0, 3.0, 4.0]), 1.0);
        assert_eq!(kendall_tau(&x, &[0.0; 4]), 0.0);
    }

    #[test]
    fn half_line_f_is_zero() {
        let pts: Vec<Vec<f64>> = [2.0, 4.0, 8.0, 16.0].iter().map(|&v| vec![v]).collect();
        let r = f_envelope_check(&ChainModel::lattice(1), &Cone::half_line(), &pts, 0, 1).unwrap();
        assert!(r.rows.iter().all(|row| row.ratio == 0.0));
        assert_eq!(r.kendall_tau, 0.0);
    }

    #[test]
    fn drifted_half_line_defect_matches_closed_form() {
        use crate::chain::ModelSpec;
        let model = ChainModel::perturbed(ModelSpec::IidLattice { dim: 1 }, 1.0, 1.0).unwrap();
        let pts: Vec<Vec<f64>> = [4.0, 8.0, 16.0, 32.0].iter().map(|&v| vec![v]).collect();
        let r = f_envelope_check(&model, &Cone::half_line(), &pts, 0, 1).unwrap();
        for row in &r.rows {
            let d = row.distance;
            assert!((row.f.value - 1.0 / (1.0 + d).powi(2)).abs() < 1e-12);
            assert!((row.beta - gamma_envelope(d) / d).abs() < 1e-15);
        }
        assert!(r.kendall_tau < 0.0);
    }

    #[test]
    fn wedge_ratios_decrease() {
        let cone = Cone::wedge(2.0 * PI / 3.0).unwrap();
        let theta = PI / 3.0;
        let pts: Vec<Vec<f64>> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&d| {
                let r = d / theta.sin();
                vec![r * theta.cos(), r * theta.sin()]
            })
            .collect();
        let r = f_envelope_check(&ChainModel::lattice(2), &cone, &pts, 0, 1).unwrap();
        for (row, d) in r.rows.iter().zip([8.0, 16.0, 32.0, 64.0]) {
            assert!((row.distance - d).abs() < 1e-9);
        }
        assert_eq!(r.kendall_tau, -1.0);
    }

    #[test]
    fn truncation_below_lattice_step_is_empty() {
        let rep = fuk_nagaev_check(
            &ChainModel::lattice(2),
            &Cone::orthant(2).unwrap(),
            &[0.0, 0.0],
            100,
            &[5.0, 10.0],
            &[1.0],
            2000,
            4,
            1,
        )
        .unwrap();
        assert!(rep.rows.iter().all(|r| r.lhs_truncated == 0.0));
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn proof_form_dominates_statement_form() {
        let (s, p) = fuk_exponential_term(2.0, 1000.0, 200.0, 10.0, 2.0);
        assert!(p >= s);
    }

    #[test]
    fn untruncated_level_is_full_expectation() {
        let rep = truncated_mass_check(
            &ChainModel::lattice(1),
            &Cone::half_line(),
            &[3.0],
            64,
            &[0.0, 10.0],
            0.0,
            20_000,
            5,
            1,
        )
        .unwrap();
        assert_eq!(rep.rows[0].ratio, rep.untruncated);
        assert_eq!(rep.rows[1].ratio, 0.0);
        assert!(rep.monotone);
        // E[X(n); τ > n] = x for the simple walk
        assert!((rep.untruncated - 1.0).abs() < 4.0 * rep.rows[0].se);
    }
}
