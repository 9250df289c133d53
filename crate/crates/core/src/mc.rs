//! Reproducible Monte Carlo estimators for killed chains.
//!
//! Path `i` always draws from stream `i` of the run seed. Paths are grouped into
//! fixed chunks of [`CHUNK_PATHS`]; each chunk is accumulated serially and chunk
//! results are combined by a fixed pairwise tree, so every estimate is bitwise
//! identical for any thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainModel, ModelSpec, PathRng};
use crate::cone::{Cone, ConeSpec};
use crate::error::{check_dim, Error, Result};

pub const CHUNK_PATHS: u64 = 1024;

/// Accumulators combined by the tree reduction.
pub trait Merge: Sized {
    fn merge(self, other: Self) -> Self;
}

impl<T> Merge for Vec<T> {
    fn merge(mut self, mut other: Self) -> Self {
        self.append(&mut other);
        self
    }
}

/// Runs `per_path` for paths `0..paths`, each with its own stream of `seed`.
pub fn run_paths<A, I, F>(paths: u64, threads: usize, seed: u64, init: I, per_path: F) -> A
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    F: Fn(u64, &mut PathRng, &mut A) + Sync,
{
    run_path_range(0, paths, threads, seed, init, per_path)
}

/// As [`run_paths`] for path ids `first..first + paths`.
pub fn run_path_range<A, I, F>(
    first: u64,
    paths: u64,
    threads: usize,
    seed: u64,
    init: I,
    per_path: F,
) -> A
where
    A: Merge + Send,
    I: Fn() -> A + Sync,
    F: Fn(u64, &mut PathRng, &mut A) + Sync,
{
    let chunks = paths.div_ceil(CHUNK_PATHS).max(1);
    let run_chunk = |c: u64| {
        let mut acc = init();
        let end = first + ((c + 1) * CHUNK_PATHS).min(paths);
        for path in first + c * CHUNK_PATHS..end {
            let mut rng = PathRng::for_path(seed, path);
            per_path(path, &mut rng, &mut acc);
        }
        acc
    };
    let parts: Vec<A> = if threads == 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if threads > 0 {
            builder = builder.num_threads(threads);
        }
        match builder.build() {
            Ok(pool) => pool.install(|| (0..chunks).into_par_iter().map(run_chunk).collect()),
            Err(_) => (0..chunks).map(run_chunk).collect(),
        }
    };
    tree_reduce(parts).unwrap_or_else(init)
}

/// Pairwise reduction in a fixed order: `((a0 a1) (a2 a3)) ...`.
pub fn tree_reduce<A: Merge>(mut level: Vec<A>) -> Option<A> {
    while level.len() > 1 {
        let mut next = Vec::with_capacity(level.len().div_ceil(2));
        let mut it = level.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a.merge(b)),
                None => next.push(a),
            }
        }
        level = next;
    }
    level.pop()
}

/// Sorted checkpoint times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NGrid(Vec<u64>);

impl NGrid {
    pub fn new(n: Vec<u64>) -> Result<Self> {
        if n.is_empty() {
            return Err(Error::InvalidArgument("empty n-grid".into()));
        }
        if n.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "n-grid must be strictly increasing: {n:?}"
            )));
        }
        Ok(Self(n))
    }

    /// `2^from, 2^(from+1), …, 2^to`.
    pub fn dyadic(from: u32, to: u32) -> Result<Self> {
        if from > to || to > 62 {
            return Err(Error::InvalidArgument(format!("bad dyadic range {from}..{to}")));
        }
        Self::new((from..=to).map(|k| 1u64 << k).collect())
    }

    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> u64 {
        *self.0.last().expect("grid is nonempty")
    }
}

/// Outcome of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitRecord {
    /// First `n ≥ 1` with `X(n) ∉ K`, `None` if the path survived the horizon.
    pub exit_time: Option<u64>,
    pub terminal_state: Vec<f64>,
    /// `u(X(n))` at each checkpoint, 0 for checkpoints at or after the exit.
    pub checkpoint_u: Vec<f64>,
}

impl ExitRecord {
    pub fn survived(&self, n: u64) -> bool {
        self.exit_time.is_none_or(|t| t > n)
    }
}

/// Simulates one path up to the last checkpoint or the exit, whichever is first.
pub fn simulate_path(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    grid: &NGrid,
    rng: &mut PathRng,
) -> ExitRecord {
    let mut x = x0.to_vec();
    let mut checkpoint_u = vec![0.0; grid.len()];
    let exit_time = walk(model, cone, &mut x, grid, rng, |i, state| {
        checkpoint_u[i] = cone.harmonic_u(state);
    });
    ExitRecord {
        exit_time,
        terminal_state: x,
        checkpoint_u,
    }
}

/// Core stepping loop: calls `at_checkpoint(i, X(nᵢ))` for every checkpoint reached
/// alive and returns the exit time. `x` is left at the terminal state.
#[inline]
pub(crate) fn walk<F: FnMut(usize, &[f64])>(
    model: &ChainModel,
    cone: &Cone,
    x: &mut [f64],
    grid: &NGrid,
    rng: &mut PathRng,
    mut at_checkpoint: F,
) -> Option<u64> {
    let times = grid.values();
    let mut next = 0;
    while next < times.len() && times[next] == 0 {
        at_checkpoint(next, x);
        next += 1;
    }
    let horizon = grid.max();
    for t in 1..=horizon {
        model.step_in_place(cone, x, rng);
        if !cone.contains(x) {
            return Some(t);
        }
        if times[next] == t {
            at_checkpoint(next, x);
            next += 1;
        }
    }
    None
}

/// Where an estimate came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub cone: ConeSpec,
    pub model: ModelSpec,
    pub x0: Vec<f64>,
    pub seed: u64,
}

/// Survival estimates over a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub n: Vec<u64>,
    pub p_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub paths: u64,
    pub provenance: Provenance,
}

impl SurvivalCurve {
    pub fn at(&self, n: u64) -> Option<(f64, f64)> {
        self.n
            .iter()
            .position(|&m| m == n)
            .map(|i| (self.p_hat[i], self.se[i]))
    }
}

fn binomial_se(p: f64, paths: u64) -> f64 {
    (p * (1.0 - p) / paths as f64).sqrt()
}

#[derive(Debug, Clone)]
struct Counts(Vec<u64>);

impl Merge for Counts {
    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.0.iter_mut().zip(other.0) {
            *a += b;
        }
        self
    }
}

/// Common preconditions of the estimators.
fn check_start(model: &ChainModel, cone: &Cone, x0: &[f64]) -> Result<()> {
    check_dim(model.dim(), cone.dim())?;
    check_dim(cone.dim(), x0.len())?;
    if !cone.contains(x0) {
        return Err(Error::InvalidArgument(format!("x0 {x0:?} not interior")));
    }
    Ok(())
}

/// `P̂_x(τ > n)` on `grid` from `paths` independent paths.
pub fn estimate_survival(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    grid: &NGrid,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<SurvivalCurve> {
    check_start(model, cone, x0)?;
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let times = grid.values();
    let counts = run_paths(
        paths,
        threads,
        seed,
        || Counts(vec![0; times.len()]),
        |_, rng, acc| {
            let mut x = x0.to_vec();
            let exit = walk(model, cone, &mut x, grid, rng, |_, _| {});
            for (c, &n) in acc.0.iter_mut().zip(times) {
                if exit.is_none_or(|t| t > n) {
                    *c += 1;
                }
            }
        },
    );
    let p_hat: Vec<f64> = counts.0.iter().map(|&c| c as f64 / paths as f64).collect();
    let se = p_hat.iter().map(|&p| binomial_se(p, paths)).collect();
    Ok(SurvivalCurve {
        n: times.to_vec(),
        p_hat,
        se,
        paths,
        provenance: Provenance {
            cone: cone.spec().clone(),
            model: model.spec().clone(),
            x0: x0.to_vec(),
            seed,
        },
    })
}

#[derive(Debug, Clone)]
struct Moments {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl Merge for Moments {
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

/// Relative agreement floor for plateau detection.
pub const PLATEAU_REL_TOL: f64 = 1e-3;

/// Three consecutive checkpoints that agree pairwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau {
    /// Index of the first window member.
    pub start: usize,
    pub window: [u64; 3],
    pub value: f64,
    /// Largest pairwise agreement threshold in the window.
    pub band: f64,
}

/// First window of three consecutive values whose pairwise gaps are below
/// `max(2 · pooled se, PLATEAU_REL_TOL · relative)`. The plateau value is the
/// window mean, which lies within `band` of every member.
pub fn detect_plateau(n: &[u64], values: &[f64], se: &[f64]) -> Option<Plateau> {
    let threshold = |i: usize, j: usize| {
        let pooled = (se[i] * se[i] + se[j] * se[j]).sqrt();
        (2.0 * pooled).max(PLATEAU_REL_TOL * values[i].abs().max(values[j].abs()))
    };
    (0..values.len().saturating_sub(2)).find_map(|s| {
        let pairs = [(s, s + 1), (s, s + 2), (s + 1, s + 2)];
        pairs
            .iter()
            .all(|&(i, j)| (values[i] - values[j]).abs() < threshold(i, j))
            .then(|| Plateau {
                start: s,
                window: [n[s], n[s + 1], n[s + 2]],
                value: (values[s] + values[s + 1] + values[s + 2]) / 3.0,
                band: pairs
                    .iter()
                    .map(|&(i, j)| threshold(i, j))
                    .fold(0.0, f64::max),
            })
    })
}

/// Killed expectations `E_x[u(X(n)); τ > n]` and the plateau read off as `V̂(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VEstimate {
    pub n: Vec<u64>,
    pub v_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub paths: u64,
    pub plateau: Option<Plateau>,
    /// Plateau value, or the last checkpoint when no plateau was found.
    pub value: f64,
    pub stable: bool,
    pub provenance: Provenance,
}

pub fn estimate_v(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    grid: &NGrid,
    paths: u64,
    seed: u64,
    threads: usize,
) -> Result<VEstimate> {
    estimate_killed(model, cone, x0, grid, paths, seed, threads, |x| cone.harmonic_u(x))
}

/// As [`estimate_v`] with an arbitrary test function in place of `u`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_killed<G>(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    grid: &NGrid,
    paths: u64,
    seed: u64,
    threads: usize,
    g: G,
) -> Result<VEstimate>
where
    G: Fn(&[f64]) -> f64 + Sync,
{
    check_start(model, cone, x0)?;
    if paths < 2 {
        return Err(Error::InvalidArgument("need at least two paths".into()));
    }
    let times = grid.values();
    let k = times.len();
    let acc = run_paths(
        paths,
        threads,
        seed,
        || Moments {
            sum: vec![0.0; k],
            sum_sq: vec![0.0; k],
        },
        |_, rng, acc| {
            let mut x = x0.to_vec();
            walk(model, cone, &mut x, grid, rng, |i, state| {
                let v = g(state);
                acc.sum[i] += v;
                acc.sum_sq[i] += v * v;
            });
        },
    );
    let nf = paths as f64;
    let v_hat: Vec<f64> = acc.sum.iter().map(|s| s / nf).collect();
    let se: Vec<f64> = v_hat
        .iter()
        .zip(&acc.sum_sq)
        .map(|(m, s2)| ((s2 / nf - m * m).max(0.0) / (nf - 1.0)).sqrt())
        .collect();
    let plateau = detect_plateau(times, &v_hat, &se);
    let value = plateau
        .as_ref()
        .map_or(*v_hat.last().expect("nonempty grid"), |p| p.value);
    Ok(VEstimate {
        n: times.to_vec(),
        stable: plateau.is_some(),
        v_hat,
        se,
        paths,
        plateau,
        value,
        provenance: Provenance {
            cone: cone.spec().clone(),
            model: model.spec().clone(),
            x0: x0.to_vec(),
            seed,
        },
    })
}

/// One-step defect `f(x) = E_x[u(X(1))] − u(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FEstimate {
    pub value: f64,
    /// Monte Carlo standard error; 0 for exact enumeration.
    pub se: f64,
    pub exact: bool,
    /// Floating-point resolution of an enumerated value; `|value| ≤ roundoff` is indistinguishable from 0.
    pub roundoff: f64,
}

impl FEstimate {
    /// `|f̂|`, with enumerated values inside their rounding floor reported as 0.
    pub fn magnitude(&self) -> f64 {
        if self.exact && self.value.abs() <= self.roundoff {
            0.0
        } else {
            self.value.abs()
        }
    }
}

/// Exact enumeration for finite-support models, otherwise `samples` one-step draws.
pub fn estimate_f(
    model: &ChainModel,
    cone: &Cone,
    x: &[f64],
    samples: u64,
    seed: u64,
) -> Result<FEstimate> {
    check_start(model, cone, x)?;
    let centre = cone.harmonic_u(x);
    let mut probe = vec![0.0; x.len()];
    if let Some(support) = model.finite_support_at(cone, x) {
        let mut mean = 0.0;
        let mut scale = centre.abs();
        for (inc, w) in &support {
            for ((p, a), b) in probe.iter_mut().zip(x).zip(inc) {
                *p = a + b;
            }
            let v = cone.harmonic_u(&probe);
            mean += w * v;
            scale += w * v.abs();
        }
        return Ok(FEstimate {
            value: mean - centre,
            se: 0.0,
            exact: true,
            roundoff: 16.0 * f64::EPSILON * scale,
        });
    }
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let mut rng = PathRng::for_path(seed, 0);
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..samples {
        probe.copy_from_slice(x);
        model.step_in_place(cone, &mut probe, &mut rng);
        let v = cone.harmonic_u(&probe) - centre;
        sum += v;
        sum_sq += v * v;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    Ok(FEstimate {
        value: mean,
        se: ((sum_sq / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt(),
        exact: false,
        roundoff: 0.0,
    })
}

/// Attempt cap for survivor-conditioned sampling.
pub const MAX_ATTEMPTS: u64 = 1_000_000_000;
/// Survival rate below which conditioning by rejection is refused.
pub const MIN_SURVIVAL_RATE: f64 = 1e-4;
const BATCH_PATHS: u64 = 1 << 16;

/// Survivor endpoints `X(n)/√n`, ordered by path id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointSample {
    pub n: u64,
    pub path_ids: Vec<u64>,
    pub scaled: Vec<Vec<f64>>,
    pub attempts: u64,
}

/// Rejection sampling of `X(n)/√n` given `τ > n` until `target` survivors are collected.
#[allow(clippy::too_many_arguments)]
pub fn conditional_endpoint_sample(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    n: u64,
    target: usize,
    seed: u64,
    threads: usize,
) -> Result<EndpointSample> {
    conditional_endpoint_sample_capped(model, cone, x0, n, target, seed, threads, MAX_ATTEMPTS)
}

#[allow(clippy::too_many_arguments)]
pub fn conditional_endpoint_sample_capped(
    model: &ChainModel,
    cone: &Cone,
    x0: &[f64],
    n: u64,
    target: usize,
    seed: u64,
    threads: usize,
    max_attempts: u64,
) -> Result<EndpointSample> {
    check_start(model, cone, x0)?;
    if n == 0 {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let grid = NGrid::new(vec![n])?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut path_ids = Vec::with_capacity(target);
    let mut scaled = Vec::with_capacity(target);
    let mut attempts = 0u64;
    while path_ids.len() < target {
        if attempts >= max_attempts {
            return Err(Error::SurvivalTooRare {
                survivors: path_ids.len(),
                attempts,
            });
        }
        if attempts >= 1_000_000 && (path_ids.len() as f64) < MIN_SURVIVAL_RATE * attempts as f64 {
            return Err(Error::SurvivalTooRare {
                survivors: path_ids.len(),
                attempts,
            });
        }
        let batch = BATCH_PATHS.min(max_attempts - attempts);
        let survivors: Vec<(u64, Vec<f64>)> = run_path_range(
            attempts,
            batch,
            threads,
            seed,
            Vec::new,
            |id, rng, acc: &mut Vec<(u64, Vec<f64>)>| {
                let mut x = x0.to_vec();
                if walk(model, cone, &mut x, &grid, rng, |_, _| {}).is_none() {
                    acc.push((id, x.iter().map(|v| v * scale).collect()));
                }
            },
        );
        attempts += batch;
        for (id, z) in survivors {
            if path_ids.len() == target {
                break;
            }
            path_ids.push(id);
            scaled.push(z);
        }
    }
    Ok(EndpointSample {
        n,
        path_ids,
        scaled,
        attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srw() -> ChainModel {
        ChainModel::lattice(1)
    }

    #[test]
    fn grid_validation() {
        assert!(NGrid::new(vec![]).is_err());
        assert!(NGrid::new(vec![4, 4]).is_err());
        assert_eq!(NGrid::dyadic(2, 4).unwrap().values(), &[4, 8, 16]);
    }

    #[test]
    fn zero_horizon_survives() {
        let c = estimate_survival(
            &ChainModel::gaussian(1),
            &Cone::half_line(),
            &[0.3],
            &NGrid::new(vec![0]).unwrap(),
            1000,
            1,
            1,
        )
        .unwrap();
        assert_eq!(c.p_hat, vec![1.0]);
        assert_eq!(c.se, vec![0.0]);
    }

    #[test]
    fn two_step_survival_matches_half() {
        let c = estimate_survival(
            &srw(),
            &Cone::half_line(),
            &[1.0],
            &NGrid::new(vec![2]).unwrap(),
            1_000_000,
            17,
            1,
        )
        .unwrap();
        let (p, se) = c.at(2).unwrap();
        assert!((p - 0.5).abs() < 3.0 * se, "{p}");
    }

    #[test]
    fn exit_record_invariants() {
        let cone = Cone::orthant(2).unwrap();
        let model = ChainModel::lattice(2);
        let grid = NGrid::dyadic(0, 6).unwrap();
        for path in 0..200 {
            let mut rng = PathRng::for_path(3, path);
            let rec = simulate_path(&model, &cone, &[2.0, 1.0], &grid, &mut rng);
            match rec.exit_time {
                Some(t) => {
                    assert!(!cone.contains(&rec.terminal_state));
                    for (i, &n) in grid.values().iter().enumerate() {
                        if n >= t {
                            assert_eq!(rec.checkpoint_u[i], 0.0);
                        } else {
                            assert!(rec.checkpoint_u[i] > 0.0);
                        }
                    }
                }
                None => assert!(cone.contains(&rec.terminal_state)),
            }
        }
    }

    #[test]
    fn survival_curve_is_monotone() {
        let c = estimate_survival(
            &ChainModel::heavy_tail(2, 3.5).unwrap(),
            &Cone::wedge(2.0).unwrap(),
            &[0.5, 1.0],
            &NGrid::dyadic(0, 8).unwrap(),
            5000,
            5,
            2,
        )
        .unwrap();
        assert!(c.p_hat.windows(2).all(|w| w[1] <= w[0]));
        assert!(c.p_hat.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn thread_count_does_not_change_estimates() {
        let grid = NGrid::dyadic(2, 7).unwrap();
        let model = ChainModel::gaussian(2);
        let cone = Cone::wedge(1.0).unwrap();
        let x = [2.0, 0.8];
        let a = estimate_v(&model, &cone, &x, &grid, 5000, 9, 1).unwrap();
        let b = estimate_v(&model, &cone, &x, &grid, 5000, 9, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn half_line_identity_is_a_martingale() {
        let grid = NGrid::dyadic(2, 9).unwrap();
        let v = estimate_v(&srw(), &Cone::half_line(), &[5.0], &grid, 100_000, 21, 1).unwrap();
        for (m, se) in v.v_hat.iter().zip(&v.se) {
            assert!((m - 5.0).abs() < 3.5 * se, "{m} ± {se}");
        }
        let p = v.plateau.expect("plateau");
        for i in p.start..p.start + 3 {
            assert!((p.value - v.v_hat[i]).abs() <= p.band);
        }
    }

    #[test]
    fn plateau_detection() {
        let n = [1, 2, 4, 8, 16];
        let rising = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!(detect_plateau(&n, &rising, &[0.0; 5]).is_none());
        let flat = [1.0, 2.0, 2.0, 2.0005, 2.0];
        let p = detect_plateau(&n, &flat, &[0.0; 5]).unwrap();
        assert_eq!(p.start, 1);
        assert_eq!(p.window, [2, 4, 8]);
    }

    #[test]
    fn f_is_zero_for_half_line_walk() {
        for x in 2..20 {
            let f = estimate_f(&srw(), &Cone::half_line(), &[x as f64], 0, 0).unwrap();
            assert!(f.exact);
            assert_eq!(f.value, 0.0);
        }
    }

    #[test]
    fn f_for_quadrant_lattice_is_enumerated() {
        let cone = Cone::wedge(std::f64::consts::FRAC_PI_2).unwrap();
        let f = estimate_f(&ChainModel::lattice(2), &cone, &[4.0, 4.0], 0, 0).unwrap();
        // u = 2xy is exactly harmonic for the product walk
        assert!(f.value.abs() <= f.roundoff);
        assert_eq!(f.magnitude(), 0.0);
    }

    #[test]
    fn zero_perturbation_f_matches_base() {
        let cone = Cone::half_line();
        let base = ChainModel::gaussian(1);
        let pert = ChainModel::perturbed(ModelSpec::IidGaussian { dim: 1 }, 0.0, 1.0).unwrap();
        let a = estimate_f(&base, &cone, &[3.0], 10_000, 4).unwrap();
        let b = estimate_f(&pert, &cone, &[3.0], 10_000, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn endpoints_are_interior_and_reproducible() {
        let cone = Cone::half_line();
        let a = conditional_endpoint_sample(&srw(), &cone, &[1.0], 64, 500, 8, 1).unwrap();
        assert_eq!(a.scaled.len(), 500);
        assert!(a.scaled.iter().all(|z| z[0] > 0.0));
        assert!(a.path_ids.windows(2).all(|w| w[0] < w[1]));
        let b = conditional_endpoint_sample(&srw(), &cone, &[1.0], 64, 500, 8, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rare_survival_is_refused() {
        let err = conditional_endpoint_sample_capped(
            &srw(),
            &Cone::half_line(),
            &[1.0],
            1 << 20,
            10_000_000,
            1,
            1,
            1 << 16,
        )
        .unwrap_err();
        assert!(matches!(err, Error::SurvivalTooRare { .. }));
    }
}
