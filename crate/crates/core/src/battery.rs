//! The acceptance battery: ten numbered criteria with pinned tolerances.
//!
//! Every criterion is deterministic given the seed. Path counts can be scaled
//! down for smoke runs; tolerances never change.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI};
use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use serde_json::{json, Value};

use crate::analysis::{
    boundary_layer_check, conditional_limit_check, f_envelope_check, fit_tail_exponent,
    fuk_nagaev_check, kappa_constancy, reference_self_check,
};
use crate::chain::{derive_seed, ChainModel, PathRng};
use crate::cone::Cone;
use crate::error::Result;
use crate::mc::{
    conditional_endpoint_sample, estimate_survival, estimate_v, NGrid, SurvivalCurve, VEstimate,
};
use crate::oracle::{ballot_survival, dp_rows, DEFAULT_MEMORY_CAP_BYTES};
use crate::output::{content_hash, Table, Verdict};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryOptions {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Multiplier on every path count.
    pub scale: f64,
}

impl Default for BatteryOptions {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            threads: 0,
            scale: 1.0,
        }
    }
}

impl BatteryOptions {
    fn paths(&self, full: u64) -> u64 {
        ((full as f64 * self.scale).round() as u64).max(1000)
    }

    fn seed_for(&self, criterion: u64, part: u64) -> u64 {
        derive_seed(derive_seed(self.seed, criterion), part)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub claim: &'static str,
    pub pass: bool,
    pub summary: String,
    pub statistic: Value,
    pub threshold: Value,
    pub seconds: f64,
}

impl Outcome {
    /// One human-readable result line.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<22} {}  {}  ({:.1} s)",
            self.id,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.summary,
            self.seconds
        )
    }

    /// Report entry; wall time is left out so reports are reproducible.
    pub fn verdict(&self, opts: &BatteryOptions) -> Verdict {
        Verdict {
            name: format!("criterion-{}-{}", self.id, self.name),
            inputs: json!({ "seed": opts.seed, "scale": opts.scale }),
            statistic: self.statistic.clone(),
            threshold: self.threshold.clone(),
            pass: self.pass,
            claim: self.claim.to_string(),
        }
    }
}

struct Partial {
    pass: bool,
    summary: String,
    statistic: Value,
    threshold: Value,
}

type Criterion = fn(&BatteryOptions, &Shared) -> Result<Partial>;

pub const CRITERIA: [(u32, &str, &str); 10] = [
    (1, "oracle-agreement", "Monte Carlo survival of the simple walk matches the ballot formula"),
    (2, "tail-exponent", "P(τ > n) decays like n^{−p/2}"),
    (3, "kappa-1d", "√n P_1(τ > n) tends to √(2/π) and κ does not depend on the start"),
    (4, "harmonic-exactness", "E_x[u(X(n)); τ > n] = u(x) for the simple walks"),
    (5, "v-asymptotics", "V(x)/u(x) tends to 1 deep inside the cone"),
    (6, "conditional-limit", "survivor endpoints follow c u(z) e^{−|z|²/2}"),
    (7, "boundary-layer", "survival from within ε√n of the boundary decays in ε"),
    (8, "fuk-nagaev", "the concentration bounds hold on the standard grid"),
    (9, "f-envelope", "|f|/β does not increase along a ray"),
    (10, "infrastructure", "determinism, mass conservation, homogeneity and harmonicity"),
];

fn criterion_fn(id: u32) -> Criterion {
    match id {
        1 => c1_oracle_agreement,
        2 => c2_tail_exponent,
        3 => c3_kappa,
        4 => c4_harmonic_exactness,
        5 => c5_v_asymptotics,
        6 => c6_conditional_limit,
        7 => c7_boundary_layer,
        8 => c8_fuk_nagaev,
        9 => c9_f_envelope,
        _ => c10_infrastructure,
    }
}

/// Results shared between criteria.
#[derive(Default)]
pub struct Shared {
    half_line_tail: OnceLock<Result<SurvivalCurve>>,
}

impl Shared {
    /// Half-line simple walk from 1 on `2^8..=2^14`, half of the tail-fit budget.
    fn half_line_tail(&self, opts: &BatteryOptions) -> Result<SurvivalCurve> {
        self.half_line_tail
            .get_or_init(|| {
                estimate_survival(
                    &ChainModel::lattice(1),
                    &Cone::half_line(),
                    &[1.0],
                    &NGrid::dyadic(8, 14)?,
                    opts.paths(5_000_000),
                    opts.seed_for(2, 0),
                    opts.threads,
                )
            })
            .clone()
    }
}

/// Runs one criterion; errors become failures.
pub fn run_criterion(id: u32, opts: &BatteryOptions, shared: &Shared) -> Outcome {
    let (_, name, claim) = CRITERIA[(id as usize).clamp(1, 10) - 1];
    let start = Instant::now();
    let partial = criterion_fn(id)(opts, shared).unwrap_or_else(|e| Partial {
        pass: false,
        summary: format!("error: {e}"),
        statistic: json!({ "error": e.to_string() }),
        threshold: Value::Null,
    });
    Outcome {
        id,
        name,
        claim,
        pass: partial.pass,
        summary: partial.summary,
        statistic: partial.statistic,
        threshold: partial.threshold,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs every criterion in order, calling `report` after each.
pub fn run_all<F: FnMut(&Outcome)>(opts: &BatteryOptions, mut report: F) -> Vec<Outcome> {
    let shared = Shared::default();
    CRITERIA
        .iter()
        .map(|&(id, _, _)| {
            let o = run_criterion(id, opts, &shared);
            report(&o);
            o
        })
        .collect()
}

fn c1_oracle_agreement(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let model = ChainModel::lattice(1);
    let cone = Cone::half_line();
    let grid = NGrid::dyadic(4, 10)?;
    let curve = estimate_survival(&model, &cone, &[1.0], &grid, opts.paths(1_000_000), opts.seed_for(1, 0), opts.threads)?;
    let rows = dp_rows(&model, &cone, &[1], 1024, DEFAULT_MEMORY_CAP_BYTES)?;
    let mut within = 0;
    let mut dp_gap: f64 = 0.0;
    let mut z = Vec::new();
    for (i, &n) in curve.n.iter().enumerate() {
        let exact = ballot_survival(n / 2);
        dp_gap = dp_gap.max((rows[n as usize].survival - exact).abs());
        let zi = (curve.p_hat[i] - exact) / curve.se[i];
        within += (zi.abs() <= 3.0) as usize;
        z.push(zi);
    }
    let fraction = within as f64 / curve.n.len() as f64;
    Ok(Partial {
        pass: fraction >= 0.99 && dp_gap <= 1e-12,
        summary: format!("{within}/{} grid points within 3σ, max |z| = {:.2}, DP gap {dp_gap:.1e}",
            curve.n.len(), z.iter().map(|v| v.abs()).fold(0.0, f64::max)),
        statistic: json!({ "fraction_within_3sigma": fraction, "z": z, "dp_vs_ballot": dp_gap, "paths": curve.paths }),
        threshold: json!({ "fraction_min": 0.99, "dp_gap_max": 1e-12 }),
    })
}

fn c2_tail_exponent(opts: &BatteryOptions, shared: &Shared) -> Result<Partial> {
    let line = shared.half_line_tail(opts)?;
    let quad = estimate_survival(
        &ChainModel::lattice(2),
        &Cone::orthant(2)?,
        &[1.0, 1.0],
        &NGrid::dyadic(8, 14)?,
        opts.paths(5_000_000),
        opts.seed_for(2, 1),
        opts.threads,
    )?;
    let f1 = fit_tail_exponent(&line, 256, 1.0)?;
    let f2 = fit_tail_exponent(&quad, 256, 2.0)?;
    let ok1 = (f1.slope + 0.5).abs() <= 0.02;
    let ok2 = (f2.slope + 1.0).abs() <= 0.05;
    Ok(Partial {
        pass: ok1 && ok2,
        summary: format!("half-line slope {:.4} ± {:.4}, quadrant slope {:.4} ± {:.4}",
            f1.slope, f1.slope_se, f2.slope, f2.slope_se),
        statistic: json!({ "half_line": f1, "quadrant": f2, "paths_total": line.paths + quad.paths }),
        threshold: json!({ "half_line": [-0.52, -0.48], "quadrant": [-1.05, -0.95] }),
    })
}

fn c3_kappa(opts: &BatteryOptions, shared: &Shared) -> Result<Partial> {
    let reference = FRAC_2_PI.sqrt();
    let n = 1u64 << 14;
    let line = shared.half_line_tail(opts)?;
    let (p_hat, se) = line.at(n).expect("grid holds 2^14");
    let kappa = (n as f64).sqrt() * p_hat;
    let kappa_se = (n as f64).sqrt() * se;
    let pinned = (kappa / reference - 1.0).abs() <= 0.02;

    let model = ChainModel::lattice(1);
    let cone = Cone::half_line();
    let starts = [1.0, 3.0, 5.0];
    let mut curves = Vec::new();
    let mut v = Vec::new();
    for (i, &x) in starts.iter().enumerate() {
        let grid = NGrid::new(vec![n])?;
        curves.push(estimate_survival(&model, &cone, &[x], &grid, opts.paths(1_000_000), opts.seed_for(3, i as u64), opts.threads)?);
        let ve: VEstimate = estimate_v(&model, &cone, &[x], &NGrid::dyadic(4, 10)?, opts.paths(100_000), opts.seed_for(3, 10 + i as u64), opts.threads)?;
        v.push(ve.value);
    }
    let report = kappa_constancy(&curves, &v, 1.0)?;
    let in_band = report.kappa.iter().all(|&k| {
        let r = k / report.kappa[0];
        (0.95..=1.05).contains(&r)
    });
    Ok(Partial {
        pass: pinned && in_band,
        summary: format!("√n P̂ = {kappa:.5} ± {kappa_se:.5} vs {reference:.5}; κ spread over x∈{{1,3,5}} {:.4}", report.spread),
        statistic: json!({ "kappa": kappa, "kappa_se": kappa_se, "relative_error": kappa / reference - 1.0,
                           "constancy": report, "v_hat": v }),
        threshold: json!({ "relative_error_max": 0.02, "ratio_band": [0.95, 1.05] }),
    })
}

fn c4_harmonic_exactness(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let grid = NGrid::dyadic(4, 10)?;
    let cases: [(ChainModel, Cone, Vec<f64>, f64); 2] = [
        (ChainModel::lattice(1), Cone::half_line(), vec![5.0], 5.0),
        (ChainModel::lattice(2), Cone::orthant(2)?, vec![2.0, 3.0], 6.0),
    ];
    let mut pass = true;
    let mut stats = Vec::new();
    let mut worst_z: f64 = 0.0;
    let mut worst_dp: f64 = 0.0;
    for (k, (model, cone, x0, target)) in cases.iter().enumerate() {
        let v = estimate_v(model, cone, x0, &grid, opts.paths(100_000), opts.seed_for(4, k as u64), opts.threads)?;
        let z: Vec<f64> = v.v_hat.iter().zip(&v.se).map(|(m, s)| (m - target) / s).collect();
        let mc_ok = z.iter().all(|zi| zi.abs() <= 3.0);
        let x0i: Vec<i64> = x0.iter().map(|&c| c as i64).collect();
        let n_max = if x0.len() == 1 { 512 } else { 128 };
        let rows = dp_rows(model, cone, &x0i, n_max, DEFAULT_MEMORY_CAP_BYTES)?;
        let dp_err = rows.iter().map(|r| (r.killed_u_expectation - target).abs()).fold(0.0, f64::max);
        pass &= mc_ok && dp_err <= 1e-12;
        worst_z = worst_z.max(z.iter().map(|v| v.abs()).fold(0.0, f64::max));
        worst_dp = worst_dp.max(dp_err);
        stats.push(json!({ "x0": x0, "target": target, "v_hat": v.v_hat, "se": v.se, "z": z, "dp_max_error": dp_err, "dp_n_max": n_max }));
    }
    Ok(Partial {
        pass,
        summary: format!("max |z| = {worst_z:.2} over checkpoints, DP max error {worst_dp:.1e}"),
        statistic: Value::Array(stats),
        threshold: json!({ "z_max": 3.0, "dp_error_max": 1e-12 }),
    })
}

fn c5_v_asymptotics(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let model = ChainModel::gaussian(1);
    let cone = Cone::half_line();
    let grid = NGrid::dyadic(4, 12)?;
    let seed = opts.seed_for(5, 0);
    let mut ratios = Vec::new();
    let mut details = Vec::new();
    for x in [100.0, 1000.0] {
        let v = estimate_v(&model, &cone, &[x], &grid, opts.paths(100_000), seed, opts.threads)?;
        ratios.push(v.value / x);
        details.push(json!({ "x0": x, "value": v.value, "stable": v.stable, "plateau": v.plateau,
                             "final": v.v_hat.last(), "final_se": v.se.last() }));
    }
    let in_band = ratios.iter().all(|r| (0.97..=1.03).contains(r));
    let shrinks = (ratios[1] - 1.0).abs() < (ratios[0] - 1.0).abs();
    Ok(Partial {
        pass: in_band && shrinks,
        summary: format!("V̂/u = {:.6} at d=100, {:.7} at d=1000", ratios[0], ratios[1]),
        statistic: json!({ "ratios": ratios, "estimates": details }),
        threshold: json!({ "band": [0.97, 1.03], "deviation_shrinks": true }),
    })
}

fn c6_conditional_limit(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let model = ChainModel::lattice(1);
    let cone = Cone::half_line();
    let n = 1u64 << 12;
    let target = opts.paths(100_000) as usize;
    let sample = conditional_endpoint_sample(&model, &cone, &[1.0], n, target, opts.seed_for(6, 0), opts.threads)?;
    let cell = 2.0 / (n as f64).sqrt();
    let check = conditional_limit_check(&sample.scaled, &cone, 20, Some(cell))?;
    let raw = conditional_limit_check(&sample.scaled, &cone, 20, None)?;
    let floor = reference_self_check(&cone, target, 20, opts.seed_for(6, 1))?;
    let mean = sample.scaled.iter().map(|z| z[0]).sum::<f64>() / target as f64;
    Ok(Partial {
        pass: check.total_variation <= 0.05 && floor.total_variation <= 0.02,
        summary: format!("TV = {:.4} (uncorrected {:.4}), reference floor {:.4}",
            check.total_variation, raw.total_variation, floor.total_variation),
        statistic: json!({ "tv": check.total_variation, "tv_uncorrected": raw.total_variation,
                           "tv_floor": floor.total_variation, "chi_square": check.chi_square,
                           "mean": mean, "rayleigh_mean": FRAC_PI_2.sqrt(), "attempts": sample.attempts,
                           "survivors": target, "cell_width": cell }),
        threshold: json!({ "tv_max": 0.05, "tv_floor_max": 0.02, "bins": 20 }),
    })
}

fn c7_boundary_layer(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let eps = [1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0, 1.0 / 2.0];
    let n = 1u64 << 10;
    let paths = opts.paths(10_000);
    let line = boundary_layer_check(&ChainModel::lattice(1), &Cone::half_line(), n, &eps, 1.0, paths, opts.seed_for(7, 0), opts.threads)?;
    let wedge = boundary_layer_check(&ChainModel::lattice(2), &Cone::wedge(FRAC_PI_2)?, n, &eps, 2.0, paths, opts.seed_for(7, 1), opts.threads)?;
    let nested = |r: &crate::analysis::BoundaryLayerReport| r.rows.windows(2).all(|w| w[0].sup <= w[1].sup);
    let pass = line.slope >= 0.8 && wedge.slope >= 0.8 && nested(&line) && nested(&wedge);
    Ok(Partial {
        pass,
        summary: format!("slope {:.3} (half-line), {:.3} (wedge π/2)", line.slope, wedge.slope),
        statistic: json!({ "half_line": line, "wedge": wedge }),
        threshold: json!({ "slope_min": 0.8 }),
    })
}

fn c8_fuk_nagaev(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let models = [
        ("lattice-1", ChainModel::lattice(1)),
        ("lattice-2", ChainModel::lattice(2)),
        ("gaussian-1", ChainModel::gaussian(1)),
        ("gaussian-2", ChainModel::gaussian(2)),
    ];
    let mut violations = 0;
    let mut rows = 0;
    let mut below_step_nonzero = 0;
    let mut details = Vec::new();
    for (k, (label, model)) in models.iter().enumerate() {
        let d = model.dim();
        let cone = Cone::half_space(d)?;
        let x0 = vec![0.0; d];
        for (j, n) in [100u64, 1000].into_iter().enumerate() {
            let root = (n as f64).sqrt();
            let z: Vec<f64> = [1.0, 2.0, 4.0, 6.0].iter().map(|m| m * root).collect();
            let y: Vec<f64> = [0.25, 0.5, 1.0].iter().map(|m| m * root).chain([0.5]).collect();
            let rep = fuk_nagaev_check(model, &cone, &x0, n, &z, &y, opts.paths(100_000), opts.seed_for(8, (k * 2 + j) as u64), opts.threads)?;
            violations += rep.violations;
            rows += rep.rows.len();
            if model.is_lattice() {
                below_step_nonzero += rep.rows.iter().filter(|r| r.y < 1.0 && r.lhs_truncated > 0.0).count();
            }
            details.push(json!({ "model": label, "n": n, "violations": rep.violations, "rows": rep.rows }));
        }
    }
    Ok(Partial {
        pass: violations == 0 && below_step_nonzero == 0,
        summary: format!("{violations} violations over {rows} (z, y, n, model) cells"),
        statistic: json!({ "violations": violations, "cells": rows,
                           "truncated_below_step_nonzero": below_step_nonzero, "details": details }),
        threshold: json!({ "violations_max": 0 }),
    })
}

fn ray_points(cone: &Cone, theta: f64, distances: &[f64]) -> Vec<Vec<f64>> {
    let dir = [theta.cos(), theta.sin()];
    let unit = cone.boundary_distance(&dir);
    distances.iter().map(|d| vec![dir[0] * d / unit, dir[1] * d / unit]).collect()
}

fn c9_f_envelope(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    let dist = [8.0, 16.0, 32.0, 64.0];
    let lattice = ChainModel::lattice(2);
    let wide = Cone::wedge(2.0 * PI / 3.0)?;
    let wedge = f_envelope_check(&lattice, &wide, &ray_points(&wide, FRAC_PI_3, &dist), 0, opts.seed_for(9, 0))?;
    let narrow = Cone::wedge(FRAC_PI_3)?;
    let polynomial = f_envelope_check(&lattice, &narrow, &ray_points(&narrow, FRAC_PI_6, &dist), 0, opts.seed_for(9, 1))?;
    let pts: Vec<Vec<f64>> = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0].iter().map(|&x| vec![x]).collect();
    let line = f_envelope_check(&ChainModel::lattice(1), &Cone::half_line(), &pts, 0, opts.seed_for(9, 2))?;
    let line_zero = line.rows.iter().all(|r| r.ratio == 0.0);
    let ratios = |r: &crate::analysis::FEnvelopeReport| r.rows.iter().map(|x| x.ratio).collect::<Vec<_>>();
    Ok(Partial {
        pass: wedge.kendall_tau <= 0.0 && polynomial.kendall_tau <= 0.0 && line_zero,
        summary: format!("wedge 2π/3 Kendall tau {:.2}; half-line ratios all zero: {line_zero}", wedge.kendall_tau),
        statistic: json!({ "wedge_2pi_3": { "tau": wedge.kendall_tau, "ratios": ratios(&wedge) },
                           "wedge_pi_3": { "tau": polynomial.kendall_tau, "ratios": ratios(&polynomial) },
                           "half_line_ratios": ratios(&line) }),
        threshold: json!({ "kendall_tau_max": 0.0, "half_line_ratio": 0.0 }),
    })
}

fn render_survival(curve: &SurvivalCurve) -> String {
    let mut t = Table::new(["n", "p_hat", "se", "N"]);
    for i in 0..curve.n.len() {
        t.push(vec![curve.n[i].into(), curve.p_hat[i].into(), curve.se[i].into(), curve.paths.into()]);
    }
    t.render("{}")
}

fn render_v(v: &VEstimate) -> String {
    let mut t = Table::new(["n", "v_hat", "se"]);
    for i in 0..v.n.len() {
        t.push(vec![v.n[i].into(), v.v_hat[i].into(), v.se[i].into()]);
    }
    t.render("{}")
}

/// Interior points of `cone` drawn from a fixed stream.
fn sample_interior(cone: &Cone, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = PathRng::for_path(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..cone.dim()).map(|_| rng.random_range(-3.0..3.0)).collect();
        if cone.contains(&x) && cone.boundary_distance(&x) > 1e-3 {
            out.push(x);
        }
    }
    out
}

fn c10_infrastructure(opts: &BatteryOptions, _: &Shared) -> Result<Partial> {
    // determinism across thread counts and reruns
    let model = ChainModel::gaussian(2);
    let cone = Cone::wedge(2.0 * PI / 3.0)?;
    let x0 = [0.5, 2.0];
    let grid = NGrid::dyadic(0, 8)?;
    let paths = opts.paths(50_000);
    let seed = opts.seed_for(10, 0);
    let mut hashes = Vec::new();
    for threads in [1, 4, 1] {
        let s = render_survival(&estimate_survival(&model, &cone, &x0, &grid, paths, seed, threads)?);
        let v = render_v(&estimate_v(&model, &cone, &x0, &grid, paths, seed, threads)?);
        hashes.push(content_hash(format!("{s}{v}").as_bytes()));
    }
    let deterministic = hashes.windows(2).all(|w| w[0] == w[1]);

    // mass conservation
    let mut drift: f64 = 0.0;
    let mut monotone = true;
    for (m, c, x, n_max) in [
        (ChainModel::lattice(1), Cone::half_line(), vec![1i64], 2000usize),
        (ChainModel::lattice(2), Cone::orthant(2)?, vec![1, 1], 200),
        (ChainModel::lattice(2), Cone::wedge(2.0 * PI / 3.0)?, vec![0, 3], 150),
    ] {
        let rows = dp_rows(&m, &c, &x, n_max, DEFAULT_MEMORY_CAP_BYTES)?;
        drift = drift.max(rows.iter().map(|r| (r.survival + r.exited - 1.0).abs()).fold(0.0, f64::max));
        monotone &= rows.windows(2).all(|w| w[1].survival <= w[0].survival + 1e-14);
    }

    // homogeneity
    let cones = [
        Cone::half_line(),
        Cone::half_space(3)?,
        Cone::wedge(FRAC_PI_3)?,
        Cone::wedge(2.0 * PI / 3.0)?,
        Cone::wedge(1.5 * PI)?,
        Cone::orthant(3)?,
        Cone::circular(FRAC_PI_3)?,
        Cone::circular(2.0 * PI / 3.0)?,
    ];
    let mut homogeneity: f64 = 0.0;
    for (k, cone) in cones.iter().enumerate() {
        let p = cone.exponent();
        for x in sample_interior(cone, 200, opts.seed_for(10, 1 + k as u64)) {
            let u = cone.harmonic_u(&x);
            for l in [0.5, 2.0, 10.0] {
                let y: Vec<f64> = x.iter().map(|v| v * l).collect();
                let e = (cone.harmonic_u(&y) - l.powf(p) * u).abs() / (l.powf(p) * u);
                homogeneity = homogeneity.max(e);
            }
        }
    }

    // harmonicity residuals and their h² scaling
    let orthant = Cone::orthant(2)?.check_harmonicity(&[3.0, 4.0], 1e-3)?.abs();
    let wedge = Cone::wedge(FRAC_PI_3)?
        .check_harmonicity(&[2.0 * FRAC_PI_6.cos(), 2.0 * FRAC_PI_6.sin()], 1e-3)?
        .abs();
    let space = Cone::half_space(3)?.check_harmonicity(&[0.0, 0.0, 1.0], 1e-2)?.abs();
    let mut scaling = Vec::new();
    for (cone, x) in [
        (Cone::wedge(2.0 * PI / 3.0)?, vec![2.0 * FRAC_PI_3.cos(), 2.0 * FRAC_PI_3.sin()]),
        (Cone::wedge(0.9)?, vec![2.0 * 0.45f64.cos(), 2.0 * 0.45f64.sin()]),
        (Cone::circular(FRAC_PI_3)?, vec![0.3, 0.2, 2.0]),
    ] {
        scaling.push(cone.check_harmonicity(&x, 0.1)? / cone.check_harmonicity(&x, 0.05)?);
    }
    let scaling_ok = scaling.iter().all(|r| (3.5..=4.5).contains(r));
    let harmonic_ok = orthant < 1e-6 && wedge < 1e-4 && space < 1e-10 && scaling_ok;

    Ok(Partial {
        pass: deterministic && drift <= 1e-12 && monotone && homogeneity <= 1e-12 && harmonic_ok,
        summary: format!(
            "deterministic {deterministic}, DP mass drift {drift:.1e}, monotone {monotone}, homogeneity {homogeneity:.1e}, h² ratios {:?}",
            scaling.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        ),
        statistic: json!({ "hashes": hashes, "deterministic": deterministic, "dp_mass_drift": drift,
                           "dp_monotone": monotone, "homogeneity_max_rel_error": homogeneity,
                           "residual_orthant": orthant, "residual_wedge_pi_3": wedge,
                           "residual_half_space": space, "h2_ratios": scaling }),
        threshold: json!({ "dp_mass_drift_max": 1e-12, "homogeneity_max": 1e-12,
                           "residual_orthant_max": 1e-6, "residual_wedge_max": 1e-4,
                           "residual_half_space_max": 1e-10, "h2_ratio_range": [3.5, 4.5] }),
    })
}
