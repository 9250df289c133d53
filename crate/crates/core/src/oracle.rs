//! Exact killed distributions for lattice walks and closed-form Brownian baselines.
//!
//! The product simple random walk is evolved on a dense box around the start
//! with the separable ±1 kernel, and mass leaving the cone is removed after each
//! full step. Summation always runs in index order, so results are reproducible
//! bit for bit.

use std::collections::BTreeMap;

use serde::Serialize;
use libm::erf;

use crate::chain::ChainModel;
use crate::cone::Cone;
use crate::error::{check_dim, Error, Result};

/// Default memory cap for the dense state box.
pub const DEFAULT_MEMORY_CAP_BYTES: u128 = 2 << 30;

/// Bytes held per box state: two mass buffers, `u`, and the membership mask.
const BYTES_PER_STATE: u128 = 8 + 8 + 8 + 1;

/// One layer of the exact killed evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleRow {
    pub n: usize,
    /// `P_x(τ > n)`.
    pub survival: f64,
    /// `E_x[u(X(n)); τ > n]`.
    pub killed_u_expectation: f64,
    /// Mass absorbed up to and including step `n`.
    pub exited: f64,
}

/// Sparse view of `P_x(X(n) = ·, τ > n)` plus the accumulated exit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct KilledDistribution {
    pub n: usize,
    pub mass: BTreeMap<Vec<i64>, f64>,
    pub exited: f64,
}

impl KilledDistribution {
    pub fn survival(&self) -> f64 {
        self.mass.values().sum()
    }
}

/// Dense killed evolution of the product simple random walk.
#[derive(Debug, Clone)]
pub struct KilledLattice {
    dim: usize,
    side: usize,
    corner: Vec<i64>,
    mass: Vec<f64>,
    scratch: Vec<f64>,
    inside: Vec<bool>,
    u: Vec<f64>,
    n: usize,
    n_max: usize,
    exited: f64,
}

impl KilledLattice {
    pub fn new(
        model: &ChainModel,
        cone: &Cone,
        x0: &[i64],
        n_max: usize,
        memory_cap_bytes: u128,
    ) -> Result<Self> {
        if !model.is_lattice() {
            return Err(Error::NonLatticeModel);
        }
        let dim = model.dim();
        check_dim(dim, x0.len())?;
        check_dim(cone.dim(), dim)?;
        let start: Vec<f64> = x0.iter().map(|&v| v as f64).collect();
        if !cone.contains(&start) {
            return Err(Error::InvalidArgument(format!("x0 {x0:?} not interior")));
        }
        let side = 2 * n_max + 1;
        let states = (side as u128).checked_pow(dim as u32).unwrap_or(u128::MAX);
        let cap = memory_cap_bytes / BYTES_PER_STATE;
        if states > cap {
            return Err(Error::BudgetExceeded { states, cap });
        }
        let total = states as usize;
        let corner: Vec<i64> = x0.iter().map(|&v| v - n_max as i64).collect();
        let mut inside = vec![false; total];
        let mut u = vec![0.0; total];
        let mut point = vec![0.0; dim];
        for idx in 0..total {
            decode(idx, side, &corner, &mut point);
            if cone.contains(&point) {
                inside[idx] = true;
                u[idx] = cone.harmonic_u(&point);
            }
        }
        let mut mass = vec![0.0; total];
        mass[encode_centre(n_max, side, dim)] = 1.0;
        Ok(Self {
            dim,
            side,
            corner,
            mass,
            scratch: vec![0.0; total],
            inside,
            u,
            n: 0,
            n_max,
            exited: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self) -> OracleRow {
        let mut survival = 0.0;
        let mut killed_u = 0.0;
        for (m, u) in self.mass.iter().zip(&self.u) {
            if *m != 0.0 {
                survival += m;
                killed_u += m * u;
            }
        }
        OracleRow {
            n: self.n,
            survival,
            killed_u_expectation: killed_u,
            exited: self.exited,
        }
    }

    /// Advances one step. Fails once the box horizon is reached.
    pub fn step(&mut self) -> Result<()> {
        if self.n >= self.n_max {
            return Err(Error::InvalidArgument(format!(
                "horizon {} already reached",
                self.n_max
            )));
        }
        // independent ±1 coordinates: apply the 1D kernel along each axis in turn
        let mut stride = 1;
        for _ in 0..self.dim {
            self.scratch.iter_mut().for_each(|v| *v = 0.0);
            for idx in 0..self.mass.len() {
                let m = self.mass[idx];
                if m == 0.0 {
                    continue;
                }
                let coord = (idx / stride) % self.side;
                let half = 0.5 * m;
                // the box is wide enough that no mass reaches its faces before n_max
                debug_assert!(coord > 0 && coord + 1 < self.side);
                self.scratch[idx - stride] += half;
                self.scratch[idx + stride] += half;
            }
            std::mem::swap(&mut self.mass, &mut self.scratch);
            stride *= self.side;
        }
        let mut killed = 0.0;
        for (m, inside) in self.mass.iter_mut().zip(&self.inside) {
            if !inside && *m != 0.0 {
                killed += *m;
                *m = 0.0;
            }
        }
        self.exited += killed;
        self.n += 1;
        Ok(())
    }

    pub fn distribution(&self) -> KilledDistribution {
        let mut map = BTreeMap::new();
        let mut point = vec![0.0; self.dim];
        for (idx, &m) in self.mass.iter().enumerate() {
            if m != 0.0 {
                decode(idx, self.side, &self.corner, &mut point);
                map.insert(point.iter().map(|&v| v as i64).collect(), m);
            }
        }
        KilledDistribution {
            n: self.n,
            mass: map,
            exited: self.exited,
        }
    }
}

fn decode(mut idx: usize, side: usize, corner: &[i64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(corner) {
        *o = (c + (idx % side) as i64) as f64;
        idx /= side;
    }
}

fn encode_centre(n_max: usize, side: usize, dim: usize) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for _ in 0..dim {
        idx += n_max * stride;
        stride *= side;
    }
    idx
}

/// Exact killed distributions for `n = 1..=n_max`.
pub fn dp_evolve(
    model: &ChainModel,
    cone: &Cone,
    x0: &[i64],
    n_max: usize,
    memory_cap_bytes: u128,
) -> Result<Vec<KilledDistribution>> {
    let mut lattice = KilledLattice::new(model, cone, x0, n_max, memory_cap_bytes)?;
    let mut out = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        lattice.step()?;
        out.push(lattice.distribution());
    }
    Ok(out)
}

/// Survival, killed `u`-expectation and exit mass for `n = 0..=n_max`.
pub fn dp_rows(
    model: &ChainModel,
    cone: &Cone,
    x0: &[i64],
    n_max: usize,
    memory_cap_bytes: u128,
) -> Result<Vec<OracleRow>> {
    let mut lattice = KilledLattice::new(model, cone, x0, n_max, memory_cap_bytes)?;
    let mut rows = Vec::with_capacity(n_max + 1);
    rows.push(lattice.row());
    for _ in 0..n_max {
        lattice.step()?;
        rows.push(lattice.row());
    }
    Ok(rows)
}

/// `E_x[g(X(n)); τ > n]` for `n = 0..=n_max` with a caller-supplied `g`.
pub fn dp_killed_expectation<G>(
    model: &ChainModel,
    cone: &Cone,
    x0: &[i64],
    n_max: usize,
    g: G,
    memory_cap_bytes: u128,
) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> f64,
{
    let mut lattice = KilledLattice::new(model, cone, x0, n_max, memory_cap_bytes)?;
    let mut values = vec![0.0; lattice.mass.len()];
    let mut point = vec![0.0; lattice.dim];
    for (idx, v) in values.iter_mut().enumerate() {
        if lattice.inside[idx] {
            decode(idx, lattice.side, &lattice.corner, &mut point);
            *v = g(&point);
        }
    }
    let expectation = |l: &KilledLattice| -> f64 {
        l.mass
            .iter()
            .zip(&values)
            .filter(|(m, _)| **m != 0.0)
            .map(|(m, v)| m * v)
            .sum()
    };
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(expectation(&lattice));
    for _ in 0..n_max {
        lattice.step()?;
        out.push(expectation(&lattice));
    }
    Ok(out)
}

/// `P₁(τ > 2m) = C(2m, m) 4^{-m}` for simple random walk on the half-line.
pub fn ballot_survival(m: u64) -> f64 {
    (1..=m).fold(1.0, |acc, k| acc * (2 * k - 1) as f64 / (2 * k) as f64)
}

/// Survival of Brownian motion started at height `x` above a hyperplane: `2Φ(x/√t) − 1`.
pub fn bm_halfspace_survival(x: f64, t: f64) -> Result<f64> {
    if !(x > 0.0) || !(t > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need x > 0 and t > 0, got x={x}, t={t}"
        )));
    }
    Ok(erf(x / (2.0 * t).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAP: u128 = DEFAULT_MEMORY_CAP_BYTES;

    fn srw() -> ChainModel {
        ChainModel::lattice(1)
    }

    #[test]
    fn two_step_survival_from_one() {
        let rows = dp_rows(&srw(), &Cone::half_line(), &[1], 2, CAP).unwrap();
        assert_eq!(rows[0].survival, 1.0);
        assert_eq!(rows[1].survival, 0.5);
        assert_eq!(rows[2].survival, 0.5);
    }

    #[test]
    fn ballot_identity_up_to_twenty_steps() {
        let rows = dp_rows(&srw(), &Cone::half_line(), &[1], 20, CAP).unwrap();
        for m in 0..=10u64 {
            let exact = ballot_survival(m);
            assert!((rows[2 * m as usize].survival - exact).abs() < 1e-12, "m={m}");
        }
    }

    #[test]
    fn killed_identity_is_constant() {
        let rows = dp_rows(&srw(), &Cone::half_line(), &[5], 200, CAP).unwrap();
        for r in &rows {
            assert!((r.killed_u_expectation - 5.0).abs() < 1e-12, "n={}", r.n);
            assert!((r.survival + r.exited - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn product_walk_factorises() {
        let quadrant = Cone::orthant(2).unwrap();
        let two = dp_rows(&ChainModel::lattice(2), &quadrant, &[1, 1], 40, CAP).unwrap();
        let one = dp_rows(&srw(), &Cone::half_line(), &[1], 40, CAP).unwrap();
        for (a, b) in two.iter().zip(&one) {
            assert!((a.survival - b.survival * b.survival).abs() < 1e-12);
        }
        let u = dp_rows(&ChainModel::lattice(2), &quadrant, &[2, 3], 60, CAP).unwrap();
        for r in &u {
            assert!((r.killed_u_expectation - 6.0).abs() < 1e-12);
        }
    }

    #[test]
    fn n_zero_is_u_at_start() {
        let cone = Cone::wedge(std::f64::consts::FRAC_PI_2).unwrap();
        let v = dp_killed_expectation(&ChainModel::lattice(2), &cone, &[2, 5], 0, |x| {
            cone.harmonic_u(x)
        }, CAP)
        .unwrap();
        assert_eq!(v.len(), 1);
        assert!((v[0] - cone.harmonic_u(&[2.0, 5.0])).abs() < 1e-15);
    }

    #[test]
    fn distribution_view_matches_rows() {
        let layers = dp_evolve(&srw(), &Cone::half_line(), &[2], 6, CAP).unwrap();
        assert_eq!(layers.len(), 6);
        let last = &layers[5];
        assert_eq!(last.n, 6);
        assert!((last.survival() + last.exited - 1.0).abs() < 1e-15);
        assert!(last.mass.keys().all(|k| k[0] > 0));
        let mut prev = 1.0;
        for l in &layers {
            let s = l.survival();
            assert!(s <= prev);
            prev = s;
        }
    }

    #[test]
    fn guards() {
        let cube = Cone::orthant(3).unwrap();
        let err = dp_rows(&ChainModel::lattice(3), &cube, &[1, 1, 1], 2000, CAP).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
        let err = dp_rows(&ChainModel::gaussian(1), &Cone::half_line(), &[1], 4, CAP).unwrap_err();
        assert_eq!(err, Error::NonLatticeModel);
        assert!(dp_rows(&srw(), &Cone::half_line(), &[0], 4, CAP).is_err());
    }

    #[test]
    fn brownian_half_space_baseline() {
        let v = bm_halfspace_survival(1.0, 1.0).unwrap();
        assert!((v - 0.6826894921370859).abs() < 1e-12, "{v:.17}");
        assert!((bm_halfspace_survival(1e3, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let t = 1e8;
        let ratio = bm_halfspace_survival(1.0, t).unwrap() / ((2.0 / std::f64::consts::PI).sqrt() / t.sqrt());
        assert!((ratio - 1.0).abs() < 1e-6);
        assert!(bm_halfspace_survival(0.0, 1.0).is_err());
    }
}
