use std::f64::consts::PI;

use conewalk::chain::{ChainModel, ModelSpec, PathRng, RngState};
use conewalk::cone::{legendre_eigen_p, Cone};
use conewalk::mc::{estimate_survival, run_paths, simulate_path, Merge, NGrid};
use conewalk::oracle::{dp_rows, DEFAULT_MEMORY_CAP_BYTES};
use proptest::prelude::*;

fn cones() -> Vec<Cone> {
    vec![
        Cone::half_line(),
        Cone::half_space(2).unwrap(),
        Cone::half_space(3).unwrap(),
        Cone::wedge(PI / 3.0).unwrap(),
        Cone::wedge(2.0 * PI / 3.0).unwrap(),
        Cone::wedge(1.7 * PI).unwrap(),
        Cone::orthant(2).unwrap(),
        Cone::orthant(3).unwrap(),
        Cone::circular(PI / 4.0).unwrap(),
        Cone::circular(2.5).unwrap(),
    ]
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn u_is_homogeneous(k in 0usize..10, raw in point(3), l in prop::sample::select(vec![0.5, 2.0, 10.0])) {
        let cone = &cones()[k];
        let x = &raw[..cone.dim()];
        prop_assume!(cone.contains(x));
        let p = cone.exponent();
        let y: Vec<f64> = x.iter().map(|v| v * l).collect();
        let expected = l.powf(p) * cone.harmonic_u(x);
        prop_assert!((cone.harmonic_u(&y) - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn positivity_partition(k in 0usize..10, raw in point(3)) {
        let cone = &cones()[k];
        let x = &raw[..cone.dim()];
        prop_assert_eq!(cone.contains(x), cone.harmonic_u(x) > 0.0);
    }

    #[test]
    fn distance_bounded_by_norm(k in 0usize..10, raw in point(3)) {
        let cone = &cones()[k];
        let x = &raw[..cone.dim()];
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d = cone.boundary_distance(x);
        prop_assert!(d >= 0.0 && d <= r * (1.0 + 1e-15));
        prop_assert_eq!(d > 0.0, cone.contains(x));
    }

    #[test]
    fn growth_bound_holds(k in 0usize..10, raw in point(3)) {
        let cone = &cones()[k];
        let x = &raw[..cone.dim()];
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let h = cone.harmonic();
        prop_assert!(cone.harmonic_u(x) <= h.growth_constant * r.powf(h.p) * (1.0 + 1e-12));
    }

    #[test]
    fn step_is_a_pure_function(seed in any::<u64>(), stream in any::<u64>()) {
        let model = ChainModel::gaussian(2);
        let cone = Cone::orthant(2).unwrap();
        let s = RngState::new(seed, stream);
        let a = model.step(&cone, &[1.0, 2.0], s).unwrap();
        let b = model.step(&cone, &[1.0, 2.0], s).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn legendre_exponent_decreases_in_aperture() {
    let mut last = f64::INFINITY;
    for i in 0..20 {
        let theta0 = 0.1 + 2.9 * (i as f64 + 0.5) / 20.0;
        let p = legendre_eigen_p(theta0, 1e-12).unwrap().p;
        assert!(p < last, "θ₀ = {theta0}: {p} ≥ {last}");
        last = p;
    }
}

/// `P_p(cos θ)` from the hypergeometric series `₂F₁(−p, p+1; 1; (1 − cos θ)/2)`.
fn legendre_series(p: f64, theta: f64) -> f64 {
    let s = (1.0 - theta.cos()) / 2.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..100_000 {
        let k = k as f64;
        term *= (k - p) * (k + p + 1.0) / ((k + 1.0) * (k + 1.0)) * s;
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

#[test]
fn legendre_matches_zeros_of_legendre_polynomials() {
    // P₂(x) = (3x² − 1)/2 and P₃(x) = (5x³ − 3x)/2 vanish at 1/√3 and √(3/5)
    let p2 = legendre_eigen_p((1.0f64 / 3.0).sqrt().acos(), 1e-12).unwrap();
    let p3 = legendre_eigen_p(0.6f64.sqrt().acos(), 1e-12).unwrap();
    assert!((p2.p - 2.0).abs() < 1e-8, "{}", p2.p);
    assert!((p3.p - 3.0).abs() < 1e-8, "{}", p3.p);
}

#[test]
fn legendre_agrees_with_series_oracle() {
    for theta0 in [0.4, 0.8, 1.2, 2.0, 2.6] {
        let p = legendre_eigen_p(theta0, 1e-12).unwrap().p;
        let below = legendre_series(p - 1e-6, theta0);
        let above = legendre_series(p + 1e-6, theta0);
        assert!(below * above < 0.0, "θ₀ = {theta0}, p = {p}: {below} vs {above}");
    }
}

#[derive(Clone)]
struct Sum(f64, f64, u64);

impl Merge for Sum {
    fn merge(self, o: Self) -> Self {
        Sum(self.0 + o.0, self.1 + o.1, self.2 + o.2)
    }
}

#[test]
fn squared_norm_minus_dn_is_a_martingale() {
    let x = [1.5, -0.5];
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let cone = Cone::half_space(2).unwrap();
    for model in [ChainModel::lattice(2), ChainModel::gaussian(2)] {
        for n in [10u64, 100, 1000] {
            let acc = run_paths(100_000, 1, 99 + n, || Sum(0.0, 0.0, 0), |_, rng, acc| {
                let mut y = x.to_vec();
                for _ in 0..n {
                    model.step_in_place(&cone, &mut y, rng);
                }
                let m = y.iter().map(|v| v * v).sum::<f64>() - 2.0 * n as f64;
                acc.0 += m;
                acc.1 += m * m;
                acc.2 += 1;
            });
            let k = acc.2 as f64;
            let mean = acc.0 / k;
            let se = ((acc.1 / k - mean * mean) / (k - 1.0)).sqrt();
            assert!((mean - r2).abs() <= 4.0 * se, "{:?} n={n}: {mean} ± {se}", model.spec());
        }
    }
}

#[test]
fn majorant_dominates_empirical_tails() {
    let models = [
        ChainModel::lattice(2),
        ChainModel::gaussian(1),
        ChainModel::gaussian(3),
        ChainModel::heavy_tail(1, 3.0).unwrap(),
        ChainModel::heavy_tail(2, 4.0).unwrap(),
        ChainModel::perturbed(ModelSpec::IidGaussian { dim: 2 }, 0.5, 1.0).unwrap(),
    ];
    let cone_for = |d: usize| Cone::half_space(d).unwrap();
    for (k, model) in models.iter().enumerate() {
        let d = model.dim();
        let cone = cone_for(d);
        let mut x = vec![0.0; d];
        x[d - 1] = 0.5;
        let ts = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0];
        let mut exceed = [0u64; 8];
        let mut rng = PathRng::for_path(12345, k as u64);
        let mut inc = vec![0.0; d];
        let samples = 1_000_000u64;
        for _ in 0..samples {
            model.sample_increment(&cone, &x, &mut rng, &mut inc);
            let r = inc.iter().map(|v| v * v).sum::<f64>().sqrt();
            for (e, &t) in exceed.iter_mut().zip(&ts) {
                if r > t {
                    *e += 1;
                }
            }
        }
        for (e, &t) in exceed.iter().zip(&ts) {
            let freq = *e as f64 / samples as f64;
            let bound = model.majorant_tail(t).unwrap();
            let sigma = (bound * (1.0 - bound) / samples as f64).sqrt();
            assert!(freq <= bound + 3.0 * sigma + 1e-12, "{:?} t={t}: {freq} > {bound}", model.spec());
        }
    }
}

#[test]
fn dp_conserves_mass_and_factorizes() {
    let line = dp_rows(&ChainModel::lattice(1), &Cone::half_line(), &[2], 60, DEFAULT_MEMORY_CAP_BYTES).unwrap();
    let line3 = dp_rows(&ChainModel::lattice(1), &Cone::half_line(), &[3], 60, DEFAULT_MEMORY_CAP_BYTES).unwrap();
    let quad = dp_rows(&ChainModel::lattice(2), &Cone::orthant(2).unwrap(), &[2, 3], 60, DEFAULT_MEMORY_CAP_BYTES).unwrap();
    for n in 0..=60 {
        assert!((quad[n].survival + quad[n].exited - 1.0).abs() <= 1e-12);
        assert!((quad[n].survival - line[n].survival * line3[n].survival).abs() <= 1e-12);
        if n > 0 {
            assert!(quad[n].survival <= quad[n - 1].survival);
        }
    }
}

#[test]
fn exit_records_are_consistent() {
    let model = ChainModel::lattice(2);
    let cone = Cone::wedge(2.0 * PI / 3.0).unwrap();
    let grid = NGrid::dyadic(0, 6).unwrap();
    for path in 0..500 {
        let mut rng = PathRng::for_path(5, path);
        let rec = simulate_path(&model, &cone, &[0.0, 2.0], &grid, &mut rng);
        for (u, &n) in rec.checkpoint_u.iter().zip(grid.values()) {
            assert_eq!(*u > 0.0, rec.survived(n));
        }
        if rec.exit_time.is_some() {
            assert!(!cone.contains(&rec.terminal_state));
        }
    }
}

#[test]
fn survival_curve_is_monotone_with_binomial_errors() {
    let c = estimate_survival(
        &ChainModel::gaussian(3),
        &Cone::circular(1.0).unwrap(),
        &[0.0, 0.0, 1.0],
        &NGrid::dyadic(0, 8).unwrap(),
        20_000,
        8,
        2,
    )
    .unwrap();
    assert_eq!(c.n[0], 1);
    for i in 0..c.n.len() {
        assert!((0.0..=1.0).contains(&c.p_hat[i]));
        let se = (c.p_hat[i] * (1.0 - c.p_hat[i]) / c.paths as f64).sqrt();
        assert_eq!(c.se[i], se);
        if i > 0 {
            assert!(c.p_hat[i] <= c.p_hat[i - 1]);
        }
    }
}
