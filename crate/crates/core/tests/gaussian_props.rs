use blkit_core::gaussian_opt::{
    f0_gaussian, f0_gradient, gaussian_hc_member, keygen_region_member, keygen_region_trace, maximize_f0, wyner_ci,
    F0Options, GaussianF0Problem, KeygenOptions,
};
use blkit_core::linalg::{Matrix, Vector};
use blkit_core::simplex::rng_from_seed;
use blkit_core::GaussianChannel;
use proptest::prelude::*;
use rand::Rng;

fn random_pd(rng: &mut impl Rng, n: usize, floor: f64) -> Matrix {
    let a = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() + Matrix::identity(n, n) * floor
}

fn correlation(rng: &mut impl Rng, n: usize) -> Matrix {
    let c = random_pd(rng, n, 0.1);
    let d = Vector::from_fn(n, |i, _| 1.0 / c[(i, i)].sqrt());
    let r = Matrix::from_diagonal(&d) * c * Matrix::from_diagonal(&d);
    (&r + r.transpose()) * 0.5
}

fn random_channels(rng: &mut impl Rng, n: usize, m: usize) -> Vec<(GaussianChannel, f64)> {
    (0..m)
        .map(|_| {
            let k = rng.random_range(1..=n);
            let b = Matrix::from_fn(k, n, |_, _| rng.random_range(-1.0..1.0));
            let noise = random_pd(rng, k, 0.2);
            (GaussianChannel::new(b, noise).unwrap(), rng.random_range(0.1..1.0))
        })
        .collect()
}

fn random_problem(seed: u64, n: usize, m: usize) -> GaussianF0Problem {
    let mut rng = rng_from_seed(seed);
    let channels = random_channels(&mut rng, n, m);
    let c0 = rng.random_range(0.0..1.0);
    let weight = random_pd(&mut rng, n, 0.0);
    let cap = random_pd(&mut rng, n, 0.3);
    GaussianF0Problem::new(n, channels, c0, weight, Some(cap)).unwrap()
}

fn block_diag(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

/// Smallest eigenvalue of a symmetric 3x3 matrix from the trigonometric form of the cubic.
fn min_eig3(a: &Matrix) -> f64 {
    let off = a[(0, 1)].powi(2) + a[(0, 2)].powi(2) + a[(1, 2)].powi(2);
    if off == 0.0 {
        return a[(0, 0)].min(a[(1, 1)]).min(a[(2, 2)]);
    }
    let q = a.trace() / 3.0;
    let p2 = (0..3).map(|i| (a[(i, i)] - q).powi(2)).sum::<f64>() + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    let b = (a - Matrix::identity(3, 3) * q) / p;
    let r = (b.determinant() / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn f0_gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=3) {
        let prob = random_problem(seed, n, m);
        let mut rng = rng_from_seed(seed ^ 0xf0);
        let s = random_pd(&mut rng, n, 0.5);
        let g = f0_gradient(&s, &prob).unwrap();
        let h = 1e-5;
        let mut fd = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut e = Matrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                let d = (f0_gaussian(&(&s + &e * h), &prob).unwrap() - f0_gaussian(&(&s - &e * h), &prob).unwrap()) / (2.0 * h);
                let w = if i == j { 1.0 } else { 0.5 };
                fd[(i, j)] = d * w;
                fd[(j, i)] = d * w;
            }
        }
        let rel = (&fd - &g).norm() / g.norm().max(1e-12);
        prop_assert!(rel <= 1e-5, "relative error {}", rel);
    }

    #[test]
    fn wyner_vanishes_exactly_on_diagonal(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = rng_from_seed(seed);
        let d = Vector::from_fn(n, |_, _| rng.random_range(0.2..3.0));
        prop_assert!(wyner_ci(&Matrix::from_diagonal(&d)).unwrap().value.abs() <= 1e-9);
        let s = random_pd(&mut rng, n, 0.1);
        prop_assert!(wyner_ci(&s).unwrap().value > 1e-9);
    }

    #[test]
    fn wyner_invariant_under_diagonal_congruence(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = rng_from_seed(seed);
        let s = random_pd(&mut rng, n, 0.1);
        let d = Matrix::from_diagonal(&Vector::from_fn(n, |_, _| rng.random_range(0.2..3.0)));
        let a = wyner_ci(&s).unwrap().value;
        let b = wyner_ci(&(&d * &s * &d)).unwrap().value;
        prop_assert!((a - b).abs() <= 1e-7 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn hc_margin_is_independent_min_eigenvalue(seed in any::<u64>(), three in any::<bool>()) {
        let mut rng = rng_from_seed(seed);
        let n = if three { 3 } else { 2 };
        let s = correlation(&mut rng, n);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..4.0)).collect();
        let dec = gaussian_hc_member(&s, &p).unwrap();
        let expected = if three {
            let mut d = -s.clone();
            for i in 0..3 {
                d[(i, i)] += p[i];
            }
            min_eig3(&d)
        } else {
            let a = p[0] - 1.0;
            let b = p[1] - 1.0;
            0.5 * (a + b) - (0.25 * (a - b).powi(2) + s[(0, 1)].powi(2)).sqrt()
        };
        prop_assert!((dec.margin - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{} vs {}", dec.margin, expected);
        prop_assert_eq!(dec.member, expected >= -1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn f0_restarts_agree(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2) {
        let prob = random_problem(seed, n, m);
        let a = maximize_f0(&prob, &F0Options::default()).unwrap();
        let b = maximize_f0(&prob, &F0Options { seed: seed ^ 1, ..Default::default() }).unwrap();
        prop_assert!(a.spread <= 1e-6, "spread {}", a.spread);
        prop_assert!((a.value - b.value).abs() <= 1e-6);
        prop_assert!((&a.sigma - &b.sigma).norm() <= 1e-4);
    }

    #[test]
    fn f0_monotone_in_cap(seed in any::<u64>(), n in 1usize..=3, m in 1usize..=2) {
        let prob = random_problem(seed, n, m);
        let mut rng = rng_from_seed(seed ^ 2);
        let bigger = prob.cap().unwrap() + random_pd(&mut rng, n, 0.0);
        let small = maximize_f0(&prob, &F0Options::default()).unwrap().value;
        let large = maximize_f0(&prob.with_cap(bigger).unwrap(), &F0Options::default()).unwrap().value;
        prop_assert!(small <= large + 1e-9, "{} > {}", small, large);
    }

    #[test]
    fn f0_tensorizes_over_blocks(seed in any::<u64>(), n1 in 1usize..=2, n2 in 1usize..=2, m in 1usize..=2) {
        let mut rng = rng_from_seed(seed);
        let cs: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut halves = Vec::new();
        for n in [n1, n2] {
            let channels: Vec<(GaussianChannel, f64)> = cs
                .iter()
                .map(|&c| {
                    let b = Matrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                    (GaussianChannel::new(b, random_pd(&mut rng, n, 0.2)).unwrap(), c)
                })
                .collect();
            let weight = random_pd(&mut rng, n, 0.0);
            let cap = random_pd(&mut rng, n, 0.3);
            halves.push(GaussianF0Problem::new(n, channels, 0.7, weight, Some(cap)).unwrap());
        }
        let (p, q) = (&halves[0], &halves[1]);
        let channels = p
            .channels()
            .iter()
            .zip(q.channels())
            .map(|((a, c), (b, _))| {
                let ch = GaussianChannel::new(block_diag(a.matrix(), b.matrix()), block_diag(a.noise_cov(), b.noise_cov())).unwrap();
                (ch, *c)
            })
            .collect();
        let joint = GaussianF0Problem::new(
            n1 + n2,
            channels,
            0.7,
            block_diag(p.m(), q.m()),
            Some(block_diag(p.cap().unwrap(), q.cap().unwrap())),
        )
        .unwrap();
        let opts = F0Options::default();
        let sum = maximize_f0(p, &opts).unwrap().value + maximize_f0(q, &opts).unwrap().value;
        let whole = maximize_f0(&joint, &opts).unwrap().value;
        prop_assert!((whole - sum).abs() <= 1e-6, "{} vs {}", whole, sum);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn keygen_traced_points_and_worse_tuples_are_members(seed in any::<u64>(), dr in 0.0f64..0.3, dl in 0.0f64..0.3) {
        let mut rng = rng_from_seed(seed);
        let sigma = random_pd(&mut rng, 2, 0.2);
        let opts = KeygenOptions::default();
        for point in keygen_region_trace(&sigma, 4, seed).unwrap() {
            let r = point.rates[0];
            let rl = &point.rates[1..];
            prop_assert!(keygen_region_member(&sigma, r, rl, &opts).unwrap().member, "traced {:?}", point.rates);
            let worse: Vec<f64> = rl.iter().map(|v| v + dl).collect();
            prop_assert!(keygen_region_member(&sigma, (r - dr).max(0.0), &worse, &opts).unwrap().member);
        }
    }
}
