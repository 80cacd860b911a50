use blkit_core::bl_forward::{self, BASolverOptions, ForwardBLProblem, ForwardChannel};
use blkit_core::simplex::{random_distribution, random_kernel, rng_from_seed};
use blkit_core::{CostFunction, DiscreteMeasure, Kernel};
use proptest::prelude::*;
use rand::Rng;

/// Tight enough that "at convergence" invariants are meaningful.
fn tight() -> BASolverOptions {
    BASolverOptions {
        tol: 1e-13,
        max_iters: 100_000,
        ..Default::default()
    }
}

fn random_problem(seed: u64, n: usize, m: usize) -> ForwardBLProblem {
    let mut rng = rng_from_seed(seed);
    let nu = random_distribution(&mut rng, n).as_measure();
    let cost = CostFunction::new((0..n).map(|_| rng.random_range(-0.5..0.5)).collect()).unwrap();
    let channels = (0..m)
        .map(|_| {
            let k = random_kernel(&mut rng, n, 3);
            let mu = random_distribution(&mut rng, 3).as_measure();
            ForwardChannel::new(k, mu, rng.random_range(0.2..1.5)).unwrap()
        })
        .collect();
    ForwardBLProblem::new(nu, cost, channels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_traces_nondecreasing(seed in any::<u64>(), n in 2usize..5, m in 1usize..3) {
        let prob = random_problem(seed, n, m);
        let r = bl_forward::best_constant(&prob, &BASolverOptions { rng_seed: seed, ..Default::default() }).unwrap();
        for trace in &r.restart_traces {
            for w in trace.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn fixed_point_consistency(seed in any::<u64>(), n in 2usize..5, m in 1usize..3) {
        let prob = random_problem(seed, n, m);
        let r = bl_forward::best_constant(&prob, &BASolverOptions::default()).unwrap();
        prop_assume!(r.converged);
        let p = r.argmax_distribution();
        let f = bl_forward::induced_functions(&prob, &p).unwrap();
        let t = bl_forward::tilt_input(&prob, &f).unwrap();
        prop_assert!(t.distribution.max_abs_diff(&p) <= 1e-7);
    }

    #[test]
    fn weak_duality(seed in any::<u64>(), n in 2usize..4) {
        let prob = random_problem(seed, n, 1 + (seed % 2) as usize);
        let brute = bl_forward::best_constant_bruteforce(&prob, 0.01).unwrap();
        let solved = bl_forward::best_constant(&prob, &BASolverOptions::default()).unwrap().value;
        let best = brute.max(solved);
        let mut rng = rng_from_seed(seed ^ 0x5eed);
        for _ in 0..20 {
            let f: Vec<Vec<f64>> = prob
                .channels()
                .iter()
                .map(|ch| (0..ch.kernel.n_out()).map(|_| rng.random_range(0.01..5.0)).collect())
                .collect();
            prop_assert!(bl_forward::functional_gap(&prob, &f).unwrap() <= best + 1e-6);
        }
    }

    #[test]
    fn identity_kernel_is_point_mass_sweep(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = rng_from_seed(seed);
        let nu = random_distribution(&mut rng, n).as_measure();
        let mu = DiscreteMeasure::new((0..n).map(|_| rng.random_range(0.1..2.0)).collect()).unwrap();
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let expected = (0..n)
            .map(|x| nu.weights()[x].ln() - mu.weights()[x].ln() - d[x])
            .fold(f64::NEG_INFINITY, f64::max);
        let prob = ForwardBLProblem::new(
            nu,
            CostFunction::new(d).unwrap(),
            vec![ForwardChannel::new(Kernel::identity(n), mu, 1.0).unwrap()],
        )
        .unwrap();
        let v = bl_forward::best_constant(&prob, &tight()).unwrap().value;
        prop_assert!((v - expected).abs() <= 1e-9, "{} vs {}", v, expected);
    }

    #[test]
    fn reference_scaling_shifts_constant(seed in any::<u64>(), t in -2.0f64..2.0) {
        let prob = random_problem(seed, 3, 2);
        let mut channels = prob.channels().to_vec();
        let c1 = channels[0].c;
        channels[0].mu = channels[0].mu.scaled((t / c1).exp()).unwrap();
        let shifted = ForwardBLProblem::new(prob.nu().clone(), prob.cost().clone(), channels).unwrap();
        let opts = BASolverOptions::default();
        let a = bl_forward::best_constant(&prob, &opts).unwrap().value;
        let b = bl_forward::best_constant(&shifted, &opts).unwrap().value;
        prop_assert!((b - (a - t)).abs() <= 1e-10, "{} vs {}", b, a - t);
    }
}
