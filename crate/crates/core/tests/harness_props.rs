use blkit_core::bl_forward::{BASolverOptions, ForwardBLProblem, ForwardChannel};
use blkit_core::property_harness::{
    convexity_check, data_processing_check, tensorization_check, PROPERTY_GRID,
};
use blkit_core::simplex::{random_distribution, random_kernel, rng_from_seed};
use blkit_core::{CheckReport, CostFunction};
use proptest::prelude::*;
use rand::Rng;

fn random_problem(seed: u64, n: usize, cs: &[f64]) -> ForwardBLProblem {
    let mut rng = rng_from_seed(seed);
    let nu = random_distribution(&mut rng, n).as_measure();
    let channels = cs
        .iter()
        .map(|&c| {
            let k = random_kernel(&mut rng, n, 2);
            ForwardChannel::new(k, random_distribution(&mut rng, 2).as_measure(), c).unwrap()
        })
        .collect();
    ForwardBLProblem::new(nu, CostFunction::zero(n), channels).unwrap()
}

fn consistent(r: &CheckReport) -> bool {
    r.passed == (r.margin >= 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tensorization_certified_and_deterministic(seed in any::<u64>(), c in 0.3f64..1.5) {
        let a = random_problem(seed, 2, &[c]);
        let b = random_problem(seed ^ 7, 2, &[c]);
        let opts = BASolverOptions { rng_seed: seed, ..Default::default() };
        let r = tensorization_check(&a, &b, &opts).unwrap();
        prop_assert!(r.certified);
        prop_assert!(consistent(&r));
        prop_assert!(r.passed, "{:?}", r);
        prop_assert_eq!(r.details["grid_step"], PROPERTY_GRID);
        prop_assert_eq!(r, tensorization_check(&a, &b, &opts).unwrap());
    }

    #[test]
    fn convexity_along_random_segments(seed in any::<u64>(), m in 1usize..3) {
        let mut rng = rng_from_seed(seed);
        let c0: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.5)).collect();
        let c1: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.5)).collect();
        let samples: Vec<Vec<f64>> = (0..=4)
            .map(|i| {
                let t = i as f64 / 4.0;
                c0.iter().zip(&c1).map(|(a, b)| (1.0 - t) * a + t * b).collect()
            })
            .collect();
        let base = random_problem(seed, 3, &c0);
        let r = convexity_check(&base, &samples, &BASolverOptions::default()).unwrap();
        prop_assert!(r.certified);
        prop_assert!(consistent(&r));
        prop_assert!(r.passed, "{:?}", r);
    }

    #[test]
    fn data_processing_lowers_constant(seed in any::<u64>(), m in 1usize..3) {
        let mut rng = rng_from_seed(seed ^ 3);
        let cs: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.5)).collect();
        let prob = random_problem(seed, 3, &cs);
        let posts: Vec<_> = (0..m).map(|_| random_kernel(&mut rng, 2, 3)).collect();
        let r = data_processing_check(&prob, &posts, &BASolverOptions::default()).unwrap();
        prop_assert!(r.certified);
        prop_assert!(consistent(&r));
        prop_assert!(r.passed, "{:?}", r);
    }
}

#[test]
fn large_alphabets_are_not_certified() {
    let prob = random_problem(11, 20, &[0.5]);
    let samples = vec![vec![0.4], vec![0.5], vec![0.6]];
    let r = convexity_check(&prob, &samples, &BASolverOptions { restarts: 2, ..Default::default() }).unwrap();
    assert!(!r.certified);
    assert!(consistent(&r));
}
