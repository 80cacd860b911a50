//! End-to-end acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use blkit_core::bl_forward::{self, BASolverOptions, ForwardBLProblem, ForwardChannel};
use blkit_core::frbl::{self, FRBLProblem, OuterSearchOptions, ReverseTerm};
use blkit_core::gaussian_opt::{self, F0Options, GaussianF0Problem, KeygenOptions};
use blkit_core::linalg::{self, Matrix, Vector};
use blkit_core::simplex::{self, rng_from_seed, SeededRng};
use blkit_core::special_cases;
use blkit_core::{property_harness, CostFunction, DiscreteDistribution, GaussianChannel, GaussianMeasure, Kernel};
use rand::Rng;
use rand_distr::StandardNormal;

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        summary: summary.into(),
    }
}

fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            if *a == 0.0 {
                0.0
            } else if *b == 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).ln()
            }
        })
        .sum()
}

fn push(p: &[f64], k: &Kernel) -> Vec<f64> {
    (0..k.n_out())
        .map(|y| p.iter().enumerate().map(|(x, px)| px * k.get(x, y)).sum())
        .collect()
}

fn random_psd(rng: &mut SeededRng, n: usize, lo: f64, hi: f64) -> Matrix {
    let g = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let d = Vector::from_fn(n, |_, _| rng.random_range(lo..hi));
    linalg::symmetrize(&(&q * Matrix::from_diagonal(&d) * q.transpose()))
}

// 1. Gaussian hypercontractivity boundary along p1 = p2.
fn gaussian_hc_boundary() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut flips_ok = true;
    for rho in [0.0, 0.3, 0.7, 0.95] {
        let sigma = Matrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let margin = |p: f64| gaussian_opt::gaussian_hc_member(&sigma, &[p, p]).unwrap();
        let (mut lo, mut hi) = (1.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if margin(mid).margin >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        worst = worst.max((hi - (1.0 + rho)).abs());
        // The decision flag flips inside the membership tolerance band.
        let t = gaussian_opt::HC_MEMBER_TOL;
        flips_ok &= margin(1.0 + rho).member && (rho == 0.0 || !margin(1.0 + rho - 2.0 * t).member);
    }
    outcome(worst <= 1e-9 && flips_ok, format!("max |boundary - (1+rho)| = {worst:.2e}"))
}

// 2. Wyner common information for rho = 0.5.
fn wyner() -> Outcome {
    let rho: f64 = 0.5;
    let sigma = Matrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let r = gaussian_opt::wyner_ci(&sigma).unwrap();
    let closed = 0.5 * 3f64.ln();
    let det = 1.0 - rho * rho;
    let mut grid = f64::INFINITY;
    for i in 1..=1000 {
        for j in 1..=1000 {
            let (d1, d2) = (i as f64 * 1e-3, j as f64 * 1e-3);
            if (1.0 - d1) * (1.0 - d2) >= rho * rho - 1e-15 {
                grid = grid.min(0.5 * (det / (d1 * d2)).ln());
            }
        }
    }
    let e1 = (r.value - closed).abs();
    let e2 = (r.value - grid).abs();
    outcome(
        e1 <= 1e-6 && e2 <= 2e-3,
        format!("C = {:.9}, |C - ln3/2| = {e1:.1e}, |C - grid| = {e2:.1e}", r.value),
    )
}

fn random_forward(seed: u64) -> ForwardBLProblem {
    let mut rng = rng_from_seed(1000 + seed);
    let m = 1 + (seed % 2) as usize;
    let nu = simplex::random_distribution(&mut rng, 3).as_measure();
    let channels = (0..m)
        .map(|_| {
            let k = simplex::random_kernel(&mut rng, 3, 3);
            let mu = simplex::random_distribution(&mut rng, 3).as_measure();
            ForwardChannel::new(k, mu, rng.random_range(0.3..1.2)).unwrap()
        })
        .collect();
    ForwardBLProblem::new(nu, CostFunction::zero(3), channels).unwrap()
}

fn grid_oracle(prob: &ForwardBLProblem, steps: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let p = [i as f64, j as f64, (steps - i - j) as f64].map(|v| v / steps as f64);
            let mut v = -kl(&p, prob.nu().weights());
            for ch in prob.channels() {
                v += ch.c * kl(&push(&p, &ch.kernel), ch.mu.weights());
            }
            best = best.max(v);
        }
    }
    best
}

// 3-5. Forward solver against the grid oracle, duality and monotone ascent.
fn forward_suite() -> (Outcome, Outcome, Outcome) {
    let opts = BASolverOptions::default();
    let start = Instant::now();
    let (mut e_oracle, mut e_dual, mut oracle_agree) = (0.0f64, 0.0f64, 0.0f64);
    let mut violations = 0usize;
    let mut steps = 0usize;
    for seed in 0..10 {
        let prob = random_forward(seed);
        let r = bl_forward::best_constant(&prob, &opts).unwrap();
        let brute = bl_forward::best_constant_bruteforce(&prob, 0.01).unwrap();
        oracle_agree = oracle_agree.max((grid_oracle(&prob, 100) - brute).abs());
        e_oracle = e_oracle.max((r.value - brute).abs());
        let gap = bl_forward::functional_gap(&prob, &r.induced_f).unwrap();
        e_dual = e_dual.max((r.value - gap).abs());
        for trace in r.restart_traces.iter().chain(std::iter::once(&r.objective_trace)) {
            for w in trace.windows(2) {
                steps += 1;
                if w[1] < w[0] - 1e-12 {
                    violations += 1;
                }
            }
        }
    }
    let t = start.elapsed();
    (
        outcome(
            e_oracle <= 5e-3 && oracle_agree <= 1e-9 && t < Duration::from_secs(60),
            format!(
                "max |solver - brute force| = {e_oracle:.2e}, brute force vs test grid {oracle_agree:.1e}, {:.1} s",
                t.as_secs_f64()
            ),
        ),
        outcome(e_dual <= 1e-6, format!("max |entropic - functional| = {e_dual:.2e}")),
        outcome(violations == 0, format!("{violations} decreases over {steps} steps")),
    )
}

// 6. Strong data processing constants.
fn sdpi() -> Outcome {
    let opts = BASolverOptions::default();
    let tol = 1e-4;
    let u = DiscreteDistribution::uniform(2);
    let bsc = special_cases::sdpi_constant(&u, &Kernel::bsc(0.1).unwrap(), tol, &opts).unwrap();
    let id = special_cases::sdpi_constant(&u, &Kernel::identity(2), tol, &opts).unwrap();
    let mut rng = rng_from_seed(66);
    let mut ordered = 0;
    for _ in 0..20 {
        let q = simplex::random_distribution(&mut rng, 2);
        let k1 = simplex::random_kernel(&mut rng, 2, 3);
        let k2 = simplex::random_kernel(&mut rng, 3, 2);
        let a = special_cases::sdpi_constant(&q, &k1, tol, &opts).unwrap().value;
        let b = special_cases::sdpi_constant(&q, &k1.compose(&k2).unwrap(), tol, &opts).unwrap().value;
        if b <= a + tol && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            ordered += 1;
        }
    }
    let e = (bsc.value - 0.64).abs();
    outcome(
        e <= 1e-3 && id.value == 1.0 && ordered == 20,
        format!("BSC(0.1) {:.5} (err {e:.1e}), identity {}, ordering {ordered}/20", bsc.value, id.value),
    )
}

// 7. Tensorization of the forward constant.
fn tensorization() -> Outcome {
    let start = Instant::now();
    let opts = BASolverOptions::default();
    let mut worst = 0.0f64;
    let mut certified = true;
    let mut d_range = (f64::INFINITY, f64::NEG_INFINITY);
    for seed in 0..5 {
        let mut rng = rng_from_seed(700 + seed);
        let nu = simplex::random_distribution(&mut rng, 2).as_measure();
        let k = simplex::random_kernel(&mut rng, 2, 2);
        let mu = simplex::random_distribution(&mut rng, 2).as_measure();
        let ch = ForwardChannel::new(k, mu, rng.random_range(0.3..1.2)).unwrap();
        let prob = ForwardBLProblem::new(nu, CostFunction::zero(2), vec![ch]).unwrap();
        let r = property_harness::tensorization_check(&prob, &prob, &opts).unwrap();
        certified &= r.certified;
        worst = worst.max((r.details["d12"] - 2.0 * r.details["d1"]).abs());
        d_range = (d_range.0.min(r.details["d1"]), d_range.1.max(r.details["d1"]));
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-4 && certified && t < Duration::from_secs(120),
        format!(
            "max |d(P x P) - 2 d(P)| = {worst:.2e}, d(P) in [{:.4}, {:.4}], certified {certified}, {:.1} s",
            d_range.0,
            d_range.1,
            t.as_secs_f64()
        ),
    )
}

// 8. Loomis-Whitney over every nonempty subset of {0,1}^3.
fn shearer() -> Outcome {
    let cube: Vec<Vec<usize>> = (0..8).map(|i| vec![i & 1, (i >> 1) & 1, (i >> 2) & 1]).collect();
    let mut violations = 0;
    for mask in 1u32..256 {
        let set: Vec<Vec<usize>> = (0..8).filter(|i| mask >> i & 1 == 1).map(|i| cube[i].clone()).collect();
        let r = special_cases::shearer_check(&set).unwrap();
        let mut prod = 1usize;
        for j in 0..3 {
            let mut proj: Vec<Vec<usize>> = set
                .iter()
                .map(|x| x.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, v)| *v).collect())
                .collect();
            proj.sort();
            proj.dedup();
            prod *= proj.len();
        }
        let oracle = set.len() * set.len() <= prod;
        if !r.passed || !oracle {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations over 255 sets"))
}

// 9. Gaussian transportation inequality.
fn gaussian_t2() -> Outcome {
    let mut rng = rng_from_seed(9);
    let mut min_margin = f64::INFINITY;
    for _ in 0..1000 {
        let n = rng.random_range(1..=4);
        let cov = random_psd(&mut rng, n, 0.1, 10.0);
        let mean = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let p = GaussianMeasure::new(mean, cov).unwrap();
        min_margin = min_margin.min(gaussian_opt::gaussian_t2_margin(&p, 1.0).unwrap());
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=4);
        let mean = Vector::from_fn(n, |_, _| rng.random_range(-3.0..3.0));
        let lambda = rng.random_range(0.2..3.0);
        let p = GaussianMeasure::new(mean.clone(), Matrix::identity(n, n)).unwrap();
        let m = gaussian_opt::gaussian_t2_margin(&p, lambda).unwrap();
        worst = worst.max(((lambda - 1.0) * mean.norm_squared() - m).abs());
    }
    outcome(
        min_margin >= -1e-9 && worst <= 1e-9,
        format!("min margin {min_margin:.3e}, translation family error {worst:.1e}"),
    )
}

fn random_channels(rng: &mut SeededRng, n: usize, m: usize) -> Vec<(GaussianChannel, f64)> {
    (0..m)
        .map(|_| {
            let k = rng.random_range(1..=n);
            let b = Matrix::from_fn(k, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let noise = random_psd(rng, k, 0.2, 2.0);
            (GaussianChannel::new(b, noise).unwrap(), rng.random_range(0.2..1.5))
        })
        .collect()
}

// 10. Analytic gradient of F0 against central differences.
fn gradient_check() -> Outcome {
    let mut rng = rng_from_seed(10);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(1..=4);
        let m = rng.random_range(1..=3);
        let channels = random_channels(&mut rng, n, m);
        let mm = random_psd(&mut rng, n, 0.0, 1.0);
        let prob = GaussianF0Problem::new(n, channels, rng.random_range(0.0..1.0), mm, None).unwrap();
        let s = random_psd(&mut rng, n, 0.3, 2.0);
        let g = gaussian_opt::f0_gradient(&s, &prob).unwrap();
        let h = 1e-5;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in i..n {
                let mut e = Matrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                let fd = (gaussian_opt::f0_gaussian(&(&s + &e * h), &prob).unwrap()
                    - gaussian_opt::f0_gaussian(&(&s - &e * h), &prob).unwrap())
                    / (2.0 * h);
                let an = linalg::frob_dot(&g, &e);
                num += (fd - an) * (fd - an);
                den += an * an;
            }
        }
        worst = worst.max((num / den.max(1e-300)).sqrt());
    }
    outcome(worst <= 1e-5, format!("max relative error {worst:.2e}"))
}

/// `min_a D(P || Q) - b1 D(P1 || Q1) - b2 D(P2 || Q2)` over binary couplings with `P(Z1 = 0) = p1`, `P(Z2 = 0) = p2`.
fn rhc_inner(q: &[f64; 4], p1: f64, p2: f64, b1: f64, b2: f64) -> f64 {
    let q1 = [q[0] + q[1], q[2] + q[3]];
    let q2 = [q[0] + q[2], q[1] + q[3]];
    let joint = |a: f64| {
        let p = [a, p1 - a, p2 - a, 1.0 - p1 - p2 + a].map(|v| v.max(0.0));
        kl(&p, q)
    };
    let (mut lo, mut hi) = ((p1 + p2 - 1.0).max(0.0), p1.min(p2));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..200 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if joint(a) <= joint(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let inner = joint(0.5 * (lo + hi)).min(joint(lo)).min(joint(hi));
    inner - b1 * kl(&[p1, 1.0 - p1], &q1) - b2 * kl(&[p2, 1.0 - p2], &q2)
}

// 11. Forward-reverse consistency and reverse hypercontractivity.
fn frbl_suite() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let mut rng = rng_from_seed(1100 + seed);
        let q = simplex::random_distribution(&mut rng, 2);
        let k = simplex::random_kernel(&mut rng, 2, 2);
        let c = rng.random_range(0.3..2.0);
        let fwd = ForwardBLProblem::canonical(&q, vec![(k.clone(), c)]).unwrap();
        let mu = fwd.channels()[0].mu.clone();
        let prob = FRBLProblem::new(vec![ReverseTerm { nu: q.as_measure(), b: 1.0 }], vec![(k, mu, c)], 0.0).unwrap();
        let a = frbl::best_frbl_constant(&prob, &OuterSearchOptions::default()).unwrap().value;
        let b = bl_forward::best_constant(&fwd, &BASolverOptions::default()).unwrap().value;
        worst = worst.max((a - b).abs());
    }
    let qw = [0.45, 0.05, 0.05, 0.45];
    let q = DiscreteDistribution::new(qw.to_vec()).unwrap();
    let tol = 1e-7;
    let mut agree = 0;
    for b1 in [0.5, 1.0, 2.0] {
        for b2 in [0.5, 1.0, 2.0] {
            let mut grid = f64::NEG_INFINITY;
            for i in 0..=50 {
                for j in 0..=50 {
                    grid = grid.max(rhc_inner(&qw, i as f64 / 50.0, j as f64 / 50.0, b1, b2));
                }
            }
            let lib = special_cases::rhc_member_discrete(&q, (2, 2), b1, b2, tol, &OuterSearchOptions::default())
                .unwrap();
            if lib.member == (grid <= tol) {
                agree += 1;
            }
        }
    }
    outcome(
        worst <= 1e-6 && agree == 9,
        format!("max |frbl - forward| = {worst:.1e}, rHC decisions agree {agree}/9"),
    )
}

// 12. Gaussian mixtures never beat the Gaussian optimum under the same cap.
fn exhaustibility() -> Outcome {
    let mut rng = rng_from_seed(12);
    let mut violations = 0;
    let mut min_gap = f64::INFINITY;
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let m = rng.random_range(1..=2);
        let channels = random_channels(&mut rng, n, m);
        let mm = random_psd(&mut rng, n, 0.0, 1.0);
        let cap = random_psd(&mut rng, n, 0.3, 3.0);
        let prob = GaussianF0Problem::new(n, channels, rng.random_range(0.0..1.0), mm, Some(cap.clone())).unwrap();
        let best = gaussian_opt::maximize_f0(&prob, &F0Options::default()).unwrap().value;
        let root = linalg::sqrt_psd(&cap);
        let w = simplex::random_distribution(&mut rng, 3);
        let comps: Vec<(f64, GaussianMeasure)> = w
            .weights()
            .iter()
            .map(|wu| {
                let t = random_psd(&mut rng, n, 0.01, 1.0);
                let cov = linalg::symmetrize(&(&root * t * &root));
                let mean = Vector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
                (*wu, GaussianMeasure::new(mean, cov).unwrap())
            })
            .collect();
        let f = gaussian_opt::f_mixture_eval(&comps, &prob).unwrap();
        min_gap = min_gap.min(best - f);
        if f > best + 1e-6 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} violations, min slack {min_gap:.3e}"))
}

/// Achievable `(R, R_1, R_2)` over `Sigma' = Sigma^{1/2} T Sigma^{1/2}` with `T` on the
/// grid of eigenvalues `t_1, t_2` and rotation angle `theta / pi`, all with step 0.01.
fn keygen_grid(sigma: &Matrix) -> Vec<[f64; 3]> {
    let e = sigma.clone().symmetric_eigen();
    let root = &e.eigenvectors * Matrix::from_diagonal(&e.eigenvalues.map(f64::sqrt)) * e.eigenvectors.transpose();
    let mut out = Vec::with_capacity(1_000_000);
    for a in 0..100 {
        let (s, c) = (PI * a as f64 / 100.0).sin_cos();
        for i in 1..=100 {
            for j in 1..=100 {
                let (t1, t2) = (i as f64 / 100.0, j as f64 / 100.0);
                let off = c * s * (t1 - t2);
                let t = Matrix::from_row_slice(2, 2, &[c * c * t1 + s * s * t2, off, off, s * s * t1 + c * c * t2]);
                let sp = &root * t * &root;
                let u = -0.5 * (t1 * t2).ln();
                out.push([
                    u,
                    u - 0.5 * (sigma[(0, 0)] / sp[(0, 0)]).ln(),
                    u - 0.5 * (sigma[(1, 1)] / sp[(1, 1)]).ln(),
                ]);
            }
        }
    }
    out
}

/// Margin of a claimed witness, recomputed from scratch; `-inf` unless `0 < Sigma' <= Sigma`.
fn keygen_witness_margin(sigma: &Matrix, w: &Matrix, r: f64, rl: &[f64; 2]) -> f64 {
    let gap = (sigma - w).symmetric_eigenvalues().min();
    let own = w.symmetric_eigenvalues().min();
    if gap < -1e-12 || own <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let u = 0.5 * (sigma.determinant() / w.determinant()).ln();
    let v1 = u - 0.5 * (sigma[(0, 0)] / w[(0, 0)]).ln();
    let v2 = u - 0.5 * (sigma[(1, 1)] / w[(1, 1)]).ln();
    (u - r).min(rl[0] - v1).min(rl[1] - v2)
}

// 13. Secret-key region membership for two terminals.
fn keygen() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(13);
    let opts = KeygenOptions::default();
    let (mut agree, mut compared, mut excluded, mut members) = (0, 0, 0, 0);
    let (mut traced, mut traced_ok) = (0, 0);
    for _ in 0..4 {
        let (s1, s2): (f64, f64) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let rho: f64 = rng.random_range(-0.9..0.9);
        let sigma = Matrix::from_row_slice(2, 2, &[s1, rho * (s1 * s2).sqrt(), rho * (s1 * s2).sqrt(), s2]);
        let grid = keygen_grid(&sigma);
        for _ in 0..50 {
            let r = rng.random_range(0.0..1.2);
            let rl = [rng.random_range(0.0..1.2), rng.random_range(0.0..1.2)];
            let g = grid
                .iter()
                .map(|p| (p[0] - r).min(rl[0] - p[1]).min(rl[1] - p[2]))
                .fold(f64::NEG_INFINITY, f64::max);
            if g.abs() <= 1e-3 {
                excluded += 1;
                continue;
            }
            compared += 1;
            let d = gaussian_opt::keygen_region_member(&sigma, r, &rl, &opts).unwrap();
            members += usize::from(d.member);
            let witnessed = !d.member || keygen_witness_margin(&sigma, &d.point.witness, r, &rl) >= -opts.tol;
            if d.member == (g > 0.0) && witnessed {
                agree += 1;
            }
        }
        for pt in gaussian_opt::keygen_region_trace(&sigma, 30, 5).unwrap() {
            traced += 1;
            if gaussian_opt::keygen_region_member(&sigma, pt.rates[0], &pt.rates[1..], &opts)
                .unwrap()
                .member
            {
                traced_ok += 1;
            }
        }
    }
    outcome(
        agree == compared && traced_ok == traced,
        format!(
            "{agree}/{compared} agree ({members} members, {excluded} near-boundary excluded), traced {traced_ok}/{traced} members, {:.1} s",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let timed = |f: fn() -> Outcome, limit: Option<f64>| {
        let start = Instant::now();
        let mut o = f();
        let t = start.elapsed().as_secs_f64();
        if let Some(l) = limit {
            o.passed &= t < l;
            o.summary = format!("{}, {t:.2} s (limit {l} s)", o.summary);
        }
        o
    };
    results.push(("gaussian hypercontractivity boundary", timed(gaussian_hc_boundary, Some(1.0))));
    results.push(("wyner common information", timed(wyner, Some(5.0))));
    let (c3, c4, c5) = forward_suite();
    results.push(("forward solver vs brute force", c3));
    results.push(("duality equality", c4));
    results.push(("monotone ascent", c5));
    results.push(("strong data processing", timed(sdpi, None)));
    results.push(("tensorization", timed(tensorization, None)));
    results.push(("loomis-whitney exhaustive", timed(shearer, None)));
    results.push(("gaussian transportation", timed(gaussian_t2, None)));
    results.push(("gradient check", timed(gradient_check, None)));
    results.push(("forward-reverse consistency", timed(frbl_suite, None)));
    results.push(("exhaustibility spot check", timed(exhaustibility, None)));
    results.push(("key generation region", timed(keygen, None)));
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{tag}] {name}: {}", i + 1, o.summary);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
