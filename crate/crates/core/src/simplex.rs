//! Probability-simplex grids and seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::{invalid, Result};
use crate::measures::{DiscreteDistribution, Kernel};

pub type SeededRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of subdivisions for a grid spacing, i.e. `round(1 / step)`.
pub fn grid_divisions(step: f64) -> Result<usize> {
    if !(step > 0.0 && step <= 1.0) {
        return invalid(format!("grid step {step} must lie in (0, 1]"));
    }
    Ok((1.0 / step).round().max(1.0) as usize)
}

/// Number of points `{i / k}` on the `n`-letter simplex.
pub fn grid_size(n: usize, k: usize) -> u128 {
    // C(k + n - 1, n - 1)
    let r = n.saturating_sub(1) as u128;
    (1..=r).fold(1u128, |acc, i| acc * (k as u128 + i) / i)
}

/// Calls `visit` on every point of the simplex whose coordinates are multiples of `1/k`.
pub fn for_each_grid_point(n: usize, k: usize, mut visit: impl FnMut(&[f64])) {
    if n == 0 {
        return;
    }
    let mut counts = vec![0usize; n];
    let mut point = vec![0.0; n];
    fn rec(
        pos: usize,
        left: usize,
        k: usize,
        counts: &mut [usize],
        point: &mut [f64],
        visit: &mut dyn FnMut(&[f64]),
    ) {
        let n = counts.len();
        if pos == n - 1 {
            counts[pos] = left;
            for (p, c) in point.iter_mut().zip(counts.iter()) {
                *p = *c as f64 / k as f64;
            }
            visit(point);
            return;
        }
        for c in 0..=left {
            counts[pos] = c;
            rec(pos + 1, left - c, k, counts, point, visit);
        }
    }
    rec(0, k, k, &mut counts, &mut point, &mut visit);
}

/// Uniform draw from the simplex (symmetric Dirichlet(1)).
pub fn random_distribution(rng: &mut impl Rng, n: usize) -> DiscreteDistribution {
    loop {
        let w: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        if let Ok(d) = DiscreteDistribution::from_unnormalized(w) {
            return d;
        }
    }
}

pub fn random_kernel(rng: &mut impl Rng, n_in: usize, n_out: usize) -> Kernel {
    let mut data = Vec::with_capacity(n_in * n_out);
    for _ in 0..n_in {
        data.extend_from_slice(random_distribution(rng, n_out).weights());
    }
    Kernel::from_flat(n_in, n_out, renormalize_rows(data, n_out))
        .expect("rows drawn from the simplex")
}

fn renormalize_rows(mut data: Vec<f64>, n_out: usize) -> Vec<f64> {
    for row in data.chunks_mut(n_out) {
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= s);
    }
    data
}
