//! Finite-alphabet measures, kernels and the information functionals built on them.
//!
//! All logarithms are natural, so every divergence is reported in nats.
//! Conventions: `0 ln 0 = 0`, `0 ln(0/0) = 0`, and a divergence that needs
//! mass where the reference has none is `+inf`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, invalid, Error, Result};

/// Tolerance on the total mass of a probability vector and on kernel row sums.
pub const PROB_TOL: f64 = 1e-12;

/// A finite nonnegative measure, not necessarily normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("measure over an empty alphabet");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("measure weight {w} is negative or not finite"));
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::ZeroMass);
        }
        Ok(Self { weights })
    }

    /// Counting measure on `n` letters.
    pub fn counting(n: usize) -> Self {
        Self {
            weights: vec![1.0; n.max(1)],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn normalized(&self) -> DiscreteDistribution {
        let t = self.total();
        DiscreteDistribution {
            weights: self.weights.iter().map(|w| w / t).collect(),
        }
    }

    /// Multiplies every weight by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return invalid(format!("scale factor {factor} must be positive and finite"));
        }
        Self::new(self.weights.iter().map(|w| w * factor).collect())
    }

    /// Product measure, indexed row-major (`self` is the slow coordinate).
    pub fn product(&self, other: &Self) -> Self {
        let weights = self
            .weights
            .iter()
            .flat_map(|a| other.weights.iter().map(move |b| a * b))
            .collect();
        Self { weights }
    }
}

impl TryFrom<Vec<f64>> for DiscreteMeasure {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteMeasure> for Vec<f64> {
    fn from(m: DiscreteMeasure) -> Self {
        m.weights
    }
}

/// A probability vector: nonnegative weights summing to one within [`PROB_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return invalid("distribution over an empty alphabet");
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return invalid(format!("probability {w} is negative or not finite"));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > PROB_TOL {
            return invalid(format!("probabilities sum to {s}, not 1"));
        }
        Ok(Self { weights })
    }

    /// Normalizes a nonnegative vector with positive mass.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        Ok(DiscreteMeasure::new(weights)?.normalized())
    }

    pub fn uniform(n: usize) -> Self {
        let n = n.max(1);
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(n: usize, at: usize) -> Result<Self> {
        if at >= n {
            return invalid(format!("point mass index {at} outside alphabet of size {n}"));
        }
        let mut weights = vec![0.0; n];
        weights[at] = 1.0;
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn as_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure {
            weights: self.weights.clone(),
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        Self {
            weights: self.as_measure().product(&other.as_measure()).weights,
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub(crate) fn from_raw(weights: Vec<f64>) -> Self {
        Self { weights }
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.weights
    }
}

/// Row-stochastic matrix `K(x, y)`, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Kernel {
    n_in: usize,
    n_out: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn from_flat(n_in: usize, n_out: usize, data: Vec<f64>) -> Result<Self> {
        if n_in == 0 || n_out == 0 {
            return invalid("kernel with an empty alphabet");
        }
        check_dim("kernel entries", n_in * n_out, data.len())?;
        for (x, row) in data.chunks(n_out).enumerate() {
            if let Some(v) = row.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return invalid(format!("kernel row {x} has entry {v}"));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > PROB_TOL {
                return invalid(format!("kernel row {x} sums to {s}"));
            }
        }
        Ok(Self { n_in, n_out, data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_in = rows.len();
        let n_out = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != n_out) {
            return Err(Error::DimensionMismatch {
                context: "kernel row length",
                expected: n_out,
                found: r.len(),
            });
        }
        Self::from_flat(n_in, n_out, rows.into_iter().flatten().collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self {
            n_in: n,
            n_out: n,
            data,
        }
    }

    /// Binary symmetric channel with crossover probability `eps`.
    pub fn bsc(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return invalid(format!("crossover {eps} outside [0, 1]"));
        }
        Self::from_flat(2, 2, vec![1.0 - eps, eps, eps, 1.0 - eps])
    }

    /// Every input maps to the same output law `row`.
    pub fn constant(n_in: usize, row: &DiscreteDistribution) -> Self {
        Self {
            n_in,
            n_out: row.len(),
            data: (0..n_in).flat_map(|_| row.weights().iter().copied()).collect(),
        }
    }

    /// Deterministic map `x -> map[x]` into an alphabet of size `n_out`.
    pub fn deterministic(map: &[usize], n_out: usize) -> Result<Self> {
        let mut data = vec![0.0; map.len() * n_out];
        for (x, &y) in map.iter().enumerate() {
            if y >= n_out {
                return invalid(format!("map sends {x} to {y} outside alphabet {n_out}"));
            }
            data[x * n_out + y] = 1.0;
        }
        Self::from_flat(map.len(), n_out, data)
    }

    /// Projection of a row-major product alphabet with the given factor sizes
    /// onto the coordinates listed in `keep` (in the order given).
    pub fn projection(sizes: &[usize], keep: &[usize]) -> Result<Self> {
        if let Some(&k) = keep.iter().find(|&&k| k >= sizes.len()) {
            return invalid(format!("projection coordinate {k} out of range"));
        }
        let n_in: usize = sizes.iter().product();
        let n_out: usize = keep.iter().map(|&k| sizes[k]).product();
        let map: Vec<usize> = (0..n_in)
            .map(|x| {
                let digits = unflatten(x, sizes);
                keep.iter().fold(0, |acc, &k| acc * sizes[k] + digits[k])
            })
            .collect();
        Self::deterministic(&map, n_out)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_out(&self) -> usize {
        self.n_out
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[x * self.n_out + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.data[x * self.n_out..(x + 1) * self.n_out]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_out)
    }

    /// `self` followed by `next`.
    pub fn compose(&self, next: &Kernel) -> Result<Kernel> {
        check_dim("kernel composition", self.n_out, next.n_in)?;
        let mut data = vec![0.0; self.n_in * next.n_out];
        for x in 0..self.n_in {
            for y in 0..self.n_out {
                let a = self.get(x, y);
                if a == 0.0 {
                    continue;
                }
                for z in 0..next.n_out {
                    data[x * next.n_out + z] += a * next.get(y, z);
                }
            }
        }
        Ok(Kernel {
            n_in: self.n_in,
            n_out: next.n_out,
            data,
        })
    }

    /// Tensor product acting independently on the two coordinates.
    pub fn tensor(&self, other: &Kernel) -> Kernel {
        let n_in = self.n_in * other.n_in;
        let n_out = self.n_out * other.n_out;
        let mut data = vec![0.0; n_in * n_out];
        for x1 in 0..self.n_in {
            for x2 in 0..other.n_in {
                let x = x1 * other.n_in + x2;
                for y1 in 0..self.n_out {
                    for y2 in 0..other.n_out {
                        data[x * n_out + y1 * other.n_out + y2] =
                            self.get(x1, y1) * other.get(x2, y2);
                    }
                }
            }
        }
        Kernel { n_in, n_out, data }
    }

    pub(crate) fn apply(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_out];
        for (px, row) in p.iter().zip(self.rows()) {
            if *px == 0.0 {
                continue;
            }
            for (o, k) in out.iter_mut().zip(row) {
                *o += px * k;
            }
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for Kernel {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<Kernel> for Vec<Vec<f64>> {
    fn from(k: Kernel) -> Self {
        k.data.chunks(k.n_out).map(<[f64]>::to_vec).collect()
    }
}

/// Cost `d(x)` with values in `(-inf, +inf]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostFunction {
    values: Vec<f64>,
}

impl CostFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return invalid("cost entries must lie in (-inf, +inf]");
        }
        if !values.iter().any(|v| v.is_finite()) {
            return invalid("cost must be finite somewhere");
        }
        Ok(Self { values })
    }

    pub fn zero(n: usize) -> Self {
        Self {
            values: vec![0.0; n],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Row-major digits of `x` in the mixed radix `sizes`.
pub fn unflatten(mut x: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    for (d, s) in digits.iter_mut().zip(sizes).rev() {
        *d = x % s;
        x /= s;
    }
    digits
}

pub(crate) fn kl(p: &[f64], mu: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&a, &b) in p.iter().zip(mu) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return f64::INFINITY;
        }
        acc += a * (a / b).ln();
    }
    acc
}

/// `D(P || mu) = sum_x P(x) ln(P(x) / mu(x))`; `+inf` unless `P << mu`.
pub fn relative_entropy(p: &DiscreteDistribution, mu: &DiscreteMeasure) -> Result<f64> {
    check_dim("relative_entropy", mu.len(), p.len())?;
    Ok(kl(p.weights(), mu.weights()))
}

pub fn pushforward(p: &DiscreteDistribution, k: &Kernel) -> Result<DiscreteDistribution> {
    check_dim("pushforward", k.n_in(), p.len())?;
    Ok(DiscreteDistribution::from_raw(k.apply(p.weights())))
}

pub fn pushforward_measure(mu: &DiscreteMeasure, k: &Kernel) -> Result<DiscreteMeasure> {
    check_dim("pushforward", k.n_in(), mu.len())?;
    DiscreteMeasure::new(k.apply(mu.weights()))
}

/// Rényi divergence of order `alpha`, written without a reference measure:
/// `(1/(alpha-1)) ln sum_x Q(x)^alpha R(x)^(1-alpha)`.
pub fn renyi_divergence(q: &DiscreteMeasure, r: &DiscreteMeasure, alpha: f64) -> Result<f64> {
    check_dim("renyi_divergence", q.len(), r.len())?;
    if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
        return invalid(format!(
            "Renyi order {alpha} must lie in (0,1) or (1,inf); use relative_entropy at 1"
        ));
    }
    let mut logs = Vec::with_capacity(q.len());
    for (&a, &b) in q.weights().iter().zip(r.weights()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            if alpha > 1.0 {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        logs.push(alpha * a.ln() + (1.0 - alpha) * b.ln());
    }
    let s = log_sum_exp(&logs);
    Ok(s / (alpha - 1.0))
}

/// `(sum_x mu(x) f(x)^p)^(1/p)`; a genuine norm only for `p >= 1`.
pub fn weighted_norm(f: &[f64], mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    Ok(log_weighted_norm(f, mu, p)?.exp())
}

/// Natural log of [`weighted_norm`], `-inf` when `f` vanishes on the support of `mu`.
pub fn log_weighted_norm(f: &[f64], mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    check_dim("weighted_norm", mu.len(), f.len())?;
    if !(p > 0.0 && p.is_finite()) {
        return invalid(format!("norm exponent {p} must be positive"));
    }
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0) || v.is_infinite()) {
        return invalid(format!("function value {v} must be finite and nonnegative"));
    }
    let logs: Vec<f64> = f
        .iter()
        .zip(mu.weights())
        .filter(|(v, m)| **v > 0.0 && **m > 0.0)
        .map(|(v, m)| m.ln() + p * v.ln())
        .collect();
    Ok(log_sum_exp(&logs) / p)
}

/// `ln sum exp(v)`, `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}
