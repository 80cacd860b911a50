//! Convex minimization of `sum_j c_j D(T_j pi || mu_j)` over couplings.
//!
//! The feasible set is the polytope of joint laws on a row-major product
//! alphabet with some coordinate marginals pinned. The solver first finds a
//! strictly feasible point by iterative proportional fitting on the admissible
//! support, then runs a log-barrier Newton method on the affine hull of the
//! constraints. A Frank-Wolfe gap, computed with an exact linear program,
//! certifies the final iterate.

use nalgebra::SymmetricEigen;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::lp;
use crate::measures::{kl, unflatten, DiscreteMeasure, Kernel};

/// Largest flattened product alphabet the solver accepts.
pub const MAX_PRODUCT_SIZE: usize = 4096;

/// Target duality gap of the barrier path.
const BARRIER_GAP: f64 = 1e-10;
/// Entries pushed below this by proportional fitting are treated as forced zeros.
const FORCED_ZERO: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTerm {
    pub kernel: Kernel,
    pub mu: DiscreteMeasure,
    pub c: f64,
}

/// `min_pi sum_j c_j D(T_j pi || mu_j)` subject to coordinate marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingProgram {
    sizes: Vec<usize>,
    terms: Vec<CouplingTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSolution {
    /// `+inf` when no coupling has finite cost.
    pub value: f64,
    pub coupling: Vec<f64>,
    pub newton_steps: usize,
    /// Frank-Wolfe gap at the returned coupling, when requested.
    pub fw_gap: Option<f64>,
}

impl CouplingProgram {
    pub fn new(sizes: Vec<usize>, terms: Vec<CouplingTerm>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return invalid("product alphabet factors must be nonempty");
        }
        let n = sizes.iter().try_fold(1usize, |acc, s| acc.checked_mul(*s));
        let n = match n {
            Some(n) if n <= MAX_PRODUCT_SIZE => n,
            other => {
                return Err(Error::TooLarge {
                    context: "product alphabet",
                    limit: MAX_PRODUCT_SIZE,
                    found: other.unwrap_or(usize::MAX),
                })
            }
        };
        for t in &terms {
            check_dim("coupling term input", n, t.kernel.n_in())?;
            check_dim("coupling term output", t.kernel.n_out(), t.mu.len())?;
            if !(t.c > 0.0 && t.c.is_finite()) {
                return invalid(format!("coefficient {} must be positive", t.c));
            }
        }
        Ok(Self { sizes, terms })
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn terms(&self) -> &[CouplingTerm] {
        &self.terms
    }

    pub fn product_size(&self) -> usize {
        self.sizes.iter().product()
    }

    /// Objective at an arbitrary joint law.
    pub fn objective(&self, pi: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.c * kl(&t.kernel.apply(pi), t.mu.weights()))
            .sum()
    }

    fn gradient(&self, pi: &[f64]) -> Vec<f64> {
        let n = pi.len();
        let mut g = vec![0.0; n];
        for t in &self.terms {
            let out = t.kernel.apply(pi);
            let slope: Vec<f64> = out
                .iter()
                .zip(t.mu.weights())
                .map(|(a, b)| if *a > 0.0 { 1.0 + (a / b).ln() } else { f64::NEG_INFINITY })
                .collect();
            for (x, gx) in g.iter_mut().enumerate() {
                for (y, k) in t.kernel.row(x).iter().enumerate() {
                    if *k > 0.0 {
                        *gx += t.c * k * slope[y];
                    }
                }
            }
        }
        g
    }

    /// Variables that can carry mass: compatible with every pinned marginal's
    /// support and never sent where some `mu_j` vanishes.
    fn admissible(&self, marginals: &[Option<&[f64]>]) -> Vec<bool> {
        let n = self.product_size();
        (0..n)
            .map(|x| {
                let digits = unflatten(x, &self.sizes);
                let in_support = marginals
                    .iter()
                    .zip(&digits)
                    .all(|(m, &z)| m.is_none_or(|m| m[z] > 0.0));
                in_support
                    && self.terms.iter().all(|t| {
                        t.kernel
                            .row(x)
                            .iter()
                            .zip(t.mu.weights())
                            .all(|(k, m)| *k == 0.0 || *m > 0.0)
                    })
            })
            .collect()
    }

    fn check_marginals(&self, marginals: &[Option<&[f64]>]) -> Result<()> {
        check_dim("marginal list", self.sizes.len(), marginals.len())?;
        for (i, m) in marginals.iter().enumerate() {
            if let Some(m) = m {
                check_dim("marginal length", self.sizes[i], m.len())?;
                if m.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return invalid("marginals must be nonnegative");
                }
                let s: f64 = m.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return invalid(format!("marginal {i} sums to {s}"));
                }
            }
        }
        Ok(())
    }

    /// Solves the program; `certify` additionally computes the Frank-Wolfe gap.
    pub fn solve(&self, marginals: &[Option<&[f64]>], certify: bool) -> Result<CouplingSolution> {
        self.check_marginals(marginals)?;
        let mut allowed = self.admissible(marginals);
        let n = allowed.len();
        let infeasible = || CouplingSolution {
            value: f64::INFINITY,
            coupling: vec![0.0; n],
            newton_steps: 0,
            fw_gap: None,
        };
        let Some(mut pi) = self.proportional_fit(marginals, &allowed) else {
            return Ok(infeasible());
        };
        let mut dropped = false;
        for (a, p) in allowed.iter_mut().zip(pi.iter_mut()) {
            if *a && *p < FORCED_ZERO {
                *a = false;
                *p = 0.0;
                dropped = true;
            }
        }
        if dropped {
            match self.proportional_fit(marginals, &allowed) {
                Some(p) => pi = p,
                None => return Ok(infeasible()),
            }
        }
        let free: Vec<usize> = (0..allowed.len()).filter(|&x| allowed[x]).collect();
        let basis = self.null_space(marginals, &free);
        let newton_steps = if basis.ncols() > 0 {
            self.barrier(&mut pi, &free, &basis)
        } else {
            0
        };
        let value = self.objective(&pi);
        let fw_gap = if certify {
            self.frank_wolfe_gap(marginals, &allowed, &pi)?
        } else {
            None
        };
        Ok(CouplingSolution {
            value,
            coupling: pi,
            newton_steps,
            fw_gap,
        })
    }

    /// Iterative proportional fitting from the uniform law on `allowed`.
    fn proportional_fit(&self, marginals: &[Option<&[f64]>], allowed: &[bool]) -> Option<Vec<f64>> {
        let n = allowed.len();
        let count = allowed.iter().filter(|a| **a).count();
        if count == 0 {
            return None;
        }
        let mut pi: Vec<f64> = allowed
            .iter()
            .map(|a| if *a { 1.0 / count as f64 } else { 0.0 })
            .collect();
        let digits: Vec<Vec<usize>> = (0..n).map(|x| unflatten(x, &self.sizes)).collect();
        let pinned: Vec<(usize, &[f64])> = marginals
            .iter()
            .enumerate()
            .filter_map(|(i, m)| m.map(|m| (i, m)))
            .collect();
        if pinned.is_empty() {
            return Some(pi);
        }
        for _sweep in 0..20_000 {
            for &(i, m) in &pinned {
                let mut cur = vec![0.0; self.sizes[i]];
                for x in 0..n {
                    cur[digits[x][i]] += pi[x];
                }
                for x in 0..n {
                    let z = digits[x][i];
                    if pi[x] > 0.0 {
                        pi[x] *= m[z] / cur[z];
                    }
                }
            }
            let err = pinned
                .iter()
                .map(|&(i, m)| {
                    let mut cur = vec![0.0; self.sizes[i]];
                    for x in 0..n {
                        cur[digits[x][i]] += pi[x];
                    }
                    cur.iter().zip(m).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if !err.is_finite() {
                return None;
            }
            if err < 1e-14 {
                return Some(pi);
            }
        }
        None
    }

    /// Orthonormal basis of directions on `free` that keep every pinned marginal fixed.
    fn null_space(&self, marginals: &[Option<&[f64]>], free: &[usize]) -> Matrix {
        let k = free.len();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut any = false;
        for (i, m) in marginals.iter().enumerate() {
            if m.is_none() {
                continue;
            }
            any = true;
            for z in 0..self.sizes[i] {
                let row: Vec<f64> = free
                    .iter()
                    .map(|&x| if unflatten(x, &self.sizes)[i] == z { 1.0 } else { 0.0 })
                    .collect();
                if row.iter().any(|v| *v != 0.0) {
                    rows.push(row);
                }
            }
        }
        if !any {
            rows.push(vec![1.0; k]);
        }
        let a = Matrix::from_fn(rows.len(), k, |r, c| rows[r][c]);
        let gram = a.transpose() * &a;
        let eig = SymmetricEigen::new(gram);
        let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let idx: Vec<usize> = (0..k)
            .filter(|&i| eig.eigenvalues[i].abs() <= 1e-9 * scale)
            .collect();
        let mut basis = Matrix::zeros(k, idx.len());
        for (c, &i) in idx.iter().enumerate() {
            basis.set_column(c, &eig.eigenvectors.column(i));
        }
        basis
    }

    /// Barrier path on the free coordinates; returns the number of Newton steps.
    fn barrier(&self, pi: &mut [f64], free: &[usize], basis: &Matrix) -> usize {
        let k = free.len();
        let mut t = 1.0;
        let t_final = k as f64 / BARRIER_GAP;
        let mut steps = 0;
        let phi = |pi: &[f64], t: f64| -> f64 {
            let mut v = t * self.objective(pi);
            for &x in free {
                if pi[x] <= 0.0 {
                    return f64::INFINITY;
                }
                v -= pi[x].ln();
            }
            v
        };
        loop {
            for _ in 0..100 {
                let grad_full = self.gradient(pi);
                let mut g = Vector::zeros(k);
                for (a, &x) in free.iter().enumerate() {
                    g[a] = t * grad_full[x] - 1.0 / pi[x];
                }
                let h = self.reduced_hessian(pi, free, t);
                let rg = basis.transpose() * &g;
                let rh = basis.transpose() * &h * basis;
                let Some(chol) = nalgebra::Cholesky::new(crate::linalg::symmetrize(&rh)) else {
                    break;
                };
                let delta = -chol.solve(&rg);
                let dir = basis * &delta;
                let decrement = -rg.dot(&delta);
                if decrement / 2.0 <= 1e-14 {
                    break;
                }
                let mut step = 1.0f64;
                for (a, &x) in free.iter().enumerate() {
                    if dir[a] < 0.0 {
                        step = step.min(-0.99 * pi[x] / dir[a]);
                    }
                }
                let base = phi(pi, t);
                let mut trial = pi.to_vec();
                let mut accepted = false;
                for _ in 0..60 {
                    for (a, &x) in free.iter().enumerate() {
                        trial[x] = pi[x] + step * dir[a];
                    }
                    let v = phi(&trial, t);
                    if v <= base - 0.25 * step * decrement {
                        accepted = true;
                        break;
                    }
                    step *= 0.5;
                }
                steps += 1;
                if !accepted {
                    break;
                }
                pi.copy_from_slice(&trial);
            }
            if t >= t_final {
                break;
            }
            t = (t * 10.0).min(t_final);
        }
        steps
    }

    fn reduced_hessian(&self, pi: &[f64], free: &[usize], t: f64) -> Matrix {
        let k = free.len();
        let mut h = Matrix::zeros(k, k);
        for term in &self.terms {
            let out = term.kernel.apply(pi);
            for y in 0..term.kernel.n_out() {
                if out[y] <= 0.0 {
                    continue;
                }
                let w = t * term.c / out[y];
                let col: Vec<f64> = free.iter().map(|&x| term.kernel.get(x, y)).collect();
                for a in 0..k {
                    if col[a] == 0.0 {
                        continue;
                    }
                    for b in 0..k {
                        h[(a, b)] += w * col[a] * col[b];
                    }
                }
            }
        }
        for (a, &x) in free.iter().enumerate() {
            h[(a, a)] += 1.0 / (pi[x] * pi[x]);
        }
        h
    }

    fn frank_wolfe_gap(
        &self,
        marginals: &[Option<&[f64]>],
        allowed: &[bool],
        pi: &[f64],
    ) -> Result<Option<f64>> {
        let g = self.gradient(pi);
        let cost: Vec<f64> = g
            .iter()
            .zip(allowed)
            .map(|(v, a)| if *a { *v } else { 0.0 })
            .collect();
        if cost.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let Some((lin_min, _)) = lp::min_linear_over_couplings(&self.sizes, marginals, allowed, &cost)?
        else {
            return Ok(None);
        };
        let at_pi: f64 = cost.iter().zip(pi).map(|(a, b)| a * b).sum();
        Ok(Some((at_pi - lin_min).max(0.0)))
    }
}
