//! Forward-reverse Brascamp-Lieb inequalities on finite product alphabets.
//!
//! The input alphabet is `Z_1 x ... x Z_l`, flattened row-major, and the
//! reverse channels are the coordinate projections. The entropic side asks that
//! `sum_i b_i D(P_{Z_i} || nu_i) + d >= inf_pi sum_j c_j D(T_j pi || mu_j)` for
//! every choice of marginals, the infimum running over couplings `pi` of those
//! marginals. The functional side is checked pointwise by
//! [`frbl_functional_check`].

use serde::Serialize;

use crate::bl_forward::BASolverOptions;
use crate::coupling::{CouplingProgram, CouplingTerm};
use crate::error::{check_dim, invalid, Result};
use crate::measures::{kl, log_sum_exp, unflatten, DiscreteDistribution, DiscreteMeasure, Kernel};
use crate::report::{CheckReport, Certification};
use crate::simplex::{self, rng_from_seed};

/// Default spacing of the certification grid over marginals.
pub const DEFAULT_MARGINAL_GRID: f64 = 0.02;
/// Largest number of outer grid cells for the certified path.
pub const CERTIFIED_GRID_BUDGET: u128 = 20_000;
/// Tolerance on the pointwise constraint of the functional form.
pub const POINTWISE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReverseTerm {
    pub nu: DiscreteMeasure,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FRBLProblem {
    reverse: Vec<ReverseTerm>,
    forward: CouplingProgram,
    d: f64,
}

/// Joint law over the product alphabet, flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coupling {
    pub sizes: Vec<usize>,
    pub joint: Vec<f64>,
}

impl Coupling {
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.sizes[i]];
        for (x, p) in self.joint.iter().enumerate() {
            m[unflatten(x, &self.sizes)[i]] += p;
        }
        m
    }
}

impl FRBLProblem {
    /// `forward` holds `(T_j, mu_j, c_j)` with `T_j` defined on the flattened product.
    pub fn new(
        reverse: Vec<ReverseTerm>,
        forward: Vec<(Kernel, DiscreteMeasure, f64)>,
        d: f64,
    ) -> Result<Self> {
        if reverse.is_empty() {
            return invalid("at least one reverse term is required");
        }
        if forward.is_empty() {
            return invalid("at least one forward term is required");
        }
        if let Some(r) = reverse.iter().find(|r| !(r.b > 0.0 && r.b.is_finite())) {
            return invalid(format!("reverse coefficient {} must be positive", r.b));
        }
        if d.is_nan() {
            return invalid("d must be a number");
        }
        let sizes: Vec<usize> = reverse.iter().map(|r| r.nu.len()).collect();
        let terms = forward
            .into_iter()
            .map(|(kernel, mu, c)| CouplingTerm { kernel, mu, c })
            .collect();
        let forward = CouplingProgram::new(sizes, terms)?;
        Ok(Self {
            reverse,
            forward,
            d,
        })
    }

    pub fn reverse(&self) -> &[ReverseTerm] {
        &self.reverse
    }

    pub fn program(&self) -> &CouplingProgram {
        &self.forward
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn with_d(&self, d: f64) -> Self {
        Self {
            d,
            ..self.clone()
        }
    }

    pub fn sizes(&self) -> &[usize] {
        self.forward.sizes()
    }

    fn check_marginals(&self, marginals: &[DiscreteDistribution]) -> Result<()> {
        check_dim("marginal list", self.reverse.len(), marginals.len())?;
        for (m, r) in marginals.iter().zip(&self.reverse) {
            check_dim("marginal length", r.nu.len(), m.len())?;
        }
        Ok(())
    }

    fn reverse_penalty(&self, marginals: &[&[f64]]) -> f64 {
        self.reverse
            .iter()
            .zip(marginals)
            .map(|(r, m)| r.b * kl(m, r.nu.weights()))
            .sum()
    }

    /// `min_coupling - sum_i b_i D(P_i || nu_i)` on raw marginals.
    fn outer_objective(&self, marginals: &[&[f64]]) -> Result<f64> {
        let penalty = self.reverse_penalty(marginals);
        if penalty == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let pinned: Vec<Option<&[f64]>> = marginals.iter().map(|m| Some(*m)).collect();
        let sol = self.forward.solve(&pinned, false)?;
        Ok(sol.value - penalty)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinCoupling {
    pub value: f64,
    pub coupling: Coupling,
    pub fw_gap: Option<f64>,
}

/// `inf_pi sum_j c_j D(T_j pi || mu_j)` over couplings of `marginals`.
pub fn min_coupling(prob: &FRBLProblem, marginals: &[DiscreteDistribution]) -> Result<MinCoupling> {
    prob.check_marginals(marginals)?;
    let pinned: Vec<Option<&[f64]>> = marginals.iter().map(|m| Some(m.weights())).collect();
    let sol = prob.forward.solve(&pinned, true)?;
    Ok(MinCoupling {
        value: sol.value,
        coupling: Coupling {
            sizes: prob.sizes().to_vec(),
            joint: sol.coupling,
        },
        fw_gap: sol.fw_gap,
    })
}

/// `min_coupling - sum_i b_i D(P_{Z_i} || nu_i) - d`.
pub fn frbl_entropic_deficit(prob: &FRBLProblem, marginals: &[DiscreteDistribution]) -> Result<f64> {
    prob.check_marginals(marginals)?;
    let raw: Vec<&[f64]> = marginals.iter().map(|m| m.weights()).collect();
    Ok(prob.outer_objective(&raw)? - prob.d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OuterSearchOptions {
    pub grid_step: f64,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Compass-search step at which polishing stops.
    pub min_step: f64,
}

impl Default for OuterSearchOptions {
    fn default() -> Self {
        Self {
            grid_step: DEFAULT_MARGINAL_GRID,
            restarts: 4,
            rng_seed: 0,
            min_step: 1e-9,
        }
    }
}

impl From<&BASolverOptions> for OuterSearchOptions {
    fn from(o: &BASolverOptions) -> Self {
        Self {
            restarts: o.restarts.min(8),
            rng_seed: o.rng_seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrblConstant {
    pub value: f64,
    pub marginals: Vec<Vec<f64>>,
    pub grid_value: Option<f64>,
    pub certification: Certification,
    pub evaluations: usize,
}

/// Outer maximization over product-of-simplex points of a function that can fail.
pub(crate) struct MarginalSearch<'a> {
    pub sizes: Vec<usize>,
    pub objective: Box<dyn Fn(&[&[f64]]) -> Result<f64> + 'a>,
    pub evaluations: usize,
}

impl<'a> MarginalSearch<'a> {
    pub fn new(sizes: Vec<usize>, objective: impl Fn(&[&[f64]]) -> Result<f64> + 'a) -> Self {
        Self {
            sizes,
            objective: Box::new(objective),
            evaluations: 0,
        }
    }

    fn eval(&mut self, point: &[Vec<f64>]) -> Result<f64> {
        self.evaluations += 1;
        let refs: Vec<&[f64]> = point.iter().map(Vec::as_slice).collect();
        (self.objective)(&refs)
    }

    pub fn grid_cells(&self, step: f64) -> Result<u128> {
        let k = simplex::grid_divisions(step)?;
        Ok(self
            .sizes
            .iter()
            .map(|&n| simplex::grid_size(n, k))
            .product())
    }

    /// Exhaustive product grid; returns the best value and point.
    pub fn grid(&mut self, step: f64) -> Result<(f64, Vec<Vec<f64>>)> {
        let k = simplex::grid_divisions(step)?;
        let per_coord: Vec<Vec<Vec<f64>>> = self
            .sizes
            .iter()
            .map(|&n| {
                let mut pts = Vec::new();
                simplex::for_each_grid_point(n, k, |p| pts.push(p.to_vec()));
                pts
            })
            .collect();
        let mut idx = vec![0usize; per_coord.len()];
        let mut best = (f64::NEG_INFINITY, Vec::new());
        loop {
            let point: Vec<Vec<f64>> = idx
                .iter()
                .zip(&per_coord)
                .map(|(&i, pts)| pts[i].clone())
                .collect();
            let v = self.eval(&point)?;
            if v > best.0 || best.1.is_empty() {
                best = (v, point);
            }
            let mut c = 0;
            loop {
                if c == idx.len() {
                    return Ok(best);
                }
                idx[c] += 1;
                if idx[c] < per_coord[c].len() {
                    break;
                }
                idx[c] = 0;
                c += 1;
            }
        }
    }

    /// Compass search over mass transfers between letters of one coordinate.
    pub fn polish(
        &mut self,
        mut point: Vec<Vec<f64>>,
        mut step: f64,
        min_step: f64,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let mut value = self.eval(&point)?;
        while step >= min_step {
            let mut improved = false;
            for i in 0..point.len() {
                let n = point[i].len();
                for a in 0..n {
                    for b in 0..n {
                        if a == b || point[i][b] <= 0.0 {
                            continue;
                        }
                        let delta = step.min(point[i][b]);
                        let mut trial = point.clone();
                        trial[i][a] += delta;
                        trial[i][b] -= delta;
                        if trial[i][b] < 1e-15 {
                            trial[i][b] = 0.0;
                        }
                        let s: f64 = trial[i].iter().sum();
                        trial[i].iter_mut().for_each(|v| *v /= s);
                        let v = self.eval(&trial)?;
                        if v > value + 1e-15 {
                            value = v;
                            point = trial;
                            improved = true;
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Ok((value, point))
    }

    /// Grid (when within budget) plus polishing from the best cell and random starts.
    pub fn maximize(&mut self, opts: &OuterSearchOptions) -> Result<(f64, Vec<Vec<f64>>, Option<f64>, Certification)> {
        let mut candidates: Vec<(Vec<Vec<f64>>, f64)> = Vec::new();
        let mut grid_value = None;
        let certification = if self.grid_cells(opts.grid_step)? <= CERTIFIED_GRID_BUDGET {
            let (v, p) = self.grid(opts.grid_step)?;
            grid_value = Some(v);
            candidates.push((p, opts.grid_step));
            Certification::GridCertified
        } else {
            Certification::Heuristic
        };
        let mut rng = rng_from_seed(opts.rng_seed);
        for _ in 0..opts.restarts {
            let p: Vec<Vec<f64>> = self
                .sizes
                .iter()
                .map(|&n| simplex::random_distribution(&mut rng, n).weights().to_vec())
                .collect();
            candidates.push((p, 0.1));
        }
        let mut best = (f64::NEG_INFINITY, Vec::new());
        if let Some(g) = grid_value {
            best.0 = g;
        }
        for (start, step) in candidates {
            let (v, p) = self.polish(start, step, opts.min_step)?;
            if v > best.0 || best.1.is_empty() {
                best = (v.max(best.0), p);
            }
        }
        Ok((best.0, best.1, grid_value, certification))
    }
}

/// Least `d` making the entropic inequality hold (the problem's own `d` is ignored).
pub fn best_frbl_constant(prob: &FRBLProblem, opts: &OuterSearchOptions) -> Result<FrblConstant> {
    let sizes = prob.sizes().to_vec();
    let mut search = MarginalSearch::new(sizes, |m| prob.outer_objective(m));
    let (value, marginals, grid_value, certification) = search.maximize(opts)?;
    Ok(FrblConstant {
        value,
        marginals,
        grid_value,
        certification,
        evaluations: search.evaluations,
    })
}

/// Checks the pointwise constraint `sum_i b_i ln g_i(z_i) <= sum_j c_j E[ln f_j(Y_j) | Z = z]`
/// and, when it holds, reports `ln RHS - ln LHS` of
/// `prod_i nu_i(g_i)^{b_i} <= exp(d) prod_j mu_j(f_j)^{c_j}` as the margin.
pub fn frbl_functional_check(prob: &FRBLProblem, g: &[Vec<f64>], f: &[Vec<f64>]) -> Result<CheckReport> {
    check_dim("reverse function list", prob.reverse.len(), g.len())?;
    check_dim("forward function list", prob.forward.terms().len(), f.len())?;
    for (gi, r) in g.iter().zip(&prob.reverse) {
        check_dim("reverse function length", r.nu.len(), gi.len())?;
        if gi.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("reverse functions must be strictly positive and finite");
        }
    }
    for (fj, t) in f.iter().zip(prob.forward.terms()) {
        check_dim("forward function length", t.kernel.n_out(), fj.len())?;
        if fj.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return invalid("forward functions must be strictly positive and finite");
        }
    }
    let violation = pointwise_violation(prob, g, f);
    let log_lhs: f64 = g
        .iter()
        .zip(&prob.reverse)
        .map(|(gi, r)| r.b * log_integral(gi, r.nu.weights()))
        .sum();
    let log_rhs: f64 = prob.d
        + f.iter()
            .zip(prob.forward.terms())
            .map(|(fj, t)| t.c * log_integral(fj, t.mu.weights()))
            .sum::<f64>();
    let slack = log_rhs - log_lhs;
    let mut report = CheckReport::new("frbl_functional", slack, true)
        .with_detail("log_lhs", log_lhs)
        .with_detail("log_rhs", log_rhs)
        .with_detail("pointwise_violation", violation);
    if violation > POINTWISE_TOL {
        report.margin = -violation;
        report.fail("pointwise constraint violated; the pair is not admissible");
    }
    Ok(report)
}

fn log_integral(h: &[f64], m: &[f64]) -> f64 {
    let logs: Vec<f64> = h
        .iter()
        .zip(m)
        .filter(|(_, w)| **w > 0.0)
        .map(|(v, w)| v.ln() + w.ln())
        .collect();
    log_sum_exp(&logs)
}

/// `sum_i b_i ln g_i(z_i) - sum_j c_j E[ln f_j | z]` at every `z`.
fn violations(prob: &FRBLProblem, g: &[Vec<f64>], f: &[Vec<f64>]) -> Vec<f64> {
    let sizes = prob.sizes();
    let n: usize = sizes.iter().product();
    let log_f: Vec<Vec<f64>> = f.iter().map(|fj| fj.iter().map(|v| v.ln()).collect()).collect();
    (0..n)
        .map(|x| {
            let digits = unflatten(x, sizes);
            let rev: f64 = digits
                .iter()
                .zip(g)
                .zip(&prob.reverse)
                .map(|((&z, gi), r)| r.b * gi[z].ln())
                .sum();
            let fwd: f64 = prob
                .forward
                .terms()
                .iter()
                .zip(&log_f)
                .map(|(t, lf)| {
                    t.c * t
                        .kernel
                        .row(x)
                        .iter()
                        .zip(lf)
                        .filter(|(k, _)| **k > 0.0)
                        .map(|(k, v)| k * v)
                        .sum::<f64>()
                })
                .sum();
            rev - fwd
        })
        .collect()
}

fn pointwise_violation(prob: &FRBLProblem, g: &[Vec<f64>], f: &[Vec<f64>]) -> f64 {
    violations(prob, g, f).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Lowers `g_1` just enough that the pointwise constraint holds everywhere.
pub fn project_to_feasible(prob: &FRBLProblem, g: &[Vec<f64>], f: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let v = violations(prob, g, f);
    let sizes = prob.sizes();
    let mut worst = vec![f64::NEG_INFINITY; sizes[0]];
    for (x, vx) in v.iter().enumerate() {
        let z = unflatten(x, sizes)[0];
        worst[z] = worst[z].max(*vx);
    }
    let b = prob.reverse[0].b;
    let mut out = g.to_vec();
    for (z, w) in worst.iter().enumerate() {
        if *w > 0.0 {
            out[0][z] *= (-w / b).exp();
        }
    }
    out
}

/// `f(y) = max_{z : phi(z) = y} prod_i g_i(z_i)`, zero on empty preimages.
pub fn sup_convolution_f(g: &[Vec<f64>], phi: &[usize], n_out: usize) -> Result<Vec<f64>> {
    let sizes: Vec<usize> = g.iter().map(Vec::len).collect();
    let n: usize = sizes.iter().product();
    check_dim("map table", n, phi.len())?;
    let mut f = vec![0.0f64; n_out];
    for (x, &y) in phi.iter().enumerate() {
        if y >= n_out {
            return invalid(format!("map sends {x} to {y} outside alphabet {n_out}"));
        }
        let prod: f64 = unflatten(x, &sizes)
            .iter()
            .zip(g)
            .map(|(&z, gi)| gi[z])
            .product();
        f[y] = f[y].max(prod);
    }
    Ok(f)
}

/// Random strictly positive test functions for the functional check.
pub fn random_positive_functions(
    prob: &FRBLProblem,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut rng = rng_from_seed(seed);
    let mut draw = |n: usize| -> Vec<f64> {
        simplex::random_distribution(&mut rng, n)
            .weights()
            .iter()
            .map(|v| 0.05 + 2.0 * v * n as f64)
            .collect()
    };
    let g = prob.reverse.iter().map(|r| draw(r.nu.len())).collect();
    let f = prob
        .forward
        .terms()
        .iter()
        .map(|t| draw(t.kernel.n_out()))
        .collect();
    (g, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bl_forward::{self, ForwardBLProblem};

    fn dsbs(eps: f64) -> DiscreteDistribution {
        DiscreteDistribution::new(vec![(1.0 - eps) / 2.0, eps / 2.0, eps / 2.0, (1.0 - eps) / 2.0])
            .unwrap()
    }

    fn rhc_problem(q: &DiscreteDistribution, b1: f64, b2: f64) -> FRBLProblem {
        let w = q.weights();
        let q1 = vec![w[0] + w[1], w[2] + w[3]];
        let q2 = vec![w[0] + w[2], w[1] + w[3]];
        FRBLProblem::new(
            vec![
                ReverseTerm {
                    nu: DiscreteMeasure::new(q1).unwrap(),
                    b: b1,
                },
                ReverseTerm {
                    nu: DiscreteMeasure::new(q2).unwrap(),
                    b: b2,
                },
            ],
            vec![(Kernel::identity(4), q.as_measure(), 1.0)],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn min_coupling_trivial_cases() {
        let a = DiscreteDistribution::new(vec![0.3, 0.7]).unwrap();
        let b = DiscreteDistribution::new(vec![0.6, 0.4]).unwrap();
        let prod = a.product(&b);
        let prob = rhc_problem(&prod, 1.0, 1.0);
        let r = min_coupling(&prob, &[a.clone(), b.clone()]).unwrap();
        assert!(r.value.abs() < 1e-9);
        let q = dsbs(0.1);
        let prob = rhc_problem(&q, 1.0, 1.0);
        let half = DiscreteDistribution::uniform(2);
        let r = min_coupling(&prob, &[half.clone(), half]).unwrap();
        assert!(r.value.abs() < 1e-9);
        for (p, t) in r.coupling.joint.iter().zip(q.weights()) {
            assert!((p - t).abs() < 1e-6);
        }
    }

    #[test]
    fn deficit_at_reference_and_large_d() {
        let q = dsbs(0.2);
        let prob = rhc_problem(&q, 1.0, 1.0);
        let half = DiscreteDistribution::uniform(2);
        let m = [half.clone(), half];
        assert!(frbl_entropic_deficit(&prob, &m).unwrap().abs() < 1e-9);
        let shifted = prob.with_d(1e6);
        assert!(frbl_entropic_deficit(&shifted, &m).unwrap() < -1e5);
    }

    #[test]
    fn sup_convolution_examples() {
        let g = vec![vec![1.0, 2.0], vec![1.0, 3.0]];
        let xor = [0, 1, 1, 0];
        assert_eq!(sup_convolution_f(&g, &xor, 2).unwrap(), vec![6.0, 3.0]);
        let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert_eq!(sup_convolution_f(&ones, &[0, 0, 2, 2], 3).unwrap(), vec![1.0, 0.0, 1.0]);
        let inj = sup_convolution_f(&g, &[3, 2, 1, 0], 4).unwrap();
        assert_eq!(inj, vec![6.0, 2.0, 3.0, 1.0]);
    }

    #[test]
    fn constant_functions_slack() {
        let q = dsbs(0.1);
        let prob = rhc_problem(&q, 0.5, 2.0).with_d(0.3);
        let r = frbl_functional_check(&prob, &[vec![1.0; 2], vec![1.0; 2]], &[vec![1.0; 4]]).unwrap();
        // Both sides are total masses: slack = d + c ln 1 - sum b ln 1.
        assert!((r.margin - 0.3).abs() < 1e-12);
        assert!(r.passed);
    }

    #[test]
    fn sup_convolution_makes_constraint_tight() {
        // Deterministic forward map with b = c = 1: f(phi(z)) = prod g_i makes
        // the constraint an equality on every injective preimage.
        let nu = DiscreteMeasure::new(vec![0.5, 0.5]).unwrap();
        let prob = FRBLProblem::new(
            vec![
                ReverseTerm { nu: nu.clone(), b: 1.0 },
                ReverseTerm { nu, b: 1.0 },
            ],
            vec![(Kernel::identity(4), DiscreteMeasure::counting(4), 1.0)],
            0.0,
        )
        .unwrap();
        let g = vec![vec![1.5, 0.5], vec![2.0, 0.25]];
        let f = sup_convolution_f(&g, &[0, 1, 2, 3], 4).unwrap();
        let r = frbl_functional_check(&prob, &g, &[f]).unwrap();
        assert!(r.details["pointwise_violation"].abs() < 1e-15);
    }

    #[test]
    fn single_reverse_matches_forward_constant() {
        let mut rng = rng_from_seed(5);
        let q = simplex::random_distribution(&mut rng, 2);
        let k = simplex::random_kernel(&mut rng, 2, 2);
        let c = 1.4;
        let fwd = ForwardBLProblem::canonical(&q, vec![(k.clone(), c)]).unwrap();
        let mu = fwd.channels()[0].mu.clone();
        let prob = FRBLProblem::new(
            vec![ReverseTerm {
                nu: q.as_measure(),
                b: 1.0,
            }],
            vec![(k, mu, c)],
            0.0,
        )
        .unwrap();
        let a = best_frbl_constant(&prob, &OuterSearchOptions::default()).unwrap();
        let b = bl_forward::best_constant(&fwd, &BASolverOptions::default()).unwrap();
        assert!((a.value - b.value).abs() < 1e-6, "{} vs {}", a.value, b.value);
        // Collapse of the deficits at an arbitrary point.
        let p = simplex::random_distribution(&mut rng, 2);
        let e1 = frbl_entropic_deficit(&prob, std::slice::from_ref(&p)).unwrap();
        let e2 = bl_forward::entropic_deficit(&fwd, &p).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }
}
