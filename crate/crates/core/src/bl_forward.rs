//! Forward Brascamp-Lieb duality on finite alphabets.
//!
//! A problem fixes a reference measure `nu` on `X`, a cost `d`, and channels
//! `(K_j, mu_j, c_j)`. Two families of inequalities are attached to it:
//!
//! * functional: `ln sum_x nu(x) exp(sum_j E[ln f_j(Y_j) | X=x] - d(x)) <= sum_j ln ||f_j||_{1/c_j} + C`
//! * entropic: `sum_j c_j D(P_{Y_j} || mu_j) - D(P || nu) - E_P[d] <= C`
//!
//! Both hold with the same smallest constant `C`, which [`best_constant`]
//! estimates by alternating the two tilting maps
//! `P -> f_j = (dP_{Y_j}/dmu_j)^{c_j}` and `f -> P ∝ nu exp(-d + sum_j E[ln f_j|X])`.
//! Each round can only increase the entropic objective: the tilted law maximizes
//! a minorant of the objective that touches it at the current iterate.

use nalgebra::SymmetricEigen;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::Matrix;
use crate::measures::{
    kl, log_sum_exp, log_weighted_norm, pushforward_measure, CostFunction, DiscreteDistribution,
    DiscreteMeasure, Kernel,
};
use crate::report::{CheckReport, Certification};
use crate::simplex::{self, rng_from_seed};

/// Largest input alphabet accepted by [`best_constant_bruteforce`].
pub const BRUTEFORCE_MAX_ALPHABET: usize = 4;
/// Point budget for the internal certification grid.
pub const GRID_POINT_BUDGET: u128 = 2_000_000;

/// One forward term `c_j D(P_{Y_j} || mu_j)` with `P_{Y_j} = P K_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardChannel {
    pub kernel: Kernel,
    pub mu: DiscreteMeasure,
    pub c: f64,
}

impl ForwardChannel {
    pub fn new(kernel: Kernel, mu: DiscreteMeasure, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return invalid(format!("coefficient c = {c} must be positive"));
        }
        check_dim("channel output measure", kernel.n_out(), mu.len())?;
        Ok(Self { kernel, mu, c })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardBLProblem {
    nu: DiscreteMeasure,
    cost: CostFunction,
    channels: Vec<ForwardChannel>,
}

impl ForwardBLProblem {
    pub fn new(nu: DiscreteMeasure, cost: CostFunction, channels: Vec<ForwardChannel>) -> Result<Self> {
        if channels.is_empty() {
            return invalid("at least one forward channel is required");
        }
        check_dim("cost function", nu.len(), cost.len())?;
        for ch in &channels {
            check_dim("channel input", nu.len(), ch.kernel.n_in())?;
        }
        let mass: Vec<f64> = nu
            .weights()
            .iter()
            .zip(cost.values())
            .filter(|(w, _)| **w > 0.0)
            .map(|(_, d)| -d)
            .collect();
        if log_sum_exp(&mass) == f64::NEG_INFINITY {
            return invalid("cost is infinite on the whole support of nu");
        }
        Ok(Self {
            nu,
            cost,
            channels,
        })
    }

    /// Reference `Q_X`, zero cost, and `mu_j = Q_X K_j`.
    pub fn canonical(q_x: &DiscreteDistribution, channels: Vec<(Kernel, f64)>) -> Result<Self> {
        let nu = q_x.as_measure();
        let channels = channels
            .into_iter()
            .map(|(k, c)| {
                let mu = pushforward_measure(&nu, &k)?;
                ForwardChannel::new(k, mu, c)
            })
            .collect::<Result<Vec<_>>>()?;
        let n = nu.len();
        Self::new(nu, CostFunction::zero(n), channels)
    }

    pub fn nu(&self) -> &DiscreteMeasure {
        &self.nu
    }

    pub fn cost(&self) -> &CostFunction {
        &self.cost
    }

    pub fn channels(&self) -> &[ForwardChannel] {
        &self.channels
    }

    pub fn input_size(&self) -> usize {
        self.nu.len()
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.channels.iter().map(|c| c.c).collect()
    }

    /// Same problem with a new cost.
    pub fn with_cost(&self, cost: CostFunction) -> Result<Self> {
        Self::new(self.nu.clone(), cost, self.channels.clone())
    }

    /// Same problem with new coefficients.
    pub fn with_coefficients(&self, cs: &[f64]) -> Result<Self> {
        check_dim("coefficient vector", self.channels.len(), cs.len())?;
        let channels = self
            .channels
            .iter()
            .zip(cs)
            .map(|(ch, &c)| ForwardChannel::new(ch.kernel.clone(), ch.mu.clone(), c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.nu.clone(), self.cost.clone(), channels)
    }

    /// `nu` a probability vector, zero cost and `mu_j = nu K_j`.
    pub fn is_canonical(&self) -> bool {
        if (self.nu.total() - 1.0).abs() > 1e-12 || !self.cost.is_zero() {
            return false;
        }
        self.channels.iter().all(|ch| {
            let push = ch.kernel.apply(self.nu.weights());
            push.iter()
                .zip(ch.mu.weights())
                .all(|(a, b)| (a - b).abs() <= 1e-12)
        })
    }

    fn check_input(&self, p: &DiscreteDistribution) -> Result<()> {
        check_dim("input distribution", self.nu.len(), p.len())
    }

    fn absolutely_continuous(&self, p: &[f64]) -> bool {
        p.iter()
            .zip(self.nu.weights())
            .all(|(a, b)| *a == 0.0 || *b > 0.0)
    }

    /// Entropic objective on a raw probability vector.
    pub(crate) fn objective(&self, p: &[f64]) -> f64 {
        if !self.absolutely_continuous(p) {
            return f64::NEG_INFINITY;
        }
        let mut expected_cost = 0.0;
        for (a, d) in p.iter().zip(self.cost.values()) {
            if *a > 0.0 {
                expected_cost += a * d;
            }
        }
        if expected_cost == f64::INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut forward = 0.0;
        for ch in &self.channels {
            let py = ch.kernel.apply(p);
            forward += ch.c * kl(&py, ch.mu.weights());
        }
        forward - kl(p, self.nu.weights()) - expected_cost
    }

    /// One tilting round from `p`: returns the tilted law and its log-normalizer.
    fn tilt_from(&self, p: &[f64]) -> Option<(Vec<f64>, f64)> {
        let n = self.nu.len();
        let mut exponent = vec![0.0; n];
        for (x, e) in exponent.iter_mut().enumerate() {
            *e = -self.cost.values()[x];
        }
        for ch in &self.channels {
            let py = ch.kernel.apply(p);
            let g: Vec<f64> = py
                .iter()
                .zip(ch.mu.weights())
                .map(|(a, b)| {
                    if *a == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        ch.c * (a / b).ln()
                    }
                })
                .collect();
            add_conditional_log(&mut exponent, &ch.kernel, &g);
        }
        tilt_with_exponent(self.nu.weights(), &exponent).ok()
    }

    /// Local quadratic model of the objective at `nu` for canonical problems.
    ///
    /// Returns the largest eigenvalue of `sum_j c_j E[E[h|Y_j]^2]` over
    /// `E[h] = 0, E[h^2] = 1`, and the corresponding direction `h` in
    /// probability coordinates. Values above 1 mean `nu` is not a local maximum.
    pub fn local_curvature(&self) -> Option<(f64, Vec<f64>)> {
        if !self.is_canonical() {
            return None;
        }
        let q = self.nu.weights();
        let support: Vec<usize> = (0..q.len()).filter(|&x| q[x] > 0.0).collect();
        let s = support.len();
        if s < 2 {
            return None;
        }
        let mut m = Matrix::zeros(s, s);
        for ch in &self.channels {
            let qy = ch.mu.weights();
            for y in 0..ch.kernel.n_out() {
                if qy[y] <= 0.0 {
                    continue;
                }
                let col: Vec<f64> = support
                    .iter()
                    .map(|&x| q[x].sqrt() * ch.kernel.get(x, y) / qy[y].sqrt())
                    .collect();
                for a in 0..s {
                    for b in 0..s {
                        m[(a, b)] += ch.c * col[a] * col[b];
                    }
                }
            }
        }
        let root: Vec<f64> = support.iter().map(|&x| q[x].sqrt()).collect();
        let proj = Matrix::from_fn(s, s, |a, b| {
            let id = if a == b { 1.0 } else { 0.0 };
            id - root[a] * root[b]
        });
        let reduced = &proj * m * &proj;
        let eig = SymmetricEigen::new(crate::linalg::symmetrize(&reduced));
        let (idx, &lam) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))?;
        let v = eig.eigenvectors.column(idx);
        let mut h = vec![0.0; q.len()];
        for (a, &x) in support.iter().enumerate() {
            h[x] = v[a] / root[a];
        }
        Some((lam, h))
    }
}

/// `exponent[x] += E[g(Y) | X = x]`, forcing `-inf` when any reachable `g(y)` is `-inf`.
fn add_conditional_log(exponent: &mut [f64], kernel: &Kernel, g: &[f64]) {
    for (x, e) in exponent.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, v) in kernel.row(x).iter().zip(g) {
            if *k > 0.0 {
                if *v == f64::NEG_INFINITY {
                    acc = f64::NEG_INFINITY;
                    break;
                }
                acc += k * v;
            }
        }
        *e += acc;
    }
}

/// `P ∝ nu exp(exponent)` with log-normalizer.
fn tilt_with_exponent(nu: &[f64], exponent: &[f64]) -> Result<(Vec<f64>, f64)> {
    let logs: Vec<f64> = nu
        .iter()
        .zip(exponent)
        .map(|(w, e)| if *w > 0.0 { w.ln() + e } else { f64::NEG_INFINITY })
        .collect();
    let z = log_sum_exp(&logs);
    if !z.is_finite() {
        return Err(Error::ZeroMass);
    }
    let p: Vec<f64> = logs.iter().map(|l| (l - z).exp()).collect();
    let s: f64 = p.iter().sum();
    Ok((p.into_iter().map(|v| v / s).collect(), z))
}

/// `sum_j c_j D(P_{Y_j} || mu_j) - D(P || nu) - E_P[d]`; `-inf` when `P` is not
/// absolutely continuous with respect to `nu` or pays infinite cost.
pub fn entropic_deficit(prob: &ForwardBLProblem, p: &DiscreteDistribution) -> Result<f64> {
    prob.check_input(p)?;
    Ok(prob.objective(p.weights()))
}

/// `ln LHS - ln RHS` of the functional inequality for the functions `f`.
pub fn functional_gap(prob: &ForwardBLProblem, f: &[Vec<f64>]) -> Result<f64> {
    check_dim("function list", prob.channels.len(), f.len())?;
    let mut exponent: Vec<f64> = prob.cost.values().iter().map(|d| -d).collect();
    let mut log_rhs = 0.0;
    for (ch, fj) in prob.channels.iter().zip(f) {
        check_dim("function length", ch.kernel.n_out(), fj.len())?;
        if fj.iter().any(|v| !(*v >= 0.0) || v.is_infinite()) {
            return invalid("functions must be finite and nonnegative");
        }
        if fj.iter().all(|v| *v == 0.0) {
            return invalid("function is identically zero");
        }
        let logs: Vec<f64> = fj
            .iter()
            .map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            .collect();
        add_conditional_log(&mut exponent, &ch.kernel, &logs);
        log_rhs += log_weighted_norm(fj, &ch.mu, 1.0 / ch.c)?;
    }
    let terms: Vec<f64> = prob
        .nu
        .weights()
        .iter()
        .zip(&exponent)
        .map(|(w, e)| if *w > 0.0 { w.ln() + e } else { f64::NEG_INFINITY })
        .collect();
    let log_lhs = log_sum_exp(&terms);
    if log_lhs == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if log_rhs == f64::NEG_INFINITY {
        return Ok(f64::INFINITY);
    }
    Ok(log_lhs - log_rhs)
}

/// `f_j = (dP_{Y_j} / dmu_j)^{c_j}`, the functions that make the two sides meet.
pub fn induced_functions(prob: &ForwardBLProblem, p: &DiscreteDistribution) -> Result<Vec<Vec<f64>>> {
    prob.check_input(p)?;
    if !prob.absolutely_continuous(p.weights()) {
        return Err(Error::AbsoluteContinuity(
            "input distribution charges a point where nu vanishes".into(),
        ));
    }
    prob.channels
        .iter()
        .enumerate()
        .map(|(j, ch)| {
            let py = ch.kernel.apply(p.weights());
            py.iter()
                .zip(ch.mu.weights())
                .map(|(a, b)| match (*a > 0.0, *b > 0.0) {
                    (false, _) => Ok(0.0),
                    (true, true) => Ok((a / b).powf(ch.c)),
                    (true, false) => Err(Error::AbsoluteContinuity(format!(
                        "output {j} charges a point where mu_{j} vanishes"
                    ))),
                })
                .collect()
        })
        .collect()
}

/// Tilted input law together with its log-normalizer `d0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilted {
    pub distribution: DiscreteDistribution,
    pub log_normalizer: f64,
}

/// `P(x) ∝ nu(x) exp(-d(x) + sum_j E[ln f_j(Y_j) | X = x])`.
pub fn tilt_input(prob: &ForwardBLProblem, f: &[Vec<f64>]) -> Result<Tilted> {
    check_dim("function list", prob.channels.len(), f.len())?;
    let mut exponent: Vec<f64> = prob.cost.values().iter().map(|d| -d).collect();
    for (ch, fj) in prob.channels.iter().zip(f) {
        check_dim("function length", ch.kernel.n_out(), fj.len())?;
        if fj.iter().any(|v| !(*v >= 0.0) || v.is_infinite()) {
            return invalid("functions must be finite and nonnegative");
        }
        let logs: Vec<f64> = fj
            .iter()
            .map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY })
            .collect();
        add_conditional_log(&mut exponent, &ch.kernel, &logs);
    }
    let (p, z) = tilt_with_exponent(prob.nu.weights(), &exponent)?;
    Ok(Tilted {
        distribution: DiscreteDistribution::from_raw(p),
        log_normalizer: z,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BASolverOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub restarts: usize,
    pub rng_seed: u64,
}

impl Default for BASolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-9,
            restarts: 8,
            rng_seed: 0,
        }
    }
}

impl BASolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.tol > 0.0) {
            return invalid("tol must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub induced_f: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Trace of the restart that produced `value`.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub restart_index: usize,
    /// Traces of every restart, in restart order.
    pub restart_traces: Vec<Vec<f64>>,
    /// Largest decrease observed between consecutive iterates over all restarts.
    pub max_decrease: f64,
}

impl SolverReport {
    pub fn argmax_distribution(&self) -> DiscreteDistribution {
        DiscreteDistribution::from_raw(self.argmax.clone())
    }
}

struct RunOutcome {
    value: f64,
    point: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run_alternation(prob: &ForwardBLProblem, start: Vec<f64>, opts: &BASolverOptions) -> RunOutcome {
    let mut p = start;
    let mut value = prob.objective(&p);
    let mut trace = vec![value];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iters {
        let Some((next, _)) = prob.tilt_from(&p) else {
            break;
        };
        let next_value = prob.objective(&next);
        iterations += 1;
        let change = next
            .iter()
            .zip(&p)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let gain = next_value - value;
        trace.push(next_value);
        if next_value >= value || value == f64::NEG_INFINITY {
            p = next;
            value = next_value;
        }
        // A flat objective alone is not enough: gains shrink like the square of
        // the step near an interior optimum.
        if change < opts.tol / 10.0 || (gain.abs() < opts.tol && change < 100.0 * opts.tol) {
            converged = true;
            break;
        }
    }
    RunOutcome {
        value,
        point: p,
        trace,
        iterations,
        converged,
    }
}

/// Starting points: normalized `nu`, seeded Dirichlet(1) draws on the support
/// of `nu`, and (for canonical problems with an unstable trivial point) two
/// starts along the top curvature direction.
fn starting_points(prob: &ForwardBLProblem, opts: &BASolverOptions) -> Vec<Vec<f64>> {
    let nu = prob.nu.normalized();
    let support: Vec<bool> = nu.weights().iter().map(|w| *w > 0.0).collect();
    let mut starts = vec![nu.weights().to_vec()];
    for r in 1..opts.restarts.max(1) {
        let mut rng = rng_from_seed(opts.rng_seed.wrapping_add(r as u64));
        let draw = simplex::random_distribution(&mut rng, support.len());
        let mut w: Vec<f64> = draw
            .weights()
            .iter()
            .zip(&support)
            .map(|(v, s)| if *s { *v } else { 0.0 })
            .collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        starts.push(w);
    }
    if let Some((lam, h)) = prob.local_curvature() {
        if lam > 1.0 {
            let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale > 0.0 {
                for sign in [1.0, -1.0] {
                    let eps = 0.5 / scale;
                    let p: Vec<f64> = nu
                        .weights()
                        .iter()
                        .zip(&h)
                        .map(|(q, hv)| q * (1.0 + sign * eps * hv))
                        .collect();
                    let s: f64 = p.iter().sum();
                    starts.push(p.into_iter().map(|v| v.max(0.0) / s).collect());
                }
            }
        }
    }
    starts
}

/// Best constant `sup_P J(P)` by multi-start monotone alternation.
///
/// The result is a lower bound on the true supremum; the objective is a
/// difference of convex functions so global optimality is not guaranteed.
pub fn best_constant(prob: &ForwardBLProblem, opts: &BASolverOptions) -> Result<SolverReport> {
    opts.validate()?;
    let starts = starting_points(prob, opts);
    run_from_starts(prob, starts, opts)
}

pub(crate) fn run_from_starts(
    prob: &ForwardBLProblem,
    starts: Vec<Vec<f64>>,
    opts: &BASolverOptions,
) -> Result<SolverReport> {
    let mut best: Option<(usize, RunOutcome)> = None;
    let mut traces = Vec::with_capacity(starts.len());
    let mut max_decrease = 0.0f64;
    for (i, start) in starts.into_iter().enumerate() {
        let run = run_alternation(prob, start, opts);
        for w in run.trace.windows(2) {
            if w[0].is_finite() && w[1].is_finite() {
                max_decrease = max_decrease.max(w[0] - w[1]);
            }
        }
        traces.push(run.trace.clone());
        let better = match &best {
            None => true,
            Some((_, b)) => run.value > b.value,
        };
        if better {
            best = Some((i, run));
        }
    }
    let (restart_index, run) = best.ok_or_else(|| Error::InvalidInput("no starting point".into()))?;
    let dist = DiscreteDistribution::from_raw(run.point.clone());
    let induced_f = induced_functions(prob, &dist)?;
    Ok(SolverReport {
        value: run.value,
        argmax: run.point,
        induced_f,
        iterations: run.iterations,
        objective_trace: run.trace,
        converged: run.converged,
        restart_index,
        restart_traces: traces,
        max_decrease,
    })
}

/// Maximum of the entropic objective over the simplex grid with spacing `grid_step`.
pub fn best_constant_bruteforce(prob: &ForwardBLProblem, grid_step: f64) -> Result<f64> {
    if prob.input_size() > BRUTEFORCE_MAX_ALPHABET {
        return Err(Error::TooLarge {
            context: "brute-force input alphabet",
            limit: BRUTEFORCE_MAX_ALPHABET,
            found: prob.input_size(),
        });
    }
    if !(grid_step > 0.0 && grid_step <= 0.5) {
        return invalid(format!("grid step {grid_step} must lie in (0, 0.5]"));
    }
    Ok(grid_search(prob, grid_step)?.0)
}

/// Grid maximum and its location, without the alphabet guard.
pub(crate) fn grid_search(prob: &ForwardBLProblem, grid_step: f64) -> Result<(f64, Vec<f64>)> {
    let k = simplex::grid_divisions(grid_step)?;
    let n = prob.input_size();
    if simplex::grid_size(n, k) > GRID_POINT_BUDGET * 4 {
        return Err(Error::TooLarge {
            context: "simplex grid",
            limit: (GRID_POINT_BUDGET * 4) as usize,
            found: simplex::grid_size(n, k).min(usize::MAX as u128) as usize,
        });
    }
    let mut best = (f64::NEG_INFINITY, vec![0.0; n]);
    simplex::for_each_grid_point(n, k, |p| {
        let v = prob.objective(p);
        if v > best.0 {
            best = (v, p.to_vec());
        }
    });
    Ok(best)
}

/// Finest grid divisions whose point count stays inside the budget.
pub(crate) fn affordable_divisions(n: usize, preferred: usize) -> usize {
    let mut k = preferred.max(1);
    while k > 1 && simplex::grid_size(n, k) > GRID_POINT_BUDGET {
        k -= 1;
    }
    k
}

/// Optimum with an optional grid certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedConstant {
    pub value: f64,
    pub argmax: Vec<f64>,
    pub grid_value: Option<f64>,
    pub grid_step: Option<f64>,
    pub certification: Certification,
}

/// Grid search (when affordable) followed by monotone polishing from the best
/// grid point and the usual multi-start; heuristic otherwise.
pub fn certified_constant(
    prob: &ForwardBLProblem,
    grid_step: f64,
    opts: &BASolverOptions,
) -> Result<CertifiedConstant> {
    let preferred = simplex::grid_divisions(grid_step)?;
    let n = prob.input_size();
    let k = affordable_divisions(n, preferred);
    let mut starts = starting_points(prob, opts);
    let mut grid = None;
    if simplex::grid_size(n, k) <= GRID_POINT_BUDGET && n <= 16 {
        let step = 1.0 / k as f64;
        let (v, p) = grid_search(prob, step)?;
        if v.is_finite() {
            starts.insert(0, p);
        }
        grid = Some((v, step));
    }
    let report = run_from_starts(prob, starts, opts)?;
    let (grid_value, grid_step_used) = match grid {
        Some((v, s)) => (Some(v), Some(s)),
        None => (None, None),
    };
    let mut value = report.value;
    if let Some(g) = grid_value {
        value = value.max(g);
    }
    Ok(CertifiedConstant {
        value,
        argmax: report.argmax,
        grid_value,
        grid_step: grid_step_used,
        certification: if grid_value.is_some() {
            Certification::GridCertified
        } else {
            Certification::Heuristic
        },
    })
}

/// Tolerance for the equality between the entropic optimum and the functional
/// gap at the induced functions.
pub const DUALITY_EQ_TOL: f64 = 1e-6;
/// Slack allowed on sampled weak-duality comparisons.
pub const WEAK_DUALITY_TOL: f64 = 1e-9;

/// Checks strong duality at the solver optimum and weak duality on random samples.
pub fn verify_duality(prob: &ForwardBLProblem, opts: &BASolverOptions) -> Result<CheckReport> {
    let sol = best_constant(prob, opts)?;
    let gap = functional_gap(prob, &sol.induced_f)?;
    let eq_err = (sol.value - gap).abs();
    let mut report = CheckReport::new("forward_duality", DUALITY_EQ_TOL - eq_err, false)
        .with_detail("entropic_optimum", sol.value)
        .with_detail("functional_gap_at_optimum", gap)
        .with_detail("equality_error", eq_err)
        .with_detail("iterations", sol.iterations as f64);
    if !sol.converged {
        report.note("solver hit max_iters before convergence");
    }
    let mut reference = sol.value;
    if prob.input_size() <= BRUTEFORCE_MAX_ALPHABET {
        let c = certified_constant(prob, 0.02, opts)?;
        report.certified = c.certification.is_certified();
        report.detail("certified_optimum", c.value);
        if c.value > sol.value + WEAK_DUALITY_TOL {
            report.fail("multi-start solver missed the certified optimum");
        }
        reference = reference.max(c.value);
    }
    let mut rng = rng_from_seed(opts.rng_seed ^ 0x5eed_d0a1);
    let mut worst_entropic = f64::NEG_INFINITY;
    let mut worst_functional = f64::NEG_INFINITY;
    for _ in 0..200 {
        let p = simplex::random_distribution(&mut rng, prob.input_size());
        worst_entropic = worst_entropic.max(prob.objective(p.weights()));
        let f: Vec<Vec<f64>> = prob
            .channels
            .iter()
            .map(|ch| {
                simplex::random_distribution(&mut rng, ch.kernel.n_out())
                    .weights()
                    .iter()
                    .map(|v| v * ch.kernel.n_out() as f64)
                    .collect()
            })
            .collect();
        worst_functional = worst_functional.max(functional_gap(prob, &f)?);
    }
    report.detail("max_sampled_entropic", worst_entropic);
    report.detail("max_sampled_functional", worst_functional);
    let weak_margin = reference + WEAK_DUALITY_TOL - worst_entropic.max(worst_functional);
    report.margin = report.margin.min(weak_margin);
    report.passed = report.passed && report.margin >= 0.0;
    Ok(report)
}
