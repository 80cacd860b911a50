//! Classical inequalities obtained as special cases of the Brascamp-Lieb
//! duality: Rényi variational formula, probability comparison bounds, strong
//! data processing, Loomis-Whitney and Shearer, (reverse) hypercontractivity
//! and transportation-cost inequalities on finite metric spaces.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::bl_forward::{self, BASolverOptions, ForwardBLProblem};
use crate::coupling::{CouplingProgram, CouplingTerm};
use crate::error::{check_dim, invalid, Error, Result};
use crate::frbl::{self, FRBLProblem, MarginalSearch, OuterSearchOptions, ReverseTerm};
use crate::lp;
use crate::measures::{
    kl, log_sum_exp, log_weighted_norm, pushforward, renyi_divergence, DiscreteDistribution,
    DiscreteMeasure, Kernel,
};
use crate::report::{CheckReport, Certification};

/// Symmetry tolerance for metric samples.
pub const METRIC_SYM_TOL: f64 = 1e-12;
/// Triangle-inequality tolerance for metric samples.
pub const METRIC_TRIANGLE_TOL: f64 = 1e-9;
/// Largest point set accepted by [`transport_vs_entropy`].
pub const TRANSPORT_MAX_POINTS: usize = 32;
/// Objective values above this count as a detected violation.
const VIOLATION_FLOOR: f64 = 1e-10;
/// Curvature above `1 + CURVATURE_TOL` counts as local instability.
const CURVATURE_TOL: f64 = 1e-12;

fn expect_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) || alpha == 1.0 {
        return invalid(format!("order {alpha} must lie in (0,1) or (1,inf)"));
    }
    Ok(())
}

/// `ln E_m[exp(s g)]` over the support of `m`.
fn log_mgf(m: &DiscreteMeasure, g: &[f64], s: f64) -> f64 {
    let logs: Vec<f64> = m
        .weights()
        .iter()
        .zip(g)
        .filter(|(w, _)| **w > 0.0)
        .map(|(w, v)| w.ln() + s * v)
        .collect();
    log_sum_exp(&logs)
}

/// Slack of the variational formula for `(1/alpha) D_alpha(Q || R)`:
/// `(1/alpha) D_alpha - [(1/(alpha-1)) ln E_Q e^{(alpha-1) g} - (1/alpha) ln E_R e^{alpha g}]`.
pub fn renyi_variational_slack(
    q: &DiscreteMeasure,
    r: &DiscreteMeasure,
    g: &[f64],
    alpha: f64,
) -> Result<f64> {
    expect_order(alpha)?;
    check_dim("test function", q.len(), g.len())?;
    check_dim("reference measure", q.len(), r.len())?;
    if g.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return invalid("test function must be real or -inf");
    }
    if alpha > 1.0
        && q.weights()
            .iter()
            .zip(r.weights())
            .any(|(a, b)| *a > 0.0 && *b == 0.0)
    {
        return Err(Error::AbsoluteContinuity(
            "Q must be absolutely continuous with respect to R for alpha > 1".into(),
        ));
    }
    let d = renyi_divergence(q, r, alpha)?;
    let a = log_mgf(q, g, alpha - 1.0) / (alpha - 1.0);
    let b = log_mgf(r, g, alpha) / alpha;
    Ok(d / alpha - (a - b))
}

/// Slack of the logarithmic probability comparison bound
/// `(1/alpha) D_alpha(Q || R) >= (1/(alpha-1)) ln Q(A) - (1/alpha) ln R(A)`.
pub fn lpcb_slack(q: &DiscreteMeasure, r: &DiscreteMeasure, set: &[usize], alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return invalid(format!("order {alpha} must exceed 1"));
    }
    check_dim("reference measure", q.len(), r.len())?;
    if set.is_empty() {
        return invalid("event must be nonempty");
    }
    if let Some(a) = set.iter().find(|&&a| a >= q.len()) {
        return invalid(format!("event letter {a} outside alphabet of size {}", q.len()));
    }
    let letters: BTreeSet<usize> = set.iter().copied().collect();
    let qa: f64 = letters.iter().map(|&a| q.weights()[a]).sum();
    let ra: f64 = letters.iter().map(|&a| r.weights()[a]).sum();
    if !(qa > 0.0 && ra > 0.0) {
        return invalid("event must have positive mass under both measures");
    }
    let d = renyi_divergence(q, r, alpha)?;
    Ok(d / alpha - (qa.ln() / (alpha - 1.0) - ra.ln() / alpha))
}

/// Contraction coefficient with how it was bracketed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SdpiConstant {
    /// Upper end of the final bracket.
    pub value: f64,
    pub lower: f64,
    /// Squared maximal correlation, a lower bound from the local expansion.
    pub local_bound: f64,
    pub bisection_steps: usize,
    pub certification: Certification,
}

/// Smallest `eta` in `[0, 1]` with `D(P_Y || Q_Y) <= eta D(P_X || Q_X)` for every `P_X`.
///
/// Equivalently `1 / eta` is the largest `c` with `D(P_X || Q_X) >= c D(P_Y || Q_Y)`.
/// Found by bisection: `eta > t` exactly when the forward problem with coefficient
/// `1 / t` has a positive optimum or an unstable reference point.
pub fn sdpi_constant(qx: &DiscreteDistribution, k: &Kernel, tol: f64, opts: &BASolverOptions) -> Result<SdpiConstant> {
    check_dim("kernel input", qx.len(), k.n_in())?;
    if !(tol > 0.0) {
        return invalid(format!("tolerance {tol} must be positive"));
    }
    if qx.weights().iter().any(|w| *w <= 0.0) || qx.len() < 2 {
        return invalid("input law must have full support on at least two letters");
    }
    let unit = ForwardBLProblem::canonical(qx, vec![(k.clone(), 1.0)])?;
    let local_bound = unit.local_curvature().map_or(0.0, |(l, _)| l.clamp(0.0, 1.0));
    let certify = qx.len() <= 3;
    let mut lo = local_bound;
    let mut hi = 1.0f64;
    let mut steps = 0;
    while hi - lo > tol {
        let t = 0.5 * (lo + hi);
        steps += 1;
        match contraction_witness(&unit, t, certify, opts)? {
            Some(ratio) => lo = t.max(ratio.min(hi)),
            None => hi = t,
        }
    }
    Ok(SdpiConstant {
        value: hi,
        lower: lo,
        local_bound,
        bisection_steps: steps,
        certification: if certify {
            Certification::GridCertified
        } else {
            Certification::Heuristic
        },
    })
}

/// `Some(ratio)` when some `P` has `D(P_Y) > t D(P_X)`, with its observed ratio.
fn contraction_witness(
    unit: &ForwardBLProblem,
    t: f64,
    certify: bool,
    opts: &BASolverOptions,
) -> Result<Option<f64>> {
    let prob = unit.with_coefficients(&[1.0 / t])?;
    if let Some((lam, _)) = prob.local_curvature() {
        if lam > 1.0 + CURVATURE_TOL {
            return Ok(Some(t));
        }
    }
    let (value, argmax) = if certify {
        let c = bl_forward::certified_constant(&prob, 0.01, opts)?;
        (c.value, c.argmax)
    } else {
        let r = bl_forward::best_constant(&prob, opts)?;
        (r.value, r.argmax)
    };
    if value <= VIOLATION_FLOOR {
        return Ok(None);
    }
    let ch = &unit.channels()[0];
    let dx = kl(&argmax, unit.nu().weights());
    let dy = kl(&ch.kernel.apply(&argmax), ch.mu.weights());
    Ok(Some(if dx > 0.0 { dy / dx } else { t }))
}

fn check_nonnegative(f: &[f64]) -> Result<()> {
    if f.iter().any(|v| !(*v >= 0.0) || v.is_infinite()) {
        return invalid("function values must be finite and nonnegative");
    }
    if f.iter().all(|v| *v == 0.0) {
        return invalid("function must not vanish identically");
    }
    Ok(())
}

/// `ln ||f||_{1/c} - ln E[exp(E[ln f(Y) | X])]` with the norm taken under `Q_Y`.
pub fn sdpi_functional_slack(qx: &DiscreteDistribution, k: &Kernel, f: &[f64], c: f64) -> Result<f64> {
    check_dim("kernel input", qx.len(), k.n_in())?;
    check_dim("function", k.n_out(), f.len())?;
    check_nonnegative(f)?;
    if !(c > 0.0 && c.is_finite()) {
        return invalid(format!("coefficient {c} must be positive"));
    }
    let qy = pushforward(qx, k)?;
    let norm = log_weighted_norm(f, &qy.as_measure(), 1.0 / c)?;
    let logs: Vec<f64> = qx
        .weights()
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(x, w)| {
            let mut e = 0.0;
            for (kv, fv) in k.row(x).iter().zip(f) {
                if *kv > 0.0 {
                    if *fv == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    e += kv * fv.ln();
                }
            }
            w.ln() + e
        })
        .collect();
    Ok(norm - log_sum_exp(&logs))
}

/// Checks `Q_X(x : Q_{Y|X=x}(A) >= 1 - eps) <= 2^c Q_Y(A)^{c (1 - eps)}`
/// together with the functional slack at `f = (1_A + Q_Y(A) 1_{A^c})^c`.
pub fn conditional_probability_bound(
    qx: &DiscreteDistribution,
    k: &Kernel,
    set: &[usize],
    c: f64,
    eps: f64,
) -> Result<CheckReport> {
    check_dim("kernel input", qx.len(), k.n_in())?;
    if !(0.0..=1.0).contains(&eps) {
        return invalid(format!("eps {eps} must lie in [0, 1]"));
    }
    if let Some(a) = set.iter().find(|&&a| a >= k.n_out()) {
        return invalid(format!("event letter {a} outside output alphabet"));
    }
    let mut in_set = vec![false; k.n_out()];
    set.iter().for_each(|&a| in_set[a] = true);
    let qy = pushforward(qx, k)?;
    let qa: f64 = (0..k.n_out()).filter(|&y| in_set[y]).map(|y| qy.weights()[y]).sum();
    if qa <= 0.0 {
        return invalid("event must have positive output probability");
    }
    let f: Vec<f64> = in_set
        .iter()
        .map(|&a| if a { 1.0 } else { qa.powf(c) })
        .collect();
    let slack = sdpi_functional_slack(qx, k, &f, c)?;
    let lhs: f64 = (0..qx.len())
        .filter(|&x| {
            let ka: f64 = (0..k.n_out()).filter(|&y| in_set[y]).map(|y| k.get(x, y)).sum();
            ka >= 1.0 - eps - 1e-15
        })
        .map(|x| qx.weights()[x])
        .sum();
    let rhs = 2f64.powf(c) * qa.powf(c * (1.0 - eps));
    let mut report = CheckReport::new("conditional_probability_bound", rhs - lhs, true)
        .with_detail("lhs", lhs)
        .with_detail("rhs", rhs)
        .with_detail("functional_slack", slack);
    if slack < -1e-9 {
        report.fail("functional inequality fails at the indicator mixture");
    }
    Ok(report)
}

/// Loomis-Whitney `|A|^{m-1} <= prod_j |pi_j(A)|` in exact integers, and the
/// entropic form `H(X^m) <= (1/(m-1)) sum_j H(X_{-j})` for `X` uniform on `A`.
pub fn shearer_check(set: &[Vec<usize>]) -> Result<CheckReport> {
    let a: BTreeSet<&Vec<usize>> = set.iter().collect();
    let Some(first) = a.iter().next() else {
        return invalid("set must be nonempty");
    };
    let m = first.len();
    if m < 2 {
        return invalid("tuples must have at least two coordinates");
    }
    if a.iter().any(|t| t.len() != m) {
        return invalid("all tuples must have the same length");
    }
    let size = a.len() as u128;
    let overflow = || Error::TooLarge {
        context: "Loomis-Whitney integer arithmetic",
        limit: u128::MAX as usize,
        found: usize::MAX,
    };
    let mut lhs = 1u128;
    for _ in 0..m - 1 {
        lhs = lhs.checked_mul(size).ok_or_else(overflow)?;
    }
    let mut rhs = 1u128;
    let mut entropy_sum = 0.0;
    for j in 0..m {
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for t in &a {
            let mut key = (*t).clone();
            key.remove(j);
            *counts.entry(key).or_default() += 1;
        }
        rhs = rhs.checked_mul(counts.len() as u128).ok_or_else(overflow)?;
        let total = a.len() as f64;
        entropy_sum -= counts
            .values()
            .map(|&c| {
                let p = c as f64 / total;
                p * p.ln()
            })
            .sum::<f64>();
    }
    let joint = (a.len() as f64).ln();
    let entropic_margin = entropy_sum / (m - 1) as f64 - joint;
    let combinatorial_ok = lhs <= rhs;
    let mut report = CheckReport::new("shearer", entropic_margin, true)
        .with_detail("set_size", a.len() as f64)
        .with_detail("lhs_power", lhs as f64)
        .with_detail("projection_product", rhs as f64)
        .with_detail("joint_entropy", joint)
        .with_detail("entropic_margin", entropic_margin);
    report.passed = combinatorial_ok && entropic_margin >= -1e-10;
    if !combinatorial_ok {
        report.note("combinatorial inequality violated");
    }
    Ok(report)
}

/// Membership decision for a (reverse) hypercontractivity region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Membership {
    pub member: bool,
    /// Supremum of the entropic deficit; `<= tol` for members.
    pub margin: f64,
    /// Top eigenvalue of the local expansion at the reference law, when defined.
    pub curvature: Option<f64>,
    pub witness: Vec<Vec<f64>>,
    pub certification: Certification,
}

fn joint_marginals(q: &DiscreteDistribution, sizes: (usize, usize)) -> Result<(Vec<f64>, Vec<f64>)> {
    check_dim("joint law", sizes.0 * sizes.1, q.len())?;
    let mut m1 = vec![0.0; sizes.0];
    let mut m2 = vec![0.0; sizes.1];
    for (x, w) in q.weights().iter().enumerate() {
        m1[x / sizes.1] += w;
        m2[x % sizes.1] += w;
    }
    Ok((m1, m2))
}

/// Best objective along `q + s h` for shrinking `s`, used when the curvature
/// certifies instability but the global search lands back on `q`.
fn probe_direction(prob: &ForwardBLProblem, h: &[f64]) -> (f64, Vec<f64>) {
    let q = prob.nu().normalized();
    let q = q.weights();
    let mut best = (f64::NEG_INFINITY, q.to_vec());
    for sign in [1.0, -1.0] {
        let mut s_max = f64::INFINITY;
        for (a, d) in q.iter().zip(h) {
            if sign * d < 0.0 {
                s_max = s_max.min(a / (-sign * d));
            }
        }
        let mut s = if s_max.is_finite() { 0.5 * s_max } else { 1.0 };
        for _ in 0..40 {
            let p: Vec<f64> = q.iter().zip(h).map(|(a, d)| (a + sign * s * d).max(0.0)).collect();
            let v = prob.objective(&p);
            if v > best.0 {
                best = (v, p);
            }
            s *= 0.5;
        }
    }
    best
}

/// Whether `E[f_1(Y_1) f_2(Y_2)] <= ||f_1||_{p_1} ||f_2||_{p_2}` holds for `Q`,
/// decided through `sup_P [sum_j (1/p_j) D(P_{Y_j} || Q_{Y_j}) - D(P || Q)] <= tol`.
pub fn hc_member_discrete(
    q: &DiscreteDistribution,
    sizes: (usize, usize),
    p1: f64,
    p2: f64,
    tol: f64,
    opts: &BASolverOptions,
) -> Result<Membership> {
    if !(p1 >= 1.0 && p2 >= 1.0 && p1.is_finite() && p2.is_finite()) {
        return invalid(format!("exponents ({p1}, {p2}) must be finite and at least 1"));
    }
    joint_marginals(q, sizes)?;
    let dims = [sizes.0, sizes.1];
    let prob = ForwardBLProblem::canonical(
        q,
        vec![
            (Kernel::projection(&dims, &[0])?, 1.0 / p1),
            (Kernel::projection(&dims, &[1])?, 1.0 / p2),
        ],
    )?;
    let curvature = prob.local_curvature();
    let c = bl_forward::certified_constant(&prob, 0.02, opts)?;
    let mut margin = c.value;
    let mut witness = c.argmax;
    if let Some((lam, h)) = &curvature {
        if *lam > 1.0 + CURVATURE_TOL {
            let (v, p) = probe_direction(&prob, h);
            if v > margin {
                margin = v;
                witness = p;
            }
            // A strictly unstable reference point is a violation even when
            // the gain is below floating-point resolution.
            margin = margin.max(f64::MIN_POSITIVE);
        }
    }
    let unstable = curvature.as_ref().is_some_and(|(l, _)| *l > 1.0 + CURVATURE_TOL);
    Ok(Membership {
        member: margin <= tol && !unstable,
        margin,
        curvature: curvature.map(|(l, _)| l),
        witness: vec![witness],
        certification: c.certification,
    })
}

/// Whether `||G_1||_{1/b_1} ||G_2||_{1/b_2} <= E[G_1(Z_1) G_2(Z_2)]` holds for `Q`,
/// decided on the entropic side: every marginal pair admits a coupling with
/// `D(P || Q) <= b_1 D(P_1 || Q_1) + b_2 D(P_2 || Q_2)`.
pub fn rhc_member_discrete(
    q: &DiscreteDistribution,
    sizes: (usize, usize),
    b1: f64,
    b2: f64,
    tol: f64,
    opts: &OuterSearchOptions,
) -> Result<Membership> {
    let (m1, m2) = joint_marginals(q, sizes)?;
    let prob = FRBLProblem::new(
        vec![
            ReverseTerm {
                nu: DiscreteMeasure::new(m1)?,
                b: b1,
            },
            ReverseTerm {
                nu: DiscreteMeasure::new(m2)?,
                b: b2,
            },
        ],
        vec![(Kernel::identity(q.len()), q.as_measure(), 1.0)],
        0.0,
    )?;
    let r = frbl::best_frbl_constant(&prob, opts)?;
    Ok(Membership {
        member: r.value <= tol,
        margin: r.value,
        curvature: None,
        witness: r.marginals,
        certification: r.certification,
    })
}

/// Whether `||F||_{-1/c_2} ||G||_{1/b_1} <= E[F(Y_2) G(Z_1)]` holds for `Q` over
/// `Z_1 x Y_2`, decided by `sup_{P_1} [min_{P_{Y_2|Z_1}} (D(P || Q) + c_2 D(P_{Y_2} || Q_{Y_2}))
/// - b_1 D(P_1 || Q_1)] <= tol`.
pub fn rhcn_member_discrete(
    q: &DiscreteDistribution,
    sizes: (usize, usize),
    b1: f64,
    c2: f64,
    tol: f64,
    opts: &OuterSearchOptions,
) -> Result<Membership> {
    if !(b1 > 0.0 && b1.is_finite() && c2 > 0.0 && c2.is_finite()) {
        return invalid(format!("parameters ({b1}, {c2}) must be positive"));
    }
    let (m1, m2) = joint_marginals(q, sizes)?;
    let dims = vec![sizes.0, sizes.1];
    let program = CouplingProgram::new(
        dims.clone(),
        vec![
            CouplingTerm {
                kernel: Kernel::identity(q.len()),
                mu: q.as_measure(),
                c: 1.0,
            },
            CouplingTerm {
                kernel: Kernel::projection(&dims, &[1])?,
                mu: DiscreteMeasure::new(m2)?,
                c: c2,
            },
        ],
    )?;
    let objective = |m: &[&[f64]]| -> Result<f64> {
        let penalty = b1 * kl(m[0], &m1);
        if penalty == f64::INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        let sol = program.solve(&[Some(m[0]), None], false)?;
        Ok(sol.value - penalty)
    };
    let mut search = MarginalSearch::new(vec![sizes.0], objective);
    let (value, witness, _, certification) = search.maximize(opts)?;
    Ok(Membership {
        member: value <= tol,
        margin: value,
        curvature: None,
        witness,
        certification,
    })
}

/// Finite metric space with a reference law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSpaceSample {
    points: Vec<Vec<f64>>,
    dist: Vec<Vec<f64>>,
    q: DiscreteDistribution,
}

impl MetricSpaceSample {
    pub fn new(points: Vec<Vec<f64>>, dist: Vec<Vec<f64>>, q: DiscreteDistribution) -> Result<Self> {
        let n = dist.len();
        if n == 0 {
            return invalid("metric space must have at least one point");
        }
        check_dim("reference law", n, q.len())?;
        if !points.is_empty() {
            check_dim("point list", n, points.len())?;
        }
        for row in &dist {
            check_dim("distance row", n, row.len())?;
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return invalid(format!("distance from point {i} to itself must be 0"));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !(d >= 0.0) || !d.is_finite() {
                    return invalid(format!("distance ({i}, {j}) = {d} must be finite and nonnegative"));
                }
                if (d - dist[j][i]).abs() > METRIC_SYM_TOL {
                    return invalid(format!("distance matrix not symmetric at ({i}, {j})"));
                }
                for k in 0..n {
                    if dist[i][k] > d + dist[j][k] + METRIC_TRIANGLE_TOL {
                        return invalid(format!("triangle inequality fails for ({i}, {j}, {k})"));
                    }
                }
            }
        }
        Ok(Self { points, dist, q })
    }

    /// Euclidean distances between `points`.
    pub fn euclidean(points: Vec<Vec<f64>>, q: DiscreteDistribution) -> Result<Self> {
        let dist = points
            .iter()
            .map(|a| {
                points
                    .iter()
                    .map(|b| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt())
                    .collect()
            })
            .collect();
        Self::new(points, dist, q)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn q(&self) -> &DiscreteDistribution {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    /// `x -> min_z [f(z) + d(x, z)^p / p]`.
    fn inf_convolution(&self, f: &[f64], p: f64) -> Vec<f64> {
        self.dist
            .iter()
            .map(|row| {
                row.iter()
                    .zip(f)
                    .map(|(d, fz)| fz + d.powf(p) / p)
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    fn mean(&self, f: &[f64]) -> f64 {
        self.q.weights().iter().zip(f).map(|(w, v)| w * v).sum()
    }

    fn check_function(&self, f: &[f64]) -> Result<()> {
        check_dim("test function", self.len(), f.len())?;
        if f.iter().any(|v| !v.is_finite()) {
            return invalid("test function must be finite");
        }
        Ok(())
    }
}

/// `Q(f) - ln Q(exp(inf_z [f(z) + d(., z)^2 / 2]))`.
pub fn t2_functional_slack(space: &MetricSpaceSample, f: &[f64]) -> Result<f64> {
    space.check_function(f)?;
    let h = space.inf_convolution(f, 2.0);
    Ok(space.mean(f) - log_mgf(&space.q.as_measure(), &h, 1.0))
}

/// `(1/p - 1/2) t^{2/(2-p)} + t Q(f) - ln Q(exp(t inf_z [f(z) + d(., z)^p / p]))`.
pub fn tp_functional_slack(space: &MetricSpaceSample, f: &[f64], t: f64, p: f64) -> Result<f64> {
    space.check_function(f)?;
    if !(1.0..2.0).contains(&p) {
        return invalid(format!("exponent {p} must lie in [1, 2)"));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return invalid(format!("t = {t} must be finite and nonnegative"));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let h = space.inf_convolution(f, p);
    let rhs = (1.0 / p - 0.5) * t.powf(2.0 / (2.0 - p)) + t * space.mean(f);
    Ok(rhs - log_mgf(&space.q.as_measure(), &h, t))
}

/// `(inf_pi E[d^p]^{1/p}, sqrt(2 lambda D(P || Q)))` with the transport cost solved exactly.
pub fn transport_vs_entropy(
    space: &MetricSpaceSample,
    p_law: &DiscreteDistribution,
    p: f64,
    lambda: f64,
) -> Result<(f64, f64)> {
    if space.len() > TRANSPORT_MAX_POINTS {
        return Err(Error::TooLarge {
            context: "transport point set",
            limit: TRANSPORT_MAX_POINTS,
            found: space.len(),
        });
    }
    check_dim("transported law", space.len(), p_law.len())?;
    if !(p >= 1.0 && p.is_finite()) {
        return invalid(format!("exponent {p} must be at least 1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda {lambda} must be positive"));
    }
    let cost: Vec<f64> = space.dist.iter().flatten().map(|d| d.powf(p)).collect();
    let (c, _) = lp::transport_cost(p_law.weights(), space.q.weights(), &cost)?;
    let lhs = c.max(0.0).powf(1.0 / p);
    let rhs = (2.0 * lambda * kl(p_law.weights(), space.q.weights())).sqrt();
    Ok((lhs, rhs))
}
