//! Gaussian optimization problems reduced to finite-dimensional matrix programs.

use std::f64::consts::PI;
use std::ops::Range;

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};
use nalgebra::SymmetricEigen;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{check_dim, invalid, Error, Result};
use crate::gaussian::{
    entropy_unchecked, gaussian_relative_entropy, w2_gaussian, GaussianChannel, GaussianMeasure,
};
use crate::linalg::{self, Matrix, Vector};
use crate::report::Certification;
use crate::simplex::rng_from_seed;

/// Armijo sufficient-increase constant.
const ARMIJO_SIGMA: f64 = 1e-4;
/// Backtracking factor.
const ARMIJO_BETA: f64 = 0.5;

/// `h(X) - sum_j c_j h(Y_j) - c0 tr(M Sigma_X)` over Gaussian inputs, with an
/// optional cap `Sigma_X <= cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianF0Problem {
    n: usize,
    channels: Vec<(GaussianChannel, f64)>,
    c0: f64,
    m: Matrix,
    cap: Option<Matrix>,
}

impl GaussianF0Problem {
    pub fn new(
        n: usize,
        channels: Vec<(GaussianChannel, f64)>,
        c0: f64,
        m: Matrix,
        cap: Option<Matrix>,
    ) -> Result<Self> {
        for (ch, c) in &channels {
            check_dim("channel input", n, ch.n_in())?;
            if !(*c >= 0.0 && c.is_finite()) {
                return invalid(format!("channel coefficient {c} must be finite and nonnegative"));
            }
        }
        if !(c0 >= 0.0 && c0.is_finite()) {
            return invalid(format!("c0 = {c0} must be finite and nonnegative"));
        }
        check_dim("trace weight", n, m.nrows())?;
        let m = linalg::ingest_psd(&m, "trace weight M")?;
        let cap = match cap {
            Some(c) => {
                check_dim("cap", n, c.nrows())?;
                Some(linalg::ingest_psd(&c, "covariance cap")?)
            }
            None => None,
        };
        Ok(Self {
            n,
            channels,
            c0,
            m,
            cap,
        })
    }

    /// No trace penalty and no cap.
    pub fn entropic(n: usize, channels: Vec<(GaussianChannel, f64)>) -> Result<Self> {
        Self::new(n, channels, 0.0, Matrix::zeros(n, n), None)
    }

    pub fn with_cap(&self, cap: Matrix) -> Result<Self> {
        Self::new(self.n, self.channels.clone(), self.c0, self.m.clone(), Some(cap))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn channels(&self) -> &[(GaussianChannel, f64)] {
        &self.channels
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn m(&self) -> &Matrix {
        &self.m
    }

    pub fn cap(&self) -> Option<&Matrix> {
        self.cap.as_ref()
    }

    pub fn is_non_degenerate(&self) -> bool {
        self.channels.iter().all(|(ch, _)| ch.is_non_degenerate())
    }

    fn value(&self, s: &Matrix) -> f64 {
        let hx = entropy_unchecked(s);
        if hx == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let mut out = 0.0;
        for (ch, c) in &self.channels {
            if *c == 0.0 {
                continue;
            }
            let hy = entropy_unchecked(&ch.output_cov(s));
            if hy == f64::NEG_INFINITY {
                return f64::INFINITY;
            }
            out += c * hy;
        }
        hx - out - self.c0 * linalg::frob_dot(&self.m, s)
    }

    fn gradient(&self, s: &Matrix) -> Result<Matrix> {
        let mut g = linalg::inv_pd(s, "input covariance")? * 0.5;
        for (ch, c) in &self.channels {
            if *c == 0.0 {
                continue;
            }
            let inner = linalg::inv_pd(&ch.output_cov(s), "output covariance")?;
            g -= ch.matrix().transpose() * inner * ch.matrix() * (0.5 * c);
        }
        g -= &self.m * self.c0;
        Ok(linalg::symmetrize(&g))
    }
}

/// `F_0` at a Gaussian input with covariance `sigma_x`; `-inf` when singular.
pub fn f0_gaussian(sigma_x: &Matrix, prob: &GaussianF0Problem) -> Result<f64> {
    check_dim("input covariance", prob.n, sigma_x.nrows())?;
    let s = linalg::ingest_psd(sigma_x, "input covariance")?;
    Ok(prob.value(&s))
}

/// Gradient of [`f0_gaussian`] in the symmetric parametrization:
/// `(1/2) S^{-1} - sum_j (c_j/2) B_j^T (B_j S B_j^T + N_j)^{-1} B_j - c0 M`.
pub fn f0_gradient(sigma_x: &Matrix, prob: &GaussianF0Problem) -> Result<Matrix> {
    check_dim("input covariance", prob.n, sigma_x.nrows())?;
    let s = linalg::ingest_psd(sigma_x, "input covariance")?;
    prob.gradient(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct F0Options {
    pub max_iters: usize,
    /// Stop when the projected-gradient residual falls below this.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for F0Options {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tol: 1e-10,
            restarts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct F0Optimum {
    pub value: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub sigma: Matrix,
    pub iterations: usize,
    pub converged: bool,
    pub restart_values: Vec<f64>,
    /// Largest difference between restart values.
    pub spread: f64,
}

pub(crate) fn serialize_matrix<S: serde::Serializer>(m: &Matrix, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    linalg::to_rows(m).serialize(s)
}

/// Eigenvalues of a symmetric matrix clipped to `[0, 1]`.
fn clip_unit(t: &Matrix) -> Matrix {
    linalg::map_eigen(&linalg::symmetrize(t), |v| v.clamp(0.0, 1.0))
}

/// Projected gradient ascent in `T = L^{-1} S L^{-T}` with `cap = L L^T`.
fn ascend(prob: &GaussianF0Problem, l: &Matrix, t0: Matrix, opts: &F0Options) -> (Matrix, f64, usize, bool) {
    let to_s = |t: &Matrix| linalg::symmetrize(&(l * t * l.transpose()));
    let mut t = clip_unit(&t0);
    let mut f = prob.value(&to_s(&t));
    let mut step = 1.0;
    let mut prev: Option<(Matrix, Matrix)> = None;
    for it in 0..opts.max_iters {
        let g = match prob.gradient(&to_s(&t)) {
            Ok(g) => linalg::symmetrize(&(l.transpose() * g * l)),
            Err(_) => return (t, f, it, false),
        };
        let residual = (clip_unit(&(&t + &g)) - &t).norm();
        if residual <= opts.tol {
            return (t, f, it, true);
        }
        if let Some((tp, gp)) = &prev {
            let dt = &t - tp;
            let dg = &g - gp;
            let denom = linalg::frob_dot(&dt, &dg).abs();
            if denom > 0.0 {
                step = (dt.norm_squared() / denom).clamp(1e-10, 1e10);
            }
        }
        let mut accepted = None;
        for _ in 0..80 {
            let cand = clip_unit(&(&t + &g * step));
            let fc = prob.value(&to_s(&cand));
            let dir = linalg::frob_dot(&g, &(&cand - &t));
            if fc.is_finite() && fc >= f + ARMIJO_SIGMA * dir {
                accepted = Some((cand, fc));
                break;
            }
            step *= ARMIJO_BETA;
        }
        let Some((cand, fc)) = accepted else {
            return (t, f, it, false);
        };
        prev = Some((t.clone(), g));
        let gain = fc - f;
        t = cand;
        f = fc;
        if gain.abs() <= 1e-16 * f.abs().max(1.0) && step < 1e-9 {
            return (t, f, it + 1, true);
        }
    }
    (t, f, opts.max_iters, false)
}

fn random_unit_interior(rng: &mut impl Rng, r: usize) -> Matrix {
    let a = Matrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = a.qr().q();
    let d = Vector::from_fn(r, |_, _| rng.random_range(0.05..0.95));
    linalg::symmetrize(&(&q * Matrix::from_diagonal(&d) * q.transpose()))
}

/// Maximizes `F_0` over `0 <= Sigma_X <= cap` by multi-start projected gradient.
pub fn maximize_f0(prob: &GaussianF0Problem, opts: &F0Options) -> Result<F0Optimum> {
    let cap = prob
        .cap
        .clone()
        .ok_or_else(|| Error::InvalidInput("maximize_f0 needs a covariance cap".into()))?;
    let (basis, vals) = linalg::range_basis(&cap);
    if basis.ncols() < prob.n {
        return Ok(F0Optimum {
            value: f64::NEG_INFINITY,
            sigma: cap,
            iterations: 0,
            converged: true,
            restart_values: vec![],
            spread: 0.0,
        });
    }
    let l = &basis * Matrix::from_diagonal(&vals.map(f64::sqrt));
    let n = prob.n;
    let mut starts = vec![Matrix::identity(n, n) * 0.5, Matrix::identity(n, n) * 0.999];
    let mut rng = rng_from_seed(opts.seed);
    for _ in 0..opts.restarts {
        starts.push(random_unit_interior(&mut rng, n));
    }
    let mut best: Option<(Matrix, f64, usize, bool)> = None;
    let mut values = Vec::with_capacity(starts.len());
    let mut total_iters = 0;
    for s in starts {
        let run = ascend(prob, &l, s, opts);
        total_iters += run.2;
        values.push(run.1);
        if best.as_ref().is_none_or(|b| run.1 > b.1) {
            best = Some(run);
        }
    }
    let (t, value, _, converged) = best.expect("at least two starts");
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let spread = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - finite.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(F0Optimum {
        value,
        sigma: linalg::symmetrize(&(&l * t * l.transpose())),
        iterations: total_iters,
        converged,
        restart_values: values,
        spread: if finite.is_empty() { 0.0 } else { spread },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMeasure {
    Gaussian(GaussianMeasure),
    Lebesgue,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianBLConstant {
    /// `+inf` when the supremum is unbounded.
    pub value: f64,
    #[serde(serialize_with = "serialize_matrix")]
    pub sigma: Matrix,
    pub converged: bool,
}

/// `-inf_{P_X Gaussian} [D(P_X || mu) + sum_j c_j h(P_{Y_j})]`, the best constant of
/// the Brascamp-Lieb inequality with Gaussian kernels and Lebesgue norms.
pub fn gaussian_bl_constant(
    mu: &ReferenceMeasure,
    channels: Vec<(GaussianChannel, f64)>,
    opts: &F0Options,
) -> Result<GaussianBLConstant> {
    let n = match mu {
        ReferenceMeasure::Gaussian(g) => g.dim(),
        ReferenceMeasure::Lebesgue => match channels.first() {
            Some((ch, _)) => ch.n_in(),
            None => return invalid("Lebesgue reference needs at least one channel"),
        },
    };
    let non_degenerate = channels.iter().all(|(ch, _)| ch.is_non_degenerate());
    let (m, offset, scale) = match mu {
        ReferenceMeasure::Gaussian(g) => {
            let k = linalg::inv_pd(g.cov(), "reference covariance")?;
            let logdet = linalg::logdet_psd(g.cov());
            let offset = -0.5 * (n as f64 * (2.0 * PI).ln() + logdet);
            (k * 0.5, offset, linalg::spectral_norm_sym(g.cov()).max(1.0))
        }
        ReferenceMeasure::Lebesgue => {
            if !non_degenerate {
                return Ok(GaussianBLConstant {
                    value: f64::INFINITY,
                    sigma: Matrix::zeros(n, n),
                    converged: true,
                });
            }
            (Matrix::zeros(n, n), 0.0, 1.0)
        }
    };
    let c0 = if matches!(mu, ReferenceMeasure::Gaussian(_)) { 1.0 } else { 0.0 };
    let base = GaussianF0Problem::new(n, channels, c0, m, None)?;
    // Enlarge an isotropic cap until it stops binding.
    let mut radius = 10.0 * scale;
    for _ in 0..8 {
        let prob = base.with_cap(Matrix::identity(n, n) * radius)?;
        let opt = maximize_f0(&prob, opts)?;
        let top = linalg::spectral_norm_sym(&opt.sigma) / radius;
        if top < 1.0 - 1e-6 {
            return Ok(GaussianBLConstant {
                value: opt.value + offset,
                sigma: opt.sigma,
                converged: opt.converged,
            });
        }
        radius *= 100.0;
    }
    Ok(GaussianBLConstant {
        value: f64::INFINITY,
        sigma: Matrix::identity(n, n) * radius,
        converged: false,
    })
}

/// Wyner common information with its optimal diagonal `Lambda`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WynerCI {
    /// Nats; `+inf` when the restricted covariance is singular.
    pub value: f64,
    pub lambda: Vec<f64>,
    /// Largest stationarity residual at the end of the last barrier stage.
    pub kkt_residual: f64,
    /// Coordinates with zero variance, treated as deterministic.
    pub dropped: Vec<usize>,
}

const BARRIER_STAGES: usize = 10;

/// `(1/2) inf { ln(|Sigma| / |Lambda|) : Lambda diagonal, 0 <= Lambda <= Sigma }`
/// by a log-barrier path from weight 1 down to 1e-10.
pub fn wyner_ci(sigma: &Matrix) -> Result<WynerCI> {
    let sigma = linalg::ingest_psd(sigma, "Wyner covariance")?;
    let m = sigma.nrows();
    let scale = linalg::spectral_norm_sym(&sigma);
    let keep: Vec<usize> = (0..m).filter(|&i| sigma[(i, i)] > linalg::RANK_TOL * scale).collect();
    let dropped: Vec<usize> = (0..m).filter(|i| !keep.contains(i)).collect();
    let k = keep.len();
    let mut lambda_full = vec![0.0; m];
    if k == 0 {
        return Ok(WynerCI {
            value: 0.0,
            lambda: lambda_full,
            kkt_residual: 0.0,
            dropped,
        });
    }
    let s = Matrix::from_fn(k, k, |i, j| sigma[(keep[i], keep[j])]);
    let logdet_s = linalg::logdet_psd(&s);
    if logdet_s == f64::NEG_INFINITY {
        return Ok(WynerCI {
            value: f64::INFINITY,
            lambda: lambda_full,
            kkt_residual: 0.0,
            dropped,
        });
    }
    let mut lam = Vector::from_element(k, 0.5 * linalg::min_eigenvalue(&s));
    let barrier = |lam: &Vector, w: f64| -> f64 {
        if lam.iter().any(|v| *v <= 0.0) {
            return f64::NEG_INFINITY;
        }
        let slack = &s - Matrix::from_diagonal(lam);
        match nalgebra::Cholesky::new(slack) {
            Some(c) => {
                let ld: f64 = c.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
                lam.iter().map(|v| v.ln()).sum::<f64>() + w * ld
            }
            None => f64::NEG_INFINITY,
        }
    };
    let mut residual = 0.0;
    for stage in 0..BARRIER_STAGES {
        let w = 10f64.powf(-10.0 * stage as f64 / (BARRIER_STAGES - 1) as f64);
        for _ in 0..200 {
            let slack = &s - Matrix::from_diagonal(&lam);
            let Some(chol) = nalgebra::Cholesky::new(slack) else { break };
            let z = chol.inverse();
            let g = Vector::from_fn(k, |i, _| 1.0 / lam[i] - w * z[(i, i)]);
            let h = Matrix::from_fn(k, k, |i, j| {
                let d = if i == j { 1.0 / (lam[i] * lam[i]) } else { 0.0 };
                -d - w * z[(i, j)] * z[(i, j)]
            });
            residual = g
                .iter()
                .zip(lam.iter())
                .map(|(gi, li)| (gi * li).abs())
                .fold(0.0, f64::max);
            let Some(neg_inv) = (-&h).cholesky() else { break };
            let delta = neg_inv.solve(&g);
            let decrement = g.dot(&delta);
            if decrement < 1e-20 {
                break;
            }
            let f = barrier(&lam, w);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let cand = &lam + &delta * t;
                let fc = barrier(&cand, w);
                if fc.is_finite() && fc >= f + ARMIJO_SIGMA * t * decrement {
                    lam = cand;
                    moved = true;
                    break;
                }
                t *= ARMIJO_BETA;
            }
            if !moved {
                break;
            }
        }
    }
    let value = 0.5 * (logdet_s - lam.iter().map(|v| v.ln()).sum::<f64>());
    for (i, &idx) in keep.iter().enumerate() {
        lambda_full[idx] = lam[i];
    }
    Ok(WynerCI {
        value: value.max(0.0),
        lambda: lambda_full,
        kkt_residual: residual,
        dropped,
    })
}

/// Hypercontractivity test for a correlation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianHcDecision {
    pub member: bool,
    /// Smallest eigenvalue of `diag(p) - Sigma`.
    pub margin: f64,
}

pub const HC_MEMBER_TOL: f64 = 1e-9;

/// Membership of `p` in the hypercontractivity region of a Gaussian vector with
/// correlation matrix `sigma`: `diag(p) >= sigma`.
pub fn gaussian_hc_member(sigma: &Matrix, p: &[f64]) -> Result<GaussianHcDecision> {
    let s = linalg::ingest_psd(sigma, "correlation matrix")?;
    check_dim("exponent vector", s.nrows(), p.len())?;
    if let Some(i) = (0..s.nrows()).find(|&i| (s[(i, i)] - 1.0).abs() > 1e-9) {
        return invalid(format!(
            "diagonal entry {i} is {}; normalize to a correlation matrix",
            s[(i, i)]
        ));
    }
    if let Some(v) = p.iter().find(|v| !(**v >= 1.0) || !v.is_finite()) {
        return invalid(format!("exponent {v} must be finite and at least 1"));
    }
    let d = Matrix::from_diagonal(&Vector::from_column_slice(p)) - s;
    let margin = linalg::min_eigenvalue(&linalg::symmetrize(&d));
    Ok(GaussianHcDecision {
        member: margin >= -HC_MEMBER_TOL,
        margin,
    })
}

/// Covariance of a stacked Gaussian vector `(Z, X_1, ..., X_m)` with named blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianJointSource {
    sigma: Matrix,
    blocks: Vec<Range<usize>>,
}

impl GaussianJointSource {
    pub fn new(sigma: Matrix, blocks: Vec<Range<usize>>) -> Result<Self> {
        let sigma = linalg::ingest_psd(&sigma, "joint covariance")?;
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.end <= b.start {
                return invalid("blocks must be nonempty, contiguous and in order");
            }
            next = b.end;
        }
        check_dim("block partition", sigma.nrows(), next)?;
        if blocks.len() < 2 {
            return invalid("need the source block and at least one terminal block");
        }
        Ok(Self { sigma, blocks })
    }

    /// Consecutive blocks of the given sizes.
    pub fn from_sizes(sigma: Matrix, sizes: &[usize]) -> Result<Self> {
        let mut blocks = Vec::with_capacity(sizes.len());
        let mut at = 0;
        for &s in sizes {
            blocks.push(at..at + s);
            at += s;
        }
        Self::new(sigma, blocks)
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    fn block(&self, a: usize, b: usize) -> Matrix {
        let (ra, rb) = (&self.blocks[a], &self.blocks[b]);
        self.sigma
            .view((ra.start, rb.start), (ra.len(), rb.len()))
            .into_owned()
    }
}

/// An achievable rate tuple `(R, R_1, ..., R_m)` with its witness covariance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionPoint {
    pub rates: Vec<f64>,
    #[serde(serialize_with = "serialize_matrix")]
    pub witness: Matrix,
    pub feasible: bool,
    pub margin: f64,
}

/// Rates `R = I(U; Z)` and `R_l = I(U; Z) - I(U; X_l)` of a Gaussian auxiliary with
/// `Sigma_{Z|U} = sigma_prime`.
pub fn cr_onecom_rates(joint: &GaussianJointSource, sigma_prime: &Matrix) -> Result<Vec<f64>> {
    let sz = joint.block(0, 0);
    check_dim("conditional covariance", sz.nrows(), sigma_prime.nrows())?;
    let sp = linalg::ingest_psd(sigma_prime, "conditional covariance")?;
    if !linalg::loewner_le(&sp, &sz, 1e-9) {
        return invalid("conditional covariance must not exceed the source covariance");
    }
    let sz_inv = linalg::inv_pd(&sz, "source covariance")?;
    let r = 0.5 * (linalg::logdet_psd(&sz) - linalg::logdet_psd(&sp));
    let explained = &sz_inv * (&sz - &sp) * &sz_inv;
    let mut rates = vec![r];
    for l in 1..joint.blocks.len() {
        let sx = joint.block(l, l);
        let cross = joint.block(l, 0);
        let cond = linalg::symmetrize(&(&sx - &cross * &explained * cross.transpose()));
        let info = 0.5 * (linalg::logdet_psd(&sx) - linalg::logdet_psd(&cond));
        rates.push(r - info);
    }
    Ok(rates)
}

/// Precomputed pieces for evaluating key-generation rates from `T = S^{-1/2} Sigma' S^{-1/2}`.
struct KeygenGeometry {
    root: Matrix,
    diag: Vec<f64>,
}

impl KeygenGeometry {
    fn new(sigma: &Matrix) -> Self {
        Self {
            root: linalg::sqrt_psd(sigma),
            diag: sigma.diagonal().iter().copied().collect(),
        }
    }

    fn sigma_prime(&self, t: &Matrix) -> Matrix {
        linalg::symmetrize(&(&self.root * t * &self.root))
    }

    /// `(u, v_1..v_m)` with `u = (1/2) ln(|Sigma| / |Sigma'|)` and
    /// `v_l = (1/2) ln(Sigma_ll / Sigma'_ll)`.
    fn rates(&self, t: &Matrix) -> Option<(f64, Vec<f64>)> {
        let ld = linalg::logdet_psd(t);
        if !ld.is_finite() {
            return None;
        }
        let sp = self.sigma_prime(t);
        let v = (0..self.diag.len())
            .map(|l| 0.5 * (self.diag[l] / sp[(l, l)]).ln())
            .collect();
        Some((-0.5 * ld, v))
    }

    fn margin(&self, t: &Matrix, r: f64, rl: &[f64]) -> f64 {
        match self.rates(t) {
            None => f64::NEG_INFINITY,
            Some((u, v)) => rl
                .iter()
                .zip(&v)
                .map(|(ri, vi)| ri + vi - u)
                .fold(u - r, f64::min),
        }
    }

    /// Constraint values `u - R`, `R_l + v_l - u` at `T = (I + A A^T)^{-1}` and
    /// their gradients in `A`.
    fn constraints(&self, a: &Matrix, r: f64, rl: &[f64]) -> Option<(Vec<f64>, Vec<Matrix>)> {
        let n = a.nrows();
        let w = Matrix::identity(n, n) + a * a.transpose();
        let w_inv = linalg::inv_pd(&w, "factor").ok()?;
        let u = 0.5 * linalg::logdet_psd(&w);
        let gu = &w_inv * a;
        let mut f = vec![u - r];
        let mut g = vec![gu.clone()];
        for (l, rate) in rl.iter().enumerate() {
            let q = self.root.column(l).into_owned();
            let z = &w_inv * &q;
            let spl = q.dot(&z);
            f.push(rate + 0.5 * (self.diag[l] / spl).ln() - u);
            g.push(&z * (z.transpose() * a) / spl - &gu);
        }
        Some((f, g))
    }
}

fn t_from_factor(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let w = Matrix::identity(n, n) + a * a.transpose();
    linalg::inv_pd(&w, "factor").unwrap_or_else(|_| Matrix::identity(n, n))
}

fn factor_from_t(t: &Matrix) -> Matrix {
    let eig = SymmetricEigen::new(linalg::symmetrize(t));
    let d = eig
        .eigenvalues
        .map(|v| (1.0 / v.clamp(1e-12, 1.0) - 1.0).max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeygenDecision {
    pub member: bool,
    pub point: RegionPoint,
    pub certification: Certification,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeygenOptions {
    /// Members need a witness with margin at least `-tol`.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Grid spacing on `(t_1, t_2, theta / pi)` for two terminals.
    pub grid_step: f64,
}

impl Default for KeygenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            restarts: 8,
            seed: 0,
            grid_step: 0.01,
        }
    }
}

fn rotation_t(t1: f64, t2: f64, theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_row_slice(
        2,
        2,
        &[
            c * c * t1 + s * s * t2,
            c * s * (t1 - t2),
            c * s * (t1 - t2),
            s * s * t1 + c * c * t2,
        ],
    )
}

/// Pattern search on the factor `A` of `T = (I + A A^T)^{-1}` using coordinate
/// directions plus a fresh random orthonormal set every sweep.
fn polish_keygen(
    geo: &KeygenGeometry,
    r: f64,
    rl: &[f64],
    start: &Matrix,
    rng: &mut impl Rng,
) -> (Matrix, f64) {
    let n = start.nrows();
    let dim = n * n;
    let mut a = factor_from_t(start);
    let mut best = geo.margin(&t_from_factor(&a), r, rl);
    let mut step = 0.1 * (1.0 + a.amax());
    while step > 1e-12 {
        let q = Matrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal))
            .qr()
            .q();
        let mut improved = false;
        for basis in [Matrix::identity(dim, dim), q] {
            for k in 0..dim {
                for sign in [1.0, -1.0] {
                    let dir = Matrix::from_column_slice(n, n, basis.column(k).as_slice());
                    let cand = &a + dir * (sign * step);
                    let v = geo.margin(&t_from_factor(&cand), r, rl);
                    if v > best {
                        best = v;
                        a = cand;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (t_from_factor(&a), best)
}

/// Sequential linear programming on the max-min of the rate constraints in the
/// factor `A`, with a box trust region.
fn slp_keygen(geo: &KeygenGeometry, r: f64, rl: &[f64], start: &Matrix) -> (Matrix, f64) {
    let mut a = factor_from_t(start);
    let mut best = geo.margin(&t_from_factor(&a), r, rl);
    let mut radius = 0.1 * (1.0 + a.amax());
    for _ in 0..500 {
        if best >= 0.0 || radius < 1e-13 {
            break;
        }
        let Some((f, g)) = geo.constraints(&a, r, rl) else {
            break;
        };
        let mut lp = Problem::new(OptimizationDirection::Maximize);
        let d: Vec<Variable> = (0..a.len()).map(|_| lp.add_var(0.0, (-radius, radius))).collect();
        let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
        for (fk, gk) in f.iter().zip(&g) {
            // s - g_k . d <= f_k
            let mut row: Vec<(Variable, f64)> = d.iter().zip(gk.iter()).map(|(v, c)| (*v, -c)).collect();
            row.push((s, 1.0));
            lp.add_constraint(row.as_slice(), ComparisonOp::Le, *fk);
        }
        let Ok(sol) = lp.solve() else {
            break;
        };
        let step = Matrix::from_iterator(a.nrows(), a.ncols(), d.iter().map(|v| sol[*v]));
        let cand = &a + step;
        let v = geo.margin(&t_from_factor(&cand), r, rl);
        let predicted = sol.objective() - best;
        if v > best {
            if v - best >= 0.5 * predicted {
                radius *= 2.0;
            }
            a = cand;
            best = v;
        } else {
            radius *= 0.25;
        }
    }
    (t_from_factor(&a), best)
}

/// Whether `(R, R_1..R_m)` is achievable: some `0 <= Sigma' <= Sigma` has
/// `R <= (1/2) ln(|Sigma|/|Sigma'|)` and
/// `R_l >= (1/2) ln(|Sigma|/|Sigma'|) - (1/2) ln(Sigma_ll / Sigma'_ll)`.
pub fn keygen_region_member(sigma: &Matrix, r: f64, rl: &[f64], opts: &KeygenOptions) -> Result<KeygenDecision> {
    let s = linalg::ingest_psd(sigma, "source covariance")?;
    let m = s.nrows();
    check_dim("terminal rates", m, rl.len())?;
    if !linalg::logdet_psd(&s).is_finite() {
        return invalid("source covariance must be non-degenerate");
    }
    if r.is_nan() || rl.iter().any(|v| v.is_nan()) {
        return invalid("rates must be numbers");
    }
    let geo = KeygenGeometry::new(&s);
    let mut candidates: Vec<(Matrix, f64)> = Vec::new();
    let push = |cands: &mut Vec<(Matrix, f64)>, t: Matrix, v: f64| {
        cands.push((t, v));
        cands.sort_by(|a, b| b.1.total_cmp(&a.1));
        cands.truncate(4);
    };
    for i in 1..=1000 {
        let t = Matrix::identity(m, m) * (i as f64 / 1000.0);
        let v = geo.margin(&t, r, rl);
        push(&mut candidates, t, v);
    }
    let certified = m == 2;
    if certified {
        let k = (1.0 / opts.grid_step).round() as usize;
        let q = &geo.root;
        let mut best = (f64::NEG_INFINITY, (1, 1, 0));
        for a in 0..k {
            let (sn, cs) = (PI * a as f64 / k as f64).sin_cos();
            // Sigma'_ll = t1 (q_l . e1)^2 + t2 (q_l . e2)^2 for the rotated eigenbasis.
            let p1: Vec<f64> = (0..2).map(|l| (q[(l, 0)] * cs + q[(l, 1)] * sn).powi(2)).collect();
            let p2: Vec<f64> = (0..2).map(|l| (q[(l, 1)] * cs - q[(l, 0)] * sn).powi(2)).collect();
            for i in 1..=k {
                let t1 = i as f64 / k as f64;
                for j in 1..=k {
                    let t2 = j as f64 / k as f64;
                    let u = -0.5 * (t1 * t2).ln();
                    let mut v = u - r;
                    for l in 0..2 {
                        let vl = 0.5 * (geo.diag[l] / (t1 * p1[l] + t2 * p2[l])).ln();
                        v = v.min(rl[l] + vl - u);
                    }
                    if v > best.0 {
                        best = (v, (i, j, a));
                    }
                }
            }
        }
        let (i, j, a) = best.1;
        let t = rotation_t(i as f64 / k as f64, j as f64 / k as f64, PI * a as f64 / k as f64);
        push(&mut candidates, t, best.0);
    }
    let mut rng = rng_from_seed(opts.seed);
    for _ in 0..opts.restarts {
        let t = random_unit_interior(&mut rng, m);
        let v = geo.margin(&t, r, rl);
        candidates.push((t, v));
    }
    let mut best = (f64::NEG_INFINITY, Matrix::identity(m, m));
    for (t, v0) in candidates {
        if v0 > best.0 {
            best = (v0, t.clone());
        }
        if best.0 >= 0.0 {
            break;
        }
        let (tp, v) = polish_keygen(&geo, r, rl, &t, &mut rng);
        let (tp, v) = match slp_keygen(&geo, r, rl, &tp) {
            (ts, vs) if vs > v => (ts, vs),
            _ => (tp, v),
        };
        if v > best.0 {
            best = (v, tp);
        }
    }
    let (margin, t) = best;
    let mut rates = vec![r];
    rates.extend_from_slice(rl);
    Ok(KeygenDecision {
        member: margin >= -opts.tol,
        point: RegionPoint {
            rates,
            witness: geo.sigma_prime(&t),
            feasible: margin >= -opts.tol,
            margin,
        },
        certification: if certified {
            Certification::GridCertified
        } else {
            Certification::Heuristic
        },
    })
}

/// Achievable corner points `(R_max, R_l min)` from a deterministic sweep of
/// `Sigma'`: the scaled family `alpha Sigma`, diagonal congruences and random
/// interpolants.
pub fn keygen_region_trace(sigma: &Matrix, n_samples: usize, seed: u64) -> Result<Vec<RegionPoint>> {
    let s = linalg::ingest_psd(sigma, "source covariance")?;
    if !linalg::logdet_psd(&s).is_finite() {
        return invalid("source covariance must be non-degenerate");
    }
    let m = s.nrows();
    let geo = KeygenGeometry::new(&s);
    let mut rng = rng_from_seed(seed);
    let mut out = Vec::with_capacity(n_samples);
    let root_inv = linalg::inv_pd(&geo.root, "covariance root")?;
    for i in 0..n_samples {
        let t = match i % 3 {
            0 => {
                let alpha = 1.0 - (i / 3) as f64 / (n_samples / 3 + 1) as f64;
                Matrix::identity(m, m) * alpha
            }
            1 => {
                // D Sigma D with D diagonal, scaled into the cap.
                let d = Vector::from_fn(m, |_, _| rng.random_range(0.1..1.0));
                let dsd = Matrix::from_diagonal(&d) * &s * Matrix::from_diagonal(&d);
                let t = linalg::symmetrize(&(&root_inv * dsd * &root_inv));
                let top = linalg::spectral_norm_sym(&t);
                if top > 1.0 {
                    t / top
                } else {
                    t
                }
            }
            _ => random_unit_interior(&mut rng, m),
        };
        let (u, v) = geo.rates(&t).expect("sampled T is nonsingular");
        let mut rates = vec![u];
        rates.extend(v.iter().map(|vl| u - vl));
        out.push(RegionPoint {
            rates,
            witness: geo.sigma_prime(&t),
            feasible: true,
            margin: 0.0,
        });
    }
    Ok(out)
}

/// `2 lambda D(P || N(0, I)) - W_2(P, N(0, I))^2`.
pub fn gaussian_t2_margin(p: &GaussianMeasure, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return invalid(format!("lambda {lambda} must be positive"));
    }
    let std = GaussianMeasure::standard(p.dim());
    let d = gaussian_relative_entropy(p, &std)?;
    let w = w2_gaussian(p, &std)?;
    Ok(2.0 * lambda * d - w * w)
}

/// `F = h(X|U) - sum_j c_j h(Y_j|U) - c0 tr(M Sigma_{X|U})` for a finite mixture of
/// Gaussians indexed by `U`.
pub fn f_mixture_eval(components: &[(f64, GaussianMeasure)], prob: &GaussianF0Problem) -> Result<f64> {
    if components.is_empty() {
        return invalid("mixture needs at least one component");
    }
    let total: f64 = components.iter().map(|(w, _)| *w).sum();
    if components.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return invalid("mixture weights must be nonnegative and sum to 1");
    }
    let n = prob.n;
    let mut cond = Matrix::zeros(n, n);
    let mut out = 0.0;
    for (w, g) in components {
        check_dim("component dimension", n, g.dim())?;
        if *w == 0.0 {
            continue;
        }
        let hx = entropy_unchecked(g.cov());
        let mut hy = 0.0;
        for (ch, c) in &prob.channels {
            if *c > 0.0 {
                hy += c * entropy_unchecked(&ch.output_cov(g.cov()));
            }
        }
        out += w * (hx - hy);
        cond += g.cov() * *w;
    }
    Ok(out - prob.c0 * linalg::frob_dot(&prob.m, &cond))
}

/// Forward-reverse value restricted to Gaussian couplings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrblGaussianValue {
    pub value: f64,
    /// Optimal correlation matrix of the coupling.
    #[serde(serialize_with = "serialize_matrix")]
    pub correlation: Matrix,
    pub iterations: usize,
}

fn correlation_from(v: &Matrix) -> Matrix {
    let mut w = v.clone();
    for mut row in w.row_iter_mut() {
        let n = row.norm();
        row /= n;
    }
    linalg::symmetrize(&(&w * w.transpose()))
}

/// `inf_{Gaussian couplings} sum_j c_j D(P_{Y_j} || Lebesgue) - sum_i b_i D(N(0, s_i) || N(0, 1))`
/// for scalar marginals `N(0, s_i)`.
///
/// Relative entropy against Lebesgue measure is `-h`, so the infimum maximizes
/// `sum_j c_j ln det(B_j D C D B_j^T + N_j)` over correlation matrices `C`.
pub fn frbl_gaussian_value(
    marginal_vars: &[f64],
    forward: &[(GaussianChannel, f64)],
    b: &[f64],
    opts: &F0Options,
) -> Result<FrblGaussianValue> {
    let l = marginal_vars.len();
    check_dim("reverse coefficients", l, b.len())?;
    if l == 0 {
        return invalid("need at least one marginal");
    }
    if let Some(v) = marginal_vars.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("marginal variance {v} must be positive"));
    }
    if let Some(v) = b.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("reverse coefficient {v} must be positive"));
    }
    for (ch, c) in forward {
        check_dim("forward channel input", l, ch.n_in())?;
        if !(*c > 0.0 && c.is_finite()) {
            return invalid(format!("forward coefficient {c} must be positive"));
        }
        if !ch.is_non_degenerate() {
            return Err(Error::Singular(
                "degenerate forward channel: the value is unbounded".into(),
            ));
        }
    }
    let d = Matrix::from_diagonal(&Vector::from_iterator(l, marginal_vars.iter().map(|v| v.sqrt())));
    let objective = |c: &Matrix| -> f64 {
        let s = &d * c * &d;
        forward
            .iter()
            .map(|(ch, cj)| cj * entropy_unchecked(&ch.output_cov(&s)))
            .sum()
    };
    let grad_c = |c: &Matrix| -> Matrix {
        let s = &d * c * &d;
        let mut g = Matrix::zeros(l, l);
        for (ch, cj) in forward {
            let inner = linalg::inv_pd(&ch.output_cov(&s), "output covariance")
                .unwrap_or_else(|_| Matrix::zeros(ch.n_out(), ch.n_out()));
            g += &d * ch.matrix().transpose() * inner * ch.matrix() * &d * (0.5 * cj);
        }
        linalg::symmetrize(&g)
    };
    let mut rng = rng_from_seed(opts.seed);
    let mut starts = vec![Matrix::identity(l, l)];
    for _ in 0..opts.restarts {
        starts.push(Matrix::from_fn(l, l, |_, _| rng.sample::<f64, _>(StandardNormal)));
    }
    let mut best = (f64::NEG_INFINITY, Matrix::identity(l, l), 0usize);
    for mut v in starts {
        let mut f = objective(&correlation_from(&v));
        let mut step = 1.0;
        let mut iters = 0;
        for it in 0..opts.max_iters {
            iters = it;
            let mut w = v.clone();
            let norms: Vec<f64> = w.row_iter().map(|r| r.norm()).collect();
            for (i, mut row) in w.row_iter_mut().enumerate() {
                row /= norms[i];
            }
            let gc = grad_c(&(&w * w.transpose()));
            let gw = &gc * &w * 2.0;
            // Chain rule through row normalization.
            let mut gv = Matrix::zeros(l, l);
            for i in 0..l {
                let wi = w.row(i);
                let gi = gw.row(i);
                let proj = gi - wi * gi.dot(&wi);
                gv.set_row(i, &(proj / norms[i]));
            }
            let gnorm = gv.norm();
            if gnorm <= opts.tol {
                break;
            }
            step *= 2.0;
            let mut moved = false;
            for _ in 0..80 {
                let cand = &v + &gv * step;
                let fc = objective(&correlation_from(&cand));
                if fc >= f + ARMIJO_SIGMA * step * gnorm * gnorm {
                    v = cand;
                    f = fc;
                    moved = true;
                    break;
                }
                step *= ARMIJO_BETA;
            }
            if !moved {
                break;
            }
        }
        if f > best.0 {
            best = (f, correlation_from(&v), iters);
        }
    }
    let reverse: f64 = marginal_vars
        .iter()
        .zip(b)
        .map(|(s, bi)| bi * 0.5 * (s - 1.0 - s.ln()))
        .sum();
    Ok(FrblGaussianValue {
        value: -best.0 - reverse,
        correlation: best.1,
        iterations: best.2,
    })
}
