//! Falsification checks for structural properties of the forward best constant:
//! tensorization, convexity in the coefficients and monotonicity under
//! degradation of the outputs.

use crate::bl_forward::{self, BASolverOptions, CertifiedConstant, ForwardBLProblem, ForwardChannel};
use crate::error::{check_dim, invalid, Result};
use crate::measures::{pushforward_measure, CostFunction, Kernel};
use crate::report::CheckReport;

/// Tolerance shared by the structural checks.
pub const PROPERTY_TOL: f64 = 1e-4;
/// Grid spacing used for the inner certified solves.
pub const PROPERTY_GRID: f64 = 0.02;
/// Largest product alphabet accepted by [`tensorization_check`].
pub const TENSOR_MAX_ALPHABET: usize = 16;

/// Problem on `X_1 x X_2` with product references, tensored kernels and additive cost.
pub fn tensor_problem(a: &ForwardBLProblem, b: &ForwardBLProblem) -> Result<ForwardBLProblem> {
    check_dim("channel count", a.channels().len(), b.channels().len())?;
    let ca = a.coefficients();
    let cb = b.coefficients();
    if ca.iter().zip(&cb).any(|(x, y)| (x - y).abs() > 1e-12) {
        return invalid("tensorized problems must share their coefficients");
    }
    let nu = a.nu().product(b.nu());
    let cost: Vec<f64> = a
        .cost()
        .values()
        .iter()
        .flat_map(|x| b.cost().values().iter().map(move |y| x + y))
        .collect();
    let channels = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(p, q)| ForwardChannel::new(p.kernel.tensor(&q.kernel), p.mu.product(&q.mu), p.c))
        .collect::<Result<Vec<_>>>()?;
    ForwardBLProblem::new(nu, CostFunction::new(cost)?, channels)
}

fn solve(prob: &ForwardBLProblem, opts: &BASolverOptions) -> Result<CertifiedConstant> {
    bl_forward::certified_constant(prob, PROPERTY_GRID, opts)
}

/// `d(prob1 x prob2) = d(prob1) + d(prob2)`.
pub fn tensorization_check(a: &ForwardBLProblem, b: &ForwardBLProblem, opts: &BASolverOptions) -> Result<CheckReport> {
    let prod = tensor_problem(a, b)?;
    if prod.input_size() > TENSOR_MAX_ALPHABET {
        return Err(crate::error::Error::TooLarge {
            context: "tensorized input alphabet",
            limit: TENSOR_MAX_ALPHABET,
            found: prod.input_size(),
        });
    }
    let d1 = solve(a, opts)?;
    let d2 = solve(b, opts)?;
    let d12 = solve(&prod, opts)?;
    let err = (d12.value - d1.value - d2.value).abs();
    let certified = [&d1, &d2, &d12].iter().all(|c| c.certification.is_certified());
    Ok(CheckReport::new("tensorization", PROPERTY_TOL - err, certified)
        .with_detail("d1", d1.value)
        .with_detail("d2", d2.value)
        .with_detail("d12", d12.value)
        .with_detail("additivity_error", err)
        .with_detail("grid_step", d12.grid_step.unwrap_or(f64::NAN)))
}

/// Convexity of `c -> d(c)` along the given coefficient vectors, which must lie
/// on one segment; each interior sample is compared with the chord through the
/// endpoints.
pub fn convexity_check(base: &ForwardBLProblem, samples: &[Vec<f64>], opts: &BASolverOptions) -> Result<CheckReport> {
    if samples.len() < 3 {
        return invalid("convexity needs at least three coefficient samples");
    }
    let first = &samples[0];
    let last = &samples[samples.len() - 1];
    let dir: Vec<f64> = last.iter().zip(first).map(|(a, b)| a - b).collect();
    let len2: f64 = dir.iter().map(|v| v * v).sum();
    if len2 < 1e-24 {
        return invalid("coefficient segment is degenerate");
    }
    let mut thetas = Vec::with_capacity(samples.len());
    for s in samples {
        check_dim("coefficient vector", dir.len(), s.len())?;
        let theta = s.iter().zip(first).zip(&dir).map(|((x, f), d)| (x - f) * d).sum::<f64>() / len2;
        let off: f64 = s
            .iter()
            .zip(first)
            .zip(&dir)
            .map(|((x, f), d)| (x - f - theta * d).abs())
            .fold(0.0, f64::max);
        if off > 1e-9 || !(-1e-12..=1.0 + 1e-12).contains(&theta) {
            return invalid("coefficient samples must lie on the segment between the first and last");
        }
        thetas.push(theta);
    }
    let mut values = Vec::with_capacity(samples.len());
    let mut certified = true;
    for s in samples {
        let c = solve(&base.with_coefficients(s)?, opts)?;
        certified &= c.certification.is_certified();
        values.push(c.value);
    }
    let (d0, d1) = (values[0], values[values.len() - 1]);
    let mut worst = f64::INFINITY;
    let mut report = CheckReport::new("convexity", 0.0, certified);
    for (i, (t, v)) in thetas.iter().zip(&values).enumerate() {
        let chord = (1.0 - t) * d0 + t * d1;
        worst = worst.min(chord + PROPERTY_TOL - v);
        report.detail(format!("d_{i}"), *v);
    }
    report.margin = worst;
    report.passed = worst >= 0.0;
    report.detail("grid_step", PROPERTY_GRID);
    Ok(report)
}

/// Degrading each output by `post_channels[j]` (with `mu_j` pushed forward) can
/// only lower the best constant.
pub fn data_processing_check(
    prob: &ForwardBLProblem,
    post_channels: &[Kernel],
    opts: &BASolverOptions,
) -> Result<CheckReport> {
    check_dim("post-channel count", prob.channels().len(), post_channels.len())?;
    let channels = prob
        .channels()
        .iter()
        .zip(post_channels)
        .map(|(ch, post)| {
            check_dim("post-channel input", ch.kernel.n_out(), post.n_in())?;
            ForwardChannel::new(ch.kernel.compose(post)?, pushforward_measure(&ch.mu, post)?, ch.c)
        })
        .collect::<Result<Vec<_>>>()?;
    let degraded = ForwardBLProblem::new(prob.nu().clone(), prob.cost().clone(), channels)?;
    let original = solve(prob, opts)?;
    let after = solve(&degraded, opts)?;
    let margin = original.value + PROPERTY_TOL - after.value;
    let certified = original.certification.is_certified() && after.certification.is_certified();
    Ok(CheckReport::new("data_processing", margin, certified)
        .with_detail("original", original.value)
        .with_detail("degraded", after.value)
        .with_detail("grid_step", original.grid_step.unwrap_or(f64::NAN)))
}
