//! Maps (subcommand, kind) pairs onto solver calls.

use blkit_core::bl_forward::{self, BASolverOptions, ForwardBLProblem, ForwardChannel};
use blkit_core::frbl::{self, FRBLProblem, OuterSearchOptions, ReverseTerm};
use blkit_core::gaussian_opt::{self, F0Options, GaussianF0Problem, GaussianJointSource, KeygenOptions};
use blkit_core::linalg;
use blkit_core::measures::pushforward_measure;
use blkit_core::special_cases::{self, Membership, MetricSpaceSample};
use blkit_core::{property_harness, CostFunction, GaussianMeasure, Kernel};
use serde_json::json;

use crate::problem::{self as pf, CheckSpec, Kind, ProblemFile};
use crate::report::Builder;
use crate::{CliError, Command, Flags};

/// Margin below which an inequality counts as violated in `verify`.
const VERIFY_TOL: f64 = 1e-9;

pub struct Outcome {
    pub report: Builder,
    /// Header and rows for `--out`.
    pub table: Option<(Vec<String>, Vec<Vec<f64>>)>,
}

impl From<Builder> for Outcome {
    fn from(report: Builder) -> Self {
        Self { report, table: None }
    }
}

pub fn run(cmd: Command, file: &ProblemFile, flags: &Flags) -> Result<Outcome, CliError> {
    use Command::*;
    use Kind::*;
    match (cmd, file.kind) {
        (Solve, ForwardBl) => solve_forward(&forward(&file.payload()?)?, flags),
        (Verify, ForwardBl) => {
            let r = bl_forward::verify_duality(&forward(&file.payload()?)?, &ba_options(flags)?)?;
            let mut b = Builder::default();
            b.check(&r);
            Ok(b.into())
        }
        (Check, ForwardBl) => check_forward(&file.payload()?, flags),
        (Oracle, ForwardBl) => {
            let step = flags.grid.unwrap_or(0.01);
            let v = bl_forward::best_constant_bruteforce(&forward(&file.payload()?)?, step)?;
            let mut b = Builder::default();
            b.info("best_constant", v).plain("grid_step", step);
            b.certified = true;
            Ok(b.into())
        }
        (Solve, Frbl) => solve_frbl(&file.payload()?, flags),
        (Solve, Sdpi) => {
            let p: pf::Sdpi = file.payload()?;
            let r = special_cases::sdpi_constant(
                &pf::distribution(&p.q_x)?,
                &p.kernel.kernel()?,
                flags.tol.unwrap_or(1e-4),
                &ba_options(flags)?,
            )?;
            let mut b = Builder::default();
            b.plain("sdpi", r.value)
                .plain("lower", r.lower)
                .plain("squared_maximal_correlation", r.local_bound);
            b.iterations = Some(r.bisection_steps);
            b.certified = r.certification.is_certified();
            Ok(b.into())
        }
        (Member, HcDiscrete) => {
            let p: pf::HcDiscrete = file.payload()?;
            let m = special_cases::hc_member_discrete(
                &pf::distribution(&p.q)?,
                (p.sizes[0], p.sizes[1]),
                p.p[0],
                p.p[1],
                flags.tol.unwrap_or(1e-9),
                &ba_options(flags)?,
            )?;
            Ok(membership(&m).into())
        }
        (Member, Rhc) => {
            let p: pf::Rhc = file.payload()?;
            let m = special_cases::rhc_member_discrete(
                &pf::distribution(&p.q)?,
                (p.sizes[0], p.sizes[1]),
                p.b[0],
                p.b[1],
                flags.tol.unwrap_or(1e-7),
                &outer_options(flags)?,
            )?;
            Ok(membership(&m).into())
        }
        (Member, Rhcn) => {
            let p: pf::Rhcn = file.payload()?;
            let m = special_cases::rhcn_member_discrete(
                &pf::distribution(&p.q)?,
                (p.sizes[0], p.sizes[1]),
                p.b1,
                p.c2,
                flags.tol.unwrap_or(1e-7),
                &outer_options(flags)?,
            )?;
            Ok(membership(&m).into())
        }
        (Solve, GaussianF0) => {
            let p: pf::GaussianF0 = file.payload()?;
            let prob = GaussianF0Problem::new(
                p.dim,
                pf::GaussianChannelSpec::build(&p.channels)?,
                p.c0,
                p.m.matrix()?,
                Some(p.cap.matrix()?),
            )?;
            let r = gaussian_opt::maximize_f0(&prob, &f0_options(flags))?;
            let mut b = Builder::default();
            b.info("f0", r.value).info("restart_spread", r.spread);
            b.witness(json!({ "sigma": linalg::to_rows(&r.sigma) }));
            b.iterations = Some(r.iterations);
            b.converged = r.converged;
            Ok(b.into())
        }
        (Solve, GaussianBl) => {
            let p: pf::GaussianBl = file.payload()?;
            let r = gaussian_opt::gaussian_bl_constant(
                &p.reference()?,
                pf::GaussianChannelSpec::build(&p.channels)?,
                &f0_options(flags),
            )?;
            let mut b = Builder::default();
            b.info("best_constant", r.value);
            b.witness(json!({ "sigma": linalg::to_rows(&r.sigma) }));
            b.converged = r.converged;
            Ok(b.into())
        }
        (Solve, Wyner) => {
            let p: pf::Wyner = file.payload()?;
            let r = gaussian_opt::wyner_ci(&p.sigma.matrix()?)?;
            let mut b = Builder::default();
            b.info("common_information", r.value).plain("kkt_residual", r.kkt_residual);
            b.witness(json!({ "lambda": r.lambda, "dropped": r.dropped }));
            Ok(b.into())
        }
        (Member, HcGaussian) => {
            let p: pf::HcGaussian = file.payload()?;
            let r = gaussian_opt::gaussian_hc_member(&p.sigma.matrix()?, &p.p)?;
            let mut b = Builder::default();
            b.plain("member", f64::from(u8::from(r.member)))
                .margin("min_eigenvalue", r.margin, false);
            b.witness(json!({ "member": r.member }));
            b.certified = true;
            Ok(b.into())
        }
        (Member, Keygen) => {
            let p: pf::Keygen = file.payload()?;
            let (Some(r), Some(rl)) = (p.r, p.rl.as_ref()) else {
                return Err(CliError::Invalid("keygen membership needs `r` and `rl`".into()));
            };
            let opts = KeygenOptions {
                tol: flags.tol.unwrap_or(KeygenOptions::default().tol),
                restarts: flags.restarts.unwrap_or(KeygenOptions::default().restarts),
                seed: flags.seed,
                grid_step: flags.grid.unwrap_or(KeygenOptions::default().grid_step),
            };
            let d = gaussian_opt::keygen_region_member(&p.sigma.matrix()?, r, rl, &opts)?;
            let mut b = Builder::default();
            b.plain("member", f64::from(u8::from(d.member)))
                .margin("rate_slack", d.point.margin, true);
            b.witness(json!({
                "member": d.member,
                "rates": d.point.rates,
                "sigma_prime": linalg::to_rows(&d.point.witness),
            }));
            b.certified = d.certification.is_certified();
            Ok(b.into())
        }
        (Trace, Keygen) => {
            let p: pf::Keygen = file.payload()?;
            let n = p.samples.unwrap_or(100);
            let pts = gaussian_opt::keygen_region_trace(&p.sigma.matrix()?, n, flags.seed)?;
            let m = pts.first().map_or(0, |pt| pt.rates.len().saturating_sub(1));
            let unit = if flags.bits { "bits" } else { "nats" };
            let mut header = vec![format!("R_{unit}")];
            header.extend((1..=m).map(|l| format!("R{l}_{unit}")));
            let scale = if flags.bits { std::f64::consts::LOG2_E } else { 1.0 };
            let rows = pts
                .iter()
                .map(|pt| pt.rates.iter().map(|v| v * scale).collect())
                .collect();
            let mut b = Builder::default();
            b.plain("points", pts.len() as f64);
            Ok(Outcome {
                report: b,
                table: Some((header, rows)),
            })
        }
        (Solve, CrOnecom) => {
            let p: pf::CrOnecom = file.payload()?;
            let joint = GaussianJointSource::from_sizes(p.sigma.matrix()?, &p.sizes)?;
            let rates = gaussian_opt::cr_onecom_rates(&joint, &p.sigma_prime.matrix()?)?;
            let mut b = Builder::default();
            b.info("R", rates[0]);
            for (l, v) in rates.iter().enumerate().skip(1) {
                b.info(&format!("R{l}"), *v);
            }
            b.witness(json!({ "rates": rates }));
            b.certified = true;
            Ok(b.into())
        }
        (Verify, T2Gaussian) => {
            let p: pf::T2Gaussian = file.payload()?;
            let spec = pf::GaussianSpec { mean: p.mean, cov: p.cov };
            let g: GaussianMeasure = spec.measure()?;
            let margin = gaussian_opt::gaussian_t2_margin(&g, p.lambda)?;
            let mut b = Builder::default();
            b.margin("t2", margin, false).plain("lambda", p.lambda);
            b.passed = Some(margin >= -VERIFY_TOL);
            b.certified = true;
            Ok(b.into())
        }
        (Solve | Verify, Transport) => {
            let p: pf::Transport = file.payload()?;
            let space = MetricSpaceSample::euclidean(p.points.clone(), pf::distribution(&p.q)?)?;
            let (w, bound) = special_cases::transport_vs_entropy(&space, &pf::distribution(&p.p_law)?, p.p, p.lambda)?;
            let mut b = Builder::default();
            b.plain("transport_cost", w).plain("entropy_bound", bound);
            b.margin("transport", bound - w, false);
            if cmd == Verify {
                b.passed = Some(bound - w >= -VERIFY_TOL);
            }
            b.certified = true;
            Ok(b.into())
        }
        (Verify, Shearer) => {
            let p: pf::Shearer = file.payload()?;
            let mut b = Builder::default();
            b.check(&special_cases::shearer_check(&p.set)?);
            Ok(b.into())
        }
        (Verify, Renyi) => {
            let p: pf::Renyi = file.payload()?;
            let slack = special_cases::renyi_variational_slack(&pf::measure(&p.q)?, &pf::measure(&p.r)?, &p.g, p.alpha)?;
            let mut b = Builder::default();
            b.margin("renyi_variational", slack, true);
            b.passed = Some(slack >= -flags.tol.unwrap_or(VERIFY_TOL));
            b.certified = true;
            Ok(b.into())
        }
        (cmd, kind) => Err(CliError::Invalid(format!(
            "`{}` does not apply to problems of kind `{}`",
            cmd.name(),
            kind.name()
        ))),
    }
}

fn ba_options(flags: &Flags) -> Result<BASolverOptions, CliError> {
    let d = BASolverOptions::default();
    let o = BASolverOptions {
        tol: flags.tol.unwrap_or(d.tol),
        restarts: flags.restarts.unwrap_or(d.restarts),
        rng_seed: flags.seed,
        ..d
    };
    o.validate()?;
    Ok(o)
}

fn outer_options(flags: &Flags) -> Result<OuterSearchOptions, CliError> {
    let d = OuterSearchOptions::default();
    Ok(OuterSearchOptions {
        grid_step: flags.grid.unwrap_or(d.grid_step),
        restarts: flags.restarts.unwrap_or(d.restarts),
        rng_seed: flags.seed,
        ..d
    })
}

fn f0_options(flags: &Flags) -> F0Options {
    let d = F0Options::default();
    F0Options {
        tol: flags.tol.unwrap_or(d.tol),
        restarts: flags.restarts.unwrap_or(d.restarts),
        seed: flags.seed,
        ..d
    }
}

fn forward(p: &pf::ForwardBl) -> Result<ForwardBLProblem, CliError> {
    let nu = pf::measure(&p.nu)?;
    let cost = match &p.cost {
        Some(c) => CostFunction::new(c.clone())?,
        None => CostFunction::zero(nu.len()),
    };
    let channels = p
        .channels
        .iter()
        .map(|ch| {
            let k = ch.kernel.kernel()?;
            let mu = match &ch.mu {
                Some(m) => pf::measure(m)?,
                None => pushforward_measure(&nu, &k)?,
            };
            Ok(ForwardChannel::new(k, mu, ch.c)?)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(ForwardBLProblem::new(nu, cost, channels)?)
}

fn solve_forward(prob: &ForwardBLProblem, flags: &Flags) -> Result<Outcome, CliError> {
    let opts = ba_options(flags)?;
    let mut b = Builder::default();
    if let Some(step) = flags.grid {
        let r = bl_forward::certified_constant(prob, step, &opts)?;
        b.info("best_constant", r.value);
        if let Some(g) = r.grid_value {
            b.info("grid_value", g);
        }
        b.witness(json!({ "argmax": r.argmax }));
        b.certified = r.certification.is_certified();
    } else {
        let r = bl_forward::best_constant(prob, &opts)?;
        b.info("best_constant", r.value).plain("max_decrease", r.max_decrease);
        b.witness(json!({ "argmax": r.argmax, "induced_f": r.induced_f }));
        b.iterations = Some(r.iterations);
        b.converged = r.converged;
    }
    Ok(b.into())
}

fn check_forward(p: &pf::ForwardBl, flags: &Flags) -> Result<Outcome, CliError> {
    let Some(spec) = &p.check else {
        return Err(CliError::Invalid("`check` needs a `check` suite in the payload".into()));
    };
    let prob = forward(p)?;
    let opts = ba_options(flags)?;
    let r = match spec {
        CheckSpec::Tensorization { other } => {
            let other = match other {
                Some(o) => forward(o)?,
                None => prob.clone(),
            };
            property_harness::tensorization_check(&prob, &other, &opts)?
        }
        CheckSpec::Convexity { samples } => property_harness::convexity_check(&prob, samples, &opts)?,
        CheckSpec::DataProcessing { post } => {
            let post = post.iter().map(|m| m.kernel()).collect::<Result<Vec<Kernel>, _>>()?;
            property_harness::data_processing_check(&prob, &post, &opts)?
        }
    };
    let mut b = Builder::default();
    b.check(&r);
    Ok(b.into())
}

fn solve_frbl(p: &pf::Frbl, flags: &Flags) -> Result<Outcome, CliError> {
    let reverse = p
        .reverse
        .iter()
        .map(|r| Ok(ReverseTerm { nu: pf::measure(&r.nu)?, b: r.b }))
        .collect::<Result<Vec<_>, CliError>>()?;
    let fwd = p
        .forward
        .iter()
        .map(|f| Ok((f.kernel.kernel()?, pf::measure(&f.mu)?, f.c)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let prob = FRBLProblem::new(reverse, fwd, p.d)?;
    let r = frbl::best_frbl_constant(&prob, &outer_options(flags)?)?;
    let mut b = Builder::default();
    b.info("best_constant", r.value);
    if let Some(g) = r.grid_value {
        b.info("grid_value", g);
    }
    b.witness(json!({ "marginals": r.marginals }));
    b.iterations = Some(r.evaluations);
    b.certified = r.certification.is_certified();
    Ok(b.into())
}

fn membership(m: &Membership) -> Builder {
    let mut b = Builder::default();
    b.plain("member", f64::from(u8::from(m.member)))
        .margin("entropic_deficit", m.margin, true);
    if let Some(c) = m.curvature {
        b.plain("curvature", c);
    }
    b.witness(json!({ "member": m.member, "laws": m.witness }));
    b.certified = m.certification.is_certified();
    b
}
